#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dkt/rng.hpp"

namespace dkt {

// One student's ordered (question, correctness) history.
struct InteractionSequence {
  std::string student_id;
  std::vector<int> questions;  // skill ids in [0, Q)
  std::vector<int> corrects;   // 0 or 1
  std::size_t length() const { return questions.size(); }
};

// B sequences padded to the longest one in the batch. mask is 1 on a prefix
// of each row and 0 afterwards; padded cells hold question 0, correctness 0
// and must never be read through a set mask.
struct Batch {
  std::size_t batch_size = 0;  // B
  std::size_t max_len = 0;     // T_max
  std::vector<int> questions;            // B x T_max, row-major
  std::vector<int> corrects;             // B x T_max
  std::vector<std::uint8_t> mask;        // 1 = real interaction, 0 = padding

  int question(std::size_t r, std::size_t t) const { return questions[r * max_len + t]; }
  int correct(std::size_t r, std::size_t t) const { return corrects[r * max_len + t]; }
  bool valid(std::size_t r, std::size_t t) const { return mask[r * max_len + t] != 0; }
  std::size_t row_length(std::size_t r) const;
};

struct SynthConfig {
  int num_students = 4000;
  int num_skills = 50;
  int seq_len = 50;
  double ability_sd = 1.0;
  double difficulty_sd = 1.0;
  double learn_rate_gamma = 0.5;  // per-practice ability gain
  std::uint64_t seed = 42;
};

struct LoadResult {
  std::vector<InteractionSequence> sequences;
  int num_skills = 0;  // 1 + max question id; 0 for an empty file
  std::vector<std::string> warnings;
};

// Three text lines per student: T, then T comma-separated question ids, then
// T comma-separated 0/1 correctness values. LF or CRLF, records concatenated,
// trailing blank lines ignored.
LoadResult load_dataset(const std::string& path);
void save_dataset(const std::string& path, const std::vector<InteractionSequence>& seqs);

// Per student: ability a ~ N(0, ability_sd^2). Per skill: difficulty
// d_q ~ N(0, difficulty_sd^2). Questions uniform; correctness Bernoulli of
// sigmoid(a - d_q + gamma * prior practices of that skill). Draw order is
// fixed, so the dataset is fully determined by the seed.
std::vector<InteractionSequence> gen_synthetic(const SynthConfig& cfg);

struct Split {
  std::vector<InteractionSequence> train, test;
};

// Splits whole students. Test size is ceil(n * test_fraction), clamped so
// both sides stay nonempty.
Split train_test_split(const std::vector<InteractionSequence>& seqs, double test_fraction,
                       std::uint64_t seed);

// Shuffles with rng, then packs consecutive groups of batch_size, padding
// each batch to its own longest sequence.
std::vector<Batch> make_batches(const std::vector<InteractionSequence>& seqs,
                                std::size_t batch_size, Rng& rng);

// Splits every sequence longer than max_len into consecutive chunks; the
// recurrent state resets at chunk boundaries downstream.
std::vector<InteractionSequence> split_long_sequences(
    const std::vector<InteractionSequence>& seqs, std::size_t max_len);

int infer_num_skills(const std::vector<InteractionSequence>& seqs);

}  // namespace dkt
