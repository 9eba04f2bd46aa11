#include "dkt/data.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <numeric>
#include <sstream>

#include "dkt/activations.hpp"
#include "dkt/error.hpp"

namespace dkt {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

long parse_int(const std::string& token, std::size_t line_no) {
  const std::string t = trim(token);
  long value = 0;
  const char* begin = t.data();
  const char* end = begin + t.size();
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end || t.empty()) {
    throw ParseError("line " + std::to_string(line_no) + ": non-integer token '" + t + "'");
  }
  return value;
}

std::vector<int> parse_int_list(const std::string& line, std::size_t line_no,
                                std::size_t expected) {
  std::vector<int> out;
  std::stringstream ss(line);
  std::string token;
  while (std::getline(ss, token, ',')) {
    // Tolerate one empty tail token: files in the wild end lines with a comma.
    if (trim(token).empty() && out.size() == expected && ss.eof()) break;
    out.push_back(static_cast<int>(parse_int(token, line_no)));
  }
  if (out.size() != expected) {
    throw ParseError("line " + std::to_string(line_no) + ": expected " +
                     std::to_string(expected) + " values, got " + std::to_string(out.size()));
  }
  return out;
}

}  // namespace

std::size_t Batch::row_length(std::size_t r) const {
  std::size_t n = 0;
  while (n < max_len && mask[r * max_len + n] != 0) ++n;
  return n;
}

LoadResult load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DktError("cannot open dataset file '" + path + "'");

  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }

  LoadResult result;
  std::size_t idx = 0;
  int record_no = 0;
  while (idx < lines.size()) {
    if (trim(lines[idx]).empty()) {
      ++idx;
      continue;
    }
    const std::size_t header_line = idx + 1;  // 1-based for diagnostics
    const long declared = parse_int(lines[idx], header_line);
    if (declared < 1) {
      throw ParseError("line " + std::to_string(header_line) + ": sequence length " +
                       std::to_string(declared) + " must be >= 1");
    }
    if (idx + 2 >= lines.size()) {
      throw ParseError("line " + std::to_string(header_line) + ": record " +
                       std::to_string(record_no) + " truncated (expected 3 lines)");
    }
    InteractionSequence seq;
    seq.student_id = "s" + std::to_string(record_no);
    seq.questions = parse_int_list(lines[idx + 1], header_line + 1,
                                   static_cast<std::size_t>(declared));
    seq.corrects = parse_int_list(lines[idx + 2], header_line + 2,
                                  static_cast<std::size_t>(declared));
    for (int q : seq.questions) {
      if (q < 0) {
        throw ParseError("line " + std::to_string(header_line + 1) + ": negative question id " +
                         std::to_string(q));
      }
    }
    for (int c : seq.corrects) {
      if (c != 0 && c != 1) {
        throw ParseError("line " + std::to_string(header_line + 2) + ": correctness value " +
                         std::to_string(c) + " outside {0,1}");
      }
    }
    result.sequences.push_back(std::move(seq));
    ++record_no;
    idx += 3;
  }

  result.num_skills = infer_num_skills(result.sequences);
  if (result.sequences.empty()) {
    result.warnings.push_back("dataset '" + path + "' is empty");
  }
  return result;
}

void save_dataset(const std::string& path, const std::vector<InteractionSequence>& seqs) {
  std::ofstream out(path);
  if (!out) throw DktError("cannot write dataset file '" + path + "'");
  for (const auto& s : seqs) {
    out << s.length() << "\n";
    for (std::size_t t = 0; t < s.length(); ++t) {
      if (t) out << ",";
      out << s.questions[t];
    }
    out << "\n";
    for (std::size_t t = 0; t < s.length(); ++t) {
      if (t) out << ",";
      out << s.corrects[t];
    }
    out << "\n";
  }
}

int infer_num_skills(const std::vector<InteractionSequence>& seqs) {
  int max_id = -1;
  for (const auto& s : seqs) {
    for (int q : s.questions) max_id = std::max(max_id, q);
  }
  return max_id + 1;
}

std::vector<InteractionSequence> gen_synthetic(const SynthConfig& cfg) {
  if (cfg.num_students < 1 || cfg.num_skills < 1 || cfg.seq_len < 1) {
    throw DktError("gen_synthetic: counts must be >= 1");
  }
  if (cfg.ability_sd <= 0.0 || cfg.difficulty_sd <= 0.0) {
    throw DktError("gen_synthetic: standard deviations must be > 0");
  }
  Rng rng(cfg.seed);

  // Draw order: skill difficulties, then per student (ability, then per step
  // question and correctness).
  std::vector<double> difficulty(cfg.num_skills);
  for (double& d : difficulty) d = rng.normal(0.0, cfg.difficulty_sd);

  std::vector<InteractionSequence> out;
  out.reserve(cfg.num_students);
  std::vector<int> practice_count(cfg.num_skills);
  for (int s = 0; s < cfg.num_students; ++s) {
    const double ability = rng.normal(0.0, cfg.ability_sd);
    std::fill(practice_count.begin(), practice_count.end(), 0);
    InteractionSequence seq;
    seq.student_id = "s" + std::to_string(s);
    seq.questions.reserve(cfg.seq_len);
    seq.corrects.reserve(cfg.seq_len);
    for (int t = 0; t < cfg.seq_len; ++t) {
      const int q = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(cfg.num_skills)));
      const double p =
          sigmoid(ability - difficulty[q] + cfg.learn_rate_gamma * practice_count[q]);
      const int c = rng.bernoulli(p);
      seq.questions.push_back(q);
      seq.corrects.push_back(c);
      ++practice_count[q];
    }
    out.push_back(std::move(seq));
  }
  return out;
}

Split train_test_split(const std::vector<InteractionSequence>& seqs, double test_fraction,
                       std::uint64_t seed) {
  if (seqs.size() < 2) throw DktError("train_test_split: need at least 2 sequences");
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw DktError("train_test_split: test_fraction must be in (0,1)");
  }
  std::vector<std::size_t> order(seqs.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  for (std::size_t i = order.size() - 1; i > 0; --i) {
    const std::size_t j = rng.next_below(i + 1);
    std::swap(order[i], order[j]);
  }
  std::size_t n_test = static_cast<std::size_t>(
      std::ceil(static_cast<double>(seqs.size()) * test_fraction));
  n_test = std::clamp<std::size_t>(n_test, 1, seqs.size() - 1);

  Split split;
  split.test.reserve(n_test);
  split.train.reserve(seqs.size() - n_test);
  for (std::size_t i = 0; i < order.size(); ++i) {
    (i < n_test ? split.test : split.train).push_back(seqs[order[i]]);
  }
  return split;
}

std::vector<Batch> make_batches(const std::vector<InteractionSequence>& seqs,
                                std::size_t batch_size, Rng& rng) {
  if (batch_size < 1) throw DktError("make_batches: batch_size must be >= 1");
  std::vector<std::size_t> order(seqs.size());
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t i = order.size(); i > 1; --i) {
    const std::size_t j = rng.next_below(i);
    std::swap(order[i - 1], order[j]);
  }

  std::vector<Batch> batches;
  for (std::size_t start = 0; start < order.size(); start += batch_size) {
    const std::size_t count = std::min(batch_size, order.size() - start);
    Batch b;
    b.batch_size = count;
    b.max_len = 0;
    for (std::size_t r = 0; r < count; ++r) {
      b.max_len = std::max(b.max_len, seqs[order[start + r]].length());
    }
    b.questions.assign(count * b.max_len, 0);
    b.corrects.assign(count * b.max_len, 0);
    b.mask.assign(count * b.max_len, 0);
    for (std::size_t r = 0; r < count; ++r) {
      const auto& s = seqs[order[start + r]];
      for (std::size_t t = 0; t < s.length(); ++t) {
        b.questions[r * b.max_len + t] = s.questions[t];
        b.corrects[r * b.max_len + t] = s.corrects[t];
        b.mask[r * b.max_len + t] = 1;
      }
    }
    batches.push_back(std::move(b));
  }
  return batches;
}

std::vector<InteractionSequence> split_long_sequences(
    const std::vector<InteractionSequence>& seqs, std::size_t max_len) {
  if (max_len < 1) throw DktError("split_long_sequences: max_len must be >= 1");
  std::vector<InteractionSequence> out;
  out.reserve(seqs.size());
  for (const auto& s : seqs) {
    if (s.length() <= max_len) {
      out.push_back(s);
      continue;
    }
    for (std::size_t start = 0; start < s.length(); start += max_len) {
      const std::size_t count = std::min(max_len, s.length() - start);
      InteractionSequence chunk;
      chunk.student_id = s.student_id;
      chunk.questions.assign(s.questions.begin() + start, s.questions.begin() + start + count);
      chunk.corrects.assign(s.corrects.begin() + start, s.corrects.begin() + start + count);
      out.push_back(std::move(chunk));
    }
  }
  return out;
}

}  // namespace dkt
