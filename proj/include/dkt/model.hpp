#pragma once

#include <cstdint>
#include <vector>

#include "dkt/cells.hpp"
#include "dkt/data.hpp"

namespace dkt {

// Next-step predictor over one-hot interaction encodings: input dim 2Q,
// one output logit per skill.
struct DktModel {
  Arch arch = Arch::lstm;
  std::size_t num_skills = 0;   // Q
  std::size_t hidden_size = 0;  // H
  CellParams cell;

  static DktModel init(Arch arch, std::size_t num_skills, std::size_t hidden_size, Rng& rng);
  std::vector<ParamView> views() { return cell_views(cell); }
  void zero_grad() { cell_zero_grad(cell); }
  std::size_t param_count() const { return cell_param_count(cell); }
};

// One-hot of dimension 2Q with the single 1 at q + Q*c.
Vector encode_interaction(int question, int correct, std::size_t num_skills);

// Row t of logits is w_hy h_t + b_y after consuming interaction t; it is
// scored against interaction t+1. A sequence of length T yields T-1 rows.
struct SequenceForward {
  Matrix logits;                  // (T-1) x Q
  std::vector<StepCache> caches;  // T-1 entries
};

SequenceForward forward_sequence(const InteractionSequence& seq, const DktModel& model);

// Backpropagates d_logits through the output projection and the unrolled
// cell steps, accumulating into the model's gradient buffers.
void backward_sequence(DktModel& model, const SequenceForward& fwd, const Matrix& d_logits);

// Binary cross-entropy with logits on the single selected column per valid
// position, averaged over valid positions. d_logits carries
// (sigmoid(z) - y) / valid_count at the selected entries, zero elsewhere.
struct BceResult {
  double loss = 0.0;
  Matrix d_logits;
};

BceResult masked_bce_loss(const Matrix& logits, const std::vector<int>& targets,
                          const std::vector<int>& next_questions,
                          const std::vector<std::uint8_t>& mask);

// Stable per-element form: max(z,0) - z*y + log(1 + exp(-|z|)).
double bce_with_logits(double logit, int target);

struct PredictionRecord {
  double probability = 0.0;
  int target = 0;
  bool valid = true;
};

// Fraction of valid records where (probability >= 0.5) equals the target.
double accuracy(const std::vector<PredictionRecord>& records);

// Mann-Whitney rank AUC with ties counted one half. Throws EmptyInputError
// when no valid records exist and UndefinedMetricError when only one class
// is present.
double auc(const std::vector<PredictionRecord>& records);

}  // namespace dkt
