#include "dkt/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>

#include "dkt/activations.hpp"

namespace dkt {

DktModel DktModel::init(Arch arch, std::size_t num_skills, std::size_t hidden_size, Rng& rng) {
  if (num_skills < 1 || hidden_size < 1) {
    throw DktError("DktModel: num_skills and hidden_size must be >= 1");
  }
  DktModel m;
  m.arch = arch;
  m.num_skills = num_skills;
  m.hidden_size = hidden_size;
  m.cell = make_cell(arch, 2 * num_skills, hidden_size, num_skills, rng);
  return m;
}

Vector encode_interaction(int question, int correct, std::size_t num_skills) {
  if (question < 0 || static_cast<std::size_t>(question) >= num_skills) {
    throw DktError("encode_interaction: question id " + std::to_string(question) +
                   " outside [0, " + std::to_string(num_skills) + ")");
  }
  if (correct != 0 && correct != 1) {
    throw DktError("encode_interaction: correctness " + std::to_string(correct) +
                   " outside {0,1}");
  }
  Vector x(2 * num_skills, 0.0);
  x[static_cast<std::size_t>(question) + num_skills * static_cast<std::size_t>(correct)] = 1.0;
  return x;
}

SequenceForward forward_sequence(const InteractionSequence& seq, const DktModel& model) {
  const std::size_t T = seq.length();
  if (T < 2) {
    throw DktError("forward_sequence: sequence too short (T=" + std::to_string(T) +
                   ", need >= 2)");
  }
  const std::size_t Q = model.num_skills;
  const std::size_t H = model.hidden_size;

  SequenceForward out;
  out.logits = Matrix(T - 1, Q);
  out.caches.reserve(T - 1);

  const Matrix& w_hy = output_weight(model.cell);
  const Vector& b_y = output_bias(model.cell);

  Vector h(H, 0.0);
  Vector c;
  if (model.arch == Arch::lstm) c.assign(H, 0.0);

  for (std::size_t t = 0; t + 1 < T; ++t) {
    const Vector x = encode_interaction(seq.questions[t], seq.corrects[t], Q);
    StepCache cache = cell_forward(x, h, c, model.cell);
    h = cache_h(cache);
    if (model.arch == Arch::lstm) c = std::get<LstmStep>(cache).c;

    Vector y = b_y;
    add_matvec(y, w_hy, h);
    std::memcpy(out.logits.row(t), y.data(), Q * sizeof(double));
    out.caches.push_back(std::move(cache));
  }
  return out;
}

void backward_sequence(DktModel& model, const SequenceForward& fwd, const Matrix& d_logits) {
  const std::size_t steps = fwd.caches.size();
  const std::size_t Q = model.num_skills;
  if (d_logits.rows() != steps || d_logits.cols() != Q) {
    throw ShapeError("backward_sequence: d_logits " + d_logits.shape_str() + ", expected " +
                     std::to_string(steps) + "x" + std::to_string(Q));
  }
  const Matrix& w_hy = output_weight(model.cell);
  Matrix& g_w_hy = output_weight_grad(model.cell);
  Vector& g_b_y = output_bias_grad(model.cell);

  Vector d_h(model.hidden_size, 0.0);
  Vector d_c;
  if (model.arch == Arch::lstm) d_c.assign(model.hidden_size, 0.0);

  Vector d_y(Q);
  for (std::size_t t = steps; t-- > 0;) {
    std::memcpy(d_y.data(), d_logits.row(t), Q * sizeof(double));
    const Vector& h_t = cache_h(fwd.caches[t]);
    add_outer(g_w_hy, d_y, h_t);
    for (std::size_t j = 0; j < Q; ++j) g_b_y[j] += d_y[j];
    add_matvec_transposed(d_h, w_hy, d_y);  // joins the gradient from step t+1

    BackwardResult br = cell_backward(fwd.caches[t], d_h, d_c, model.cell);
    d_h = std::move(br.d_h_prev);
    d_c = std::move(br.d_c_prev);
  }
}

double bce_with_logits(double logit, int target) {
  return std::max(logit, 0.0) - logit * static_cast<double>(target) +
         std::log1p(std::exp(-std::abs(logit)));
}

BceResult masked_bce_loss(const Matrix& logits, const std::vector<int>& targets,
                          const std::vector<int>& next_questions,
                          const std::vector<std::uint8_t>& mask) {
  const std::size_t rows = logits.rows();
  if (targets.size() != rows || next_questions.size() != rows || mask.size() != rows) {
    throw ShapeError("masked_bce_loss: logits " + logits.shape_str() + " against targets[" +
                     std::to_string(targets.size()) + "], next_questions[" +
                     std::to_string(next_questions.size()) + "], mask[" +
                     std::to_string(mask.size()) + "]");
  }
  std::size_t valid = 0;
  for (std::size_t t = 0; t < rows; ++t) {
    if (mask[t]) ++valid;
  }
  if (valid == 0) throw EmptyInputError("masked_bce_loss: no valid positions in batch");

  BceResult res;
  res.d_logits = Matrix(logits.rows(), logits.cols());
  const double inv_count = 1.0 / static_cast<double>(valid);
  double total = 0.0;
  for (std::size_t t = 0; t < rows; ++t) {
    if (!mask[t]) continue;
    const int q = next_questions[t];
    if (q < 0 || static_cast<std::size_t>(q) >= logits.cols()) {
      throw ShapeError("masked_bce_loss: next question " + std::to_string(q) +
                       " outside [0, " + std::to_string(logits.cols()) + ")");
    }
    const int y = targets[t];
    const double z = logits(t, static_cast<std::size_t>(q));
    total += bce_with_logits(z, y);
    res.d_logits(t, static_cast<std::size_t>(q)) =
        (sigmoid(z) - static_cast<double>(y)) * inv_count;
  }
  res.loss = total * inv_count;
  return res;
}

double accuracy(const std::vector<PredictionRecord>& records) {
  std::size_t valid = 0, correct = 0;
  for (const auto& r : records) {
    if (!r.valid) continue;
    ++valid;
    const int predicted = r.probability >= 0.5 ? 1 : 0;
    if (predicted == r.target) ++correct;
  }
  if (valid == 0) throw EmptyInputError("accuracy: no valid records");
  return static_cast<double>(correct) / static_cast<double>(valid);
}

double auc(const std::vector<PredictionRecord>& records) {
  std::vector<const PredictionRecord*> valid;
  valid.reserve(records.size());
  std::size_t positives = 0;
  for (const auto& r : records) {
    if (!r.valid) continue;
    valid.push_back(&r);
    if (r.target == 1) ++positives;
  }
  if (valid.empty()) throw EmptyInputError("auc: no valid records");
  const std::size_t negatives = valid.size() - positives;
  if (positives == 0 || negatives == 0) {
    throw UndefinedMetricError("auc: undefined for single-class input (" +
                               std::to_string(positives) + " positive, " +
                               std::to_string(negatives) + " negative)");
  }

  std::vector<std::size_t> order(valid.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return valid[a]->probability < valid[b]->probability;
  });

  // Average ranks over tie groups, then the Mann-Whitney statistic.
  double rank_sum_pos = 0.0;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j < order.size() &&
           valid[order[j]]->probability == valid[order[i]]->probability) {
      ++j;
    }
    const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);  // 1-based ranks i+1..j
    for (std::size_t k = i; k < j; ++k) {
      if (valid[order[k]]->target == 1) rank_sum_pos += avg_rank;
    }
    i = j;
  }
  const double p = static_cast<double>(positives);
  const double n = static_cast<double>(negatives);
  return (rank_sum_pos - p * (p + 1.0) / 2.0) / (p * n);
}

}  // namespace dkt
