#include "dkt/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>

#include "dkt/activations.hpp"
#include "dkt/error.hpp"

namespace dkt {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  const auto dt = std::chrono::duration<double>(Clock::now() - start).count();
  return dt > 0.0 ? dt : 1e-9;
}

InteractionSequence extract_row(const Batch& batch, std::size_t r) {
  const std::size_t len = batch.row_length(r);
  InteractionSequence seq;
  seq.questions.reserve(len);
  seq.corrects.reserve(len);
  for (std::size_t t = 0; t < len; ++t) {
    seq.questions.push_back(batch.question(r, t));
    seq.corrects.push_back(batch.correct(r, t));
  }
  return seq;
}

// All prediction positions of a batch stacked into one logits matrix so the
// loss normalizes over the whole batch. offsets[r] is the first stacked row
// of batch row r; rows with fewer than 2 interactions contribute nothing.
struct StackedBatch {
  Matrix logits;
  std::vector<int> targets;
  std::vector<int> next_questions;
  std::vector<std::uint8_t> mask;
  std::vector<std::size_t> offsets;
  std::vector<std::size_t> counts;
  std::vector<InteractionSequence> rows;
  std::vector<SequenceForward> forwards;  // empty entries for skipped rows
};

StackedBatch forward_batch(const DktModel& model, const Batch& batch) {
  StackedBatch sb;
  sb.rows.reserve(batch.batch_size);
  sb.forwards.resize(batch.batch_size);
  sb.offsets.assign(batch.batch_size, 0);
  sb.counts.assign(batch.batch_size, 0);

  std::size_t total = 0;
  for (std::size_t r = 0; r < batch.batch_size; ++r) {
    sb.rows.push_back(extract_row(batch, r));
    const std::size_t len = sb.rows.back().length();
    sb.offsets[r] = total;
    sb.counts[r] = len >= 2 ? len - 1 : 0;
    total += sb.counts[r];
  }

  sb.logits = Matrix(total, model.num_skills);
  sb.targets.assign(total, 0);
  sb.next_questions.assign(total, 0);
  sb.mask.assign(total, 1);

  const std::size_t q_cols = model.num_skills;
  for (std::size_t r = 0; r < batch.batch_size; ++r) {
    if (sb.counts[r] == 0) continue;
    sb.forwards[r] = forward_sequence(sb.rows[r], model);
    const SequenceForward& fwd = sb.forwards[r];
    const std::size_t off = sb.offsets[r];
    std::memcpy(sb.logits.row(off), fwd.logits.row(0),
                sb.counts[r] * q_cols * sizeof(double));
    for (std::size_t t = 0; t < sb.counts[r]; ++t) {
      sb.targets[off + t] = sb.rows[r].corrects[t + 1];
      sb.next_questions[off + t] = sb.rows[r].questions[t + 1];
    }
  }
  return sb;
}

std::size_t count_correct(const StackedBatch& sb) {
  // Predictions use the selected logit; z >= 0 means probability >= 0.5.
  std::size_t correct = 0;
  for (std::size_t t = 0; t < sb.targets.size(); ++t) {
    const double z = sb.logits(t, static_cast<std::size_t>(sb.next_questions[t]));
    const int predicted = z >= 0.0 ? 1 : 0;
    if (predicted == sb.targets[t]) ++correct;
  }
  return correct;
}

std::uint64_t derived(const TrainConfig& cfg, SeedPurpose p) {
  return derive_seed(cfg.seed, static_cast<std::uint64_t>(p));
}

}  // namespace

void TrainConfig::validate() const {
  if (epochs < 1) throw DktError("config: epochs must be >= 1");
  if (batch_size < 1) throw DktError("config: batch_size must be >= 1");
  if (hidden_size < 1) throw DktError("config: hidden_size must be >= 1");
  if (max_len < 2) throw DktError("config: max_len must be >= 2");
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw DktError("config: test_fraction must be in (0,1)");
  }
  hyper.validate();
}

PreparedData prepare_data(const TrainConfig& cfg) {
  std::vector<InteractionSequence> seqs;
  int num_skills = 0;
  if (cfg.data_path) {
    LoadResult lr = load_dataset(*cfg.data_path);
    for (const auto& w : lr.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
    seqs = std::move(lr.sequences);
    num_skills = lr.num_skills;
  } else {
    SynthConfig sc = cfg.synth;
    sc.seed = derived(cfg, kSeedSynth);
    seqs = gen_synthetic(sc);
    num_skills = sc.num_skills;
  }
  if (cfg.num_skills_override > 0) {
    num_skills = std::max(num_skills, cfg.num_skills_override);
  }
  if (num_skills < 1) throw DktError("dataset has no skills (empty input?)");

  Split split = train_test_split(seqs, cfg.test_fraction, derived(cfg, kSeedSplit));

  PreparedData out;
  out.num_skills = num_skills;
  for (auto* side : {&split.train, &split.test}) {
    std::vector<InteractionSequence> chunked = split_long_sequences(*side, cfg.max_len);
    std::vector<InteractionSequence> usable;
    usable.reserve(chunked.size());
    for (auto& s : chunked) {
      if (s.length() >= 2) usable.push_back(std::move(s));  // T<2 is unusable for prediction
    }
    (side == &split.train ? out.train : out.test) = std::move(usable);
  }
  if (out.train.empty()) throw DktError("no trainable sequences after preparation");
  if (out.test.empty()) throw DktError("no evaluable sequences after preparation");
  return out;
}

EpochStats train_epoch(DktModel& model, OptimizerState& st, const std::vector<Batch>& batches,
                       const Hyperparams& hyper, double clip_norm) {
  double loss_sum = 0.0;
  std::size_t position_count = 0;
  std::size_t correct_count = 0;

  const auto start = Clock::now();
  for (std::size_t bi = 0; bi < batches.size(); ++bi) {
    StackedBatch sb = forward_batch(model, batches[bi]);
    if (sb.targets.empty()) continue;

    BceResult bce = masked_bce_loss(sb.logits, sb.targets, sb.next_questions, sb.mask);
    if (!std::isfinite(bce.loss)) {
      throw DktError("non-finite loss at batch " + std::to_string(bi));
    }

    const std::size_t n = sb.targets.size();
    loss_sum += bce.loss * static_cast<double>(n);
    position_count += n;
    correct_count += count_correct(sb);

    model.zero_grad();
    for (std::size_t r = 0; r < sb.forwards.size(); ++r) {
      if (sb.counts[r] == 0) continue;
      Matrix d_slice(sb.counts[r], model.num_skills);
      std::memcpy(d_slice.row(0), bce.d_logits.row(sb.offsets[r]),
                  sb.counts[r] * model.num_skills * sizeof(double));
      backward_sequence(model, sb.forwards[r], d_slice);
    }

    if (clip_norm > 0.0) clip_global_norm(model.views(), clip_norm);
    optimizer_step(model.views(), st, hyper);
  }
  const double wall = seconds_since(start);

  if (position_count == 0) throw EmptyInputError("train_epoch: no valid predictions in epoch");
  EpochStats stats;
  stats.mean_loss = loss_sum / static_cast<double>(position_count);
  stats.accuracy = static_cast<double>(correct_count) / static_cast<double>(position_count);
  stats.wall_time_s = wall;
  return stats;
}

EvalResult evaluate(const DktModel& model, const std::vector<Batch>& batches) {
  double loss_sum = 0.0;
  std::size_t position_count = 0;
  std::vector<PredictionRecord> records;

  for (const Batch& batch : batches) {
    StackedBatch sb = forward_batch(model, batch);
    if (sb.targets.empty()) continue;
    BceResult bce = masked_bce_loss(sb.logits, sb.targets, sb.next_questions, sb.mask);
    const std::size_t n = sb.targets.size();
    loss_sum += bce.loss * static_cast<double>(n);
    position_count += n;
    for (std::size_t t = 0; t < n; ++t) {
      const double z = sb.logits(t, static_cast<std::size_t>(sb.next_questions[t]));
      records.push_back({sigmoid(z), sb.targets[t], true});
    }
  }
  if (position_count == 0) throw EmptyInputError("evaluate: no valid predictions");

  EvalResult res;
  res.mean_loss = loss_sum / static_cast<double>(position_count);
  res.accuracy = accuracy(records);
  res.num_predictions = position_count;
  try {
    res.auc = auc(records);
  } catch (const UndefinedMetricError&) {
    res.auc.reset();  // flagged, not fatal
  }
  return res;
}

std::vector<EpochRecord> run_training(const TrainConfig& cfg, const EpochCallback& on_epoch) {
  cfg.validate();
  PreparedData data = prepare_data(cfg);

  Rng init_rng(derived(cfg, kSeedInit));
  DktModel model = DktModel::init(cfg.arch, static_cast<std::size_t>(data.num_skills),
                                  cfg.hidden_size, init_rng);
  OptimizerState st(cfg.optimizer);

  Rng shuffle_rng(derived(cfg, kSeedShuffle));
  Rng eval_rng(derived(cfg, kSeedEval));
  const std::vector<Batch> test_batches = make_batches(data.test, cfg.batch_size, eval_rng);

  std::vector<EpochRecord> records;
  records.reserve(static_cast<std::size_t>(cfg.epochs));
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const std::vector<Batch> train_batches =
        make_batches(data.train, cfg.batch_size, shuffle_rng);
    EpochStats ts = train_epoch(model, st, train_batches, cfg.hyper, cfg.clip_norm);
    EvalResult ev = evaluate(model, test_batches);

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = ts.mean_loss;
    rec.train_accuracy = ts.accuracy;
    rec.test_accuracy = ev.accuracy;
    rec.test_auc = ev.auc;
    rec.wall_time_s = ts.wall_time_s;
    records.push_back(rec);
    if (on_epoch) on_epoch(rec);
  }
  return records;
}

std::vector<BenchRow> bench_optimizers(const TrainConfig& base, const std::vector<OptAlgo>& algos,
                                       std::optional<double> lr_override) {
  base.validate();
  if (algos.empty()) throw DktError("bench_optimizers: optimizer list is empty");
  PreparedData data = prepare_data(base);

  Rng init_rng(derived(base, kSeedInit));
  const DktModel initial = DktModel::init(base.arch, static_cast<std::size_t>(data.num_skills),
                                          base.hidden_size, init_rng);

  std::vector<BenchRow> rows;
  rows.reserve(algos.size());
  for (OptAlgo algo : algos) {
    DktModel model = initial;  // value copy: bitwise-identical start
    OptimizerState st(algo);
    Hyperparams hp = default_hyperparams(algo);
    if (lr_override) hp.eta = *lr_override;
    hp.validate();

    // Same shuffle seed per row: identical batch order for every optimizer.
    Rng shuffle_rng(derived(base, kSeedShuffle));
    const std::vector<Batch> batches = make_batches(data.train, base.batch_size, shuffle_rng);
    EpochStats es = train_epoch(model, st, batches, hp, base.clip_norm);
    rows.push_back({algo, es.mean_loss, es.accuracy, es.wall_time_s});
  }
  return rows;
}

GradCheckReport run_gradcheck(Arch arch, std::uint64_t seed, double tolerance) {
  if (!(tolerance > 0.0)) throw DktError("run_gradcheck: tolerance must be > 0");
  constexpr std::size_t kSkills = 4, kHidden = 3, kSteps = 5;
  constexpr double kEps = 1e-5;

  Rng init_rng(derive_seed(seed, kSeedInit));
  DktModel model = DktModel::init(arch, kSkills, kHidden, init_rng);

  Rng data_rng(derive_seed(seed, kSeedGradcheckData));
  InteractionSequence seq;
  seq.student_id = "gradcheck";
  for (std::size_t t = 0; t < kSteps; ++t) {
    seq.questions.push_back(static_cast<int>(data_rng.next_below(kSkills)));
    seq.corrects.push_back(data_rng.bernoulli(0.5));
  }
  std::vector<int> targets(seq.corrects.begin() + 1, seq.corrects.end());
  std::vector<int> next_questions(seq.questions.begin() + 1, seq.questions.end());
  std::vector<std::uint8_t> mask(kSteps - 1, 1);

  const auto loss_fn = [&]() {
    SequenceForward fwd = forward_sequence(seq, model);
    return masked_bce_loss(fwd.logits, targets, next_questions, mask).loss;
  };

  model.zero_grad();
  SequenceForward fwd = forward_sequence(seq, model);
  BceResult bce = masked_bce_loss(fwd.logits, targets, next_questions, mask);
  backward_sequence(model, fwd, bce.d_logits);

  std::vector<ParamView> views = model.views();
  std::vector<Vector> analytic;
  analytic.reserve(views.size());
  for (const auto& v : views) analytic.emplace_back(v.grad.begin(), v.grad.end());

  const std::vector<Vector> numeric = finite_diff_grad(loss_fn, views, kEps);

  GradCheckReport report;
  report.all_pass = true;
  for (std::size_t b = 0; b < views.size(); ++b) {
    double worst = 0.0;
    for (std::size_t k = 0; k < analytic[b].size(); ++k) {
      const double a = analytic[b][k];
      const double n = numeric[b][k];
      const double denom = std::max({std::abs(a), std::abs(n), 1e-8});
      worst = std::max(worst, std::abs(a - n) / denom);
    }
    const bool pass = worst <= tolerance;
    report.rows.push_back({views[b].name, worst, pass});
    report.all_pass = report.all_pass && pass;
  }
  return report;
}

std::vector<PredictionRecord> skill_frequency_baseline(
    const std::vector<InteractionSequence>& train, const std::vector<InteractionSequence>& test,
    int num_skills) {
  std::vector<double> correct(static_cast<std::size_t>(num_skills), 0.0);
  std::vector<double> attempts(static_cast<std::size_t>(num_skills), 0.0);
  double total_correct = 0.0, total_attempts = 0.0;
  for (const auto& s : train) {
    for (std::size_t t = 0; t < s.length(); ++t) {
      attempts[static_cast<std::size_t>(s.questions[t])] += 1.0;
      correct[static_cast<std::size_t>(s.questions[t])] += s.corrects[t];
      total_attempts += 1.0;
      total_correct += s.corrects[t];
    }
  }
  const double global_rate = total_attempts > 0.0 ? total_correct / total_attempts : 0.5;

  std::vector<PredictionRecord> records;
  for (const auto& s : test) {
    for (std::size_t t = 0; t + 1 < s.length(); ++t) {
      const auto q = static_cast<std::size_t>(s.questions[t + 1]);
      const double p = attempts[q] > 0.0 ? correct[q] / attempts[q] : global_rate;
      records.push_back({p, s.corrects[t + 1], true});
    }
  }
  return records;
}

}  // namespace dkt
