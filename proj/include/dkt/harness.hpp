#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "dkt/data.hpp"
#include "dkt/model.hpp"
#include "dkt/optim.hpp"

namespace dkt {

// Purposes for deriving per-use seeds from the single run seed.
enum SeedPurpose : std::uint64_t {
  kSeedSynth = 0,
  kSeedInit = 1,
  kSeedShuffle = 2,
  kSeedSplit = 3,
  kSeedEval = 4,
  kSeedGradcheckData = 5,
};

struct TrainConfig {
  Arch arch = Arch::lstm;
  OptAlgo optimizer = OptAlgo::adam;
  Hyperparams hyper = default_hyperparams(OptAlgo::adam);
  int epochs = 20;
  std::size_t batch_size = 32;
  std::size_t hidden_size = 100;
  std::uint64_t seed = 42;
  double clip_norm = 5.0;  // <= 0 disables clipping
  double test_fraction = 0.2;
  std::size_t max_len = 200;  // longer sequences are chunked
  std::optional<std::string> data_path;  // unset: generate synthetic data
  SynthConfig synth;                     // its seed is derived from `seed`
  int num_skills_override = 0;           // 0 = infer from data

  void validate() const;
};

struct EpochRecord {
  int epoch = 0;  // 1-based
  double train_loss = 0.0;
  double train_accuracy = 0.0;
  double test_accuracy = 0.0;
  std::optional<double> test_auc;  // unset when AUC is undefined (single class)
  double wall_time_s = 0.0;
};

struct PreparedData {
  std::vector<InteractionSequence> train, test;
  int num_skills = 0;
};

// Loads or generates sequences, splits by student, chunks to max_len and
// drops length-1 leftovers from both sides.
PreparedData prepare_data(const TrainConfig& cfg);

struct EpochStats {
  double mean_loss = 0.0;  // over all valid positions of the epoch
  double accuracy = 0.0;   // online, as the model evolves batch to batch
  double wall_time_s = 0.0;
};

// One pass: per batch forward -> masked loss -> BPTT -> clip -> step.
// Wall time covers exactly that loop.
EpochStats train_epoch(DktModel& model, OptimizerState& st, const std::vector<Batch>& batches,
                       const Hyperparams& hyper, double clip_norm);

struct EvalResult {
  double mean_loss = 0.0;
  double accuracy = 0.0;
  std::optional<double> auc;  // unset when only one class occurs
  std::size_t num_predictions = 0;
};

// Pure: never touches parameters or optimizer accumulators.
EvalResult evaluate(const DktModel& model, const std::vector<Batch>& batches);

using EpochCallback = std::function<void(const EpochRecord&)>;

std::vector<EpochRecord> run_training(const TrainConfig& cfg, const EpochCallback& on_epoch = {});

struct BenchRow {
  OptAlgo algo = OptAlgo::sgd;
  double error = 0.0;     // mean train loss of epoch 1
  double accuracy = 0.0;  // train accuracy of epoch 1
  double time_s = 0.0;
};

// Runs exactly one epoch per optimizer from cloned initial weights with an
// identical batch order. Hyperparameters are per-optimizer defaults unless
// lr_override is set.
std::vector<BenchRow> bench_optimizers(const TrainConfig& base, const std::vector<OptAlgo>& algos,
                                       std::optional<double> lr_override = {});

struct GradCheckRow {
  std::string block;
  double max_rel_err = 0.0;
  bool pass = false;
};

struct GradCheckReport {
  std::vector<GradCheckRow> rows;
  bool all_pass = false;
};

// Compares the analytic gradient of the full model loss (cells + projection
// + masked BCE) against central finite differences (eps = 1e-5) on a seeded
// Q=4, H=3, T=5 instance. Relative error uses max(|a|,|b|,1e-8).
GradCheckReport run_gradcheck(Arch arch, std::uint64_t seed, double tolerance);

// Historical per-skill correct-rate baseline: train-split frequencies are
// used as the probability for every test prediction position (the same
// positions a model would score). Unseen skills fall back to the global rate.
std::vector<PredictionRecord> skill_frequency_baseline(
    const std::vector<InteractionSequence>& train, const std::vector<InteractionSequence>& test,
    int num_skills);

}  // namespace dkt
