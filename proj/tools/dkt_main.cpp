// dkt: train and benchmark recurrent knowledge-tracing models.
//
// Subcommands: train, bench-optim, gradcheck, gen-synth. Results are written
// as versioned JSON (train) or CSV (bench-optim); see README.md for the
// schemas. Exit codes: 0 success, 1 runtime/data error, 2 usage error.

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "dkt/harness.hpp"

namespace {

constexpr const char* kToolVersion = "0.1.0";
constexpr int kSchemaVersion = 1;

std::string iso_timestamp() {
  const std::time_t now = std::time(nullptr);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
  return buf;
}

struct CommonOpts {
  std::string data_path;
  bool synth = false;
  std::string model = "lstm";
  std::uint64_t seed = 42;
  std::size_t batch_size = 32;
  std::size_t hidden_size = 100;
  double test_fraction = 0.2;
  double clip = 5.0;
  std::size_t max_len = 200;
  int num_skills = 0;
  // synthetic-dataset overrides
  int synth_students = 4000;
  int synth_skills = 50;
  int synth_len = 50;
  double synth_ability_sd = 1.0;
  double synth_difficulty_sd = 1.0;
  double synth_gamma = 0.5;
};

void add_common_flags(CLI::App* cmd, CommonOpts& o) {
  auto* data = cmd->add_option("--data", o.data_path, "Dataset file (3-line-per-student format)");
  auto* synth = cmd->add_flag("--synth", o.synth, "Generate a synthetic dataset instead");
  data->excludes(synth);
  synth->excludes(data);
  cmd->add_option("--model", o.model, "Cell architecture")
      ->check(CLI::IsMember({"rnn", "lstm", "gru"}))
      ->capture_default_str();
  cmd->add_option("--seed", o.seed, "Master seed; all randomness derives from it")
      ->capture_default_str();
  cmd->add_option("--batch-size", o.batch_size, "Sequences per optimizer step")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--hidden-size", o.hidden_size, "Hidden state width")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--test-fraction", o.test_fraction, "Held-out student fraction")
      ->check(CLI::Range(1e-9, 1.0 - 1e-9))
      ->capture_default_str();
  cmd->add_option("--clip", o.clip, "Global-norm gradient clip (0 disables)")
      ->capture_default_str();
  cmd->add_option("--max-len", o.max_len, "Chunk sequences longer than this")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--num-skills", o.num_skills,
                  "Skill-count override; the larger of this and the inferred count applies");
  cmd->add_option("--synth-students", o.synth_students, "Synthetic: number of students")
      ->capture_default_str();
  cmd->add_option("--synth-skills", o.synth_skills, "Synthetic: number of skills")
      ->capture_default_str();
  cmd->add_option("--synth-len", o.synth_len, "Synthetic: interactions per student")
      ->capture_default_str();
  cmd->add_option("--synth-ability-sd", o.synth_ability_sd, "Synthetic: ability spread")
      ->capture_default_str();
  cmd->add_option("--synth-difficulty-sd", o.synth_difficulty_sd, "Synthetic: difficulty spread")
      ->capture_default_str();
  cmd->add_option("--synth-gamma", o.synth_gamma, "Synthetic: per-practice ability gain")
      ->capture_default_str();
}

dkt::TrainConfig to_config(const CommonOpts& o) {
  if (o.data_path.empty() && !o.synth) {
    throw CLI::ValidationError("either --data PATH or --synth is required");
  }
  dkt::TrainConfig cfg;
  cfg.arch = dkt::arch_from_name(o.model);
  cfg.seed = o.seed;
  cfg.batch_size = o.batch_size;
  cfg.hidden_size = o.hidden_size;
  cfg.test_fraction = o.test_fraction;
  cfg.clip_norm = o.clip;
  cfg.max_len = o.max_len;
  cfg.num_skills_override = o.num_skills;
  if (!o.data_path.empty()) {
    cfg.data_path = o.data_path;
  } else {
    cfg.synth.num_students = o.synth_students;
    cfg.synth.num_skills = o.synth_skills;
    cfg.synth.seq_len = o.synth_len;
    cfg.synth.ability_sd = o.synth_ability_sd;
    cfg.synth.difficulty_sd = o.synth_difficulty_sd;
    cfg.synth.learn_rate_gamma = o.synth_gamma;
  }
  return cfg;
}

nlohmann::json config_json(const dkt::TrainConfig& cfg, int epochs) {
  nlohmann::json j;
  j["architecture"] = dkt::arch_name(cfg.arch);
  j["optimizer"] = dkt::opt_name(cfg.optimizer);
  j["hyperparams"] = {
      {"eta", cfg.hyper.eta},           {"rho", cfg.hyper.rho},
      {"beta1", cfg.hyper.beta1},       {"beta2", cfg.hyper.beta2},
      {"epsilon", cfg.hyper.epsilon},   {"weight_decay", cfg.hyper.weight_decay},
  };
  j["epochs"] = epochs;
  j["batch_size"] = cfg.batch_size;
  j["hidden_size"] = cfg.hidden_size;
  j["seed"] = cfg.seed;
  j["test_fraction"] = cfg.test_fraction;
  j["clip_norm"] = cfg.clip_norm;
  j["max_len"] = cfg.max_len;
  j["num_skills_override"] = cfg.num_skills_override;
  if (cfg.data_path) {
    j["data"] = {{"path", *cfg.data_path}};
  } else {
    j["data"] = {{"synthetic",
                  {{"num_students", cfg.synth.num_students},
                   {"num_skills", cfg.synth.num_skills},
                   {"seq_len", cfg.synth.seq_len},
                   {"ability_sd", cfg.synth.ability_sd},
                   {"difficulty_sd", cfg.synth.difficulty_sd},
                   {"learn_rate_gamma", cfg.synth.learn_rate_gamma}}}};
  }
  return j;
}

nlohmann::json results_skeleton(const char* command, const dkt::TrainConfig& cfg, int epochs) {
  nlohmann::json doc;
  doc["schema_version"] = kSchemaVersion;
  doc["tool"] = "dkt";
  doc["tool_version"] = kToolVersion;
  doc["timestamp"] = iso_timestamp();
  doc["command"] = command;
  doc["config"] = config_json(cfg, epochs);
  return doc;
}

void write_json(const std::string& path, const nlohmann::json& doc) {
  std::ofstream out(path);
  if (!out) throw dkt::DktError("cannot write results file '" + path + "'");
  out << doc.dump(2) << "\n";
}

int cmd_train(const CommonOpts& common, const std::string& optimizer, int epochs,
              std::optional<double> lr, std::optional<double> weight_decay,
              const std::string& out_path) {
  dkt::TrainConfig cfg = to_config(common);
  cfg.optimizer = dkt::opt_from_name(optimizer);
  cfg.epochs = epochs;
  cfg.hyper = dkt::default_hyperparams(cfg.optimizer);
  if (lr) cfg.hyper.eta = *lr;
  if (weight_decay) cfg.hyper.weight_decay = *weight_decay;

  nlohmann::json doc = results_skeleton("train", cfg, epochs);
  doc["epochs_run"] = nlohmann::json::array();

  const auto on_epoch = [&](const dkt::EpochRecord& r) {
    std::printf("epoch=%d loss=%.6f train_acc=%.6f test_acc=%.6f test_auc=%.6f time_s=%.3f\n",
                r.epoch, r.train_loss, r.train_accuracy, r.test_accuracy,
                r.test_auc ? *r.test_auc : std::nan(""), r.wall_time_s);
    std::fflush(stdout);
    nlohmann::json row = {{"epoch", r.epoch},
                          {"train_loss", r.train_loss},
                          {"train_accuracy", r.train_accuracy},
                          {"test_accuracy", r.test_accuracy},
                          {"wall_time_s", r.wall_time_s}};
    if (r.test_auc) {
      row["test_auc"] = *r.test_auc;
    } else {
      row["test_auc"] = nullptr;
    }
    doc["epochs_run"].push_back(row);
    // Rewrite after every epoch so a crash still leaves valid partial output.
    if (!out_path.empty()) write_json(out_path, doc);
  };

  dkt::run_training(cfg, on_epoch);
  if (!out_path.empty()) write_json(out_path, doc);
  return 0;
}

int cmd_bench_optim(const CommonOpts& common, const std::string& optimizers,
                    std::optional<double> lr, const std::string& out_path,
                    bool sequential_timing) {
  (void)sequential_timing;  // rows always run sequentially in this implementation
  dkt::TrainConfig cfg = to_config(common);
  cfg.epochs = 1;

  std::vector<dkt::OptAlgo> algos;
  {
    std::stringstream ss(optimizers);
    std::string token;
    while (std::getline(ss, token, ',')) {
      if (!token.empty()) algos.push_back(dkt::opt_from_name(token));
    }
  }
  if (algos.empty()) throw dkt::DktError("bench-optim: no optimizers requested");

  const std::vector<dkt::BenchRow> rows = dkt::bench_optimizers(cfg, algos, lr);

  std::string table = "Optimizer,Error,Accuracy,TimeSeconds\n";
  for (const auto& r : rows) {
    char line[128];
    std::snprintf(line, sizeof(line), "%s,%.6f,%.6f,%.3f\n", dkt::opt_name(r.algo), r.error,
                  r.accuracy, r.time_s);
    table += line;
  }
  std::fputs(table.c_str(), stdout);
  if (!out_path.empty()) {
    std::ofstream out(out_path);
    if (!out) throw dkt::DktError("cannot write table file '" + out_path + "'");
    out << table;
  }
  return 0;
}

int cmd_gradcheck(const std::string& model, std::uint64_t seed, double tolerance) {
  const dkt::GradCheckReport report =
      dkt::run_gradcheck(dkt::arch_from_name(model), seed, tolerance);
  for (const auto& row : report.rows) {
    std::printf("block=%-6s max_rel_err=%.3e %s\n", row.block.c_str(), row.max_rel_err,
                row.pass ? "pass" : "FAIL");
  }
    std::printf("gradcheck %s: %s (tolerance %.1e)\n", model.c_str(),
              report.all_pass ? "all blocks pass" : "FAILED", tolerance);
  return report.all_pass ? 0 : 1;
}

int cmd_gen_synth(const dkt::SynthConfig& cfg, const std::string& out_path) {
  const auto seqs = dkt::gen_synthetic(cfg);
  dkt::save_dataset(out_path, seqs);
  std::printf("wrote %zu students x %d interactions (%d skills) to %s\n", seqs.size(),
              cfg.seq_len, cfg.num_skills, out_path.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dkt: recurrent knowledge tracing with benchmarked optimizers"};
  app.set_version_flag("--version", kToolVersion);
  app.require_subcommand(1);

  // train
  auto* train = app.add_subcommand("train", "Train one model and report per-epoch metrics");
  CommonOpts train_opts;
  add_common_flags(train, train_opts);
  std::string optimizer = "adam";
  train->add_option("--optimizer", optimizer, "Update rule")
      ->check(CLI::IsMember({"sgd", "rmsprop", "adagrad", "adam", "adamw"}))
      ->capture_default_str();
  int epochs = 20;
  train->add_option("--epochs", epochs, "Training epochs")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  double lr = 0.0, weight_decay = 0.0;
  auto* lr_opt = train->add_option("--lr", lr, "Learning rate (default: per-optimizer)");
  auto* wd_opt = train->add_option("--weight-decay", weight_decay, "AdamW decay coefficient");
  std::string train_out;
  train->add_option("--out", train_out, "Results JSON path");

  // bench-optim
  auto* bench = app.add_subcommand("bench-optim", "One-epoch optimizer comparison table");
  CommonOpts bench_opts;
  add_common_flags(bench, bench_opts);
  std::string optimizers = "sgd,rmsprop,adagrad,adam,adamw";
  bench->add_option("--optimizers", optimizers, "Comma-separated subset, kept in order")
      ->capture_default_str();
  double bench_lr = 0.0;
  auto* bench_lr_opt =
      bench->add_option("--lr", bench_lr, "Learning rate for every row (default: per-optimizer)");
  std::string bench_out;
  bench->add_option("--out", bench_out, "Table CSV path");
  bool sequential_timing = false;
  bench->add_flag("--sequential-timing", sequential_timing,
                  "Force serial rows for trustworthy timings (always on here)");

  // gradcheck
  auto* grad = app.add_subcommand("gradcheck", "Analytic vs finite-difference gradients");
  std::string grad_model = "lstm";
  grad->add_option("--model", grad_model, "Cell architecture")
      ->check(CLI::IsMember({"rnn", "lstm", "gru"}))
      ->capture_default_str();
  std::uint64_t grad_seed = 42;
  grad->add_option("--seed", grad_seed, "Seed for the checked instance")->capture_default_str();
  double tolerance = 1e-4;
  grad->add_option("--tolerance", tolerance, "Max relative error per block")
      ->capture_default_str();

  // gen-synth
  auto* gen = app.add_subcommand("gen-synth", "Write a synthetic dataset file");
  dkt::SynthConfig synth_cfg;
  gen->add_option("--students", synth_cfg.num_students, "Number of students")
      ->capture_default_str();
  gen->add_option("--skills", synth_cfg.num_skills, "Number of skills")->capture_default_str();
  gen->add_option("--len", synth_cfg.seq_len, "Interactions per student")->capture_default_str();
  gen->add_option("--ability-sd", synth_cfg.ability_sd, "Ability spread")->capture_default_str();
  gen->add_option("--difficulty-sd", synth_cfg.difficulty_sd, "Difficulty spread")
      ->capture_default_str();
  gen->add_option("--gamma", synth_cfg.learn_rate_gamma, "Per-practice ability gain")
      ->capture_default_str();
  gen->add_option("--seed", synth_cfg.seed, "Generator seed")->capture_default_str();
  std::string gen_out;
  gen->add_option("--out", gen_out, "Output dataset path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);  // prints help, exits 0
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);  // prints the message and usage hint
    return 2;
  }

  try {
    if (train->parsed()) {
      return cmd_train(train_opts, optimizer, epochs,
                       lr_opt->count() ? std::optional<double>(lr) : std::nullopt,
                       wd_opt->count() ? std::optional<double>(weight_decay) : std::nullopt,
                       train_out);
    }
    if (bench->parsed()) {
      return cmd_bench_optim(bench_opts, optimizers,
                             bench_lr_opt->count() ? std::optional<double>(bench_lr)
                                                   : std::nullopt,
                             bench_out, sequential_timing);
    }
    if (grad->parsed()) {
      return cmd_gradcheck(grad_model, grad_seed, tolerance);
    }
    if (gen->parsed()) {
      return cmd_gen_synth(synth_cfg, gen_out);
    }
  } catch (const CLI::ValidationError& e) {
    std::fprintf(stderr, "%s\n", e.what());
    return 2;
  } catch (const dkt::DktError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 2;
}
