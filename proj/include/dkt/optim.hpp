#pragma once

#include <string>
#include <vector>

#include "dkt/cells.hpp"

namespace dkt {

enum class OptAlgo { sgd, rmsprop, adagrad, adam, adamw };

const char* opt_name(OptAlgo a);
OptAlgo opt_from_name(const std::string& name);  // throws DktError on unknown names

struct Hyperparams {
  double eta = 0.001;        // learning rate
  double rho = 0.9;          // rmsprop decay
  double beta1 = 0.9;        // adam first-moment decay
  double beta2 = 0.999;      // adam second-moment decay
  double epsilon = 1e-8;     // numerical-stability constant
  double weight_decay = 0.0; // adamw decoupled decay coefficient

  void validate() const;  // throws DktError on out-of-range values
};

// Per-optimizer defaults; only rho and the betas come from stated
// conventions, the learning rates follow each optimizer's origin.
Hyperparams default_hyperparams(OptAlgo algo);

// Accumulators mirror the parameter blocks and are allocated on first use.
struct OptimizerState {
  OptAlgo algo = OptAlgo::sgd;
  long step_count = 0;  // steps taken; Adam bias exponents use step_count + 1
  std::vector<Vector> s;       // rmsprop moving average of squared gradients
  std::vector<Vector> sum_sq;  // adagrad accumulated squared gradients (G)
  std::vector<Vector> m, v;    // adam moment estimates

  explicit OptimizerState(OptAlgo a = OptAlgo::sgd) : algo(a) {}
};

// All steppers read gradients and update values in place. Non-finite
// gradients abort with a diagnostic naming the parameter block.
// theta <- theta - eta g
void sgd_step(std::vector<ParamView> params, OptimizerState& st, const Hyperparams& h);
// s <- rho s + (1-rho) g^2 ; theta <- theta - eta g / sqrt(s + eps)
void rmsprop_step(std::vector<ParamView> params, OptimizerState& st, const Hyperparams& h);
// G <- G + g^2 ; theta <- theta - eta g / (sqrt(G) + eps)
void adagrad_step(std::vector<ParamView> params, OptimizerState& st, const Hyperparams& h);
// First/second moments with bias correction; eps outside the root.
void adam_step(std::vector<ParamView> params, OptimizerState& st, const Hyperparams& h);
// adam_step, then decoupled decay theta <- theta - eta weight_decay theta.
void adamw_step(std::vector<ParamView> params, OptimizerState& st, const Hyperparams& h);

void optimizer_step(std::vector<ParamView> params, OptimizerState& st, const Hyperparams& h);

// Scales every gradient by max_norm/n when the global L2 norm n exceeds
// max_norm; returns the applied scale (1.0 when nothing was clipped).
double clip_global_norm(std::vector<ParamView> params, double max_norm);

}  // namespace dkt
