#include "dkt/optim.hpp"

#include <cmath>

#include "dkt/error.hpp"

namespace dkt {

namespace {

void check_finite_grads(const std::vector<ParamView>& params) {
  for (const auto& p : params) {
    if (!all_finite({p.grad.data(), p.grad.size()})) {
      throw DktError("non-finite gradient in parameter '" + p.name + "'");
    }
  }
}

void ensure_sized(std::vector<Vector>& buffers, const std::vector<ParamView>& params,
                  const char* what) {
  if (buffers.empty()) {
    buffers.reserve(params.size());
    for (const auto& p : params) buffers.emplace_back(p.value.size(), 0.0);
    return;
  }
  if (buffers.size() != params.size()) {
    throw DktError(std::string("optimizer state '") + what +
                   "' does not match the parameter blocks");
  }
  for (std::size_t b = 0; b < params.size(); ++b) {
    if (buffers[b].size() != params[b].value.size()) {
      throw DktError(std::string("optimizer state '") + what + "' block '" + params[b].name +
                     "' has the wrong size");
    }
  }
}

}  // namespace

const char* opt_name(OptAlgo a) {
  switch (a) {
    case OptAlgo::sgd: return "sgd";
    case OptAlgo::rmsprop: return "rmsprop";
    case OptAlgo::adagrad: return "adagrad";
    case OptAlgo::adam: return "adam";
    case OptAlgo::adamw: return "adamw";
  }
  return "?";
}

OptAlgo opt_from_name(const std::string& name) {
  if (name == "sgd") return OptAlgo::sgd;
  if (name == "rmsprop") return OptAlgo::rmsprop;
  if (name == "adagrad") return OptAlgo::adagrad;
  if (name == "adam") return OptAlgo::adam;
  if (name == "adamw") return OptAlgo::adamw;
  throw DktError("unknown optimizer '" + name +
                 "' (expected sgd, rmsprop, adagrad, adam or adamw)");
}

void Hyperparams::validate() const {
  // eta == 0 is allowed: a zero learning rate is the null-update baseline.
  if (!(eta >= 0.0)) throw DktError("hyperparams: eta must be >= 0");
  if (!(rho >= 0.0 && rho < 1.0)) throw DktError("hyperparams: rho must be in [0,1)");
  if (!(beta1 >= 0.0 && beta1 < 1.0)) throw DktError("hyperparams: beta1 must be in [0,1)");
  if (!(beta2 >= 0.0 && beta2 < 1.0)) throw DktError("hyperparams: beta2 must be in [0,1)");
  if (!(epsilon > 0.0)) throw DktError("hyperparams: epsilon must be > 0");
  if (!(weight_decay >= 0.0)) throw DktError("hyperparams: weight_decay must be >= 0");
}

Hyperparams default_hyperparams(OptAlgo algo) {
  Hyperparams h;
  switch (algo) {
    case OptAlgo::sgd: h.eta = 0.1; break;
    case OptAlgo::rmsprop: h.eta = 0.01; break;
    case OptAlgo::adagrad: h.eta = 0.1; break;
    case OptAlgo::adam: h.eta = 0.001; break;
    case OptAlgo::adamw:
      h.eta = 0.001;
      h.weight_decay = 0.01;
      break;
  }
  return h;
}

void sgd_step(std::vector<ParamView> params, OptimizerState& st, const Hyperparams& h) {
  check_finite_grads(params);
  for (auto& p : params) {
    for (std::size_t k = 0; k < p.value.size(); ++k) p.value[k] -= h.eta * p.grad[k];
  }
  ++st.step_count;
}

void rmsprop_step(std::vector<ParamView> params, OptimizerState& st, const Hyperparams& h) {
  check_finite_grads(params);
  ensure_sized(st.s, params, "s");
  for (std::size_t b = 0; b < params.size(); ++b) {
    auto value = params[b].value;
    auto grad = params[b].grad;
    Vector& s = st.s[b];
    for (std::size_t k = 0; k < value.size(); ++k) {
      const double g = grad[k];
      s[k] = h.rho * s[k] + (1.0 - h.rho) * g * g;
      // epsilon inside the root for this optimizer
      value[k] -= h.eta * g / std::sqrt(s[k] + h.epsilon);
    }
  }
  ++st.step_count;
}

void adagrad_step(std::vector<ParamView> params, OptimizerState& st, const Hyperparams& h) {
  check_finite_grads(params);
  ensure_sized(st.sum_sq, params, "G");
  for (std::size_t b = 0; b < params.size(); ++b) {
    auto value = params[b].value;
    auto grad = params[b].grad;
    Vector& G = st.sum_sq[b];
    for (std::size_t k = 0; k < value.size(); ++k) {
      const double g = grad[k];
      G[k] += g * g;
      // epsilon outside the root for this optimizer
      value[k] -= h.eta * g / (std::sqrt(G[k]) + h.epsilon);
    }
  }
  ++st.step_count;
}

void adam_step(std::vector<ParamView> params, OptimizerState& st, const Hyperparams& h) {
  check_finite_grads(params);
  ensure_sized(st.m, params, "m");
  ensure_sized(st.v, params, "v");
  const double exponent = static_cast<double>(st.step_count + 1);
  const double bias1 = 1.0 - std::pow(h.beta1, exponent);
  const double bias2 = 1.0 - std::pow(h.beta2, exponent);
  for (std::size_t b = 0; b < params.size(); ++b) {
    auto value = params[b].value;
    auto grad = params[b].grad;
    Vector& m = st.m[b];
    Vector& v = st.v[b];
    for (std::size_t k = 0; k < value.size(); ++k) {
      const double g = grad[k];
      m[k] = h.beta1 * m[k] + (1.0 - h.beta1) * g;
      v[k] = h.beta2 * v[k] + (1.0 - h.beta2) * g * g;
      const double m_hat = m[k] / bias1;
      const double v_hat = v[k] / bias2;
      value[k] -= h.eta * m_hat / (std::sqrt(v_hat) + h.epsilon);
    }
  }
  ++st.step_count;
}

void adamw_step(std::vector<ParamView> params, OptimizerState& st, const Hyperparams& h) {
  adam_step(params, st, h);
  if (h.weight_decay == 0.0) return;  // exactly the adam path
  const double decay = h.eta * h.weight_decay;
  for (auto& p : params) {
    for (std::size_t k = 0; k < p.value.size(); ++k) p.value[k] -= decay * p.value[k];
  }
}

void optimizer_step(std::vector<ParamView> params, OptimizerState& st, const Hyperparams& h) {
  switch (st.algo) {
    case OptAlgo::sgd: sgd_step(std::move(params), st, h); return;
    case OptAlgo::rmsprop: rmsprop_step(std::move(params), st, h); return;
    case OptAlgo::adagrad: adagrad_step(std::move(params), st, h); return;
    case OptAlgo::adam: adam_step(std::move(params), st, h); return;
    case OptAlgo::adamw: adamw_step(std::move(params), st, h); return;
  }
  throw DktError("optimizer_step: bad algorithm tag");
}

double clip_global_norm(std::vector<ParamView> params, double max_norm) {
  if (!(max_norm > 0.0)) throw DktError("clip_global_norm: max_norm must be > 0");
  double sum_sq = 0.0;
  for (const auto& p : params) {
    for (double g : p.grad) sum_sq += g * g;
  }
  const double norm = std::sqrt(sum_sq);
  if (norm <= max_norm) return 1.0;
  const double scale = max_norm / norm;
  for (auto& p : params) {
    for (double& g : p.grad) g *= scale;
  }
  return scale;
}

}  // namespace dkt
