// optimizer steps against an independent scalar re-implementation
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstring>

#include "dkt/optim.hpp"

using namespace dkt;

namespace {

struct Scalar {
  double value = 1.0;
  double grad = 0.0;
  std::vector<ParamView> views() {
    return {{"theta", {&value, 1}, {&grad, 1}}};
  }
};

// Plain transcriptions of the update systems, written without reference to
// the library code. They are the oracle: ten steps on f(theta) = theta^2.
struct OracleSgd {
  double step(double theta, double g, const Hyperparams& h) { return theta - h.eta * g; }
};
struct OracleRmsprop {
  double s = 0.0;
  double step(double theta, double g, const Hyperparams& h) {
    s = h.rho * s + (1.0 - h.rho) * g * g;
    return theta - h.eta / std::sqrt(s + h.epsilon) * g;  // eps inside the root
  }
};
struct OracleAdagrad {
  double big_g = 0.0;
  double step(double theta, double g, const Hyperparams& h) {
    big_g += g * g;
    return theta - h.eta / (std::sqrt(big_g) + h.epsilon) * g;  // eps outside the root
  }
};
struct OracleAdam {
  double m = 0.0, v = 0.0;
  int t = 0;
  double step(double theta, double g, const Hyperparams& h) {
    m = h.beta1 * m + (1.0 - h.beta1) * g;
    v = h.beta2 * v + (1.0 - h.beta2) * g * g;
    const double m_hat = m / (1.0 - std::pow(h.beta1, t + 1));
    const double v_hat = v / (1.0 - std::pow(h.beta2, t + 1));
    ++t;
    return theta - h.eta * m_hat / (std::sqrt(v_hat) + h.epsilon);
  }
};
struct OracleAdamw {
  OracleAdam adam;
  double step(double theta, double g, const Hyperparams& h) {
    const double after = adam.step(theta, g, h);
    return after - h.eta * h.weight_decay * after;
  }
};

template <typename Oracle>
void compare_on_quadratic(OptAlgo algo, int steps = 10) {
  Scalar s;
  OptimizerState st(algo);
  const Hyperparams h = default_hyperparams(algo);
  Oracle oracle;
  double expected = 1.0;
  for (int k = 0; k < steps; ++k) {
    const double g = 2.0 * s.value;  // d/dtheta theta^2
    expected = oracle.step(expected, 2.0 * expected, h);
    s.grad = g;
    optimizer_step(s.views(), st, h);
    INFO(opt_name(algo), " step ", k);
    CHECK(std::abs(s.value - expected) < 1e-12);
  }
}

}  // namespace

TEST_CASE("sgd examples") {
  Scalar s;
  OptimizerState st(OptAlgo::sgd);
  Hyperparams h = default_hyperparams(OptAlgo::sgd);
  s.grad = 2.0;
  sgd_step(s.views(), st, h);
  CHECK(s.value == doctest::Approx(0.8).epsilon(1e-15));
  sgd_step(s.views(), st, h);
  CHECK(s.value == doctest::Approx(0.6).epsilon(1e-15));
  s.grad = 0.0;
  sgd_step(s.views(), st, h);
  CHECK(s.value == doctest::Approx(0.6).epsilon(1e-15));
  CHECK(st.step_count == 3);
}

TEST_CASE("rmsprop first-step hand value") {
  Scalar s;
  OptimizerState st(OptAlgo::rmsprop);
  const Hyperparams h = default_hyperparams(OptAlgo::rmsprop);
  s.grad = 1.0;
  rmsprop_step(s.views(), st, h);
  CHECK(st.s[0][0] == doctest::Approx(0.1).epsilon(1e-15));
  // 1 - 0.01 / sqrt(0.1 + 1e-8); the spec quotes eta=0.1 in its example
  Scalar s2;
  OptimizerState st2(OptAlgo::rmsprop);
  Hyperparams h2 = h;
  h2.eta = 0.1;
  s2.grad = 1.0;
  rmsprop_step(s2.views(), st2, h2);
  CHECK(s2.value == doctest::Approx(0.6837722497945492).epsilon(1e-12));
}

TEST_CASE("rmsprop zero gradient is a fixed point") {
  Scalar s;
  OptimizerState st(OptAlgo::rmsprop);
  const Hyperparams h = default_hyperparams(OptAlgo::rmsprop);
  s.grad = 0.0;
  rmsprop_step(s.views(), st, h);
  CHECK(s.value == 1.0);
}

TEST_CASE("rmsprop constant-gradient update approaches eta * sign(g)") {
  Scalar s;
  OptimizerState st(OptAlgo::rmsprop);
  const Hyperparams h = default_hyperparams(OptAlgo::rmsprop);
  double prev = s.value;
  double update = 0.0;
  for (int k = 0; k < 500; ++k) {
    s.grad = 1.0;
    rmsprop_step(s.views(), st, h);
    update = prev - s.value;
    prev = s.value;
  }
  // s converges to g^2 = 1, so the update tends to eta / sqrt(1 + eps)
  CHECK(update == doctest::Approx(h.eta).epsilon(1e-6));
}

TEST_CASE("adagrad examples and monotone accumulator") {
  Scalar s;
  OptimizerState st(OptAlgo::adagrad);
  const Hyperparams h = default_hyperparams(OptAlgo::adagrad);
  s.grad = 2.0;
  adagrad_step(s.views(), st, h);
  CHECK(st.sum_sq[0][0] == doctest::Approx(4.0).epsilon(1e-15));
  CHECK(s.value == doctest::Approx(0.9).epsilon(1e-9));
  const double g_before = st.sum_sq[0][0];
  s.grad = 2.0;
  adagrad_step(s.views(), st, h);
  CHECK(st.sum_sq[0][0] == doctest::Approx(8.0).epsilon(1e-15));
  CHECK(st.sum_sq[0][0] >= g_before);
  CHECK(s.value == doctest::Approx(0.8292893226313452).epsilon(1e-12));
}

TEST_CASE("adagrad effective step size never grows") {
  Scalar s;
  OptimizerState st(OptAlgo::adagrad);
  const Hyperparams h = default_hyperparams(OptAlgo::adagrad);
  double prev_eff = 1e300;
  Rng rng(9);
  for (int k = 0; k < 50; ++k) {
    s.grad = rng.uniform(-3.0, 3.0);
    adagrad_step(s.views(), st, h);
    const double eff = h.eta / (std::sqrt(st.sum_sq[0][0]) + h.epsilon);
    CHECK(eff <= prev_eff);
    prev_eff = eff;
  }
}

TEST_CASE("adam first step: bias correction cancels decay exactly") {
  Scalar s;
  OptimizerState st(OptAlgo::adam);
  const Hyperparams h = default_hyperparams(OptAlgo::adam);
  s.grad = 0.5;
  adam_step(s.views(), st, h);
  // m_hat = 0.5 and v_hat = 0.25 exactly on the first step
  CHECK(st.m[0][0] / (1.0 - h.beta1) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(s.value == doctest::Approx(1.0 - 0.001 * (0.5 / (0.5 + 1e-8))).epsilon(1e-15));
}

TEST_CASE("adam zero gradient on first step is a fixed point") {
  Scalar s;
  OptimizerState st(OptAlgo::adam);
  const Hyperparams h = default_hyperparams(OptAlgo::adam);
  s.grad = 0.0;
  adam_step(s.views(), st, h);
  CHECK(s.value == 1.0);
}

TEST_CASE("scalar oracle equivalence over 10 steps") {
  compare_on_quadratic<OracleSgd>(OptAlgo::sgd);
  compare_on_quadratic<OracleRmsprop>(OptAlgo::rmsprop);
  compare_on_quadratic<OracleAdagrad>(OptAlgo::adagrad);
  compare_on_quadratic<OracleAdam>(OptAlgo::adam);
  compare_on_quadratic<OracleAdamw>(OptAlgo::adamw);
}

TEST_CASE("three adam steps with constant gradient match the oracle") {
  Scalar s;
  OptimizerState st(OptAlgo::adam);
  Hyperparams h = default_hyperparams(OptAlgo::adam);
  h.eta = 0.1;
  OracleAdam oracle;
  double expected = 1.0;
  for (int k = 0; k < 3; ++k) {
    expected = oracle.step(expected, 1.0, h);
    s.grad = 1.0;
    adam_step(s.views(), st, h);
    CHECK(std::abs(s.value - expected) < 1e-12);
  }
  Scalar sw;
  OptimizerState stw(OptAlgo::adamw);
  Hyperparams hw = h;
  hw.weight_decay = 0.01;
  OracleAdamw oracle_w;
  double expected_w = 1.0;
  for (int k = 0; k < 3; ++k) {
    expected_w = oracle_w.step(expected_w, 1.0, hw);
    sw.grad = 1.0;
    adamw_step(sw.views(), stw, hw);
    CHECK(std::abs(sw.value - expected_w) < 1e-12);
  }
}

TEST_CASE("adamw with zero decay is bitwise adam") {
  Scalar a, w;
  OptimizerState st_a(OptAlgo::adam), st_w(OptAlgo::adamw);
  Hyperparams h = default_hyperparams(OptAlgo::adam);
  Rng rng(33);
  for (int k = 0; k < 25; ++k) {
    const double g = rng.uniform(-2.0, 2.0);
    a.grad = g;
    w.grad = g;
    adam_step(a.views(), st_a, h);
    adamw_step(w.views(), st_w, h);  // h.weight_decay == 0
    CHECK(std::memcmp(&a.value, &w.value, sizeof(double)) == 0);
  }
}

TEST_CASE("adamw pure decay when gradient is zero") {
  Scalar s;
  OptimizerState st(OptAlgo::adamw);
  const Hyperparams h = default_hyperparams(OptAlgo::adamw);
  s.grad = 0.0;
  adamw_step(s.views(), st, h);
  CHECK(s.value == doctest::Approx(0.99999).epsilon(1e-15));
}

TEST_CASE("zero-gradient fixed points across optimizers") {
  for (OptAlgo algo : {OptAlgo::sgd, OptAlgo::rmsprop, OptAlgo::adagrad, OptAlgo::adam}) {
    Scalar s;
    OptimizerState st(algo);
    s.grad = 0.0;
    optimizer_step(s.views(), st, default_hyperparams(algo));
    INFO(opt_name(algo));
    CHECK(s.value == 1.0);
  }
}

TEST_CASE("each optimizer descends on the quadratic") {
  for (OptAlgo algo :
       {OptAlgo::sgd, OptAlgo::rmsprop, OptAlgo::adagrad, OptAlgo::adam, OptAlgo::adamw}) {
    Scalar s;
    OptimizerState st(algo);
    const Hyperparams h = default_hyperparams(algo);
    double prev_f = 1.0;
    for (int k = 0; k < 10; ++k) {
      s.grad = 2.0 * s.value;
      optimizer_step(s.views(), st, h);
      const double f = s.value * s.value;
      INFO(opt_name(algo), " step ", k);
      CHECK(f < prev_f);
      prev_f = f;
    }
  }
}

TEST_CASE("nan gradient aborts and names the parameter") {
  Scalar s;
  OptimizerState st(OptAlgo::sgd);
  s.grad = std::nan("");
  try {
    sgd_step(s.views(), st, default_hyperparams(OptAlgo::sgd));
    FAIL("expected DktError");
  } catch (const DktError& e) {
    CHECK(std::string(e.what()).find("theta") != std::string::npos);
  }
}

TEST_CASE("clip_global_norm scales and reports") {
  Vector grads = {3.0, 4.0};  // norm 5
  Vector values = {0.0, 0.0};
  std::vector<ParamView> views = {
      {"a", {values.data(), 1}, {grads.data(), 1}},
      {"b", {values.data() + 1, 1}, {grads.data() + 1, 1}},
  };
  const double scale = clip_global_norm(views, 2.5);
  CHECK(scale == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(grads[0] == doctest::Approx(1.5).epsilon(1e-15));
  CHECK(grads[1] == doctest::Approx(2.0).epsilon(1e-15));
  const double post = std::sqrt(grads[0] * grads[0] + grads[1] * grads[1]);
  CHECK(post == doctest::Approx(2.5).epsilon(1e-12));

  const double no_clip = clip_global_norm(views, 100.0);
  CHECK(no_clip == 1.0);
  CHECK(grads[0] == doctest::Approx(1.5).epsilon(1e-15));
}

TEST_CASE("hyperparameter validation") {
  Hyperparams h;
  h.eta = -1.0;
  CHECK_THROWS_AS(h.validate(), DktError);
  h = Hyperparams{};
  h.rho = 1.0;
  CHECK_THROWS_AS(h.validate(), DktError);
  h = Hyperparams{};
  h.eta = 0.0;  // null-update baseline must be allowed
  CHECK_NOTHROW(h.validate());
}

TEST_CASE("optimizer name round-trip") {
  for (OptAlgo algo :
       {OptAlgo::sgd, OptAlgo::rmsprop, OptAlgo::adagrad, OptAlgo::adam, OptAlgo::adamw}) {
    CHECK(opt_from_name(opt_name(algo)) == algo);
  }
  CHECK_THROWS_AS(opt_from_name("momentum"), DktError);
}
