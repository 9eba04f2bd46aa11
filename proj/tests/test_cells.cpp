// cell forward/backward and the finite-difference oracle
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "dkt/activations.hpp"
#include "dkt/cells.hpp"

using namespace dkt;

namespace {

constexpr double kTanhHalf = 0.46211715726000974;  // tanh(0.5)
constexpr double kHalfTanhOne = 0.38079707797788244;  // 0.5 * tanh(1)

Vector random_vec(std::size_t n, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Vector v(n);
  for (double& x : v) x = rng.uniform(lo, hi);
  return v;
}

void randomize(CellParams& p, Rng& rng) {
  for (auto& view : cell_views(p)) {
    for (double& v : view.value) v = rng.uniform(-0.8, 0.8);
  }
}

double rel_err(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-8});
}

// Summed-h loss over a fixed 3-step sequence, used for gradient checks.
double rollout_loss(CellParams& p, const std::vector<Vector>& xs) {
  const std::size_t hidden = std::visit([](const auto& v) { return v.hidden_dim; }, p);
  Vector h(hidden, 0.0), c(hidden, 0.0);
  double total = 0.0;
  for (const Vector& x : xs) {
    StepCache cache = cell_forward(x, h, c, p);
    h = cache_h(cache);
    if (arch_of(p) == Arch::lstm) c = std::get<LstmStep>(cache).c;
    for (double v : h) total += v;
  }
  return total;
}

void rollout_backward(CellParams& p, const std::vector<Vector>& xs) {
  const std::size_t hidden = std::visit([](const auto& v) { return v.hidden_dim; }, p);
  Vector h(hidden, 0.0), c(hidden, 0.0);
  std::vector<StepCache> caches;
  for (const Vector& x : xs) {
    caches.push_back(cell_forward(x, h, c, p));
    h = cache_h(caches.back());
    if (arch_of(p) == Arch::lstm) c = std::get<LstmStep>(caches.back()).c;
  }
  Vector d_h(hidden, 0.0), d_c;
  if (arch_of(p) == Arch::lstm) d_c.assign(hidden, 0.0);
  for (std::size_t t = caches.size(); t-- > 0;) {
    for (double& v : d_h) v += 1.0;  // d(sum h_t)/dh_t
    BackwardResult br = cell_backward(caches[t], d_h, d_c, p);
    d_h = std::move(br.d_h_prev);
    d_c = std::move(br.d_c_prev);
  }
}

void check_gradients(Arch arch, std::uint64_t seed) {
  constexpr std::size_t kIn = 4, kHidden = 3, kOut = 2;
  Rng rng(seed);
  CellParams p = make_cell(arch, kIn, kHidden, kOut, rng);
  randomize(p, rng);
  std::vector<Vector> xs;
  for (int t = 0; t < 3; ++t) xs.push_back(random_vec(kIn, rng));

  cell_zero_grad(p);
  rollout_backward(p, xs);
  auto views = cell_views(p);
  std::vector<Vector> analytic;
  for (const auto& v : views) analytic.emplace_back(v.grad.begin(), v.grad.end());

  const auto numeric = finite_diff_grad([&] { return rollout_loss(p, xs); }, views, 1e-5);
  for (std::size_t b = 0; b < views.size(); ++b) {
    // Output projection never feeds this loss, so skip w_hy / b_y.
    if (views[b].name == "w_hy" || views[b].name == "b_y") continue;
    for (std::size_t k = 0; k < analytic[b].size(); ++k) {
      INFO("arch=", arch_name(arch), " block=", views[b].name, " k=", k);
      CHECK(rel_err(analytic[b][k], numeric[b][k]) < 1e-4);
    }
  }
}

}  // namespace

TEST_CASE("rnn forward zero params gives zero state") {
  Rng rng(3);
  RnnParams p = RnnParams::glorot(2, 3, 2, rng);
  for (auto& v : p.views()) {
    for (double& x : v.value) x = 0.0;
  }
  const RnnStep s = rnn_forward({0.7, -0.3}, {0.5, -0.5, 0.25}, p);
  for (double h : s.h) CHECK(h == 0.0);
}

TEST_CASE("rnn forward scalar hand value") {
  Rng rng(3);
  RnnParams p = RnnParams::glorot(1, 1, 1, rng);
  p.w_xh(0, 0) = 1.0;
  p.w_hh(0, 0) = 0.0;
  p.b_h[0] = 0.0;
  const RnnStep s = rnn_forward({0.5}, {0.0}, p);
  CHECK(s.h[0] == doctest::Approx(kTanhHalf).epsilon(1e-12));
}

TEST_CASE("rnn forward range is (-1,1)") {
  Rng rng(17);
  RnnParams p = RnnParams::glorot(4, 5, 2, rng);
  for (int round = 0; round < 50; ++round) {
    const RnnStep s = rnn_forward(random_vec(4, rng, -3, 3), random_vec(5, rng, -3, 3), p);
    for (double h : s.h) {
      CHECK(h > -1.0);
      CHECK(h < 1.0);
    }
  }
}

TEST_CASE("rnn forward shape mismatch") {
  Rng rng(3);
  RnnParams p = RnnParams::glorot(2, 3, 2, rng);
  CHECK_THROWS_AS(rnn_forward({1.0}, {0.0, 0.0, 0.0}, p), ShapeError);
}

TEST_CASE("lstm zero params: gates half, state zero") {
  Rng rng(4);
  LstmParams p = LstmParams::glorot(2, 3, 2, rng);
  for (auto& v : p.views()) {
    for (double& x : v.value) x = 0.0;
  }
  const LstmStep s = lstm_forward({1.0, -1.0}, {0.2, 0.0, -0.2}, {0.0, 0.0, 0.0}, p);
  for (std::size_t j = 0; j < 3; ++j) {
    CHECK(s.f[j] == 0.5);
    CHECK(s.i[j] == 0.5);
    CHECK(s.o[j] == 0.5);
    CHECK(s.c_bar[j] == 0.0);
    CHECK(s.c[j] == 0.0);
    CHECK(s.h[j] == 0.0);
  }
}

TEST_CASE("lstm zero params with carried cell state") {
  Rng rng(4);
  LstmParams p = LstmParams::glorot(1, 1, 1, rng);
  for (auto& v : p.views()) {
    for (double& x : v.value) x = 0.0;
  }
  const LstmStep s = lstm_forward({0.0}, {0.0}, {2.0}, p);
  CHECK(s.c[0] == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(s.h[0] == doctest::Approx(kHalfTanhOne).epsilon(1e-12));
}

TEST_CASE("lstm |h| <= |o| elementwise") {
  Rng rng(21);
  LstmParams p = LstmParams::glorot(3, 4, 2, rng);
  for (int round = 0; round < 50; ++round) {
    const LstmStep s = lstm_forward(random_vec(3, rng, -2, 2), random_vec(4, rng, -2, 2),
                                    random_vec(4, rng, -2, 2), p);
    for (std::size_t j = 0; j < 4; ++j) CHECK(std::abs(s.h[j]) <= std::abs(s.o[j]));
  }
}

TEST_CASE("gru zero params: convex combination at zero candidate") {
  Rng rng(5);
  GruParams p = GruParams::glorot(1, 1, 1, rng);
  for (auto& v : p.views()) {
    for (double& x : v.value) x = 0.0;
  }
  const GruStep s = gru_forward({0.3}, {0.8}, p);
  CHECK(s.z[0] == 0.5);
  CHECK(s.r[0] == 0.5);
  CHECK(s.h_bar[0] == 0.0);
  CHECK(s.h[0] == doctest::Approx(0.4).epsilon(1e-15));
}

TEST_CASE("gru update gate forced near zero keeps h_prev") {
  Rng rng(5);
  GruParams p = GruParams::glorot(1, 1, 1, rng);
  for (auto& v : p.views()) {
    for (double& x : v.value) x = 0.0;
  }
  p.b_z[0] = -30.0;  // z = sigmoid(-30) ~ 9.4e-14
  const GruStep s = gru_forward({0.0}, {0.8}, p);
  CHECK(std::abs(s.h[0] - 0.8) < 1e-10);
}

TEST_CASE("gru h between h_prev and candidate") {
  Rng rng(23);
  GruParams p = GruParams::glorot(3, 4, 2, rng);
  randomize(p, rng);
  for (int round = 0; round < 50; ++round) {
    const Vector h_prev = random_vec(4, rng, -0.9, 0.9);
    const GruStep s = gru_forward(random_vec(3, rng, -2, 2), h_prev, p);
    for (std::size_t j = 0; j < 4; ++j) {
      const double lo = std::min(h_prev[j], s.h_bar[j]);
      const double hi = std::max(h_prev[j], s.h_bar[j]);
      CHECK(s.h[j] >= lo);
      CHECK(s.h[j] <= hi);
    }
  }
}

TEST_CASE("gate ranges strict for all architectures") {
  Rng rng(31);
  LstmParams lstm = LstmParams::glorot(3, 4, 2, rng);
  GruParams gru = GruParams::glorot(3, 4, 2, rng);
  for (int round = 0; round < 30; ++round) {
    const Vector x = random_vec(3, rng, -4, 4);
    const Vector h = random_vec(4, rng, -1, 1);
    const Vector c = random_vec(4, rng, -2, 2);
    const LstmStep ls = lstm_forward(x, h, c, lstm);
    for (std::size_t j = 0; j < 4; ++j) {
      for (double g : {ls.f[j], ls.i[j], ls.o[j]}) {
        CHECK(g > 0.0);
        CHECK(g < 1.0);
      }
      CHECK(ls.c_bar[j] > -1.0);
      CHECK(ls.c_bar[j] < 1.0);
    }
    const GruStep gs = gru_forward(x, h, gru);
    for (std::size_t j = 0; j < 4; ++j) {
      for (double g : {gs.z[j], gs.r[j]}) {
        CHECK(g > 0.0);
        CHECK(g < 1.0);
      }
      CHECK(gs.h_bar[j] > -1.0);
      CHECK(gs.h_bar[j] < 1.0);
    }
  }
}

TEST_CASE("gru boundedness over long rollouts") {
  Rng rng(37);
  GruParams p = GruParams::glorot(2, 3, 2, rng);
  randomize(p, rng);
  CellParams cp = p;
  Vector h = {-1.0, 1.0, 0.5};
  for (int t = 0; t < 100; ++t) {
    const StepCache cache = cell_forward(random_vec(2, rng, -3, 3), h, {}, cp);
    h = cache_h(cache);
    for (double v : h) {
      CHECK(v > -1.0);
      CHECK(v < 1.0);
    }
  }
}

TEST_CASE("backward with zero upstream gradient produces zero gradients") {
  Rng rng(41);
  for (Arch arch : {Arch::rnn, Arch::lstm, Arch::gru}) {
    CellParams p = make_cell(arch, 3, 4, 2, rng);
    randomize(p, rng);
    cell_zero_grad(p);
    const Vector x = random_vec(3, rng);
    const Vector h_prev = random_vec(4, rng);
    const Vector c_prev = random_vec(4, rng);
    const StepCache cache = cell_forward(x, h_prev, c_prev, p);
    const Vector zero(4, 0.0);
    const BackwardResult br = cell_backward(cache, zero, arch == Arch::lstm ? zero : Vector{}, p);
    for (const auto& v : cell_views(p)) {
      for (double g : v.grad) CHECK(g == 0.0);
    }
    for (double g : br.d_h_prev) CHECK(g == 0.0);
    for (double g : br.d_x) CHECK(g == 0.0);
  }
}

TEST_CASE("backward accumulates: calling twice doubles buffers") {
  Rng rng(43);
  for (Arch arch : {Arch::rnn, Arch::lstm, Arch::gru}) {
    CellParams p = make_cell(arch, 3, 4, 2, rng);
    randomize(p, rng);
    cell_zero_grad(p);
    const Vector x = random_vec(3, rng);
    const Vector h_prev = random_vec(4, rng);
    const Vector c_prev = random_vec(4, rng);
    const StepCache cache = cell_forward(x, h_prev, c_prev, p);
    const Vector d_h = random_vec(4, rng);
    const Vector d_c = arch == Arch::lstm ? random_vec(4, rng) : Vector{};

    cell_backward(cache, d_h, d_c, p);
    std::vector<Vector> once;
    for (const auto& v : cell_views(p)) once.emplace_back(v.grad.begin(), v.grad.end());
    cell_backward(cache, d_h, d_c, p);
    auto views = cell_views(p);
    for (std::size_t b = 0; b < views.size(); ++b) {
      for (std::size_t k = 0; k < once[b].size(); ++k) {
        CHECK(views[b].grad[k] == doctest::Approx(2.0 * once[b][k]).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("architecture tag mismatch between cache and params") {
  Rng rng(47);
  CellParams gru = make_cell(Arch::gru, 2, 3, 2, rng);
  CellParams lstm = make_cell(Arch::lstm, 2, 3, 2, rng);
  const StepCache cache = cell_forward(random_vec(2, rng), Vector(3, 0.0), Vector(3, 0.0), gru);
  CHECK_THROWS_AS(cell_backward(cache, Vector(3, 0.0), {}, lstm), DktError);
}

TEST_CASE("finite_diff_grad on quadratic") {
  Vector theta = {3.0};
  Vector grad = {0.0};
  std::vector<ParamView> views = {{"theta", {theta.data(), 1}, {grad.data(), 1}}};
  const auto g = finite_diff_grad([&] { return theta[0] * theta[0]; }, views, 1e-5);
  CHECK(g[0][0] == doctest::Approx(6.0).epsilon(1e-8));
  CHECK(theta[0] == 3.0);  // restored

  const auto zero = finite_diff_grad([] { return 4.25; }, views, 1e-5);
  CHECK(zero[0][0] == 0.0);
}

TEST_CASE("analytic gradients match finite differences (rnn)") { check_gradients(Arch::rnn, 51); }
TEST_CASE("analytic gradients match finite differences (lstm)") {
  check_gradients(Arch::lstm, 52);
}
TEST_CASE("analytic gradients match finite differences (gru)") { check_gradients(Arch::gru, 53); }

TEST_CASE("gru has fewer parameters than lstm at equal dims") {
  Rng rng(61);
  const CellParams lstm = make_cell(Arch::lstm, 10, 7, 5, rng);
  const CellParams gru = make_cell(Arch::gru, 10, 7, 5, rng);
  CHECK(cell_param_count(gru) < cell_param_count(lstm));
}
