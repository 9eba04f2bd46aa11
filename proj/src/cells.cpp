#include "dkt/cells.hpp"

#include <cmath>

#include "dkt/activations.hpp"

namespace dkt {

namespace {

std::span<double> span_of(Matrix& m) { return {m.data().data(), m.data().size()}; }
std::span<double> span_of(Vector& v) { return {v.data(), v.size()}; }

// pre = b + w x + u h_prev
Vector affine(const Matrix& w, const Matrix& u, const Vector& b, const Vector& x,
              const Vector& h_prev) {
  Vector pre = b;
  add_matvec(pre, w, x);
  add_matvec(pre, u, h_prev);
  return pre;
}

void check_dims(const char* op, std::size_t got_x, std::size_t want_x, std::size_t got_h,
                std::size_t want_h) {
  if (got_x != want_x || got_h != want_h) {
    throw ShapeError(std::string(op) + ": got x[" + std::to_string(got_x) + "], h[" +
                     std::to_string(got_h) + "], expected x[" + std::to_string(want_x) +
                     "], h[" + std::to_string(want_h) + "]");
  }
}

// Shared gate backward: given the pre-activation gradient, accumulate the
// weight/bias gradients and fold the input/recurrent contributions into
// d_x and d_h_prev.
void accumulate_gate(const Vector& d_pre, const Vector& x, const Vector& h_in, const Matrix& w,
                     const Matrix& u, Matrix& g_w, Matrix& g_u, Vector& g_b, Vector& d_x,
                     Vector& d_h_in) {
  add_outer(g_w, d_pre, x);
  add_outer(g_u, d_pre, h_in);
  for (std::size_t j = 0; j < d_pre.size(); ++j) g_b[j] += d_pre[j];
  add_matvec_transposed(d_x, w, d_pre);
  add_matvec_transposed(d_h_in, u, d_pre);
}

}  // namespace

const char* arch_name(Arch a) {
  switch (a) {
    case Arch::rnn: return "rnn";
    case Arch::lstm: return "lstm";
    case Arch::gru: return "gru";
  }
  return "?";
}

Arch arch_from_name(const std::string& name) {
  if (name == "rnn") return Arch::rnn;
  if (name == "lstm") return Arch::lstm;
  if (name == "gru") return Arch::gru;
  throw DktError("unknown architecture '" + name + "' (expected rnn, lstm or gru)");
}

// ---------------------------------------------------------------------------
// RNN

RnnParams RnnParams::glorot(std::size_t input_dim, std::size_t hidden_dim,
                            std::size_t output_dim, Rng& rng) {
  RnnParams p;
  p.input_dim = input_dim;
  p.hidden_dim = hidden_dim;
  p.output_dim = output_dim;
  p.w_xh = glorot_init(hidden_dim, input_dim, rng);
  p.w_hh = glorot_init(hidden_dim, hidden_dim, rng);
  p.b_h.assign(hidden_dim, 0.0);
  p.w_hy = glorot_init(output_dim, hidden_dim, rng);
  p.b_y.assign(output_dim, 0.0);
  p.g_w_xh = Matrix(hidden_dim, input_dim);
  p.g_w_hh = Matrix(hidden_dim, hidden_dim);
  p.g_b_h.assign(hidden_dim, 0.0);
  p.g_w_hy = Matrix(output_dim, hidden_dim);
  p.g_b_y.assign(output_dim, 0.0);
  return p;
}

std::vector<ParamView> RnnParams::views() {
  return {
      {"w_xh", span_of(w_xh), span_of(g_w_xh)},
      {"w_hh", span_of(w_hh), span_of(g_w_hh)},
      {"b_h", span_of(b_h), span_of(g_b_h)},
      {"w_hy", span_of(w_hy), span_of(g_w_hy)},
      {"b_y", span_of(b_y), span_of(g_b_y)},
  };
}

void RnnParams::zero_grad() {
  for (auto& v : views()) {
    for (double& g : v.grad) g = 0.0;
  }
}

std::size_t RnnParams::param_count() const {
  return w_xh.size() + w_hh.size() + b_h.size() + w_hy.size() + b_y.size();
}

RnnStep rnn_forward(const Vector& x, const Vector& h_prev, const RnnParams& p) {
  check_dims("rnn_forward", x.size(), p.input_dim, h_prev.size(), p.hidden_dim);
  RnnStep s;
  s.x = x;
  s.h_prev = h_prev;
  s.h = affine(p.w_xh, p.w_hh, p.b_h, x, h_prev);
  tanh_inplace(s.h);
  return s;
}

BackwardResult rnn_backward(const RnnStep& s, const Vector& d_h, RnnParams& p) {
  const std::size_t hidden = p.hidden_dim;
  Vector d_pre(hidden);
  for (std::size_t j = 0; j < hidden; ++j) d_pre[j] = d_h[j] * (1.0 - s.h[j] * s.h[j]);

  BackwardResult r;
  r.d_x.assign(p.input_dim, 0.0);
  r.d_h_prev.assign(hidden, 0.0);
  accumulate_gate(d_pre, s.x, s.h_prev, p.w_xh, p.w_hh, p.g_w_xh, p.g_w_hh, p.g_b_h, r.d_x,
                  r.d_h_prev);
  return r;
}

// ---------------------------------------------------------------------------
// LSTM
//
//   f_t = sigma(w_f x_t + u_f h_{t-1} + b_f)
//   i_t = sigma(w_i x_t + u_i h_{t-1} + b_i)
//   o_t = sigma(w_o x_t + u_o h_{t-1} + b_o)
//   c_bar_t = tanh(w_c x_t + u_c h_{t-1} + b_c)
//   c_t = f_t * c_{t-1} + i_t * c_bar_t
//   h_t = o_t * tanh(c_t)

LstmParams LstmParams::glorot(std::size_t input_dim, std::size_t hidden_dim,
                              std::size_t output_dim, Rng& rng) {
  LstmParams p;
  p.input_dim = input_dim;
  p.hidden_dim = hidden_dim;
  p.output_dim = output_dim;
  auto w = [&] { return glorot_init(hidden_dim, input_dim, rng); };
  auto u = [&] { return glorot_init(hidden_dim, hidden_dim, rng); };
  p.w_f = w(); p.u_f = u();
  p.w_i = w(); p.u_i = u();
  p.w_o = w(); p.u_o = u();
  p.w_c = w(); p.u_c = u();
  p.b_f.assign(hidden_dim, 0.0);
  p.b_i.assign(hidden_dim, 0.0);
  p.b_o.assign(hidden_dim, 0.0);
  p.b_c.assign(hidden_dim, 0.0);
  p.w_hy = glorot_init(output_dim, hidden_dim, rng);
  p.b_y.assign(output_dim, 0.0);
  p.g_w_f = Matrix(hidden_dim, input_dim); p.g_u_f = Matrix(hidden_dim, hidden_dim);
  p.g_w_i = Matrix(hidden_dim, input_dim); p.g_u_i = Matrix(hidden_dim, hidden_dim);
  p.g_w_o = Matrix(hidden_dim, input_dim); p.g_u_o = Matrix(hidden_dim, hidden_dim);
  p.g_w_c = Matrix(hidden_dim, input_dim); p.g_u_c = Matrix(hidden_dim, hidden_dim);
  p.g_b_f.assign(hidden_dim, 0.0);
  p.g_b_i.assign(hidden_dim, 0.0);
  p.g_b_o.assign(hidden_dim, 0.0);
  p.g_b_c.assign(hidden_dim, 0.0);
  p.g_w_hy = Matrix(output_dim, hidden_dim);
  p.g_b_y.assign(output_dim, 0.0);
  return p;
}

std::vector<ParamView> LstmParams::views() {
  return {
      {"w_f", span_of(w_f), span_of(g_w_f)}, {"u_f", span_of(u_f), span_of(g_u_f)},
      {"b_f", span_of(b_f), span_of(g_b_f)}, {"w_i", span_of(w_i), span_of(g_w_i)},
      {"u_i", span_of(u_i), span_of(g_u_i)}, {"b_i", span_of(b_i), span_of(g_b_i)},
      {"w_o", span_of(w_o), span_of(g_w_o)}, {"u_o", span_of(u_o), span_of(g_u_o)},
      {"b_o", span_of(b_o), span_of(g_b_o)}, {"w_c", span_of(w_c), span_of(g_w_c)},
      {"u_c", span_of(u_c), span_of(g_u_c)}, {"b_c", span_of(b_c), span_of(g_b_c)},
      {"w_hy", span_of(w_hy), span_of(g_w_hy)}, {"b_y", span_of(b_y), span_of(g_b_y)},
  };
}

void LstmParams::zero_grad() {
  for (auto& v : views()) {
    for (double& g : v.grad) g = 0.0;
  }
}

std::size_t LstmParams::param_count() const {
  return 4 * (w_f.size() + u_f.size() + b_f.size()) + w_hy.size() + b_y.size();
}

LstmStep lstm_forward(const Vector& x, const Vector& h_prev, const Vector& c_prev,
                      const LstmParams& p) {
  check_dims("lstm_forward", x.size(), p.input_dim, h_prev.size(), p.hidden_dim);
  if (c_prev.size() != p.hidden_dim) {
    throw ShapeError("lstm_forward: c_prev[" + std::to_string(c_prev.size()) + "], expected [" +
                     std::to_string(p.hidden_dim) + "]");
  }
  LstmStep s;
  s.x = x;
  s.h_prev = h_prev;
  s.c_prev = c_prev;
  // Gate order fixed: f, i, o, c_bar.
  s.f = affine(p.w_f, p.u_f, p.b_f, x, h_prev);
  sigmoid_inplace(s.f);
  s.i = affine(p.w_i, p.u_i, p.b_i, x, h_prev);
  sigmoid_inplace(s.i);
  s.o = affine(p.w_o, p.u_o, p.b_o, x, h_prev);
  sigmoid_inplace(s.o);
  s.c_bar = affine(p.w_c, p.u_c, p.b_c, x, h_prev);
  tanh_inplace(s.c_bar);

  const std::size_t hidden = p.hidden_dim;
  s.c.resize(hidden);
  s.tanh_c.resize(hidden);
  s.h.resize(hidden);
  for (std::size_t j = 0; j < hidden; ++j) {
    s.c[j] = s.f[j] * c_prev[j] + s.i[j] * s.c_bar[j];
    s.tanh_c[j] = std::tanh(s.c[j]);
    s.h[j] = s.o[j] * s.tanh_c[j];
  }
  return s;
}

BackwardResult lstm_backward(const LstmStep& s, const Vector& d_h, const Vector& d_c,
                             LstmParams& p) {
  const std::size_t hidden = p.hidden_dim;
  Vector d_f_pre(hidden), d_i_pre(hidden), d_o_pre(hidden), d_cbar_pre(hidden);
  BackwardResult r;
  r.d_x.assign(p.input_dim, 0.0);
  r.d_h_prev.assign(hidden, 0.0);
  r.d_c_prev.assign(hidden, 0.0);

  for (std::size_t j = 0; j < hidden; ++j) {
    // Cell-state gradient: incoming chain plus the h_t = o * tanh(c) branch.
    const double dc =
        (d_c.empty() ? 0.0 : d_c[j]) + d_h[j] * s.o[j] * (1.0 - s.tanh_c[j] * s.tanh_c[j]);
    d_o_pre[j] = d_h[j] * s.tanh_c[j] * s.o[j] * (1.0 - s.o[j]);
    d_f_pre[j] = dc * s.c_prev[j] * s.f[j] * (1.0 - s.f[j]);
    d_i_pre[j] = dc * s.c_bar[j] * s.i[j] * (1.0 - s.i[j]);
    d_cbar_pre[j] = dc * s.i[j] * (1.0 - s.c_bar[j] * s.c_bar[j]);
    r.d_c_prev[j] = dc * s.f[j];
  }

  accumulate_gate(d_f_pre, s.x, s.h_prev, p.w_f, p.u_f, p.g_w_f, p.g_u_f, p.g_b_f, r.d_x,
                  r.d_h_prev);
  accumulate_gate(d_i_pre, s.x, s.h_prev, p.w_i, p.u_i, p.g_w_i, p.g_u_i, p.g_b_i, r.d_x,
                  r.d_h_prev);
  accumulate_gate(d_o_pre, s.x, s.h_prev, p.w_o, p.u_o, p.g_w_o, p.g_u_o, p.g_b_o, r.d_x,
                  r.d_h_prev);
  accumulate_gate(d_cbar_pre, s.x, s.h_prev, p.w_c, p.u_c, p.g_w_c, p.g_u_c, p.g_b_c, r.d_x,
                  r.d_h_prev);
  return r;
}

// ---------------------------------------------------------------------------
// GRU
//
//   z_t = sigma(w_z x_t + u_z h_{t-1} + b_z)
//   r_t = sigma(w_r x_t + u_r h_{t-1} + b_r)
//   h_bar_t = tanh(w_h x_t + u_h (r_t * h_{t-1}) + b_h)
//   h_t = (1 - z_t) * h_{t-1} + z_t * h_bar_t

GruParams GruParams::glorot(std::size_t input_dim, std::size_t hidden_dim,
                            std::size_t output_dim, Rng& rng) {
  GruParams p;
  p.input_dim = input_dim;
  p.hidden_dim = hidden_dim;
  p.output_dim = output_dim;
  auto w = [&] { return glorot_init(hidden_dim, input_dim, rng); };
  auto u = [&] { return glorot_init(hidden_dim, hidden_dim, rng); };
  p.w_z = w(); p.u_z = u();
  p.w_r = w(); p.u_r = u();
  p.w_h = w(); p.u_h = u();
  p.b_z.assign(hidden_dim, 0.0);
  p.b_r.assign(hidden_dim, 0.0);
  p.b_h.assign(hidden_dim, 0.0);
  p.w_hy = glorot_init(output_dim, hidden_dim, rng);
  p.b_y.assign(output_dim, 0.0);
  p.g_w_z = Matrix(hidden_dim, input_dim); p.g_u_z = Matrix(hidden_dim, hidden_dim);
  p.g_w_r = Matrix(hidden_dim, input_dim); p.g_u_r = Matrix(hidden_dim, hidden_dim);
  p.g_w_h = Matrix(hidden_dim, input_dim); p.g_u_h = Matrix(hidden_dim, hidden_dim);
  p.g_b_z.assign(hidden_dim, 0.0);
  p.g_b_r.assign(hidden_dim, 0.0);
  p.g_b_h.assign(hidden_dim, 0.0);
  p.g_w_hy = Matrix(output_dim, hidden_dim);
  p.g_b_y.assign(output_dim, 0.0);
  return p;
}

std::vector<ParamView> GruParams::views() {
  return {
      {"w_z", span_of(w_z), span_of(g_w_z)}, {"u_z", span_of(u_z), span_of(g_u_z)},
      {"b_z", span_of(b_z), span_of(g_b_z)}, {"w_r", span_of(w_r), span_of(g_w_r)},
      {"u_r", span_of(u_r), span_of(g_u_r)}, {"b_r", span_of(b_r), span_of(g_b_r)},
      {"w_h", span_of(w_h), span_of(g_w_h)}, {"u_h", span_of(u_h), span_of(g_u_h)},
      {"b_h", span_of(b_h), span_of(g_b_h)}, {"w_hy", span_of(w_hy), span_of(g_w_hy)},
      {"b_y", span_of(b_y), span_of(g_b_y)},
  };
}

void GruParams::zero_grad() {
  for (auto& v : views()) {
    for (double& g : v.grad) g = 0.0;
  }
}

std::size_t GruParams::param_count() const {
  return 3 * (w_z.size() + u_z.size() + b_z.size()) + w_hy.size() + b_y.size();
}

GruStep gru_forward(const Vector& x, const Vector& h_prev, const GruParams& p) {
  check_dims("gru_forward", x.size(), p.input_dim, h_prev.size(), p.hidden_dim);
  GruStep s;
  s.x = x;
  s.h_prev = h_prev;
  // Gate order fixed: z, r, h_bar.
  s.z = affine(p.w_z, p.u_z, p.b_z, x, h_prev);
  sigmoid_inplace(s.z);
  s.r = affine(p.w_r, p.u_r, p.b_r, x, h_prev);
  sigmoid_inplace(s.r);

  const std::size_t hidden = p.hidden_dim;
  s.rh_prev.resize(hidden);
  for (std::size_t j = 0; j < hidden; ++j) s.rh_prev[j] = s.r[j] * h_prev[j];

  // Reset gate applies inside the candidate's recurrent term: u_h (r * h_prev).
  s.h_bar = p.b_h;
  add_matvec(s.h_bar, p.w_h, x);
  add_matvec(s.h_bar, p.u_h, s.rh_prev);
  tanh_inplace(s.h_bar);

  s.h.resize(hidden);
  for (std::size_t j = 0; j < hidden; ++j) {
    s.h[j] = (1.0 - s.z[j]) * h_prev[j] + s.z[j] * s.h_bar[j];
  }
  return s;
}

BackwardResult gru_backward(const GruStep& s, const Vector& d_h, GruParams& p) {
  const std::size_t hidden = p.hidden_dim;
  Vector d_z_pre(hidden), d_hbar_pre(hidden);
  for (std::size_t j = 0; j < hidden; ++j) {
    d_z_pre[j] = d_h[j] * (s.h_bar[j] - s.h_prev[j]) * s.z[j] * (1.0 - s.z[j]);
    d_hbar_pre[j] = d_h[j] * s.z[j] * (1.0 - s.h_bar[j] * s.h_bar[j]);
  }

  // Gradient w.r.t. the gated recurrent input r * h_prev.
  Vector d_rh(hidden, 0.0);
  add_matvec_transposed(d_rh, p.u_h, d_hbar_pre);

  Vector d_r_pre(hidden);
  for (std::size_t j = 0; j < hidden; ++j) {
    d_r_pre[j] = d_rh[j] * s.h_prev[j] * s.r[j] * (1.0 - s.r[j]);
  }

  BackwardResult r;
  r.d_x.assign(p.input_dim, 0.0);
  r.d_h_prev.assign(hidden, 0.0);
  for (std::size_t j = 0; j < hidden; ++j) {
    r.d_h_prev[j] = d_h[j] * (1.0 - s.z[j]) + d_rh[j] * s.r[j];
  }
  add_matvec_transposed(r.d_h_prev, p.u_z, d_z_pre);
  add_matvec_transposed(r.d_h_prev, p.u_r, d_r_pre);
  add_matvec_transposed(r.d_x, p.w_z, d_z_pre);
  add_matvec_transposed(r.d_x, p.w_r, d_r_pre);
  add_matvec_transposed(r.d_x, p.w_h, d_hbar_pre);

  add_outer(p.g_w_z, d_z_pre, s.x);
  add_outer(p.g_u_z, d_z_pre, s.h_prev);
  for (std::size_t j = 0; j < hidden; ++j) p.g_b_z[j] += d_z_pre[j];
  add_outer(p.g_w_r, d_r_pre, s.x);
  add_outer(p.g_u_r, d_r_pre, s.h_prev);
  for (std::size_t j = 0; j < hidden; ++j) p.g_b_r[j] += d_r_pre[j];
  add_outer(p.g_w_h, d_hbar_pre, s.x);
  add_outer(p.g_u_h, d_hbar_pre, s.rh_prev);  // candidate saw r * h_prev, not h_prev
  for (std::size_t j = 0; j < hidden; ++j) p.g_b_h[j] += d_hbar_pre[j];
  return r;
}

// ---------------------------------------------------------------------------
// Variant plumbing

Arch arch_of(const CellParams& p) {
  if (std::holds_alternative<RnnParams>(p)) return Arch::rnn;
  if (std::holds_alternative<LstmParams>(p)) return Arch::lstm;
  return Arch::gru;
}

CellParams make_cell(Arch a, std::size_t input_dim, std::size_t hidden_dim,
                     std::size_t output_dim, Rng& rng) {
  switch (a) {
    case Arch::rnn: return RnnParams::glorot(input_dim, hidden_dim, output_dim, rng);
    case Arch::lstm: return LstmParams::glorot(input_dim, hidden_dim, output_dim, rng);
    case Arch::gru: return GruParams::glorot(input_dim, hidden_dim, output_dim, rng);
  }
  throw DktError("make_cell: bad architecture tag");
}

std::vector<ParamView> cell_views(CellParams& p) {
  return std::visit([](auto& v) { return v.views(); }, p);
}

void cell_zero_grad(CellParams& p) {
  std::visit([](auto& v) { v.zero_grad(); }, p);
}

std::size_t cell_param_count(const CellParams& p) {
  return std::visit([](const auto& v) { return v.param_count(); }, p);
}

const Matrix& output_weight(const CellParams& p) {
  return std::visit([](const auto& v) -> const Matrix& { return v.w_hy; }, p);
}

const Vector& output_bias(const CellParams& p) {
  return std::visit([](const auto& v) -> const Vector& { return v.b_y; }, p);
}

Matrix& output_weight_grad(CellParams& p) {
  return std::visit([](auto& v) -> Matrix& { return v.g_w_hy; }, p);
}

Vector& output_bias_grad(CellParams& p) {
  return std::visit([](auto& v) -> Vector& { return v.g_b_y; }, p);
}

const Vector& cache_h(const StepCache& c) {
  return std::visit([](const auto& s) -> const Vector& { return s.h; }, c);
}

StepCache cell_forward(const Vector& x, const Vector& h_prev, const Vector& c_prev,
                       const CellParams& p) {
  switch (arch_of(p)) {
    case Arch::rnn: return rnn_forward(x, h_prev, std::get<RnnParams>(p));
    case Arch::lstm: return lstm_forward(x, h_prev, c_prev, std::get<LstmParams>(p));
    case Arch::gru: return gru_forward(x, h_prev, std::get<GruParams>(p));
  }
  throw DktError("cell_forward: bad architecture tag");
}

BackwardResult cell_backward(const StepCache& cache, const Vector& d_h, const Vector& d_c,
                             CellParams& p) {
  const Arch pa = arch_of(p);
  if (std::holds_alternative<RnnStep>(cache)) {
    if (pa != Arch::rnn) {
      throw DktError("cell_backward: rnn cache against " + std::string(arch_name(pa)) +
                     " params");
    }
    return rnn_backward(std::get<RnnStep>(cache), d_h, std::get<RnnParams>(p));
  }
  if (std::holds_alternative<LstmStep>(cache)) {
    if (pa != Arch::lstm) {
      throw DktError("cell_backward: lstm cache against " + std::string(arch_name(pa)) +
                     " params");
    }
    return lstm_backward(std::get<LstmStep>(cache), d_h, d_c, std::get<LstmParams>(p));
  }
  if (pa != Arch::gru) {
    throw DktError("cell_backward: gru cache against " + std::string(arch_name(pa)) + " params");
  }
  return gru_backward(std::get<GruStep>(cache), d_h, std::get<GruParams>(p));
}

std::vector<Vector> finite_diff_grad(const std::function<double()>& loss,
                                     std::vector<ParamView> views, double eps) {
  std::vector<Vector> out;
  out.reserve(views.size());
  for (auto& view : views) {
    Vector g(view.value.size());
    for (std::size_t k = 0; k < view.value.size(); ++k) {
      const double orig = view.value[k];
      view.value[k] = orig + eps;
      const double up = loss();
      view.value[k] = orig - eps;
      const double down = loss();
      view.value[k] = orig;
      g[k] = (up - down) / (2.0 * eps);
    }
    out.push_back(std::move(g));
  }
  return out;
}

}  // namespace dkt
