#pragma once

#include <functional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "dkt/matrix.hpp"
#include "dkt/rng.hpp"

namespace dkt {

enum class Arch { rnn, lstm, gru };

const char* arch_name(Arch a);
Arch arch_from_name(const std::string& name);  // throws DktError on unknown names

// One weight matrix or bias paired with its gradient buffer. Spans alias the
// owning parameter struct; views stay valid while that struct lives.
struct ParamView {
  std::string name;
  std::span<double> value;
  std::span<double> grad;
};

// h_t = tanh(w_xh x_t + w_hh h_{t-1} + b_h), output y_t = w_hy h_t + b_y.
struct RnnParams {
  std::size_t input_dim = 0, hidden_dim = 0, output_dim = 0;
  Matrix w_xh, w_hh, w_hy;
  Vector b_h, b_y;
  Matrix g_w_xh, g_w_hh, g_w_hy;
  Vector g_b_h, g_b_y;

  static RnnParams glorot(std::size_t input_dim, std::size_t hidden_dim,
                          std::size_t output_dim, Rng& rng);
  std::vector<ParamView> views();
  void zero_grad();
  std::size_t param_count() const;
};

// Gates f, i, o and candidate cell c_bar, each with input weights w_*,
// recurrent weights u_* and bias b_*, plus the shared output projection.
struct LstmParams {
  std::size_t input_dim = 0, hidden_dim = 0, output_dim = 0;
  Matrix w_f, u_f, w_i, u_i, w_o, u_o, w_c, u_c, w_hy;
  Vector b_f, b_i, b_o, b_c, b_y;
  Matrix g_w_f, g_u_f, g_w_i, g_u_i, g_w_o, g_u_o, g_w_c, g_u_c, g_w_hy;
  Vector g_b_f, g_b_i, g_b_o, g_b_c, g_b_y;

  static LstmParams glorot(std::size_t input_dim, std::size_t hidden_dim,
                           std::size_t output_dim, Rng& rng);
  std::vector<ParamView> views();
  void zero_grad();
  std::size_t param_count() const;
};

// Update gate z, reset gate r and candidate h_bar.
struct GruParams {
  std::size_t input_dim = 0, hidden_dim = 0, output_dim = 0;
  Matrix w_z, u_z, w_r, u_r, w_h, u_h, w_hy;
  Vector b_z, b_r, b_h, b_y;
  Matrix g_w_z, g_u_z, g_w_r, g_u_r, g_w_h, g_u_h, g_w_hy;
  Vector g_b_z, g_b_r, g_b_h, g_b_y;

  static GruParams glorot(std::size_t input_dim, std::size_t hidden_dim,
                          std::size_t output_dim, Rng& rng);
  std::vector<ParamView> views();
  void zero_grad();
  std::size_t param_count() const;
};

using CellParams = std::variant<RnnParams, LstmParams, GruParams>;

Arch arch_of(const CellParams& p);
CellParams make_cell(Arch a, std::size_t input_dim, std::size_t hidden_dim,
                     std::size_t output_dim, Rng& rng);
std::vector<ParamView> cell_views(CellParams& p);
void cell_zero_grad(CellParams& p);
std::size_t cell_param_count(const CellParams& p);

const Matrix& output_weight(const CellParams& p);
const Vector& output_bias(const CellParams& p);
Matrix& output_weight_grad(CellParams& p);
Vector& output_bias_grad(CellParams& p);

// Per-step caches hold exactly the intermediates the analytic backward pass
// reads; nothing is recomputed.
struct RnnStep {
  Vector x, h_prev, h;
};
struct LstmStep {
  Vector x, h_prev, c_prev;
  Vector f, i, o, c_bar, c, tanh_c, h;
};
struct GruStep {
  Vector x, h_prev;
  Vector z, r, rh_prev, h_bar, h;
};
using StepCache = std::variant<RnnStep, LstmStep, GruStep>;

const Vector& cache_h(const StepCache& c);

RnnStep rnn_forward(const Vector& x, const Vector& h_prev, const RnnParams& p);
LstmStep lstm_forward(const Vector& x, const Vector& h_prev, const Vector& c_prev,
                      const LstmParams& p);
GruStep gru_forward(const Vector& x, const Vector& h_prev, const GruParams& p);

// Gradients carried to step t-1; d_c_prev is empty except for LSTM.
struct BackwardResult {
  Vector d_x, d_h_prev, d_c_prev;
};

// Each backward accumulates (+=) into the gradient buffers of p.
BackwardResult rnn_backward(const RnnStep& s, const Vector& d_h, RnnParams& p);
BackwardResult lstm_backward(const LstmStep& s, const Vector& d_h, const Vector& d_c,
                             LstmParams& p);
BackwardResult gru_backward(const GruStep& s, const Vector& d_h, GruParams& p);

// Tag-dispatched variants. c_prev / d_c are ignored for rnn and gru. Throws
// DktError when the cache and the params disagree on architecture.
StepCache cell_forward(const Vector& x, const Vector& h_prev, const Vector& c_prev,
                       const CellParams& p);
BackwardResult cell_backward(const StepCache& cache, const Vector& d_h, const Vector& d_c,
                             CellParams& p);

// Central finite differences over every entry reachable through `views`.
// Perturbs values in place and restores them; independent of any analytic
// backward path, which is exactly why it can serve as the gradient oracle.
std::vector<Vector> finite_diff_grad(const std::function<double()>& loss,
                                     std::vector<ParamView> views, double eps);

}  // namespace dkt
