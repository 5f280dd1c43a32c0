#include "actseq/nn.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace actseq {

bool Distribution::valid(double tol) const {
  if (probs.empty()) return false;
  double sum = 0.0;
  for (const double p : probs) {
    if (!(p >= 0.0) || !std::isfinite(p)) return false;
    sum += p;
  }
  return std::abs(sum - 1.0) <= tol;
}

Distribution Distribution::one_hot(std::size_t dim, std::size_t index) {
  Distribution d{Vector(dim, 0.0)};
  d.probs.at(index) = 1.0;
  return d;
}

Distribution Distribution::uniform(std::size_t dim) {
  return {Vector(dim, 1.0 / static_cast<double>(dim))};
}

Distribution softmax(const Vector& logits) {
  if (logits.empty()) throw std::invalid_argument("softmax: empty input");
  check_finite(logits, "softmax");
  const double m = *std::max_element(logits.begin(), logits.end());
  Distribution out{Vector(logits.size())};
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out.probs[i] = std::exp(logits[i] - m);
    sum += out.probs[i];
  }
  for (double& p : out.probs) p /= sum;
  return out;
}

double cross_entropy(const Distribution& reference, const Distribution& predicted) {
  if (reference.size() != predicted.size()) {
    throw std::invalid_argument("cross_entropy: dimension mismatch");
  }
  double h = 0.0;
  for (std::size_t i = 0; i < reference.size(); ++i) {
    if (reference[i] == 0.0) continue;
    h -= reference[i] * std::log(std::max(predicted[i], kProbFloor));
  }
  return h;
}

double sequential_cross_entropy(const std::vector<Distribution>& refs,
                                const std::vector<Distribution>& preds) {
  if (refs.empty() || refs.size() != preds.size()) {
    throw std::invalid_argument("sequential_cross_entropy: length mismatch");
  }
  double total = 0.0;
  for (std::size_t t = 0; t < refs.size(); ++t) {
    total += cross_entropy(refs[t], preds[t]);
  }
  return total;
}

Vector dropout_mask(std::size_t n, double rate, Rng& rng) {
  if (!(rate >= 0.0 && rate < 1.0)) {
    throw std::invalid_argument("dropout: rate must be in [0, 1)");
  }
  Vector mask(n, 1.0);
  if (rate == 0.0) return mask;
  const double scale = 1.0 / (1.0 - rate);
  for (double& m : mask) m = (rng.uniform() < rate) ? 0.0 : scale;
  return mask;
}

Vector dropout(const Vector& v, double rate, Rng& rng, bool training) {
  if (!(rate >= 0.0 && rate < 1.0)) {
    throw std::invalid_argument("dropout: rate must be in [0, 1)");
  }
  if (!training || rate == 0.0) return v;
  const Vector mask = dropout_mask(v.size(), rate, rng);
  Vector out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i] * mask[i];
  return out;
}

// ---------------------------------------------------------------------------

Matrix& ModelParameters::add(const std::string& name, std::size_t rows, std::size_t cols) {
  blocks.push_back({name, Matrix(rows, cols)});
  return blocks.back().value;
}

Matrix& ModelParameters::at(std::string_view name) {
  for (auto& b : blocks) {
    if (b.name == name) return b.value;
  }
  throw std::invalid_argument("unknown parameter block: " + std::string(name));
}

const Matrix& ModelParameters::at(std::string_view name) const {
  for (const auto& b : blocks) {
    if (b.name == name) return b.value;
  }
  throw std::invalid_argument("unknown parameter block: " + std::string(name));
}

std::size_t ModelParameters::scalar_count() const {
  std::size_t n = 0;
  for (const auto& b : blocks) n += b.value.size();
  return n;
}

Vector ModelParameters::to_flat() const {
  Vector flat;
  flat.reserve(scalar_count());
  for (const auto& b : blocks) {
    flat.insert(flat.end(), b.value.data.begin(), b.value.data.end());
  }
  return flat;
}

void ModelParameters::from_flat(const Vector& flat) {
  if (flat.size() != scalar_count()) {
    throw std::invalid_argument("from_flat: size mismatch");
  }
  std::size_t off = 0;
  for (auto& b : blocks) {
    std::copy(flat.begin() + static_cast<std::ptrdiff_t>(off),
              flat.begin() + static_cast<std::ptrdiff_t>(off + b.value.size()),
              b.value.data.begin());
    off += b.value.size();
  }
}

ModelParameters ModelParameters::zeros_like() const {
  ModelParameters z;
  for (const auto& b : blocks) z.add(b.name, b.value.rows, b.value.cols);
  return z;
}

void adam_step(ModelParameters& params, const ModelParameters& grads, AdamState& state) {
  if (params.scalar_count() != grads.scalar_count() ||
      params.scalar_count() != state.first_moment.size()) {
    throw std::invalid_argument("adam_step: shape mismatch");
  }
  const AdamConfig& c = state.config;
  state.step += 1;
  const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(state.step));
  std::size_t i = 0;
  for (std::size_t bi = 0; bi < params.blocks.size(); ++bi) {
    auto& p = params.blocks[bi].value.data;
    const auto& g = grads.blocks[bi].value.data;
    if (p.size() != g.size()) throw std::invalid_argument("adam_step: shape mismatch");
    for (std::size_t j = 0; j < p.size(); ++j, ++i) {
      double& m = state.first_moment[i];
      double& v = state.second_moment[i];
      m = c.beta1 * m + (1.0 - c.beta1) * g[j];
      v = c.beta2 * v + (1.0 - c.beta2) * g[j] * g[j];
      const double m_hat = m / bc1;
      const double v_hat = v / bc2;
      p[j] -= c.learning_rate * m_hat / (std::sqrt(v_hat) + c.epsilon);
    }
  }
}

// ---------------------------------------------------------------------------

namespace {

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

LstmState lstm_step(const Matrix& w_x, const Matrix& w_h, const Vector& bias,
                    const Vector& input, const LstmState& state, LstmCache* cache) {
  const std::size_t h = state.hidden.size();
  if (state.cell.size() != h || w_x.rows != 4 * h || w_h.rows != 4 * h ||
      w_h.cols != h || bias.size() != 4 * h || input.size() != w_x.cols) {
    throw std::invalid_argument("lstm_step: dimension mismatch");
  }
  Vector pre = matvec(w_x, input);
  const Vector hh = matvec(w_h, state.hidden);
  for (std::size_t i = 0; i < 4 * h; ++i) pre[i] += hh[i] + bias[i];

  LstmState out = LstmState::zeros(h);
  Vector gi(h), gf(h), gg(h), go(h), tc(h);
  for (std::size_t i = 0; i < h; ++i) {
    gi[i] = sigmoid(pre[i]);
    gf[i] = sigmoid(pre[h + i]);
    gg[i] = std::tanh(pre[2 * h + i]);
    go[i] = sigmoid(pre[3 * h + i]);
    out.cell[i] = gf[i] * state.cell[i] + gi[i] * gg[i];
    tc[i] = std::tanh(out.cell[i]);
    out.hidden[i] = go[i] * tc[i];
  }
  if (cache) {
    cache->input = input;
    cache->prev = state;
    cache->gate_i = std::move(gi);
    cache->gate_f = std::move(gf);
    cache->gate_g = std::move(gg);
    cache->gate_o = std::move(go);
    cache->cell = out.cell;
    cache->tanh_cell = std::move(tc);
  }
  return out;
}

void lstm_backward(const Matrix& w_x, const Matrix& w_h, const LstmCache& cache,
                   const Vector& d_hidden, const Vector& d_cell,
                   Matrix& dw_x, Matrix& dw_h, Vector& d_bias,
                   Vector& d_input, Vector& d_prev_hidden, Vector& d_prev_cell) {
  const std::size_t h = d_hidden.size();
  Vector d_pre(4 * h);
  for (std::size_t i = 0; i < h; ++i) {
    const double i_g = cache.gate_i[i], f_g = cache.gate_f[i];
    const double g_g = cache.gate_g[i], o_g = cache.gate_o[i];
    const double tc = cache.tanh_cell[i];
    const double d_o = d_hidden[i] * tc;
    const double dc = d_cell[i] + d_hidden[i] * o_g * (1.0 - tc * tc);
    const double d_i = dc * g_g;
    const double d_f = dc * cache.prev.cell[i];
    const double d_g = dc * i_g;
    d_prev_cell[i] += dc * f_g;
    d_pre[i] = d_i * i_g * (1.0 - i_g);
    d_pre[h + i] = d_f * f_g * (1.0 - f_g);
    d_pre[2 * h + i] = d_g * (1.0 - g_g * g_g);
    d_pre[3 * h + i] = d_o * o_g * (1.0 - o_g);
  }
  outer_acc(d_pre, cache.input, dw_x);
  outer_acc(d_pre, cache.prev.hidden, dw_h);
  for (std::size_t i = 0; i < 4 * h; ++i) d_bias[i] += d_pre[i];
  matvec_transpose_acc(w_x, d_pre, d_input);
  matvec_transpose_acc(w_h, d_pre, d_prev_hidden);
}

Vector affine(const Matrix& w, const Vector& b, const Vector& x) {
  Vector y = matvec(w, x);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += b[i];
  return y;
}

void affine_backward(const Matrix& w, const Vector& x, const Vector& d_out,
                     Matrix& dw, Vector& db, Vector& dx) {
  outer_acc(d_out, x, dw);
  for (std::size_t i = 0; i < d_out.size(); ++i) db[i] += d_out[i];
  matvec_transpose_acc(w, d_out, dx);
}

void init_parameters(ModelParameters& params, Rng& rng) {
  for (auto& b : params.blocks) {
    if (b.name.ends_with(".b")) continue;  // biases stay zero
    const double s = 1.0 / std::sqrt(static_cast<double>(b.value.cols));
    for (double& w : b.value.data) w = rng.uniform(-s, s);
  }
}

}  // namespace actseq
