#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "actseq/linalg.hpp"
#include "actseq/rng.hpp"

namespace actseq {

// Discrete distribution over a label set. Entries are non-negative and sum
// to 1 within 1e-9.
struct Distribution {
  Vector probs;

  std::size_t size() const { return probs.size(); }
  double operator[](std::size_t i) const { return probs[i]; }
  bool valid(double tol = 1e-9) const;

  static Distribution one_hot(std::size_t dim, std::size_t index);
  static Distribution uniform(std::size_t dim);
};

// Numerically stabilized softmax (max subtraction).
Distribution softmax(const Vector& logits);

// -sum_a reference(a) * log(predicted(a)), in nats. Predicted probabilities
// are clamped below at kProbFloor so the loss stays finite.
inline constexpr double kProbFloor = 1e-12;
double cross_entropy(const Distribution& reference, const Distribution& predicted);

// Sum of per-step cross entropies over equal-length lists.
double sequential_cross_entropy(const std::vector<Distribution>& refs,
                                const std::vector<Distribution>& preds);

// Inverted dropout: in training mode each entry is zeroed with probability
// `rate` and survivors are scaled by 1/(1-rate); in inference mode identity.
Vector dropout(const Vector& v, double rate, Rng& rng, bool training);

// Mask of {0, 1/(1-rate)} factors, for reuse in the backward pass.
Vector dropout_mask(std::size_t n, double rate, Rng& rng);

// ---------------------------------------------------------------------------
// Parameters

struct ParamBlock {
  std::string name;
  Matrix value;
};

// Named parameter blocks with a stable flat ordering over all scalars:
// blocks in insertion order, each block row-major.
class ModelParameters {
 public:
  Matrix& add(const std::string& name, std::size_t rows, std::size_t cols);
  Matrix& at(std::string_view name);
  const Matrix& at(std::string_view name) const;

  std::size_t scalar_count() const;
  Vector to_flat() const;
  void from_flat(const Vector& flat);
  ModelParameters zeros_like() const;

  std::vector<ParamBlock> blocks;
};

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  AdamConfig config;
  Vector first_moment, second_moment;
  long long step = 0;

  AdamState(std::size_t n, AdamConfig c = {})
      : config(c), first_moment(n, 0.0), second_moment(n, 0.0) {}
};

// Standard Adam update with bias correction, over the flat ordering.
void adam_step(ModelParameters& params, const ModelParameters& grads, AdamState& state);

// ---------------------------------------------------------------------------
// Layers

struct LstmState {
  Vector hidden, cell;

  static LstmState zeros(std::size_t h) {
    return {Vector(h, 0.0), Vector(h, 0.0)};
  }
};

// Per-step values kept for backpropagation. Gate vectors hold post-activation
// values; preactivation order is [input, forget, candidate, output].
struct LstmCache {
  Vector input;
  LstmState prev;
  Vector gate_i, gate_f, gate_g, gate_o;
  Vector cell, tanh_cell;
};

// One LSTM step. w_x is (4H x in), w_h is (4H x H), bias is 4H.
LstmState lstm_step(const Matrix& w_x, const Matrix& w_h, const Vector& bias,
                    const Vector& input, const LstmState& state,
                    LstmCache* cache = nullptr);

// Accumulates parameter gradients and returns upstream gradients through
// d_input / d_prev_hidden / d_prev_cell (all accumulated, not overwritten).
void lstm_backward(const Matrix& w_x, const Matrix& w_h, const LstmCache& cache,
                   const Vector& d_hidden, const Vector& d_cell,
                   Matrix& dw_x, Matrix& dw_h, Vector& d_bias,
                   Vector& d_input, Vector& d_prev_hidden, Vector& d_prev_cell);

// y = W x + b
Vector affine(const Matrix& w, const Vector& b, const Vector& x);
void affine_backward(const Matrix& w, const Vector& x, const Vector& d_out,
                     Matrix& dw, Vector& db, Vector& dx);

// Fills every weight matrix with uniform [-s, s], s = 1/sqrt(fan-in), and
// biases with zero. Blocks whose name ends in ".b" count as biases.
void init_parameters(ModelParameters& params, Rng& rng);

}  // namespace actseq
