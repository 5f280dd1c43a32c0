#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "actseq/data.hpp"
#include "actseq/nn.hpp"
#include "actseq/vocab.hpp"

namespace actseq {

struct TrainingConfig {
  int iterations = 300;
  int batch_size = 8;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double dropout = 0.0;
  std::uint64_t seed = 0;
  int predict_length = 3;  // decoder steps N used for training
  int window = 3;          // observation window length
  int hidden_dim = 20;     // recognition LSTM / encoder-decoder context dim
  int embed_dim = 50;
  double holdout = 0.25;   // held-out fraction for evaluation splits

  AdamConfig adam() const {
    return {learning_rate, beta1, beta2, epsilon};
  }
};

// ---------------------------------------------------------------------------
// Per-step intention recognition model: embedding -> LSTM -> projection ->
// softmax, one distribution per frame.
struct RecognitionModel {
  int feature_dim = 0;
  int embed_dim = 50;
  int hidden_dim = 20;
  double dropout_rate = 0.0;
  ActionVocabulary intentions;
  ModelParameters params;
  TrainingConfig config;

  static RecognitionModel init(int feature_dim, ActionVocabulary intentions,
                               const TrainingConfig& cfg, Rng& rng);

  // Inference mode: deterministic, one valid distribution per input frame.
  std::vector<Distribution> recognize(const Matrix& frames) const;
};

// Loss (nats, summed over frames) of one sequence against its intention
// label broadcast to every frame. If grads is non-null, accumulates exact
// reverse-mode gradients. dropout_rng enables training-mode dropout.
double recognition_loss(const RecognitionModel& model, const Matrix& frames,
                        int intention, ModelParameters* grads,
                        Rng* dropout_rng = nullptr);

// ---------------------------------------------------------------------------
// Encoder-decoder action sequence prediction model. The encoder condenses an
// observation window into a fixed-length context vector (its final LSTM
// state); the decoder expands it into future action distributions.
struct PredictionModel {
  int feature_dim = 0;
  int embed_dim = 50;
  int hidden_dim = 20;
  double dropout_rate = 0.0;
  ActionVocabulary vocab;
  ModelParameters params;
  TrainingConfig config;

  static PredictionModel init(int feature_dim, ActionVocabulary vocab,
                              const TrainingConfig& cfg, Rng& rng);

  // Distinguished decoder start input, never emitted.
  int start_token() const { return vocab.size(); }

  LstmState encode(const Matrix& observed) const;

  // Consumes the embedding of prev_action (or the start token) and returns
  // the distribution over the next action plus the new decoder state.
  std::pair<Distribution, LstmState> decode_step(int prev_action,
                                                 const LstmState& state) const;

  struct Sampled {
    std::vector<int> actions;
    double log_prob = 0.0;
  };
  Sampled sample_sequence(const LstmState& context, int length, Rng& rng) const;
};

// Teacher-forced sequential cross-entropy of one (observation, target
// sequence) pair; accumulates gradients when grads is non-null.
double prediction_loss(const PredictionModel& model, const Matrix& observed,
                       const std::vector<int>& targets, ModelParameters* grads,
                       Rng* dropout_rng = nullptr);

// ---------------------------------------------------------------------------
// Training

struct PredictionPair {
  Matrix observed;
  std::vector<int> targets;
};

// All sliding (window, horizon) pairs from per-frame-labeled sequences.
// Sequences shorter than window + horizon are skipped.
std::vector<PredictionPair> make_prediction_pairs(const Dataset& ds, int window,
                                                  int horizon);

struct RecognitionTraining {
  RecognitionModel model;
  std::vector<double> loss_curve;  // mean nats/frame per iteration
};
RecognitionTraining train_recognition(const Dataset& ds, const TrainingConfig& cfg);

struct PredictionTraining {
  PredictionModel model;
  std::vector<double> loss_curve;  // mean nats per pair per iteration
  std::vector<double> val_loss_curve;
};
PredictionTraining train_prediction(const Dataset& ds, const TrainingConfig& cfg);
PredictionTraining train_prediction_pairs(const ActionVocabulary& vocab,
                                          int feature_dim,
                                          const std::vector<PredictionPair>& train,
                                          const std::vector<PredictionPair>& val,
                                          const TrainingConfig& cfg);

// Mean teacher-forced loss without gradients (validation).
double mean_prediction_loss(const PredictionModel& model,
                            const std::vector<PredictionPair>& pairs);

}  // namespace actseq
