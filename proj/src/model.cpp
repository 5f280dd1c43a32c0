#include "actseq/model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace actseq {

namespace {

ModelParameters recognition_blocks(int f, int e, int h, int c) {
  ModelParameters p;
  p.add("embed.W", e, f);
  p.add("embed.b", e, 1);
  p.add("lstm.Wx", 4 * h, e);
  p.add("lstm.Wh", 4 * h, h);
  p.add("lstm.b", 4 * h, 1);
  p.add("proj.W", c, h);
  p.add("proj.b", c, 1);
  return p;
}

ModelParameters prediction_blocks(int f, int e, int h, int v) {
  ModelParameters p;
  p.add("enc.embed.W", e, f);
  p.add("enc.embed.b", e, 1);
  p.add("enc.lstm.Wx", 4 * h, e);
  p.add("enc.lstm.Wh", 4 * h, h);
  p.add("enc.lstm.b", 4 * h, 1);
  p.add("dec.embed.W", v + 1, e);  // +1 row for the start token
  p.add("dec.lstm.Wx", 4 * h, e);
  p.add("dec.lstm.Wh", 4 * h, h);
  p.add("dec.lstm.b", 4 * h, 1);
  p.add("proj.W", v, h);
  p.add("proj.b", v, 1);
  return p;
}

}  // namespace

// ---------------------------------------------------------------------------
// Recognition model

RecognitionModel RecognitionModel::init(int feature_dim, ActionVocabulary intentions,
                                        const TrainingConfig& cfg, Rng& rng) {
  RecognitionModel m;
  m.feature_dim = feature_dim;
  m.embed_dim = cfg.embed_dim;
  m.hidden_dim = cfg.hidden_dim;
  m.dropout_rate = cfg.dropout;
  m.intentions = std::move(intentions);
  m.config = cfg;
  m.params = recognition_blocks(feature_dim, m.embed_dim, m.hidden_dim,
                                m.intentions.size());
  init_parameters(m.params, rng);
  return m;
}

std::vector<Distribution> RecognitionModel::recognize(const Matrix& frames) const {
  if (frames.cols != static_cast<std::size_t>(feature_dim)) {
    throw std::invalid_argument("recognize: feature width mismatch");
  }
  const auto& ew = params.at("embed.W");
  const auto& eb = params.at("embed.b").data;
  const auto& wx = params.at("lstm.Wx");
  const auto& wh = params.at("lstm.Wh");
  const auto& lb = params.at("lstm.b").data;
  const auto& pw = params.at("proj.W");
  const auto& pb = params.at("proj.b").data;

  std::vector<Distribution> out;
  out.reserve(frames.rows);
  LstmState state = LstmState::zeros(static_cast<std::size_t>(hidden_dim));
  for (std::size_t t = 0; t < frames.rows; ++t) {
    const Vector e = affine(ew, eb, frames.row(t));
    state = lstm_step(wx, wh, lb, e, state);
    out.push_back(softmax(affine(pw, pb, state.hidden)));
  }
  return out;
}

double recognition_loss(const RecognitionModel& model, const Matrix& frames,
                        int intention, ModelParameters* grads, Rng* dropout_rng) {
  if (frames.cols != static_cast<std::size_t>(model.feature_dim)) {
    throw std::invalid_argument("recognition_loss: feature width mismatch");
  }
  if (intention < 0 || intention >= model.intentions.size()) {
    throw std::invalid_argument("recognition_loss: intention out of range");
  }
  const auto& ew = model.params.at("embed.W");
  const auto& eb = model.params.at("embed.b").data;
  const auto& wx = model.params.at("lstm.Wx");
  const auto& wh = model.params.at("lstm.Wh");
  const auto& lb = model.params.at("lstm.b").data;
  const auto& pw = model.params.at("proj.W");
  const auto& pb = model.params.at("proj.b").data;

  const std::size_t n = frames.rows;
  const std::size_t h = static_cast<std::size_t>(model.hidden_dim);
  const std::size_t y = static_cast<std::size_t>(intention);
  const bool use_dropout = dropout_rng != nullptr && model.dropout_rate > 0.0;

  std::vector<LstmCache> caches(n);
  std::vector<Vector> masks(n);
  std::vector<Vector> hiddens(n);
  std::vector<Distribution> probs(n);
  LstmState state = LstmState::zeros(h);
  double loss = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    Vector e = affine(ew, eb, frames.row(t));
    if (use_dropout) {
      masks[t] = dropout_mask(e.size(), model.dropout_rate, *dropout_rng);
      for (std::size_t i = 0; i < e.size(); ++i) e[i] *= masks[t][i];
    }
    state = lstm_step(wx, wh, lb, e, state, &caches[t]);
    hiddens[t] = state.hidden;
    probs[t] = softmax(affine(pw, pb, state.hidden));
    loss -= std::log(std::max(probs[t][y], kProbFloor));
  }
  if (!grads) return loss;

  auto& d_ew = grads->at("embed.W");
  auto& d_eb = grads->at("embed.b").data;
  auto& d_wx = grads->at("lstm.Wx");
  auto& d_wh = grads->at("lstm.Wh");
  auto& d_lb = grads->at("lstm.b").data;
  auto& d_pw = grads->at("proj.W");
  auto& d_pb = grads->at("proj.b").data;

  Vector dh(h, 0.0), dc(h, 0.0);
  for (std::size_t t = n; t-- > 0;) {
    Vector dlogits = probs[t].probs;
    dlogits[y] -= 1.0;
    affine_backward(pw, hiddens[t], dlogits, d_pw, d_pb, dh);

    Vector de(static_cast<std::size_t>(model.embed_dim), 0.0);
    Vector dh_prev(h, 0.0), dc_prev(h, 0.0);
    lstm_backward(wx, wh, caches[t], dh, dc, d_wx, d_wh, d_lb, de, dh_prev, dc_prev);
    if (use_dropout) {
      for (std::size_t i = 0; i < de.size(); ++i) de[i] *= masks[t][i];
    }
    Vector dx(frames.cols, 0.0);
    affine_backward(ew, frames.row(t), de, d_ew, d_eb, dx);
    dh = std::move(dh_prev);
    dc = std::move(dc_prev);
  }
  return loss;
}

// ---------------------------------------------------------------------------
// Prediction model

PredictionModel PredictionModel::init(int feature_dim, ActionVocabulary vocab,
                                      const TrainingConfig& cfg, Rng& rng) {
  PredictionModel m;
  m.feature_dim = feature_dim;
  m.embed_dim = cfg.embed_dim;
  m.hidden_dim = cfg.hidden_dim;
  m.dropout_rate = cfg.dropout;
  m.vocab = std::move(vocab);
  m.config = cfg;
  m.params = prediction_blocks(feature_dim, m.embed_dim, m.hidden_dim, m.vocab.size());
  init_parameters(m.params, rng);
  return m;
}

LstmState PredictionModel::encode(const Matrix& observed) const {
  if (observed.rows == 0) throw std::invalid_argument("encode: empty observation");
  if (observed.cols != static_cast<std::size_t>(feature_dim)) {
    throw std::invalid_argument("encode: feature width mismatch");
  }
  const auto& ew = params.at("enc.embed.W");
  const auto& eb = params.at("enc.embed.b").data;
  const auto& wx = params.at("enc.lstm.Wx");
  const auto& wh = params.at("enc.lstm.Wh");
  const auto& lb = params.at("enc.lstm.b").data;

  LstmState state = LstmState::zeros(static_cast<std::size_t>(hidden_dim));
  for (std::size_t t = 0; t < observed.rows; ++t) {
    state = lstm_step(wx, wh, lb, affine(ew, eb, observed.row(t)), state);
  }
  return state;
}

std::pair<Distribution, LstmState> PredictionModel::decode_step(
    int prev_action, const LstmState& state) const {
  if (prev_action < 0 || prev_action > vocab.size()) {
    throw std::invalid_argument("decode_step: action index out of range");
  }
  const auto& de = params.at("dec.embed.W");
  const auto& wx = params.at("dec.lstm.Wx");
  const auto& wh = params.at("dec.lstm.Wh");
  const auto& lb = params.at("dec.lstm.b").data;
  const auto& pw = params.at("proj.W");
  const auto& pb = params.at("proj.b").data;

  const LstmState next =
      lstm_step(wx, wh, lb, de.row(static_cast<std::size_t>(prev_action)), state);
  return {softmax(affine(pw, pb, next.hidden)), next};
}

PredictionModel::Sampled PredictionModel::sample_sequence(const LstmState& context,
                                                          int length, Rng& rng) const {
  if (length < 1) throw std::invalid_argument("sample_sequence: length must be >= 1");
  Sampled out;
  LstmState state = context;
  int prev = start_token();
  for (int t = 0; t < length; ++t) {
    auto [dist, next] = decode_step(prev, state);
    const int a = rng.sample(dist.probs);
    out.actions.push_back(a);
    out.log_prob += std::log(std::max(dist[static_cast<std::size_t>(a)], kProbFloor));
    state = next;
    prev = a;
  }
  return out;
}

double prediction_loss(const PredictionModel& model, const Matrix& observed,
                       const std::vector<int>& targets, ModelParameters* grads,
                       Rng* dropout_rng) {
  if (observed.rows == 0) throw std::invalid_argument("prediction_loss: empty observation");
  if (observed.cols != static_cast<std::size_t>(model.feature_dim)) {
    throw std::invalid_argument("prediction_loss: feature width mismatch");
  }
  if (targets.empty()) throw std::invalid_argument("prediction_loss: empty targets");
  for (const int a : targets) {
    if (a < 0 || a >= model.vocab.size()) {
      throw std::invalid_argument("prediction_loss: target out of range");
    }
  }

  const auto& enc_ew = model.params.at("enc.embed.W");
  const auto& enc_eb = model.params.at("enc.embed.b").data;
  const auto& enc_wx = model.params.at("enc.lstm.Wx");
  const auto& enc_wh = model.params.at("enc.lstm.Wh");
  const auto& enc_lb = model.params.at("enc.lstm.b").data;
  const auto& dec_emb = model.params.at("dec.embed.W");
  const auto& dec_wx = model.params.at("dec.lstm.Wx");
  const auto& dec_wh = model.params.at("dec.lstm.Wh");
  const auto& dec_lb = model.params.at("dec.lstm.b").data;
  const auto& pw = model.params.at("proj.W");
  const auto& pb = model.params.at("proj.b").data;

  const std::size_t h = static_cast<std::size_t>(model.hidden_dim);
  const std::size_t obs_n = observed.rows;
  const std::size_t steps = targets.size();
  const bool use_dropout = dropout_rng != nullptr && model.dropout_rate > 0.0;

  // Encoder forward
  std::vector<LstmCache> enc_caches(obs_n);
  std::vector<Vector> enc_masks(obs_n);
  LstmState state = LstmState::zeros(h);
  for (std::size_t t = 0; t < obs_n; ++t) {
    Vector e = affine(enc_ew, enc_eb, observed.row(t));
    if (use_dropout) {
      enc_masks[t] = dropout_mask(e.size(), model.dropout_rate, *dropout_rng);
      for (std::size_t i = 0; i < e.size(); ++i) e[i] *= enc_masks[t][i];
    }
    state = lstm_step(enc_wx, enc_wh, enc_lb, e, state, &enc_caches[t]);
  }

  // Decoder forward (teacher forcing)
  std::vector<LstmCache> dec_caches(steps);
  std::vector<Vector> dec_hiddens(steps);
  std::vector<Distribution> probs(steps);
  std::vector<int> inputs(steps);
  double loss = 0.0;
  for (std::size_t t = 0; t < steps; ++t) {
    inputs[t] = (t == 0) ? model.start_token() : targets[t - 1];
    state = lstm_step(dec_wx, dec_wh, dec_lb,
                      dec_emb.row(static_cast<std::size_t>(inputs[t])), state,
                      &dec_caches[t]);
    dec_hiddens[t] = state.hidden;
    probs[t] = softmax(affine(pw, pb, state.hidden));
    loss -= std::log(std::max(probs[t][static_cast<std::size_t>(targets[t])], kProbFloor));
  }
  if (!grads) return loss;

  auto& d_enc_ew = grads->at("enc.embed.W");
  auto& d_enc_eb = grads->at("enc.embed.b").data;
  auto& d_enc_wx = grads->at("enc.lstm.Wx");
  auto& d_enc_wh = grads->at("enc.lstm.Wh");
  auto& d_enc_lb = grads->at("enc.lstm.b").data;
  auto& d_dec_emb = grads->at("dec.embed.W");
  auto& d_dec_wx = grads->at("dec.lstm.Wx");
  auto& d_dec_wh = grads->at("dec.lstm.Wh");
  auto& d_dec_lb = grads->at("dec.lstm.b").data;
  auto& d_pw = grads->at("proj.W");
  auto& d_pb = grads->at("proj.b").data;

  Vector dh(h, 0.0), dc(h, 0.0);
  for (std::size_t t = steps; t-- > 0;) {
    Vector dlogits = probs[t].probs;
    dlogits[static_cast<std::size_t>(targets[t])] -= 1.0;
    affine_backward(pw, dec_hiddens[t], dlogits, d_pw, d_pb, dh);

    Vector de(static_cast<std::size_t>(model.embed_dim), 0.0);
    Vector dh_prev(h, 0.0), dc_prev(h, 0.0);
    lstm_backward(dec_wx, dec_wh, dec_caches[t], dh, dc, d_dec_wx, d_dec_wh,
                  d_dec_lb, de, dh_prev, dc_prev);
    const std::size_t row = static_cast<std::size_t>(inputs[t]);
    for (std::size_t i = 0; i < de.size(); ++i) d_dec_emb(row, i) += de[i];
    dh = std::move(dh_prev);
    dc = std::move(dc_prev);
  }
  // Context gradient flows into the encoder's final state.
  for (std::size_t t = obs_n; t-- > 0;) {
    Vector de(static_cast<std::size_t>(model.embed_dim), 0.0);
    Vector dh_prev(h, 0.0), dc_prev(h, 0.0);
    lstm_backward(enc_wx, enc_wh, enc_caches[t], dh, dc, d_enc_wx, d_enc_wh,
                  d_enc_lb, de, dh_prev, dc_prev);
    if (use_dropout) {
      for (std::size_t i = 0; i < de.size(); ++i) de[i] *= enc_masks[t][i];
    }
    Vector dx(observed.cols, 0.0);
    affine_backward(enc_ew, observed.row(t), de, d_enc_ew, d_enc_eb, dx);
    dh = std::move(dh_prev);
    dc = std::move(dc_prev);
  }
  return loss;
}

// ---------------------------------------------------------------------------
// Training

std::vector<PredictionPair> make_prediction_pairs(const Dataset& ds, int window,
                                                  int horizon) {
  if (window < 1 || horizon < 1) {
    throw std::invalid_argument("make_prediction_pairs: window and horizon must be >= 1");
  }
  std::vector<PredictionPair> pairs;
  const std::size_t w = static_cast<std::size_t>(window);
  const std::size_t n = static_cast<std::size_t>(horizon);
  for (const auto& seq : ds.sequences) {
    if (seq.length() < w + n) continue;
    for (std::size_t start = 0; start + w + n <= seq.length(); ++start) {
      PredictionPair pair;
      pair.observed = slice_rows(seq.features, start, start + w);
      bool labeled = true;
      for (std::size_t t = start + w; t < start + w + n; ++t) {
        if (seq.labels[t] < 0) {
          labeled = false;
          break;
        }
        pair.targets.push_back(seq.labels[t]);
      }
      if (labeled) pairs.push_back(std::move(pair));
    }
  }
  return pairs;
}

RecognitionTraining train_recognition(const Dataset& ds, const TrainingConfig& cfg) {
  std::vector<const FeatureSequence*> labeled;
  for (const auto& s : ds.sequences) {
    if (s.intention >= 0 && s.length() > 0) labeled.push_back(&s);
  }
  if (labeled.empty()) {
    throw std::invalid_argument("train_recognition: no intention-labeled sequences");
  }

  Rng rng(derive_seed(cfg.seed, "train_recognition"));
  RecognitionTraining out{
      RecognitionModel::init(static_cast<int>(ds.feature_width()), ds.vocabulary,
                             cfg, rng),
      {}};
  RecognitionModel& model = out.model;
  AdamState adam(model.params.scalar_count(), cfg.adam());
  const std::size_t batch =
      std::min<std::size_t>(static_cast<std::size_t>(cfg.batch_size), labeled.size());

  for (int it = 0; it < cfg.iterations; ++it) {
    ModelParameters grads = model.params.zeros_like();
    double loss = 0.0;
    std::size_t frame_count = 0;
    for (std::size_t b = 0; b < batch; ++b) {
      const FeatureSequence& seq = *labeled[rng.index(labeled.size())];
      loss += recognition_loss(model, seq.features, seq.intention, &grads,
                               cfg.dropout > 0.0 ? &rng : nullptr);
      frame_count += seq.length();
    }
    const double scale = 1.0 / static_cast<double>(frame_count);
    for (auto& blk : grads.blocks) {
      for (double& g : blk.value.data) g *= scale;
    }
    adam_step(model.params, grads, adam);
    out.loss_curve.push_back(loss * scale);
  }
  return out;
}

PredictionTraining train_prediction_pairs(const ActionVocabulary& vocab,
                                          int feature_dim,
                                          const std::vector<PredictionPair>& train,
                                          const std::vector<PredictionPair>& val,
                                          const TrainingConfig& cfg) {
  if (train.empty()) {
    throw std::invalid_argument("train_prediction: no usable training pairs");
  }
  Rng rng(derive_seed(cfg.seed, "train_prediction"));
  PredictionTraining out{PredictionModel::init(feature_dim, vocab, cfg, rng), {}, {}};
  PredictionModel& model = out.model;
  AdamState adam(model.params.scalar_count(), cfg.adam());
  const std::size_t batch =
      std::min<std::size_t>(static_cast<std::size_t>(cfg.batch_size), train.size());

  for (int it = 0; it < cfg.iterations; ++it) {
    ModelParameters grads = model.params.zeros_like();
    double loss = 0.0;
    for (std::size_t b = 0; b < batch; ++b) {
      const PredictionPair& pair = train[rng.index(train.size())];
      loss += prediction_loss(model, pair.observed, pair.targets, &grads,
                              cfg.dropout > 0.0 ? &rng : nullptr);
    }
    const double scale = 1.0 / static_cast<double>(batch);
    for (auto& blk : grads.blocks) {
      for (double& g : blk.value.data) g *= scale;
    }
    adam_step(model.params, grads, adam);
    out.loss_curve.push_back(loss * scale);
    if (!val.empty()) out.val_loss_curve.push_back(mean_prediction_loss(model, val));
  }
  return out;
}

PredictionTraining train_prediction(const Dataset& ds, const TrainingConfig& cfg) {
  auto pairs = make_prediction_pairs(ds, cfg.window, cfg.predict_length);
  return train_prediction_pairs(ds.vocabulary, static_cast<int>(ds.feature_width()),
                                pairs, {}, cfg);
}

double mean_prediction_loss(const PredictionModel& model,
                            const std::vector<PredictionPair>& pairs) {
  if (pairs.empty()) throw std::invalid_argument("mean_prediction_loss: no pairs");
  double loss = 0.0;
  for (const auto& p : pairs) {
    loss += prediction_loss(model, p.observed, p.targets, nullptr);
  }
  return loss / static_cast<double>(pairs.size());
}

}  // namespace actseq
