#include "actseq/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "actseq/common.hpp"
#include "actseq/decode.hpp"
#include "actseq/rng.hpp"

namespace actseq {

double f1_from_counts(const ConfusionCounts& c) {
  if (c.true_pos < 0 || c.false_neg < 0 || c.false_pos < 0) {
    throw std::invalid_argument("f1_from_counts: negative counts");
  }
  const long long denom = 2 * c.true_pos + c.false_neg + c.false_pos;
  if (denom == 0) return 1.0;
  return 2.0 * static_cast<double>(c.true_pos) / static_cast<double>(denom);
}

PredictorFactory greedy_model_factory() {
  return [](const Dataset& train, const TrainingConfig& cfg, std::uint64_t fold_seed) {
    TrainingConfig fold_cfg = cfg;
    fold_cfg.seed = fold_seed;
    auto trained = train_prediction(train, fold_cfg);
    auto model = std::make_shared<PredictionModel>(std::move(trained.model));
    return SequencePredictor(
        [model](const FeatureSequence& seq, std::size_t obs_end, int horizon) {
          const std::size_t w = static_cast<std::size_t>(model->config.window);
          const LstmState ctx = model->encode(slice_rows(seq.features, obs_end - w, obs_end));
          return greedy_decode(*model, ctx, horizon).actions;
        });
  };
}

CrossValidation cross_validate(const Dataset& ds, const TrainingConfig& cfg, int k,
                               std::uint64_t seed, const PredictorFactory& factory) {
  if (k < 2) throw std::invalid_argument("cross_validate: k must be >= 2");
  if (ds.sequences.size() < static_cast<std::size_t>(k)) {
    throw std::invalid_argument("cross_validate: dataset smaller than k");
  }
  std::vector<std::size_t> order(ds.sequences.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(derive_seed(seed, "cv_folds"));
  rng.shuffle(order);

  const int horizon = cfg.predict_length;
  const std::size_t w = static_cast<std::size_t>(cfg.window);
  CrossValidation out;
  out.fold_f1.resize(static_cast<std::size_t>(k));

  parallel_for(static_cast<std::size_t>(k), default_workers(), [&](std::size_t fold) {
    Dataset train;
    train.vocabulary = ds.vocabulary;
    train.columns = ds.columns;
    train.groups = ds.groups;
    train.sample_rate_hz = ds.sample_rate_hz;
    std::vector<std::size_t> held;
    for (std::size_t i = 0; i < order.size(); ++i) {
      if (i % static_cast<std::size_t>(k) == fold) {
        held.push_back(order[i]);
      } else {
        train.sequences.push_back(ds.sequences[order[i]]);
      }
    }
    const SequencePredictor predict =
        factory(train, cfg, derive_seed(seed, "fold" + std::to_string(fold)));

    ConfusionCounts counts;
    for (const std::size_t si : held) {
      const FeatureSequence& seq = ds.sequences[si];
      if (seq.length() < w + static_cast<std::size_t>(horizon)) continue;
      for (std::size_t start = 0;
           start + w + static_cast<std::size_t>(horizon) <= seq.length(); ++start) {
        bool labeled = true;
        for (int t = 0; t < horizon; ++t) {
          if (seq.labels[start + w + static_cast<std::size_t>(t)] < 0) labeled = false;
        }
        if (!labeled) continue;
        const std::vector<int> preds = predict(seq, start + w, horizon);
        for (int t = 0; t < horizon; ++t) {
          const int truth = seq.labels[start + w + static_cast<std::size_t>(t)];
          if (preds[static_cast<std::size_t>(t)] == truth) {
            ++counts.true_pos;
          } else {
            ++counts.false_neg;
            ++counts.false_pos;
          }
        }
      }
    }
    out.fold_f1[fold] = f1_from_counts(counts);
  });

  for (const double f : out.fold_f1) out.mean_f1 += f;
  out.mean_f1 /= static_cast<double>(k);
  return out;
}

// ---------------------------------------------------------------------------

StudyKind study_kind_from_name(const std::string& name) {
  if (name == "prediction_length") return StudyKind::PredictionLength;
  if (name == "beam_coverage") return StudyKind::BeamCoverage;
  if (name == "context_dim") return StudyKind::ContextDim;
  throw std::invalid_argument("unknown study '" + name + "'");
}

std::vector<double> per_step_accuracy(const PredictionModel& model,
                                      const std::vector<PredictionPair>& pairs,
                                      int horizon) {
  std::vector<std::size_t> correct(static_cast<std::size_t>(horizon), 0);
  std::size_t total = 0;
  for (const auto& p : pairs) {
    const LstmState ctx = model.encode(p.observed);
    const Beam beam = greedy_decode(model, ctx, horizon);
    ++total;
    for (int t = 0; t < horizon && t < static_cast<int>(p.targets.size()); ++t) {
      if (beam.actions[static_cast<std::size_t>(t)] == p.targets[static_cast<std::size_t>(t)]) {
        ++correct[static_cast<std::size_t>(t)];
      }
    }
  }
  std::vector<double> acc(static_cast<std::size_t>(horizon), 0.0);
  if (total == 0) return acc;
  for (int t = 0; t < horizon; ++t) {
    acc[static_cast<std::size_t>(t)] =
        static_cast<double>(correct[static_cast<std::size_t>(t)]) / static_cast<double>(total);
  }
  return acc;
}

namespace {

// Seeded sequence-level train/holdout split.
std::pair<Dataset, Dataset> split_holdout(const Dataset& ds, double fraction,
                                          std::uint64_t seed) {
  std::vector<std::size_t> order(ds.sequences.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(derive_seed(seed, "holdout_split"));
  rng.shuffle(order);
  std::size_t hold_n = static_cast<std::size_t>(
      std::round(fraction * static_cast<double>(order.size())));
  hold_n = std::clamp<std::size_t>(hold_n, 1, order.size() - 1);

  Dataset train, hold;
  for (Dataset* d : {&train, &hold}) {
    d->vocabulary = ds.vocabulary;
    d->columns = ds.columns;
    d->groups = ds.groups;
    d->sample_rate_hz = ds.sample_rate_hz;
  }
  for (std::size_t i = 0; i < order.size(); ++i) {
    (i < hold_n ? hold : train).sequences.push_back(ds.sequences[order[i]]);
  }
  return {std::move(train), std::move(hold)};
}

}  // namespace

StudyReport run_study(const StudyGrid& grid, const Dataset& ds) {
  if (grid.values.size() < 2) {
    throw std::invalid_argument("run_study: need at least 2 grid values");
  }
  if (grid.seeds.empty()) throw std::invalid_argument("run_study: need seeds");

  StudyReport report{grid.kind, {}};
  const std::size_t jobs = grid.values.size() * grid.seeds.size();
  std::vector<std::vector<StudyRow>> results(jobs);

  parallel_for(jobs, default_workers(), [&](std::size_t job) {
    const int value = grid.values[job / grid.seeds.size()];
    const std::uint64_t seed = grid.seeds[job % grid.seeds.size()];
    TrainingConfig cfg = grid.base;
    cfg.seed = seed;
    std::vector<StudyRow>& rows = results[job];

    switch (grid.kind) {
      case StudyKind::PredictionLength: {
        cfg.predict_length = value;
        auto [train, hold] = split_holdout(ds, cfg.holdout, seed);
        const auto model = train_prediction(train, cfg).model;
        const auto pairs = make_prediction_pairs(hold, cfg.window, grid.max_horizon);
        const auto acc = per_step_accuracy(model, pairs, grid.max_horizon);
        for (int t = 0; t < grid.max_horizon; ++t) {
          rows.push_back({seed, value, t + 1, acc[static_cast<std::size_t>(t)], 0.0});
        }
        break;
      }
      case StudyKind::BeamCoverage: {
        auto [train, hold] = split_holdout(ds, cfg.holdout, seed);
        const auto model = train_prediction(train, cfg).model;
        for (int n = 1; n <= grid.max_horizon; ++n) {
          const auto pairs = make_prediction_pairs(hold, cfg.window, n);
          double mean = 0.0;
          std::size_t count = 0;
          for (const auto& p : pairs) {
            const LstmState ctx = model.encode(p.observed);
            mean += cumulative_probability(beam_decode(model, ctx, n, value));
            ++count;
          }
          rows.push_back({seed, value, n, count ? mean / static_cast<double>(count) : 0.0, 0.0});
        }
        break;
      }
      case StudyKind::ContextDim: {
        cfg.hidden_dim = value;
        auto [train, hold] = split_holdout(ds, cfg.holdout, seed);
        const auto train_pairs = make_prediction_pairs(train, cfg.window, cfg.predict_length);
        const auto val_pairs = make_prediction_pairs(hold, cfg.window, cfg.predict_length);
        const auto result = train_prediction_pairs(
            ds.vocabulary, static_cast<int>(ds.feature_width()), train_pairs, val_pairs, cfg);
        for (std::size_t it = 0; it < result.loss_curve.size(); ++it) {
          rows.push_back({seed, value, static_cast<int>(it), result.loss_curve[it],
                          result.val_loss_curve[it]});
        }
        break;
      }
    }
  });

  for (auto& rows : results) {
    report.rows.insert(report.rows.end(), rows.begin(), rows.end());
  }
  return report;
}

namespace {

std::string fmt(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace

void write_study_csv(std::ostream& os, const StudyReport& report) {
  switch (report.kind) {
    case StudyKind::PredictionLength:
      os << "study,seed,train_length,step,accuracy\n";
      for (const auto& r : report.rows) {
        os << "prediction_length," << r.seed << "," << r.value << "," << r.index << ","
           << fmt(r.metric) << "\n";
      }
      break;
    case StudyKind::BeamCoverage:
      os << "study,seed,beam_width,horizon,cumulative_probability\n";
      for (const auto& r : report.rows) {
        os << "beam_coverage," << r.seed << "," << r.value << "," << r.index << ","
           << fmt(r.metric) << "\n";
      }
      break;
    case StudyKind::ContextDim:
      os << "study,seed,context_dim,iteration,train_loss,val_loss\n";
      for (const auto& r : report.rows) {
        os << "context_dim," << r.seed << "," << r.value << "," << r.index << ","
           << fmt(r.metric) << "," << fmt(r.metric2) << "\n";
      }
      break;
  }
}

}  // namespace actseq
