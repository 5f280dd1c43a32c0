#include "actseq/importance.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <stdexcept>

#include "actseq/common.hpp"
#include "actseq/rng.hpp"

namespace actseq {

StableCorrect time_to_stable_correct(const std::vector<int>& argmax_per_frame,
                                     int true_label, double sample_rate_hz) {
  if (argmax_per_frame.empty()) {
    throw std::invalid_argument("time_to_stable_correct: empty prediction sequence");
  }
  std::size_t t = argmax_per_frame.size();
  while (t > 0 && argmax_per_frame[t - 1] == true_label) --t;
  if (t == argmax_per_frame.size()) return {};
  return {t, static_cast<double>(t) * 1000.0 / sample_rate_hz};
}

std::optional<std::size_t> first_correct_frame(const std::vector<int>& argmax_per_frame,
                                               int true_label) {
  for (std::size_t t = 0; t < argmax_per_frame.size(); ++t) {
    if (argmax_per_frame[t] == true_label) return t;
  }
  return std::nullopt;
}

FeatureSubset subset_from_groups(const Dataset& ds,
                                 const std::vector<std::string>& group_names) {
  FeatureSubset s;
  for (std::size_t i = 0; i < group_names.size(); ++i) {
    if (i > 0) s.name += "+";
    s.name += group_names[i];
    const auto& g = ds.group(group_names[i]);
    s.columns.insert(s.columns.end(), g.columns.begin(), g.columns.end());
  }
  return s;
}

namespace {

int argmax(const Distribution& d) {
  return static_cast<int>(std::max_element(d.probs.begin(), d.probs.end()) -
                          d.probs.begin());
}

}  // namespace

ImportanceReport wrapper_rank(const Dataset& ds,
                              const std::vector<FeatureSubset>& subsets,
                              const TrainingConfig& cfg) {
  if (subsets.size() < 2) {
    throw std::invalid_argument("wrapper_rank: need at least 2 subsets");
  }
  for (const auto& s : subsets) {
    if (s.columns.empty()) {
      throw std::invalid_argument("wrapper_rank: empty subset '" + s.name + "'");
    }
  }
  std::vector<std::size_t> labeled;
  for (std::size_t i = 0; i < ds.sequences.size(); ++i) {
    if (ds.sequences[i].intention >= 0) labeled.push_back(i);
  }
  if (labeled.size() < 2) {
    throw std::invalid_argument("wrapper_rank: need at least 2 labeled sequences");
  }

  // Same split for every subset.
  Rng split_rng(derive_seed(cfg.seed, "wrapper_split"));
  split_rng.shuffle(labeled);
  std::size_t holdout_n = static_cast<std::size_t>(
      std::round(cfg.holdout * static_cast<double>(labeled.size())));
  holdout_n = std::clamp<std::size_t>(holdout_n, 1, labeled.size() - 1);
  const std::vector<std::size_t> holdout(labeled.begin(),
                                         labeled.begin() + static_cast<std::ptrdiff_t>(holdout_n));
  const std::vector<std::size_t> train(labeled.begin() + static_cast<std::ptrdiff_t>(holdout_n),
                                       labeled.end());

  ImportanceReport report;
  report.sample_rate_hz = ds.sample_rate_hz;
  report.subsets.resize(subsets.size());

  parallel_for(subsets.size(), default_workers(), [&](std::size_t si) {
    const FeatureSubset& subset = subsets[si];
    const Dataset restricted = ds.restrict_columns(subset.columns);

    Dataset train_ds;
    train_ds.vocabulary = restricted.vocabulary;
    train_ds.columns = restricted.columns;
    train_ds.sample_rate_hz = restricted.sample_rate_hz;
    for (const std::size_t i : train) train_ds.sequences.push_back(restricted.sequences[i]);

    const RecognitionModel model = train_recognition(train_ds, cfg).model;

    SubsetResult res;
    res.name = subset.name;
    std::vector<std::size_t> correct_at, total_at;
    for (const std::size_t i : holdout) {
      const FeatureSequence& seq = restricted.sequences[i];
      const auto dists = model.recognize(seq.features);
      std::vector<int> preds(dists.size());
      for (std::size_t t = 0; t < dists.size(); ++t) preds[t] = argmax(dists[t]);
      if (preds.size() > total_at.size()) {
        total_at.resize(preds.size(), 0);
        correct_at.resize(preds.size(), 0);
      }
      for (std::size_t t = 0; t < preds.size(); ++t) {
        total_at[t] += 1;
        if (preds[t] == seq.intention) correct_at[t] += 1;
      }
      const StableCorrect sc =
          time_to_stable_correct(preds, seq.intention, ds.sample_rate_hz);
      res.stable_per_sequence.push_back(sc);
      const double frames = sc.never() ? static_cast<double>(seq.length())
                                       : static_cast<double>(*sc.frames);
      res.mean_stable_frames += frames;
      res.mean_stable_ms += frames * 1000.0 / ds.sample_rate_hz;
      if (sc.never()) ++res.never_count;
    }
    res.mean_stable_frames /= static_cast<double>(holdout.size());
    res.mean_stable_ms /= static_cast<double>(holdout.size());
    res.accuracy_curve.resize(total_at.size());
    for (std::size_t t = 0; t < total_at.size(); ++t) {
      res.accuracy_curve[t] =
          static_cast<double>(correct_at[t]) / static_cast<double>(total_at[t]);
    }
    res.auc = res.accuracy_curve.empty()
                  ? 0.0
                  : std::accumulate(res.accuracy_curve.begin(), res.accuracy_curve.end(),
                                    0.0) /
                        static_cast<double>(res.accuracy_curve.size());
    report.subsets[si] = std::move(res);
  });

  std::stable_sort(report.subsets.begin(), report.subsets.end(),
                   [](const SubsetResult& a, const SubsetResult& b) {
                     if (a.auc != b.auc) return a.auc > b.auc;
                     return a.name < b.name;
                   });
  return report;
}

namespace {

std::string fmt(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace

void write_importance_curves_csv(std::ostream& os, const ImportanceReport& report) {
  os << "subset,frame,accuracy\n";
  for (const auto& s : report.subsets) {
    for (std::size_t t = 0; t < s.accuracy_curve.size(); ++t) {
      os << s.name << "," << t << "," << fmt(s.accuracy_curve[t]) << "\n";
    }
  }
}

void write_importance_summary_csv(std::ostream& os, const ImportanceReport& report) {
  os << "rank,subset,auc,mean_stable_frames,mean_stable_ms,never_count\n";
  for (std::size_t i = 0; i < report.subsets.size(); ++i) {
    const auto& s = report.subsets[i];
    os << (i + 1) << "," << s.name << "," << fmt(s.auc) << ","
       << fmt(s.mean_stable_frames) << "," << fmt(s.mean_stable_ms) << ","
       << s.never_count << "\n";
  }
}

void write_importance_deltas_csv(std::ostream& os, const ImportanceReport& report) {
  os << "subset_a,subset_b,delta_frames,delta_ms\n";
  for (std::size_t i = 0; i < report.subsets.size(); ++i) {
    for (std::size_t j = i + 1; j < report.subsets.size(); ++j) {
      const auto& a = report.subsets[i];
      const auto& b = report.subsets[j];
      os << a.name << "," << b.name << ","
         << fmt(a.mean_stable_frames - b.mean_stable_frames) << ","
         << fmt(a.mean_stable_ms - b.mean_stable_ms) << "\n";
    }
  }
}

}  // namespace actseq
