#pragma once

#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "actseq/data.hpp"
#include "actseq/model.hpp"

namespace actseq {

// First frame index from which the argmax prediction equals the true label
// and stays correct for the rest of the sequence; "never" when no such frame
// exists.
struct StableCorrect {
  std::optional<std::size_t> frames;  // nullopt = never
  double milliseconds = -1.0;         // -1 when never

  bool never() const { return !frames.has_value(); }
};

StableCorrect time_to_stable_correct(const std::vector<int>& argmax_per_frame,
                                     int true_label, double sample_rate_hz);

// Secondary statistic: first frame whose argmax is correct, regardless of
// later frames.
std::optional<std::size_t> first_correct_frame(const std::vector<int>& argmax_per_frame,
                                               int true_label);

// A named union of feature columns to evaluate as one wrapper subset.
struct FeatureSubset {
  std::string name;
  std::vector<std::size_t> columns;
};

FeatureSubset subset_from_groups(const Dataset& ds,
                                 const std::vector<std::string>& group_names);

struct SubsetResult {
  std::string name;
  std::vector<double> accuracy_curve;  // held-out accuracy per frame index
  double auc = 0.0;                    // mean of the accuracy curve
  std::vector<StableCorrect> stable_per_sequence;
  // Mean over held-out sequences; a "never" contributes the sequence length.
  double mean_stable_frames = 0.0;
  double mean_stable_ms = 0.0;
  std::size_t never_count = 0;
};

struct ImportanceReport {
  std::vector<SubsetResult> subsets;  // ranked by AUC descending
  double sample_rate_hz = 1.0;
};

// Trains the recognition model from scratch on each column-restricted subset
// (same seed and budget) and ranks subsets by held-out accuracy.
ImportanceReport wrapper_rank(const Dataset& ds,
                              const std::vector<FeatureSubset>& subsets,
                              const TrainingConfig& cfg);

// CSV emitters: one row per subset per frame, plus a ranked summary and the
// pairwise timing deltas.
void write_importance_curves_csv(std::ostream& os, const ImportanceReport& report);
void write_importance_summary_csv(std::ostream& os, const ImportanceReport& report);
void write_importance_deltas_csv(std::ostream& os, const ImportanceReport& report);

}  // namespace actseq
