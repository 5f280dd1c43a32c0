#pragma once

#include <cstdint>
#include <functional>
#include <ostream>
#include <string>
#include <vector>

#include "actseq/data.hpp"
#include "actseq/model.hpp"

namespace actseq {

// Micro-aggregated counts across labels and prediction steps.
struct ConfusionCounts {
  long long true_pos = 0;
  long long false_neg = 0;
  long long false_pos = 0;
};

// 2 TP / (2 TP + FN + FP); 1.0 when all counts are zero (no predictions
// demanded, none wrong).
double f1_from_counts(const ConfusionCounts& c);

// Predicts `horizon` future actions for a sequence whose frames [obs_end -
// window, obs_end) were observed.
using SequencePredictor =
    std::function<std::vector<int>(const FeatureSequence&, std::size_t obs_end, int horizon)>;

// Builds a predictor from a training split; lets tests plug in oracles or
// baselines in place of model training.
using PredictorFactory = std::function<SequencePredictor(
    const Dataset& train, const TrainingConfig& cfg, std::uint64_t fold_seed)>;

// Trains the encoder-decoder model and decodes greedily.
PredictorFactory greedy_model_factory();

struct CrossValidation {
  std::vector<double> fold_f1;
  double mean_f1 = 0.0;
};

// Sequence-level seeded partition into k folds; per fold trains on the rest,
// predicts on every valid observation window of the held-out sequences and
// micro-aggregates counts across steps and labels.
CrossValidation cross_validate(const Dataset& ds, const TrainingConfig& cfg, int k,
                               std::uint64_t seed,
                               const PredictorFactory& factory = greedy_model_factory());

// ---------------------------------------------------------------------------
// Parameter studies

enum class StudyKind { PredictionLength, BeamCoverage, ContextDim };

StudyKind study_kind_from_name(const std::string& name);

struct StudyGrid {
  StudyKind kind = StudyKind::PredictionLength;
  std::vector<int> values;
  TrainingConfig base;
  std::vector<std::uint64_t> seeds;
  int max_horizon = 3;  // evaluation horizon for length/coverage studies
};

struct StudyRow {
  std::uint64_t seed = 0;
  int value = 0;       // grid value (N, K, or context dim)
  int index = 0;       // step, horizon, or iteration depending on the study
  double metric = 0.0;
  double metric2 = 0.0;  // second metric where applicable (validation loss)
};

struct StudyReport {
  StudyKind kind;
  std::vector<StudyRow> rows;
};

// Runs the grid (parallel over grid value x seed, deterministic merge).
StudyReport run_study(const StudyGrid& grid, const Dataset& ds);

// Schema-stable CSV per study kind.
void write_study_csv(std::ostream& os, const StudyReport& report);

// Per-step exact-match accuracy of greedy decoding on held-out pairs.
std::vector<double> per_step_accuracy(const PredictionModel& model,
                                      const std::vector<PredictionPair>& pairs,
                                      int horizon);

}  // namespace actseq
