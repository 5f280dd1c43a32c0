#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "actseq/linalg.hpp"
#include "actseq/vocab.hpp"

namespace actseq {

// Named set of feature columns (e.g. "pose", "gaze").
struct FeatureGroup {
  std::string name;
  std::vector<std::size_t> columns;
};

// One recorded sequence: frames x feature_width cue vectors with optional
// per-frame action labels (index into the dataset vocabulary, -1 if absent)
// and an optional sequence-level intention label.
struct FeatureSequence {
  std::string id;
  Matrix features;
  std::vector<int> labels;
  int intention = -1;

  std::size_t length() const { return features.rows; }
};

struct Dataset {
  ActionVocabulary vocabulary;
  std::vector<std::string> columns;
  std::vector<FeatureGroup> groups;
  double sample_rate_hz = 1.0;
  std::vector<FeatureSequence> sequences;

  std::size_t feature_width() const { return columns.size(); }
  const FeatureGroup& group(const std::string& name) const;

  // New dataset keeping only the given columns, in the given order. Groups
  // are remapped; groups losing all columns are dropped.
  Dataset restrict_columns(const std::vector<std::size_t>& keep) const;
};

// On-disk layout: a directory holding header.json (vocabulary, columns,
// groups, sample rate, intentions) and data.csv with rows
// sequence_id,frame_index,<features...>,label.
Dataset load_dataset(const std::filesystem::path& dir);
void save_dataset(const Dataset& ds, const std::filesystem::path& dir);

// ---------------------------------------------------------------------------
// Synthetic generation

// Desk-scale stand-in for motion-capture exports. Actions evolve by a
// first-order grammar; features are Gaussian emissions around per-action
// means. Early-informative columns carry the label signal from frame 0,
// late-informative columns only after late_onset of the sequence, and noise
// columns never do.
struct SyntheticSpec {
  int vocab_size = 6;
  // V x V row-stochastic transition table; empty means self-transition only
  // (one action per whole sequence).
  std::vector<std::vector<double>> transition;
  std::vector<double> initial;  // empty = uniform

  int num_early = 4;
  int num_late = 4;
  int num_noise = 2;
  // Per-action emission means for the informative columns (V rows,
  // num_early+num_late cols); empty = +/-emission_scale pattern from seed.
  std::vector<std::vector<double>> emission_means;
  double emission_scale = 1.0;
  double noise_scale = 0.1;
  double late_onset = 0.5;

  int num_sequences = 40;
  int min_len = 15;
  int max_len = 35;
  double sample_rate_hz = 10.0;
  std::uint64_t seed = 0;

  // Cyclic deterministic grammar a -> (a+1) mod V.
  static std::vector<std::vector<double>> cyclic_grammar(int v);
};

Dataset generate_synthetic(const SyntheticSpec& spec);

SyntheticSpec load_synthetic_spec(const std::filesystem::path& file);

}  // namespace actseq
