#pragma once

#include <filesystem>
#include <variant>

#include "actseq/model.hpp"

namespace actseq {

using Checkpoint = std::variant<RecognitionModel, PredictionModel>;

// Versioned JSON with base64-encoded little-endian doubles per parameter
// block, a checksum over all weight bytes, dimensions, vocabulary and the
// training config snapshot. Writes go through a temp file and rename.
void save_checkpoint(const RecognitionModel& model, const std::filesystem::path& file);
void save_checkpoint(const PredictionModel& model, const std::filesystem::path& file);

Checkpoint load_checkpoint(const std::filesystem::path& file);

}  // namespace actseq
