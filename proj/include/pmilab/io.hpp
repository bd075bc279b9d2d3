#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "pmilab/core.hpp"
#include "pmilab/scorer.hpp"

namespace pmilab {

// Embedded datasets are JSON Lines, one record per pair:
//
//   {"vector": [...], "label": 1, "target_pmi": 0.58, "i": 0, "j": 0,
//    "group": 17, "round": 0, "dialogue_id": "d3", "annotation": 2.5}
//
// label is 1 for positives and 0 for negatives. Every key other than
// vector and label is optional; round defaults to 0.

nlohmann::ordered_json to_json(const EmbeddedPair& pair);
EmbeddedPair pair_from_json(const nlohmann::json& record);

void write_dataset(const std::filesystem::path& path, const Dataset& data);
Dataset read_dataset(const std::filesystem::path& path);

/// Writes text atomically (temp file + rename) and creates parent dirs.
void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

inline constexpr int kCheckpointFormat = 1;

struct CheckpointMeta {
    std::uint64_t seed = 0;
    std::string objective;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_eps = 1e-8;
    double weight_decay = 0.01;
    std::string rng = Rng::algorithm;
    std::string kernels;
    std::string val_metric;  // "mse" (lower is better) or "roc_auc"
    std::optional<double> best_val;
    std::optional<int> best_epoch;
};

struct Checkpoint {
    ScorerParams params;
    CheckpointMeta meta;
};

/// Header {format_version, d, widths, cap, optimizer, seed, objective, ...}
/// followed by flat row-major weight arrays.
nlohmann::ordered_json checkpoint_to_json(const ScorerParams& params, const CheckpointMeta& meta);
Checkpoint checkpoint_from_json(const nlohmann::json& doc);

void save_checkpoint(const std::filesystem::path& path, const ScorerParams& params,
                     const CheckpointMeta& meta);
/// Validates every array length against the header dimensions.
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace pmilab
