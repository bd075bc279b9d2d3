#pragma once

#include <array>
#include <cstdint>
#include <filesystem>

#include "pmilab/core.hpp"
#include "pmilab/embedding.hpp"
#include "pmilab/ingest.hpp"
#include "pmilab/sampling.hpp"

namespace pmilab {

struct DialogueDatasetOptions {
    NegativePolicy policy = NegativePolicy::dialogue_fixed();
    std::array<double, 3> fractions{0.6, 0.2, 0.2};
    std::uint64_t seed = 42;
    std::size_t batch_size = 32;
    /// Longer contexts keep their last max_chars characters; 0 = no limit.
    std::size_t max_chars = 0;
};

struct DialogueDataset {
    Dataset train;
    Dataset val;
    Dataset test;
    std::size_t positives = 0;
    EmbedStats stats;
};

/// Keeps the tail of `context` so that it has at most max_chars bytes,
/// without splitting a UTF-8 sequence.
std::string clip_context(std::string_view context, std::size_t max_chars);

/// Builds positives from the dialogues, splits them by dialogue, draws
/// negatives inside each split (every training round, one round for
/// validation and test), renders prompts and embeds them through the cache.
DialogueDataset build_dialogue_dataset(const std::vector<Dialogue>& dialogues,
                                       EmbeddingProvider& provider, EmbeddingCache* cache,
                                       const DialogueDatasetOptions& options);

}  // namespace pmilab
