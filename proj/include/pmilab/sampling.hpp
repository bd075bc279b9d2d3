#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "pmilab/core.hpp"
#include "pmilab/rng.hpp"

namespace pmilab {

/// How negatives are built for each positive.
///
/// Synthetic data uses plain mismatching (optionally through a
/// pre-generated pool consumed over several rounds). Dialogue data mixes
/// in-dialogue distractors with random responses from other dialogues.
struct NegativePolicy {
    int per_pos = 4;
    double in_dialogue_prob = 0.0;
    /// Exactly one in-dialogue slot per positive instead of the
    /// probabilistic mix.
    bool one_in_dialogue = false;
    int pool_size = 0;  // 0 = fresh draws every round
    int rounds = 1;
    int per_round = 4;

    /// Four mismatched negatives per positive.
    static NegativePolicy synthetic_flat();
    /// Pool of 15 per positive consumed as 3 per round over 5 rounds.
    static NegativePolicy synthetic_pool();
    /// One in-dialogue plus three random negatives.
    static NegativePolicy dialogue_fixed();
    /// Three negatives, each in-dialogue with probability 0.1.
    static NegativePolicy dialogue_probabilistic();
    static NegativePolicy preset(std::string_view name);

    /// Negatives each positive receives in a single round.
    int negatives_per_round() const noexcept { return pool_size > 0 ? per_round : per_pos; }
};

void validate(const NegativePolicy& policy);

/// Negatives grouped by positive: entries [p * per, (p + 1) * per) belong
/// to positive p.
struct NegativeSet {
    std::vector<PairSample> pairs;
    /// Positive each negative was built for.
    std::vector<std::size_t> positive;
    /// Positive whose response was borrowed.
    std::vector<std::size_t> source;
    std::vector<std::uint8_t> in_dialogue;
};

/// For each positive i draws per_pos distinct j != i uniformly and emits
/// (context_i, response_j). Exclusion is by position, so with prototype
/// data a negative may still land on the positive's own cell.
NegativeSet mismatch_negatives(std::span<const PairSample> positives, int per_pos, Rng& rng);

/// pool_size distinct mismatched source positions per positive.
struct NegativePool {
    std::vector<std::vector<std::size_t>> sources;
    int per_round = 0;

    /// Source positions used in `round` for positive p. Throws Error(usage)
    /// when the pool is exhausted.
    std::span<const std::size_t> round_sources(std::size_t p, int round) const;
};

NegativePool build_pool(std::span<const PairSample> positives, int pool_size, int per_round,
                        Rng& rng);

/// Materializes the negatives of one pool round.
NegativeSet pool_round(std::span<const PairSample> positives, const NegativePool& pool, int round);

/// Dialogue-aware negatives. In-dialogue slots borrow another response of
/// the same dialogue (never the gold one); when none is left they fall back
/// to random. Random slots borrow responses of other dialogues among the
/// given positives, which should all come from one split.
NegativeSet dialogue_negatives(std::span<const PairSample> positives, const NegativePolicy& policy,
                               Rng& rng);

/// `count` distinct values from [0, n) excluding `exclude`, in random order.
std::vector<std::size_t> distinct_excluding(std::size_t n, std::size_t exclude, std::size_t count,
                                            Rng& rng);

}  // namespace pmilab
