#include "pmilab/sampling.hpp"

#include <algorithm>
#include <map>
#include <string>

#include "pmilab/error.hpp"

namespace pmilab {

NegativePolicy NegativePolicy::synthetic_flat() { return {}; }

NegativePolicy NegativePolicy::synthetic_pool() {
    NegativePolicy p;
    p.per_pos = 15;
    p.pool_size = 15;
    p.rounds = 5;
    p.per_round = 3;
    return p;
}

NegativePolicy NegativePolicy::dialogue_fixed() {
    NegativePolicy p;
    p.per_pos = 4;
    p.per_round = 4;
    p.one_in_dialogue = true;
    return p;
}

NegativePolicy NegativePolicy::dialogue_probabilistic() {
    NegativePolicy p;
    p.per_pos = 3;
    p.per_round = 3;
    p.in_dialogue_prob = 0.1;
    return p;
}

NegativePolicy NegativePolicy::preset(std::string_view name) {
    if (name == "flat") return synthetic_flat();
    if (name == "pool") return synthetic_pool();
    if (name == "dialogue-fixed") return dialogue_fixed();
    if (name == "dialogue-prob") return dialogue_probabilistic();
    fail(ErrorKind::usage, "unknown negative recipe '" + std::string(name) + "'");
}

void validate(const NegativePolicy& policy) {
    if (policy.per_pos < 1) fail(ErrorKind::usage, "per_pos must be at least 1");
    if (policy.rounds < 1) fail(ErrorKind::usage, "rounds must be at least 1");
    if (!(policy.in_dialogue_prob >= 0.0 && policy.in_dialogue_prob <= 1.0)) {
        fail(ErrorKind::usage, "in-dialogue probability must lie in [0, 1]");
    }
    if (policy.pool_size < 0) fail(ErrorKind::usage, "pool size must be non-negative");
    if (policy.pool_size > 0) {
        if (policy.per_round < 1) fail(ErrorKind::usage, "per_round must be at least 1");
        if (policy.pool_size < policy.rounds * policy.per_round) {
            fail(ErrorKind::usage, "pool of " + std::to_string(policy.pool_size) +
                                       " cannot cover " + std::to_string(policy.rounds) +
                                       " rounds of " + std::to_string(policy.per_round));
        }
    }
}

std::vector<std::size_t> distinct_excluding(std::size_t n, std::size_t exclude, std::size_t count,
                                            Rng& rng) {
    const std::size_t available = exclude < n ? n - 1 : n;
    if (count > available) fail(ErrorKind::data, "not enough distinct candidates to draw from");
    // Floyd's algorithm over the `available` slots, then skip `exclude`.
    std::vector<std::size_t> chosen;
    chosen.reserve(count);
    for (std::size_t j = available - count; j < available; ++j) {
        const std::size_t t = rng.below(j + 1);
        if (std::find(chosen.begin(), chosen.end(), t) == chosen.end()) {
            chosen.push_back(t);
        } else {
            chosen.push_back(j);
        }
    }
    // Floyd yields a uniform set but not a uniform order; pools consume the
    // order round by round.
    for (std::size_t k = chosen.size(); k > 1; --k) std::swap(chosen[k - 1], chosen[rng.below(k)]);
    for (auto& c : chosen) {
        if (exclude < n && c >= exclude) ++c;
    }
    return chosen;
}

namespace {

PairSample make_negative(const PairSample& pos, const PairSample& source) {
    PairSample neg;
    neg.context = pos.context;
    neg.response = source.response;
    neg.label = Label::negative;
    neg.ctx_index = pos.ctx_index;
    neg.resp_index = source.resp_index;
    if (!pos.ctx_index || !source.resp_index) {
        neg.ctx_index.reset();
        neg.resp_index.reset();
    }
    neg.dialogue_id = pos.dialogue_id;
    return neg;
}

void push(NegativeSet& set, std::span<const PairSample> positives, std::size_t p, std::size_t s,
          bool in_dialogue) {
    set.pairs.push_back(make_negative(positives[p], positives[s]));
    set.positive.push_back(p);
    set.source.push_back(s);
    set.in_dialogue.push_back(in_dialogue ? 1 : 0);
}

}  // namespace

NegativeSet mismatch_negatives(std::span<const PairSample> positives, int per_pos, Rng& rng) {
    if (positives.size() < 2) fail(ErrorKind::data, "cannot mismatch fewer than 2 positives");
    if (per_pos < 1) fail(ErrorKind::usage, "per_pos must be at least 1");
    NegativeSet set;
    set.pairs.reserve(positives.size() * per_pos);
    for (std::size_t p = 0; p < positives.size(); ++p) {
        for (std::size_t s : distinct_excluding(positives.size(), p, static_cast<std::size_t>(per_pos), rng)) {
            push(set, positives, p, s, false);
        }
    }
    return set;
}

std::span<const std::size_t> NegativePool::round_sources(std::size_t p, int round) const {
    const auto& pool = sources.at(p);
    const std::size_t begin = static_cast<std::size_t>(round) * per_round;
    if (round < 0 || begin + per_round > pool.size()) {
        fail(ErrorKind::usage, "negative pool exhausted at round " + std::to_string(round));
    }
    return std::span<const std::size_t>(pool).subspan(begin, per_round);
}

NegativePool build_pool(std::span<const PairSample> positives, int pool_size, int per_round,
                        Rng& rng) {
    if (pool_size < 1 || per_round < 1) fail(ErrorKind::usage, "pool size and per_round must be positive");
    if (static_cast<std::size_t>(pool_size) > positives.size() - std::min<std::size_t>(positives.size(), 1)) {
        fail(ErrorKind::data, "pool of " + std::to_string(pool_size) + " needs more than " +
                                  std::to_string(positives.size()) + " positives");
    }
    NegativePool pool;
    pool.per_round = per_round;
    pool.sources.reserve(positives.size());
    for (std::size_t p = 0; p < positives.size(); ++p) {
        pool.sources.push_back(distinct_excluding(positives.size(), p, static_cast<std::size_t>(pool_size), rng));
    }
    return pool;
}

NegativeSet pool_round(std::span<const PairSample> positives, const NegativePool& pool, int round) {
    NegativeSet set;
    for (std::size_t p = 0; p < positives.size(); ++p) {
        for (std::size_t s : pool.round_sources(p, round)) push(set, positives, p, s, false);
    }
    return set;
}

NegativeSet dialogue_negatives(std::span<const PairSample> positives, const NegativePolicy& policy,
                               Rng& rng) {
    validate(policy);
    std::map<std::string, std::vector<std::size_t>> by_dialogue;
    for (std::size_t p = 0; p < positives.size(); ++p) {
        if (!positives[p].dialogue_id) fail(ErrorKind::data, "dialogue negatives need dialogue ids");
        by_dialogue[*positives[p].dialogue_id].push_back(p);
    }

    const std::size_t per = static_cast<std::size_t>(policy.per_pos);
    NegativeSet set;
    set.pairs.reserve(positives.size() * per);
    std::vector<std::size_t> used;
    for (std::size_t p = 0; p < positives.size(); ++p) {
        const PairSample& gold = positives[p];
        const auto& mates = by_dialogue[*gold.dialogue_id];
        const std::size_t outside = positives.size() - mates.size();
        used.clear();

        auto taken = [&](std::size_t s) { return std::find(used.begin(), used.end(), s) != used.end(); };
        auto usable = [&](std::size_t s) {
            return s != p && !taken(s) && positives[s].response != gold.response;
        };

        auto draw_in_dialogue = [&]() -> std::optional<std::size_t> {
            std::vector<std::size_t> candidates;
            for (std::size_t s : mates) {
                if (usable(s)) candidates.push_back(s);
            }
            if (candidates.empty()) return std::nullopt;
            return candidates[rng.below(candidates.size())];
        };

        auto draw_random = [&]() -> std::optional<std::size_t> {
            if (outside == 0) return std::nullopt;
            // Rejection on the rare text collision or repeat; bounded.
            for (int attempt = 0; attempt < 64; ++attempt) {
                const std::size_t s = rng.below(positives.size());
                if (positives[s].dialogue_id == gold.dialogue_id) continue;
                if (usable(s)) return s;
            }
            std::vector<std::size_t> candidates;
            for (std::size_t s = 0; s < positives.size(); ++s) {
                if (positives[s].dialogue_id != gold.dialogue_id && usable(s)) candidates.push_back(s);
            }
            if (candidates.empty()) return std::nullopt;
            return candidates[rng.below(candidates.size())];
        };

        for (std::size_t slot = 0; slot < per; ++slot) {
            const bool want_in = policy.one_in_dialogue ? slot == 0
                                                        : rng.uniform() < policy.in_dialogue_prob;
            std::optional<std::size_t> pick;
            bool in_dialogue = false;
            if (want_in) {
                pick = draw_in_dialogue();
                in_dialogue = pick.has_value();
            }
            if (!pick) pick = draw_random();
            if (!pick) {
                pick = draw_in_dialogue();
                in_dialogue = pick.has_value();
            }
            if (!pick) {
                fail(ErrorKind::data, "no negative candidates left for positive " + std::to_string(p));
            }
            used.push_back(*pick);
            push(set, positives, p, *pick, in_dialogue);
        }
    }
    return set;
}

}  // namespace pmilab
