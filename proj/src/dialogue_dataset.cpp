#include "pmilab/dialogue_dataset.hpp"

#include <map>
#include <spdlog/spdlog.h>

#include "pmilab/error.hpp"
#include "pmilab/rng.hpp"

namespace pmilab {

std::string clip_context(std::string_view context, std::size_t max_chars) {
    if (max_chars == 0 || context.size() <= max_chars) return std::string(context);
    std::size_t start = context.size() - max_chars;
    // Skip UTF-8 continuation bytes.
    while (start < context.size() && (static_cast<unsigned char>(context[start]) & 0xC0) == 0x80) ++start;
    return std::string(context.substr(start));
}

namespace {

struct Pending {
    std::vector<PairSample> pairs;
    std::vector<std::int64_t> group;
    std::vector<std::int32_t> round;
};

Pending collect(const std::vector<PairSample>& positives, const std::vector<NegativeSet>& rounds) {
    Pending out;
    for (std::size_t p = 0; p < positives.size(); ++p) {
        out.pairs.push_back(positives[p]);
        out.group.push_back(static_cast<std::int64_t>(p));
        out.round.push_back(0);
    }
    for (std::size_t r = 0; r < rounds.size(); ++r) {
        for (std::size_t k = 0; k < rounds[r].pairs.size(); ++k) {
            out.pairs.push_back(rounds[r].pairs[k]);
            out.group.push_back(static_cast<std::int64_t>(rounds[r].positive[k]));
            out.round.push_back(static_cast<std::int32_t>(r));
        }
    }
    return out;
}

}  // namespace

DialogueDataset build_dialogue_dataset(const std::vector<Dialogue>& dialogues,
                                       EmbeddingProvider& provider, EmbeddingCache* cache,
                                       const DialogueDatasetOptions& options) {
    validate(options.policy);
    if (options.policy.pool_size > 0) fail(ErrorKind::usage, "pooled negatives apply to synthetic data only");
    std::vector<PairSample> positives;
    for (const auto& d : dialogues) {
        for (auto& p : build_pairs(d)) positives.push_back(std::move(p));
    }
    if (positives.empty()) fail(ErrorKind::data, "corpus yields no (context, response) pairs");
    const Splits splits = split_dataset(positives, options.fractions, options.seed);

    Rng rng = Rng::child(options.seed, 0x6e6567ULL);
    auto negatives = [&](const std::vector<PairSample>& split, int rounds, const char* name) {
        std::vector<NegativeSet> out;
        if (split.empty()) return out;
        try {
            for (int r = 0; r < rounds; ++r) out.push_back(dialogue_negatives(split, options.policy, rng));
        } catch (const Error& e) {
            fail(e.kind(), std::string(name) + " split (" + std::to_string(split.size()) + " positives): " + e.what());
        }
        return out;
    };
    const Pending parts[3] = {collect(splits.train, negatives(splits.train, options.policy.rounds, "train")),
                              collect(splits.val, negatives(splits.val, 1, "val")),
                              collect(splits.test, negatives(splits.test, 1, "test"))};

    // Each distinct prompt is embedded once.
    std::vector<std::string> prompts;
    std::map<std::string, std::size_t> slot;
    std::vector<std::vector<std::size_t>> index(3);
    for (int s = 0; s < 3; ++s) {
        for (const auto& pair : parts[s].pairs) {
            std::string prompt = render_prompt(clip_context(pair.context, options.max_chars), pair.response);
            auto [it, inserted] = slot.emplace(std::move(prompt), prompts.size());
            if (inserted) prompts.push_back(it->first);
            index[s].push_back(it->second);
        }
    }
    DialogueDataset out;
    out.positives = positives.size();
    const auto vectors = embed_prompts(provider, cache, prompts, options.batch_size, &out.stats);

    Dataset* targets[3] = {&out.train, &out.val, &out.test};
    for (int s = 0; s < 3; ++s) {
        for (std::size_t k = 0; k < parts[s].pairs.size(); ++k) {
            const PairSample& pair = parts[s].pairs[k];
            EmbeddedPair e;
            e.vector = vectors[index[s][k]];
            e.label = pair.label;
            e.group = parts[s].group[k];
            e.round = parts[s].round[k];
            e.dialogue_id = pair.dialogue_id;
            if (pair.label == Label::positive) e.annotation = pair.annotation;
            targets[s]->push_back(std::move(e));
        }
    }
    spdlog::info("embedded {} positives from {} dialogues: {} prompts, {} cache hit(s), {} provider call(s)",
                 positives.size(), dialogues.size(), prompts.size(), out.stats.hits, out.stats.requests);
    return out;
}

}  // namespace pmilab
