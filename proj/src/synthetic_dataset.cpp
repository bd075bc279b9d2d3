#include "pmilab/synthetic_dataset.hpp"

#include <string>

#include "pmilab/error.hpp"
#include "pmilab/ingest.hpp"

namespace pmilab {

void validate(const SynthOptions& options) {
    if (options.k < 2) fail(ErrorKind::usage, "K must be at least 2");
    if (options.n < 10) fail(ErrorKind::usage, "n must be at least 10");
    if (!(options.eps >= 0.0 && options.eps <= 1.0)) fail(ErrorKind::usage, "eps must lie in [0, 1]");
    double total = 0.0;
    for (double f : options.fractions) {
        if (!(f >= 0.0)) fail(ErrorKind::usage, "split fractions must be non-negative");
        total += f;
    }
    if (std::abs(total - 1.0) > 1e-9) fail(ErrorKind::usage, "split fractions must sum to 1");
    validate(options.policy);
    if (options.policy.in_dialogue_prob > 0.0 || options.policy.one_in_dialogue) {
        fail(ErrorKind::usage, "synthetic data has no dialogues; in-dialogue negatives do not apply");
    }
}

JointSpec make_spec(const SynthOptions& options) {
    switch (options.family) {
        case Family::diagonal: return make_diagonal(options.k, options.eps);
        case Family::block: return make_block(options.k, options.n_blocks, options.eps);
        case Family::independent:
            if (options.dirichlet_alpha) {
                Rng rng = Rng::child(options.seed, 0x646972ULL);
                return make_independent_dirichlet(options.k, *options.dirichlet_alpha, rng);
            }
            return make_independent(options.k);
        case Family::custom: break;
    }
    fail(ErrorKind::usage, "custom specs cannot be generated from flags");
}

namespace {

Dataset materialize(const std::vector<PairSample>& positives, const std::vector<NegativeSet>& rounds,
                    const SyntheticEmbedder& embedder, Rng& noise) {
    Dataset out;
    auto embed = [&](const PairSample& s) {
        return embedder.embed(static_cast<int>(*s.ctx_index), static_cast<int>(*s.resp_index), noise);
    };
    for (std::size_t p = 0; p < positives.size(); ++p) {
        EmbeddedPair pair = embed(positives[p]);
        pair.label = Label::positive;
        pair.group = static_cast<std::int64_t>(p);
        out.push_back(std::move(pair));
    }
    for (std::size_t r = 0; r < rounds.size(); ++r) {
        const NegativeSet& set = rounds[r];
        for (std::size_t k = 0; k < set.pairs.size(); ++k) {
            EmbeddedPair pair = embed(set.pairs[k]);
            pair.label = Label::negative;
            pair.group = static_cast<std::int64_t>(set.positive[k]);
            pair.round = static_cast<std::int32_t>(r);
            out.push_back(std::move(pair));
        }
    }
    return out;
}

}  // namespace

SynthDataset generate_synthetic(const SynthOptions& options) {
    validate(options);
    SynthDataset data;
    data.spec = make_spec(options);
    validate(data.spec);
    data.mi = mutual_information(data.spec);

    Rng cell_rng = Rng::child(options.seed, 0x63656c6cULL);
    const auto cells = sample_pairs(data.spec, options.n, cell_rng);
    std::vector<PairSample> positives;
    positives.reserve(cells.size());
    for (auto [i, j] : cells) {
        PairSample s;
        s.context = "c" + std::to_string(i);
        s.response = "r" + std::to_string(j);
        s.ctx_index = i;
        s.resp_index = j;
        positives.push_back(std::move(s));
    }
    const Splits splits = split_dataset(positives, options.fractions, options.seed);

    SyntheticEmbedConfig embed_cfg = options.embed;
    embed_cfg.seed = options.seed;
    const SyntheticEmbedder embedder(data.spec, embed_cfg);
    data.ctx_dim = embed_cfg.mode == EmbedMode::onehot_concat ? static_cast<std::size_t>(data.spec.n_ctx)
                                                              : embedder.dimension();

    const NegativePolicy& policy = options.policy;
    Rng neg_rng = Rng::child(options.seed, 0x6e6567ULL);
    Rng noise = Rng::child(options.seed, 0x656d626564ULL);

    std::vector<NegativeSet> train_rounds;
    if (policy.pool_size > 0) {
        const NegativePool pool = build_pool(splits.train, policy.pool_size, policy.per_round, neg_rng);
        for (int r = 0; r < policy.rounds; ++r) train_rounds.push_back(pool_round(splits.train, pool, r));
    } else {
        for (int r = 0; r < policy.rounds; ++r) {
            train_rounds.push_back(mismatch_negatives(splits.train, policy.per_pos, neg_rng));
        }
    }
    const int per = policy.negatives_per_round();
    const std::vector<NegativeSet> val_rounds{mismatch_negatives(splits.val, per, neg_rng)};
    const std::vector<NegativeSet> test_rounds{mismatch_negatives(splits.test, per, neg_rng)};

    data.train = materialize(splits.train, train_rounds, embedder, noise);
    data.val = materialize(splits.val, val_rounds, embedder, noise);
    data.test = materialize(splits.test, test_rounds, embedder, noise);
    return data;
}

}  // namespace pmilab
