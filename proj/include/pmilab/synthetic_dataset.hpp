#pragma once

#include <array>
#include <cstdint>
#include <optional>

#include "pmilab/core.hpp"
#include "pmilab/sampling.hpp"
#include "pmilab/synthetic.hpp"

namespace pmilab {

struct SynthOptions {
    Family family = Family::diagonal;
    int k = 20;
    int n_blocks = 4;
    double eps = 0.05;
    std::size_t n = 5000;
    SyntheticEmbedConfig embed;
    NegativePolicy policy = NegativePolicy::synthetic_flat();
    std::uint64_t seed = 42;
    std::array<double, 3> fractions{0.6, 0.2, 0.2};
    /// When set, the independent family draws Dirichlet marginals.
    std::optional<double> dirichlet_alpha;
};

void validate(const SynthOptions& options);

struct SynthDataset {
    JointSpec spec;
    double mi = 0.0;
    std::size_t ctx_dim = 0;
    Dataset train;
    Dataset val;
    Dataset test;
};

JointSpec make_spec(const SynthOptions& options);

/// Samples n positive cells, splits them and attaches negatives. Training
/// negatives cover every round of the policy; validation and test get one
/// round. A negative's group is the split-local index of its positive.
SynthDataset generate_synthetic(const SynthOptions& options);

}  // namespace pmilab
