#pragma once

#include <cstdint>
#include <optional>
#include <string_view>
#include <utility>
#include <vector>

#include "pmilab/core.hpp"
#include "pmilab/rng.hpp"

namespace pmilab {

enum class Family { diagonal, block, independent, custom };

std::string_view to_string(Family family);
Family parse_family(std::string_view text);

/// Discrete joint distribution over (context prototype, response prototype)
/// index pairs. Probabilities are stored row-major, n_ctx rows by n_resp
/// columns.
struct JointSpec {
    int n_ctx = 0;
    int n_resp = 0;
    std::vector<double> probs;
    Family family = Family::custom;

    double at(int i, int j) const { return probs[static_cast<std::size_t>(i) * n_resp + j]; }
    std::vector<double> ctx_marginal() const;
    std::vector<double> resp_marginal() const;
};

/// Checks non-negativity, unit mass (1e-12) and strictly positive marginals.
void validate(const JointSpec& spec);

/// Mass (1-eps)/K on the diagonal, eps/(K(K-1)) elsewhere.
JointSpec make_diagonal(int k, double eps);

/// n_blocks equal groups; mass 1-eps spread uniformly over same-block cells
/// and eps over cross-block cells.
JointSpec make_block(int k, int n_blocks, double eps);

/// Uniform product distribution 1/K^2.
JointSpec make_independent(int k);

/// Product of two Dirichlet(alpha) marginals drawn from rng.
JointSpec make_independent_dirichlet(int k, double alpha, Rng& rng);

JointSpec transpose(const JointSpec& spec);

/// log(p(i,j) / (p(i) p(j))) in nats. Throws Error(data) when p(i,j) = 0.
double analytic_pmi(const JointSpec& spec, int i, int j);

/// Sum over cells of p(i,j) * PMI(i,j).
double mutual_information(const JointSpec& spec);

/// n i.i.d. cell draws.
std::vector<std::pair<int, int>> sample_pairs(const JointSpec& spec, std::size_t n, Rng& rng);

enum class EmbedMode { onehot_concat, gaussian_prototypes };

std::string_view to_string(EmbedMode mode);
EmbedMode parse_embed_mode(std::string_view text);

struct SyntheticEmbedConfig {
    double noise_sigma = 0.0;
    EmbedMode mode = EmbedMode::onehot_concat;
    int proto_dim = 64;
    std::uint64_t seed = 42;
};

/// Deterministic, index-preserving pair embeddings standing in for encoder
/// outputs. The prototype tables of the gaussian mode are drawn once from
/// the config seed.
class SyntheticEmbedder {
public:
    SyntheticEmbedder(const JointSpec& spec, const SyntheticEmbedConfig& config);

    std::size_t dimension() const noexcept { return dim_; }

    /// Vector for cell (i, j) plus N(0, noise_sigma^2) per entry drawn from
    /// rng. target_pmi is set whenever the cell has positive mass.
    EmbeddedPair embed(int i, int j, Rng& rng) const;

    const std::vector<double>& ctx_prototype(int i) const { return ctx_table_[i]; }
    const std::vector<double>& resp_prototype(int j) const { return resp_table_[j]; }

private:
    JointSpec spec_;
    SyntheticEmbedConfig config_;
    std::size_t dim_;
    std::vector<std::vector<double>> ctx_table_;
    std::vector<std::vector<double>> resp_table_;
};

/// One-shot form of SyntheticEmbedder::embed.
EmbeddedPair embed_synthetic(const JointSpec& spec, int i, int j,
                             const SyntheticEmbedConfig& config, Rng& rng);

}  // namespace pmilab
