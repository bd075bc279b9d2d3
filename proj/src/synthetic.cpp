#include "pmilab/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "pmilab/error.hpp"

namespace pmilab {

std::string_view to_string(Family family) {
    switch (family) {
        case Family::diagonal: return "diagonal";
        case Family::block: return "block";
        case Family::independent: return "independent";
        case Family::custom: return "custom";
    }
    return "custom";
}

Family parse_family(std::string_view text) {
    if (text == "diagonal") return Family::diagonal;
    if (text == "block") return Family::block;
    if (text == "independent") return Family::independent;
    fail(ErrorKind::usage, "unknown family '" + std::string(text) + "'");
}

std::string_view to_string(EmbedMode mode) {
    return mode == EmbedMode::onehot_concat ? "onehot_concat" : "gaussian_prototypes";
}

EmbedMode parse_embed_mode(std::string_view text) {
    if (text == "onehot_concat" || text == "onehot") return EmbedMode::onehot_concat;
    if (text == "gaussian_prototypes" || text == "gaussian") return EmbedMode::gaussian_prototypes;
    fail(ErrorKind::usage, "unknown embedding mode '" + std::string(text) + "'");
}

namespace {

// Sums in sorted order so rows holding the same values get bit-identical
// marginals.
double sorted_sum(std::vector<double>& values) {
    std::sort(values.begin(), values.end());
    double total = 0.0;
    for (double v : values) total += v;
    return total;
}

}  // namespace

std::vector<double> JointSpec::ctx_marginal() const {
    std::vector<double> marginal(n_ctx);
    std::vector<double> row(n_resp);
    for (int i = 0; i < n_ctx; ++i) {
        for (int j = 0; j < n_resp; ++j) row[j] = at(i, j);
        marginal[i] = sorted_sum(row);
    }
    return marginal;
}

std::vector<double> JointSpec::resp_marginal() const {
    std::vector<double> marginal(n_resp);
    std::vector<double> col(n_ctx);
    for (int j = 0; j < n_resp; ++j) {
        for (int i = 0; i < n_ctx; ++i) col[i] = at(i, j);
        marginal[j] = sorted_sum(col);
    }
    return marginal;
}

void validate(const JointSpec& spec) {
    if (spec.n_ctx < 1 || spec.n_resp < 1) fail(ErrorKind::data, "joint spec has no cells");
    if (spec.probs.size() != static_cast<std::size_t>(spec.n_ctx) * spec.n_resp) {
        fail(ErrorKind::data, "joint spec probability table has the wrong size");
    }
    double total = 0.0;
    for (double p : spec.probs) {
        if (!(p >= 0.0) || !std::isfinite(p)) fail(ErrorKind::data, "joint spec has a negative cell");
        total += p;
    }
    if (std::abs(total - 1.0) > 1e-12) fail(ErrorKind::data, "joint spec mass is not 1");
    for (double m : spec.ctx_marginal()) {
        if (!(m > 0.0)) fail(ErrorKind::data, "context marginal has an empty index");
    }
    for (double m : spec.resp_marginal()) {
        if (!(m > 0.0)) fail(ErrorKind::data, "response marginal has an empty index");
    }
}

JointSpec make_diagonal(int k, double eps) {
    if (k < 2) fail(ErrorKind::usage, "diagonal family needs K >= 2");
    if (!(eps >= 0.0 && eps < 1.0)) fail(ErrorKind::usage, "diagonal eps must lie in [0, 1)");
    JointSpec spec{k, k, std::vector<double>(static_cast<std::size_t>(k) * k), Family::diagonal};
    const double on = (1.0 - eps) / k;
    const double off = eps / (static_cast<double>(k) * (k - 1));
    for (int i = 0; i < k; ++i) {
        for (int j = 0; j < k; ++j) spec.probs[static_cast<std::size_t>(i) * k + j] = i == j ? on : off;
    }
    return spec;
}

JointSpec make_block(int k, int n_blocks, double eps) {
    if (k < 1 || n_blocks < 1 || k % n_blocks != 0) {
        fail(ErrorKind::usage, "block count must divide K");
    }
    if (!(eps >= 0.0 && eps <= 1.0)) fail(ErrorKind::usage, "block eps must lie in [0, 1]");
    const int width = k / n_blocks;
    const double same_cells = static_cast<double>(n_blocks) * width * width;
    const double cross_cells = static_cast<double>(k) * k - same_cells;
    if (eps > 0.0 && cross_cells == 0.0) fail(ErrorKind::usage, "a single block has no cross-block cells");
    if (eps < 1.0 && same_cells == 0.0) fail(ErrorKind::usage, "no same-block cells");

    JointSpec spec{k, k, std::vector<double>(static_cast<std::size_t>(k) * k), Family::block};
    const double same = (1.0 - eps) / same_cells;
    const double cross = cross_cells > 0.0 ? eps / cross_cells : 0.0;
    for (int i = 0; i < k; ++i) {
        for (int j = 0; j < k; ++j) {
            spec.probs[static_cast<std::size_t>(i) * k + j] = (i / width == j / width) ? same : cross;
        }
    }
    return spec;
}

JointSpec make_independent(int k) {
    if (k < 1) fail(ErrorKind::usage, "independent family needs K >= 1");
    const double cell = 1.0 / (static_cast<double>(k) * k);
    return {k, k, std::vector<double>(static_cast<std::size_t>(k) * k, cell), Family::independent};
}

JointSpec make_independent_dirichlet(int k, double alpha, Rng& rng) {
    if (k < 1) fail(ErrorKind::usage, "independent family needs K >= 1");
    auto draw = [&] {
        std::vector<double> w(k);
        double total = 0.0;
        for (auto& x : w) {
            // Floor keeps every marginal strictly positive.
            x = std::max(rng.gamma(alpha), 1e-300);
            total += x;
        }
        for (auto& x : w) x /= total;
        return w;
    };
    const auto px = draw();
    const auto py = draw();
    JointSpec spec{k, k, std::vector<double>(static_cast<std::size_t>(k) * k), Family::independent};
    for (int i = 0; i < k; ++i) {
        for (int j = 0; j < k; ++j) spec.probs[static_cast<std::size_t>(i) * k + j] = px[i] * py[j];
    }
    return spec;
}

JointSpec transpose(const JointSpec& spec) {
    JointSpec out{spec.n_resp, spec.n_ctx,
                  std::vector<double>(spec.probs.size()), spec.family};
    for (int i = 0; i < spec.n_ctx; ++i) {
        for (int j = 0; j < spec.n_resp; ++j) {
            out.probs[static_cast<std::size_t>(j) * spec.n_ctx + i] = spec.at(i, j);
        }
    }
    return out;
}

double analytic_pmi(const JointSpec& spec, int i, int j) {
    if (i < 0 || j < 0 || i >= spec.n_ctx || j >= spec.n_resp) {
        fail(ErrorKind::usage, "cell index out of range");
    }
    const double joint = spec.at(i, j);
    if (!(joint > 0.0)) fail(ErrorKind::data, "PMI undefined (-inf)");
    std::vector<double> row(spec.n_resp), col(spec.n_ctx);
    for (int b = 0; b < spec.n_resp; ++b) row[b] = spec.at(i, b);
    for (int a = 0; a < spec.n_ctx; ++a) col[a] = spec.at(a, j);
    return std::log(joint / (sorted_sum(row) * sorted_sum(col)));
}

double mutual_information(const JointSpec& spec) {
    const auto px = spec.ctx_marginal();
    const auto py = spec.resp_marginal();
    double mi = 0.0;
    for (int i = 0; i < spec.n_ctx; ++i) {
        for (int j = 0; j < spec.n_resp; ++j) {
            const double p = spec.at(i, j);
            if (p > 0.0) mi += p * std::log(p / (px[i] * py[j]));
        }
    }
    return mi;
}

std::vector<std::pair<int, int>> sample_pairs(const JointSpec& spec, std::size_t n, Rng& rng) {
    if (n < 1) fail(ErrorKind::usage, "sample count must be at least 1");
    std::vector<std::pair<int, int>> out;
    out.reserve(n);
    for (std::size_t s = 0; s < n; ++s) {
        const std::size_t cell = rng.categorical(spec.probs);
        out.emplace_back(static_cast<int>(cell / spec.n_resp), static_cast<int>(cell % spec.n_resp));
    }
    return out;
}

SyntheticEmbedder::SyntheticEmbedder(const JointSpec& spec, const SyntheticEmbedConfig& config)
    : spec_(spec), config_(config) {
    if (!(config.noise_sigma >= 0.0)) fail(ErrorKind::usage, "noise sigma must be non-negative");
    if (config.mode == EmbedMode::onehot_concat) {
        dim_ = static_cast<std::size_t>(spec.n_ctx + spec.n_resp);
        return;
    }
    if (config.proto_dim < 1) fail(ErrorKind::usage, "prototype dimension must be positive");
    dim_ = static_cast<std::size_t>(config.proto_dim);
    Rng table_rng = Rng::child(config.seed, 0x70726f746fULL);
    const double scale = 1.0 / std::sqrt(static_cast<double>(dim_));
    auto fill = [&](std::vector<std::vector<double>>& table, int count) {
        table.assign(count, std::vector<double>(dim_));
        for (auto& row : table) {
            for (auto& x : row) x = scale * table_rng.normal();
        }
    };
    fill(ctx_table_, spec.n_ctx);
    fill(resp_table_, spec.n_resp);
}

EmbeddedPair SyntheticEmbedder::embed(int i, int j, Rng& rng) const {
    if (i < 0 || j < 0 || i >= spec_.n_ctx || j >= spec_.n_resp) {
        fail(ErrorKind::usage, "prototype index out of range");
    }
    EmbeddedPair pair;
    pair.vector.assign(dim_, 0.0);
    if (config_.mode == EmbedMode::onehot_concat) {
        pair.vector[i] = 1.0;
        pair.vector[spec_.n_ctx + j] = 1.0;
    } else {
        for (std::size_t k = 0; k < dim_; ++k) pair.vector[k] = ctx_table_[i][k] + resp_table_[j][k];
    }
    if (config_.noise_sigma > 0.0) {
        for (auto& x : pair.vector) x += config_.noise_sigma * rng.normal();
    }
    if (spec_.at(i, j) > 0.0) pair.target_pmi = analytic_pmi(spec_, i, j);
    pair.ctx_index = i;
    pair.resp_index = j;
    return pair;
}

EmbeddedPair embed_synthetic(const JointSpec& spec, int i, int j,
                             const SyntheticEmbedConfig& config, Rng& rng) {
    return SyntheticEmbedder(spec, config).embed(i, j, rng);
}

}  // namespace pmilab
