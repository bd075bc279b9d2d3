#include "pmilab/core.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>

#include "pmilab/error.hpp"

namespace pmilab {

namespace {

bool blank(std::string_view text) {
    return std::all_of(text.begin(), text.end(),
                       [](unsigned char ch) { return std::isspace(ch) != 0; });
}

}  // namespace

void validate(const PairSample& pair) {
    if (blank(pair.context)) fail(ErrorKind::data, "pair has an empty context");
    if (blank(pair.response)) fail(ErrorKind::data, "pair has an empty response");
    if (pair.ctx_index.has_value() != pair.resp_index.has_value()) {
        fail(ErrorKind::data, "pair must carry both prototype indices or neither");
    }
    if (pair.ctx_index && (*pair.ctx_index < 0 || *pair.resp_index < 0)) {
        fail(ErrorKind::data, "prototype indices must be non-negative");
    }
}

std::size_t validate_dataset(std::span<const EmbeddedPair> data) {
    if (data.empty()) return 0;
    const std::size_t dim = data.front().vector.size();
    if (dim == 0) fail(ErrorKind::data, "embedding dimension is zero");
    for (std::size_t k = 0; k < data.size(); ++k) {
        const auto& v = data[k].vector;
        if (v.size() != dim) {
            fail(ErrorKind::data, "record " + std::to_string(k) + " has dimension " +
                                      std::to_string(v.size()) + ", expected " +
                                      std::to_string(dim));
        }
        for (double x : v) {
            if (!std::isfinite(x)) {
                fail(ErrorKind::data, "record " + std::to_string(k) + " has a non-finite entry");
            }
        }
    }
    return dim;
}

std::string_view to_string(FKind kind) {
    switch (kind) {
        case FKind::kl: return "kl";
        case FKind::total_variation: return "total_variation";
        case FKind::pearson_chi2: return "pearson_chi2";
        case FKind::jensen_shannon: return "jensen_shannon";
        case FKind::squared_hellinger: return "squared_hellinger";
    }
    return "unknown";
}

FKind parse_fkind(std::string_view text) {
    for (FKind kind : {FKind::kl, FKind::total_variation, FKind::pearson_chi2,
                       FKind::jensen_shannon, FKind::squared_hellinger}) {
        if (to_string(kind) == text) return kind;
    }
    fail(ErrorKind::usage, "unsupported f-divergence kind '" + std::string(text) + "'");
}

Objective parse_objective(std::string_view text) {
    if (text == "pmiscore") return {ObjectiveKind::pmiscore, FKind::kl};
    if (text == "mine") return {ObjectiveKind::mine, FKind::kl};
    if (text == "infonce") return {ObjectiveKind::infonce, FKind::kl};
    if (text.starts_with("fdiv:")) return {ObjectiveKind::fdiv, parse_fkind(text.substr(5))};
    fail(ErrorKind::usage, "unknown objective '" + std::string(text) + "'");
}

std::string to_string(const Objective& objective) {
    switch (objective.kind) {
        case ObjectiveKind::pmiscore: return "pmiscore";
        case ObjectiveKind::mine: return "mine";
        case ObjectiveKind::infonce: return "infonce";
        case ObjectiveKind::fdiv: return "fdiv:" + std::string(to_string(objective.fkind));
    }
    return "unknown";
}

void validate(const TrainConfig& config) {
    if (config.epochs < 0) fail(ErrorKind::usage, "epochs must be non-negative");
    if (config.batch_positives < 1) fail(ErrorKind::usage, "batch size must be at least 1");
    if (config.neg_per_pos < 1) fail(ErrorKind::usage, "neg_per_pos must be at least 1");
    if (config.rounds < 1) fail(ErrorKind::usage, "rounds must be at least 1");
    if (!(config.softcap > 0.0)) fail(ErrorKind::usage, "softcap must be positive");
    if (!(config.base_lr_numerator > 0.0)) fail(ErrorKind::usage, "lr numerator must be positive");
    if (config.patience < 0) fail(ErrorKind::usage, "patience must be non-negative");
    if (config.hidden1 < 1 || config.hidden2 < 1) fail(ErrorKind::usage, "hidden widths must be positive");
}

double mean(std::span<const double> values) {
    if (values.empty()) fail(ErrorKind::data, "empty expectation");
    double sum = 0.0;
    for (double v : values) sum += v;
    return sum / static_cast<double>(values.size());
}

double logsumexp(std::span<const double> values) {
    if (values.empty()) fail(ErrorKind::data, "logsumexp of an empty array");
    const double top = *std::max_element(values.begin(), values.end());
    if (!std::isfinite(top)) return top;
    double sum = 0.0;
    for (double v : values) sum += std::exp(v - top);
    return top + std::log(sum);
}

}  // namespace pmilab
