#include "pmilab/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <map>
#include <numeric>

#include "pmilab/error.hpp"

namespace pmilab {

double mse(std::span<const double> pred, std::span<const double> target) {
    if (pred.size() != target.size()) fail(ErrorKind::data, "mse: length mismatch");
    if (pred.empty()) fail(ErrorKind::data, "mse: empty input");
    double sum = 0.0;
    for (std::size_t k = 0; k < pred.size(); ++k) {
        const double e = pred[k] - target[k];
        sum += e * e;
    }
    return sum / static_cast<double>(pred.size());
}

double pearson(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) fail(ErrorKind::data, "pearson: length mismatch");
    if (x.size() < 2) fail(ErrorKind::data, "pearson: at least 2 points required");
    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxx = 0.0, syy = 0.0, sxy = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        const double dx = x[k] - mx;
        const double dy = y[k] - my;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if (!(sxx > 0.0) || !(syy > 0.0)) fail(ErrorKind::data, "undefined correlation");
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

std::vector<double> average_ranks(std::span<const double> values) {
    std::vector<std::size_t> order(values.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<double> ranks(values.size());
    std::size_t start = 0;
    while (start < order.size()) {
        std::size_t end = start + 1;
        while (end < order.size() && values[order[end]] == values[order[start]]) ++end;
        // Positions start+1 .. end share their average.
        const double avg = 0.5 * static_cast<double>(start + 1 + end);
        for (std::size_t k = start; k < end; ++k) ranks[order[k]] = avg;
        start = end;
    }
    return ranks;
}

double spearman(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) fail(ErrorKind::data, "spearman: length mismatch");
    if (x.size() < 2) fail(ErrorKind::data, "spearman: at least 2 points required");
    const auto rx = average_ranks(x);
    const auto ry = average_ranks(y);
    return pearson(rx, ry);
}

double roc_auc(std::span<const double> pos, std::span<const double> neg) {
    if (pos.empty() || neg.empty()) fail(ErrorKind::data, "roc_auc: both classes must be non-empty");
    std::vector<double> all(pos.begin(), pos.end());
    all.insert(all.end(), neg.begin(), neg.end());
    const auto ranks = average_ranks(all);
    double rank_sum = 0.0;
    for (std::size_t k = 0; k < pos.size(); ++k) rank_sum += ranks[k];
    const double np = static_cast<double>(pos.size());
    const double nn = static_cast<double>(neg.size());
    const double u = rank_sum - np * (np + 1.0) / 2.0;
    return u / (np * nn);
}

double grouped_roc_auc(std::span<const double> scores, std::span<const std::uint8_t> is_positive,
                       std::span<const std::int64_t> groups) {
    if (scores.size() != is_positive.size() || scores.size() != groups.size()) {
        fail(ErrorKind::data, "grouped_roc_auc: length mismatch");
    }
    std::map<std::int64_t, std::pair<std::vector<double>, std::vector<double>>> by_group;
    for (std::size_t k = 0; k < scores.size(); ++k) {
        auto& slot = by_group[groups[k]];
        (is_positive[k] ? slot.first : slot.second).push_back(scores[k]);
    }
    double sum = 0.0;
    std::size_t used = 0;
    for (const auto& [group, sides] : by_group) {
        if (sides.first.empty() || sides.second.empty()) continue;
        sum += roc_auc(sides.first, sides.second);
        ++used;
    }
    if (used == 0) fail(ErrorKind::data, "grouped_roc_auc: no group has both classes");
    return sum / static_cast<double>(used);
}

nlohmann::ordered_json to_json(const EvalReport& report) {
    nlohmann::ordered_json doc;
    doc["n"] = report.n;
    auto put = [&](const char* key, const std::optional<double>& v) {
        if (v) doc[key] = *v;
    };
    put("mse", report.mse);
    put("pearson", report.pearson);
    put("spearman", report.spearman);
    put("roc_auc", report.roc_auc);
    put("grouped_roc_auc", report.grouped_roc_auc);
    put("spearman_annotation", report.spearman_annotation);
    put("mean_abs_score", report.mean_abs_score);
    return doc;
}

EvalReport report_from_json(const nlohmann::json& doc) {
    EvalReport r;
    r.n = doc.at("n").get<std::size_t>();
    auto get = [&](const char* key, std::optional<double>& v) {
        if (doc.contains(key)) v = doc.at(key).get<double>();
    };
    get("mse", r.mse);
    get("pearson", r.pearson);
    get("spearman", r.spearman);
    get("roc_auc", r.roc_auc);
    get("grouped_roc_auc", r.grouped_roc_auc);
    get("spearman_annotation", r.spearman_annotation);
    get("mean_abs_score", r.mean_abs_score);
    return r;
}

std::string format_table(const EvalReport& report) {
    std::string out = fmt::format("{:<22}{:>12}\n", "metric", "value");
    out += fmt::format("{:<22}{:>12}\n", "n", report.n);
    auto row = [&](const char* name, const std::optional<double>& v) {
        if (v) out += fmt::format("{:<22}{:>12.6f}\n", name, *v);
    };
    row("mse", report.mse);
    row("pearson", report.pearson);
    row("spearman", report.spearman);
    row("roc_auc", report.roc_auc);
    row("grouped_roc_auc", report.grouped_roc_auc);
    row("spearman_annotation", report.spearman_annotation);
    row("mean_abs_score", report.mean_abs_score);
    return out;
}

MeanStd mean_std(std::span<const double> values) {
    if (values.empty()) fail(ErrorKind::data, "mean_std: empty input");
    const double n = static_cast<double>(values.size());
    const double m = std::accumulate(values.begin(), values.end(), 0.0) / n;
    double ss = 0.0;
    for (double v : values) ss += (v - m) * (v - m);
    return {m, std::sqrt(ss / n)};
}

}  // namespace pmilab
