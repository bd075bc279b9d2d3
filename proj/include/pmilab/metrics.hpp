#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace pmilab {

double mse(std::span<const double> pred, std::span<const double> target);

/// Sample correlation coefficient; throws on zero variance.
double pearson(std::span<const double> x, std::span<const double> y);

/// 1-based ranks; tied values share the mean of their positions.
std::vector<double> average_ranks(std::span<const double> values);

/// Pearson correlation of average ranks.
double spearman(std::span<const double> x, std::span<const double> y);

/// Probability that a random positive outscores a random negative, ties
/// counting one half. O((P + N) log(P + N)) via the rank sum.
double roc_auc(std::span<const double> pos, std::span<const double> neg);

/// Mean over groups of the per-group AUC (each positive against its own
/// negatives). Groups lacking either side are skipped.
double grouped_roc_auc(std::span<const double> scores, std::span<const std::uint8_t> is_positive,
                       std::span<const std::int64_t> groups);

struct EvalReport {
    std::size_t n = 0;
    std::optional<double> mse;
    std::optional<double> pearson;
    std::optional<double> spearman;
    std::optional<double> roc_auc;
    std::optional<double> grouped_roc_auc;
    /// Spearman against the human annotation column.
    std::optional<double> spearman_annotation;
    std::optional<double> mean_abs_score;
};

nlohmann::ordered_json to_json(const EvalReport& report);
EvalReport report_from_json(const nlohmann::json& doc);

/// Two-column "metric  value" table.
std::string format_table(const EvalReport& report);

struct MeanStd {
    double mean = 0.0;
    double std = 0.0;
};

/// Population standard deviation; a single value gives std 0.
MeanStd mean_std(std::span<const double> values);

}  // namespace pmilab
