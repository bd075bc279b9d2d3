#pragma once

#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pmilab/core.hpp"
#include "pmilab/error.hpp"
#include "pmilab/kde.hpp"
#include "pmilab/metrics.hpp"
#include "pmilab/scorer.hpp"

namespace pmilab {

/// Validation metric used for model selection: MSE to the oracle PMI when
/// every validation positive carries one (lower is better), ROC-AUC
/// otherwise (higher is better).
enum class ValMetric { mse, roc_auc };

std::string_view to_string(ValMetric metric);

struct EpochRecord {
    int epoch = 0;
    int round = 0;
    double train_loss = 0.0;
    double val_metric = 0.0;
    std::size_t scored_pairs = 0;
};

struct TrainState {
    ScorerParams params;
    AdamState adam;
    int epoch = 0;
    int round = 0;
    ValMetric metric = ValMetric::mse;
    std::optional<double> best_val_metric;
    int best_epoch = -1;
    ScorerParams best_params;
    std::vector<EpochRecord> history;
};

/// Thrown when the loss or gradients blow up; carries the state as of the
/// last completed epoch.
class DivergedError : public Error {
public:
    DivergedError(const std::string& what, TrainState last_good)
        : Error(ErrorKind::divergence, what), last_good_(std::move(last_good)) {}

    const TrainState& last_good() const noexcept { return last_good_; }

private:
    TrainState last_good_;
};

/// Loss magnitude treated as divergence.
inline constexpr double kDivergenceLimit = 1e6;

/// Trains the scorer.
///
/// `train_set` holds positives and their negatives; a negative belongs to
/// the positive with the same `group` and to training round `round`. Every
/// positive must have exactly config.neg_per_pos negatives in each round
/// present. Epochs are divided evenly across config.rounds rounds; round r
/// uses the negatives tagged r (modulo the rounds available).
///
/// Each epoch shuffles the positives into batches of batch_positives, scores
/// each positive together with its negatives, applies the objective and
/// takes one AdamW step per batch at lr = learning_rate(d). After every
/// epoch the validation metric is computed and best_params tracked.
TrainState train(const Dataset& train_set, const Dataset& val_set, const TrainConfig& config);

enum class Metric { mse, pearson, spearman, roc_auc, grouped_roc_auc, spearman_annotation, mean_abs_score };

std::string_view to_string(Metric metric);
Metric parse_metric(std::string_view text);

/// Metrics against target_pmi (mse, pearson, spearman) and annotation use
/// positives only; AUC metrics use both labels. mean_abs_score is over
/// positives.
EvalReport evaluate_scores(std::span<const double> scores, const Dataset& eval_set,
                           const std::set<Metric>& metrics);

EvalReport evaluate(const ScorerParams& params, const Dataset& eval_set, const std::set<Metric>& metrics);

/// Default metric suite: target-based metrics if targets exist, AUC if both
/// labels exist, annotation Spearman if annotations exist.
std::set<Metric> default_metrics(const Dataset& eval_set);

double validation_metric(const ScorerParams& params, const Dataset& val_set, ValMetric metric);

struct DatasetSplits {
    Dataset train;
    Dataset val;
    Dataset test;
    /// Input columns that belong to the context (for the joint KDE form).
    std::optional<std::size_t> ctx_dim;
};

/// A method is an objective name accepted by parse_objective, "kde"
/// (positive-vs-negative form) or "kde-joint".
struct MethodRun {
    EvalReport report;
    std::optional<TrainState> state;
};

struct KdeRunOptions {
    KdeOptions kde;
};

MethodRun run_method(const std::string& method, const DatasetSplits& data, const TrainConfig& config,
                     const std::set<Metric>& metrics, const KdeRunOptions& kde_options = {});

struct CompareRequest {
    /// Dataset name -> builder from a seed.
    std::vector<std::pair<std::string, std::function<DatasetSplits(std::uint64_t)>>> datasets;
    std::vector<std::string> methods;
    std::vector<std::uint64_t> seeds;
    TrainConfig config;
    std::vector<Metric> metrics;  // reported columns per method
    KdeRunOptions kde;
};

struct ComparisonCell {
    std::map<Metric, MeanStd> values;
    std::size_t runs = 0;
    std::vector<std::string> failures;
};

struct ComparisonTable {
    std::vector<std::string> datasets;
    std::vector<std::string> methods;
    std::vector<Metric> metrics;
    /// cells[dataset][method]; nullopt when every seed failed.
    std::vector<std::vector<std::optional<ComparisonCell>>> cells;

    /// Method index with the best mean for (dataset, metric), if any.
    std::optional<std::size_t> best(std::size_t dataset, Metric metric) const;
};

/// Runs every (dataset, method, seed) cell; failures are recorded in the
/// cell rather than aborting the comparison.
ComparisonTable compare(const CompareRequest& request);

nlohmann::ordered_json to_json(const ComparisonTable& table);

/// Aligned text table: one row per dataset, mean (std) per method and
/// metric, best entries marked with '*'.
std::string format_table(const ComparisonTable& table);

}  // namespace pmilab
