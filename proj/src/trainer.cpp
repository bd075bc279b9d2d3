#include "pmilab/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "pmilab/objectives.hpp"
#include "pmilab/rng.hpp"

namespace pmilab {

std::string_view to_string(ValMetric metric) { return metric == ValMetric::mse ? "mse" : "roc_auc"; }

std::string_view to_string(Metric metric) {
    switch (metric) {
        case Metric::mse: return "mse";
        case Metric::pearson: return "pearson";
        case Metric::spearman: return "spearman";
        case Metric::roc_auc: return "roc_auc";
        case Metric::grouped_roc_auc: return "grouped_roc_auc";
        case Metric::spearman_annotation: return "spearman_annotation";
        case Metric::mean_abs_score: return "mean_abs_score";
    }
    return "unknown";
}

Metric parse_metric(std::string_view text) {
    for (Metric m : {Metric::mse, Metric::pearson, Metric::spearman, Metric::roc_auc,
                     Metric::grouped_roc_auc, Metric::spearman_annotation, Metric::mean_abs_score}) {
        if (to_string(m) == text) return m;
    }
    fail(ErrorKind::usage, "unknown metric '" + std::string(text) + "'");
}

namespace {

// Positives and, per (positive, round), the rows of their negatives.
struct TrainIndex {
    std::vector<std::size_t> positives;
    int rounds = 0;
    // negatives[round][p] -> row indices into the dataset
    std::vector<std::vector<std::vector<std::size_t>>> negatives;
};

TrainIndex index_training_set(const Dataset& data, int neg_per_pos) {
    TrainIndex idx;
    std::map<std::int64_t, std::size_t> position_of_group;
    for (std::size_t r = 0; r < data.size(); ++r) {
        if (data[r].label != Label::positive) continue;
        const std::int64_t group = data[r].group.value_or(static_cast<std::int64_t>(r));
        if (!position_of_group.emplace(group, idx.positives.size()).second) {
            fail(ErrorKind::data, "two positives share group " + std::to_string(group));
        }
        idx.positives.push_back(r);
    }
    if (idx.positives.empty()) fail(ErrorKind::data, "training set has no positives");

    for (const auto& pair : data) {
        if (pair.label == Label::negative) idx.rounds = std::max(idx.rounds, pair.round + 1);
    }
    if (idx.rounds == 0) fail(ErrorKind::data, "training set has no negatives");
    idx.negatives.assign(idx.rounds, std::vector<std::vector<std::size_t>>(idx.positives.size()));
    for (std::size_t r = 0; r < data.size(); ++r) {
        const auto& pair = data[r];
        if (pair.label != Label::negative) continue;
        if (!pair.group) fail(ErrorKind::data, "negative at record " + std::to_string(r) + " has no group");
        auto it = position_of_group.find(*pair.group);
        if (it == position_of_group.end()) {
            fail(ErrorKind::data, "negative at record " + std::to_string(r) + " names unknown group " +
                                      std::to_string(*pair.group));
        }
        if (pair.round < 0) fail(ErrorKind::data, "negative round must be non-negative");
        idx.negatives[pair.round][it->second].push_back(r);
    }
    for (int round = 0; round < idx.rounds; ++round) {
        for (std::size_t p = 0; p < idx.positives.size(); ++p) {
            const auto have = idx.negatives[round][p].size();
            if (have != static_cast<std::size_t>(neg_per_pos)) {
                fail(ErrorKind::data, fmt::format("positive {} has {} negatives in round {}, expected {}",
                                                  p, have, round, neg_per_pos));
            }
        }
    }
    return idx;
}

ValMetric choose_val_metric(const Dataset& val) {
    bool any_pos = false;
    bool all_targets = true;
    for (const auto& pair : val) {
        if (pair.label != Label::positive) continue;
        any_pos = true;
        all_targets = all_targets && pair.target_pmi.has_value();
    }
    if (!any_pos) fail(ErrorKind::data, "validation set has no positives");
    return all_targets ? ValMetric::mse : ValMetric::roc_auc;
}

bool improves(ValMetric metric, double candidate, const std::optional<double>& best) {
    if (!best) return true;
    return metric == ValMetric::mse ? candidate < *best : candidate > *best;
}

std::vector<double> flatten(const Dataset& data) {
    std::vector<double> flat;
    if (data.empty()) return flat;
    flat.reserve(data.size() * data.front().vector.size());
    for (const auto& pair : data) flat.insert(flat.end(), pair.vector.begin(), pair.vector.end());
    return flat;
}

}  // namespace

double validation_metric(const ScorerParams& params, const Dataset& val_set, ValMetric metric) {
    const auto report = evaluate(params, val_set, {metric == ValMetric::mse ? Metric::mse : Metric::roc_auc});
    return metric == ValMetric::mse ? *report.mse : *report.roc_auc;
}

TrainState train(const Dataset& train_set, const Dataset& val_set, const TrainConfig& config) {
    validate(config);
    if (!is_trainable(config.objective)) {
        fail(ErrorKind::usage, "objective " + to_string(config.objective) + " is evaluation-only");
    }
    const std::size_t d = validate_dataset(train_set);
    if (d == 0) fail(ErrorKind::data, "training set is empty");
    if (validate_dataset(val_set) != d) fail(ErrorKind::data, "validation set dimension differs from training set");

    TrainState state;
    state.metric = choose_val_metric(val_set);
    {
        Rng init_rng = Rng::child(config.seed, 0x696e6974ULL);
        state.params = init_params(d, init_rng, static_cast<std::size_t>(config.hidden1),
                                   static_cast<std::size_t>(config.hidden2), config.softcap);
    }
    state.adam = AdamState::for_params(state.params);
    state.best_params = state.params;
    if (config.epochs == 0) return state;

    const TrainIndex idx = index_training_set(train_set, config.neg_per_pos);
    const double lr = learning_rate(static_cast<long>(d), config.base_lr_numerator);
    const std::size_t per = static_cast<std::size_t>(config.neg_per_pos);
    Rng shuffle_rng = Rng::child(config.seed, 0x73687566ULL);

    std::vector<std::size_t> order(idx.positives.size());
    std::vector<double> inputs;
    ActivationTape tape;
    ScorerParams grads = ScorerParams::zeros(d, state.params.h1, state.params.h2, config.softcap);
    int since_best = 0;

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        const int round = static_cast<int>(static_cast<long long>(epoch) * config.rounds / config.epochs);
        const int data_round = round % idx.rounds;
        state.round = round;
        for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
        for (std::size_t k = order.size(); k > 1; --k) std::swap(order[k - 1], order[shuffle_rng.below(k)]);

        double loss_sum = 0.0;
        std::size_t batches = 0;
        std::size_t scored = 0;
        for (std::size_t start = 0; start < order.size(); start += config.batch_positives) {
            const std::size_t end = std::min(order.size(), start + config.batch_positives);
            const std::size_t b = end - start;
            inputs.clear();
            inputs.reserve(b * (1 + per) * d);
            for (std::size_t k = start; k < end; ++k) {
                const auto& v = train_set[idx.positives[order[k]]].vector;
                inputs.insert(inputs.end(), v.begin(), v.end());
            }
            for (std::size_t k = start; k < end; ++k) {
                for (std::size_t row : idx.negatives[data_round][order[k]]) {
                    const auto& v = train_set[row].vector;
                    inputs.insert(inputs.end(), v.begin(), v.end());
                }
            }
            const std::vector<double> scores = forward_batch(state.params, inputs, tape);
            scored += scores.size();

            ScoreBatch batch;
            batch.pos.assign(scores.begin(), scores.begin() + static_cast<std::ptrdiff_t>(b));
            batch.neg.assign(scores.begin() + static_cast<std::ptrdiff_t>(b), scores.end());
            batch.negs_per_pos = per;
            const LossResult loss = objective_loss(config.objective, batch);
            if (!std::isfinite(loss.loss) || std::abs(loss.loss) > kDivergenceLimit) {
                throw DivergedError(fmt::format("diverged: loss {} at epoch {}", loss.loss, epoch), state);
            }

            std::vector<double> dscores(loss.pos_grad);
            dscores.insert(dscores.end(), loss.neg_grad.begin(), loss.neg_grad.end());
            for (auto t : grads.tensors()) std::fill(t.begin(), t.end(), 0.0);
            backward_batch(state.params, tape, dscores, grads);
            try {
                adamw_step(state.params, grads, state.adam, lr);
            } catch (const Error& e) {
                throw DivergedError(fmt::format("{} at epoch {}", e.what(), epoch), state);
            }
            loss_sum += loss.loss;
            ++batches;
        }

        if (!all_finite(state.params)) {
            throw DivergedError(fmt::format("diverged: non-finite parameters at epoch {}", epoch), state);
        }
        const double val = validation_metric(state.params, val_set, state.metric);
        state.epoch = epoch + 1;
        state.history.push_back({epoch, round, loss_sum / static_cast<double>(batches), val, scored});
        spdlog::debug("epoch {} round {} loss {:.6f} val {} {:.6f}", epoch, round,
                      loss_sum / static_cast<double>(batches), to_string(state.metric), val);
        if (improves(state.metric, val, state.best_val_metric)) {
            state.best_val_metric = val;
            state.best_epoch = epoch;
            state.best_params = state.params;
            since_best = 0;
        } else if (config.patience > 0 && ++since_best >= config.patience) {
            break;
        }
    }
    return state;
}

std::set<Metric> default_metrics(const Dataset& eval_set) {
    bool pos = false, neg = false, targets = true, annotations = false, varied = false;
    std::optional<double> first_target;
    for (const auto& pair : eval_set) {
        if (pair.label == Label::positive) {
            pos = true;
            targets = targets && pair.target_pmi.has_value();
            if (pair.target_pmi) {
                if (!first_target) first_target = pair.target_pmi;
                varied = varied || *pair.target_pmi != *first_target;
            }
            annotations = annotations || pair.annotation.has_value();
        } else {
            neg = true;
        }
    }
    std::set<Metric> metrics;
    if (pos && targets) metrics.insert({Metric::mse, Metric::mean_abs_score});
    // Correlations are undefined against a constant target.
    if (pos && targets && varied) metrics.insert({Metric::pearson, Metric::spearman});
    if (pos && neg) metrics.insert(Metric::roc_auc);
    if (annotations) metrics.insert(Metric::spearman_annotation);
    return metrics;
}

EvalReport evaluate_scores(std::span<const double> scores, const Dataset& eval_set,
                           const std::set<Metric>& metrics) {
    if (eval_set.empty()) fail(ErrorKind::data, "evaluation set is empty");
    if (scores.size() != eval_set.size()) fail(ErrorKind::data, "one score per evaluation record required");
    EvalReport report;
    report.n = eval_set.size();
    if (metrics.empty()) return report;

    std::vector<double> pos_scores, neg_scores;
    for (std::size_t k = 0; k < eval_set.size(); ++k) {
        (eval_set[k].label == Label::positive ? pos_scores : neg_scores).push_back(scores[k]);
    }

    auto targets = [&](const char* metric) {
        std::vector<double> pred, target;
        for (std::size_t k = 0; k < eval_set.size(); ++k) {
            if (eval_set[k].label != Label::positive) continue;
            if (!eval_set[k].target_pmi) {
                fail(ErrorKind::data, std::string(metric) + " requires field target_pmi on every positive");
            }
            pred.push_back(scores[k]);
            target.push_back(*eval_set[k].target_pmi);
        }
        if (pred.empty()) fail(ErrorKind::data, std::string(metric) + " requires positives");
        return std::pair{pred, target};
    };

    if (metrics.contains(Metric::mse)) {
        auto [p, t] = targets("mse");
        report.mse = mse(p, t);
    }
    // Constant predictions (an untrained scorer, say) leave correlations
    // undefined; they are left out of the report rather than failing it.
    auto correlate = [](const char* name, auto fn, std::span<const double> p, std::span<const double> t) {
        std::optional<double> out;
        try {
            out = fn(p, t);
        } catch (const Error& e) {
            spdlog::warn("{} omitted: {}", name, e.what());
        }
        return out;
    };
    if (metrics.contains(Metric::pearson)) {
        auto [p, t] = targets("pearson");
        report.pearson = correlate("pearson", pearson, p, t);
    }
    if (metrics.contains(Metric::spearman)) {
        auto [p, t] = targets("spearman");
        report.spearman = correlate("spearman", spearman, p, t);
    }
    if (metrics.contains(Metric::mean_abs_score)) {
        if (pos_scores.empty()) fail(ErrorKind::data, "mean_abs_score requires positives");
        double sum = 0.0;
        for (double s : pos_scores) sum += std::abs(s);
        report.mean_abs_score = sum / static_cast<double>(pos_scores.size());
    }
    if (metrics.contains(Metric::roc_auc)) {
        if (pos_scores.empty() || neg_scores.empty()) fail(ErrorKind::data, "roc_auc requires field label with both classes");
        report.roc_auc = roc_auc(pos_scores, neg_scores);
    }
    if (metrics.contains(Metric::grouped_roc_auc)) {
        std::vector<std::uint8_t> is_pos;
        std::vector<std::int64_t> groups;
        for (const auto& pair : eval_set) {
            if (!pair.group) fail(ErrorKind::data, "grouped_roc_auc requires field group");
            is_pos.push_back(pair.label == Label::positive ? 1 : 0);
            groups.push_back(*pair.group);
        }
        report.grouped_roc_auc = grouped_roc_auc(scores, is_pos, groups);
    }
    if (metrics.contains(Metric::spearman_annotation)) {
        std::vector<double> pred, human;
        for (std::size_t k = 0; k < eval_set.size(); ++k) {
            if (eval_set[k].label == Label::positive && eval_set[k].annotation) {
                pred.push_back(scores[k]);
                human.push_back(*eval_set[k].annotation);
            }
        }
        if (pred.size() < 2) fail(ErrorKind::data, "spearman_annotation requires field annotation on positives");
        report.spearman_annotation = correlate("spearman_annotation", spearman, pred, human);
    }
    return report;
}

EvalReport evaluate(const ScorerParams& params, const Dataset& eval_set, const std::set<Metric>& metrics) {
    if (eval_set.empty()) fail(ErrorKind::data, "evaluation set is empty");
    if (validate_dataset(eval_set) != params.d) {
        fail(ErrorKind::data, fmt::format("evaluation data has dimension {} but the scorer expects {}",
                                          eval_set.front().vector.size(), params.d));
    }
    // Bounded chunks keep the activation tape small.
    constexpr std::size_t kChunk = 4096;
    std::vector<double> scores;
    scores.reserve(eval_set.size());
    for (std::size_t start = 0; start < eval_set.size(); start += kChunk) {
        const std::size_t end = std::min(eval_set.size(), start + kChunk);
        const Dataset chunk(eval_set.begin() + static_cast<std::ptrdiff_t>(start),
                            eval_set.begin() + static_cast<std::ptrdiff_t>(end));
        const auto s = score_batch(params, flatten(chunk));
        scores.insert(scores.end(), s.begin(), s.end());
    }
    return evaluate_scores(scores, eval_set, metrics);
}

MethodRun run_method(const std::string& method, const DatasetSplits& data, const TrainConfig& config,
                     const std::set<Metric>& metrics, const KdeRunOptions& kde_options) {
    MethodRun run;
    if (method == "kde" || method == "kde-joint") {
        const std::size_t d = validate_dataset(data.train);
        if (d == 0) fail(ErrorKind::data, "training set is empty");
        std::vector<double> pos, neg;
        for (const auto& pair : data.train) {
            auto& dst = pair.label == Label::positive ? pos : neg;
            if (pair.label == Label::negative && pair.round != 0) continue;
            dst.insert(dst.end(), pair.vector.begin(), pair.vector.end());
        }
        std::vector<double> scores;
        scores.reserve(data.test.size());
        if (method == "kde") {
            const KdeModel model = kde_fit(pos, neg, d, kde_options.kde);
            for (const auto& pair : data.test) scores.push_back(kde_score(model, pair.vector));
        } else {
            if (!data.ctx_dim) fail(ErrorKind::usage, "kde-joint needs the context width of the embedding");
            const KdeJointModel model = kde_fit_joint(pos, d, *data.ctx_dim, kde_options.kde.bandwidth);
            for (const auto& pair : data.test) scores.push_back(kde_score(model, pair.vector));
        }
        run.report = evaluate_scores(scores, data.test, metrics);
        return run;
    }

    TrainConfig cfg = config;
    cfg.objective = parse_objective(method);
    TrainState state = train(data.train, data.val, cfg);
    run.report = evaluate(state.best_params, data.test, metrics);
    run.state = std::move(state);
    return run;
}

std::optional<std::size_t> ComparisonTable::best(std::size_t dataset, Metric metric) const {
    const bool lower = metric == Metric::mse || metric == Metric::mean_abs_score;
    std::optional<std::size_t> best_idx;
    double best_val = 0.0;
    for (std::size_t m = 0; m < methods.size(); ++m) {
        const auto& cell = cells[dataset][m];
        if (!cell) continue;
        auto it = cell->values.find(metric);
        if (it == cell->values.end()) continue;
        const double v = it->second.mean;
        if (!best_idx || (lower ? v < best_val : v > best_val)) {
            best_idx = m;
            best_val = v;
        }
    }
    return best_idx;
}

ComparisonTable compare(const CompareRequest& request) {
    if (request.methods.empty()) fail(ErrorKind::usage, "compare needs at least one method");
    if (request.seeds.empty()) fail(ErrorKind::usage, "compare needs at least one seed");
    ComparisonTable table;
    table.methods = request.methods;
    table.metrics = request.metrics;
    const std::set<Metric> wanted(request.metrics.begin(), request.metrics.end());

    for (const auto& [name, build] : request.datasets) {
        table.datasets.push_back(name);
        std::vector<std::map<Metric, std::vector<double>>> values(request.methods.size());
        std::vector<std::vector<std::string>> failures(request.methods.size());
        std::vector<std::size_t> runs(request.methods.size(), 0);
        for (std::uint64_t seed : request.seeds) {
            std::optional<DatasetSplits> data;
            try {
                data = build(seed);
            } catch (const std::exception& e) {
                for (auto& f : failures) f.push_back(fmt::format("seed {}: {}", seed, e.what()));
                continue;
            }
            for (std::size_t m = 0; m < request.methods.size(); ++m) {
                TrainConfig cfg = request.config;
                cfg.seed = seed;
                try {
                    const MethodRun run = run_method(request.methods[m], *data, cfg, wanted, request.kde);
                    const auto doc = to_json(run.report);
                    for (Metric metric : request.metrics) {
                        const auto key = std::string(to_string(metric));
                        if (doc.contains(key)) values[m][metric].push_back(doc.at(key).get<double>());
                    }
                    ++runs[m];
                } catch (const std::exception& e) {
                    spdlog::warn("compare: {} / {} / seed {} failed: {}", name, request.methods[m], seed, e.what());
                    failures[m].push_back(fmt::format("seed {}: {}", seed, e.what()));
                }
            }
        }
        auto& row = table.cells.emplace_back(request.methods.size());
        for (std::size_t m = 0; m < request.methods.size(); ++m) {
            if (runs[m] == 0) continue;
            ComparisonCell cell;
            cell.runs = runs[m];
            cell.failures = failures[m];
            for (const auto& [metric, vs] : values[m]) cell.values[metric] = mean_std(vs);
            row[m] = std::move(cell);
        }
    }
    return table;
}

nlohmann::ordered_json to_json(const ComparisonTable& table) {
    nlohmann::ordered_json doc;
    doc["methods"] = table.methods;
    std::vector<std::string> metric_names;
    for (Metric m : table.metrics) metric_names.emplace_back(to_string(m));
    doc["metrics"] = metric_names;
    doc["rows"] = nlohmann::ordered_json::array();
    for (std::size_t d = 0; d < table.datasets.size(); ++d) {
        nlohmann::ordered_json row;
        row["dataset"] = table.datasets[d];
        row["cells"] = nlohmann::ordered_json::object();
        for (std::size_t m = 0; m < table.methods.size(); ++m) {
            const auto& cell = table.cells[d][m];
            if (!cell) {
                row["cells"][table.methods[m]] = nullptr;
                continue;
            }
            nlohmann::ordered_json c;
            c["runs"] = cell->runs;
            for (Metric metric : table.metrics) {
                auto it = cell->values.find(metric);
                if (it == cell->values.end()) continue;
                const auto best = table.best(d, metric);
                c[std::string(to_string(metric))] = {{"mean", it->second.mean},
                                                     {"std", it->second.std},
                                                     {"best", best && *best == m}};
            }
            if (!cell->failures.empty()) c["failures"] = cell->failures;
            row["cells"][table.methods[m]] = c;
        }
        doc["rows"].push_back(row);
    }
    return doc;
}

std::string format_table(const ComparisonTable& table) {
    constexpr int kCol = 18;
    std::string header = fmt::format("{:<14}", "dataset");
    std::string sub = fmt::format("{:<14}", "");
    for (const auto& method : table.methods) {
        for (Metric metric : table.metrics) {
            header += fmt::format("{:>{}}", method, kCol);
            sub += fmt::format("{:>{}}", to_string(metric), kCol);
        }
    }
    std::string out = header + "\n" + sub + "\n";
    for (std::size_t d = 0; d < table.datasets.size(); ++d) {
        std::string line = fmt::format("{:<14}", table.datasets[d]);
        for (std::size_t m = 0; m < table.methods.size(); ++m) {
            for (Metric metric : table.metrics) {
                const auto& cell = table.cells[d][m];
                std::string text = "missing";
                if (cell) {
                    auto it = cell->values.find(metric);
                    if (it != cell->values.end()) {
                        const auto best = table.best(d, metric);
                        text = fmt::format("{}{:.3f} ({:.3f})", best && *best == m ? "*" : "",
                                           it->second.mean, it->second.std);
                    }
                }
                line += fmt::format("{:>{}}", text, kCol);
            }
        }
        out += line + "\n";
    }
    return out;
}

}  // namespace pmilab
