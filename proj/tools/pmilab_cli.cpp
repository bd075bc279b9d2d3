#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <nlohmann/json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "pmilab/dialogue_dataset.hpp"
#include "pmilab/embedding.hpp"
#include "pmilab/error.hpp"
#include "pmilab/ingest.hpp"
#include "pmilab/io.hpp"
#include "pmilab/kernels.hpp"
#include "pmilab/synthetic_dataset.hpp"
#include "pmilab/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;
using namespace pmilab;

namespace {

// Option values shared by several subcommands.
struct NegativeFlags {
    std::string recipe;
    std::optional<int> neg_per_pos;
    std::optional<int> rounds;
    std::optional<int> pool_size;
    std::optional<double> in_dialogue_prob;

    void add(CLI::App& cmd, const std::string& default_recipe) {
        recipe = default_recipe;
        cmd.add_option("--recipe", recipe, "negative preset: flat, pool, dialogue-fixed, dialogue-prob")
            ->capture_default_str();
        cmd.add_option("--neg-per-pos", neg_per_pos, "negatives per positive in each round");
        cmd.add_option("--rounds", rounds, "training rounds of negatives");
        cmd.add_option("--pool-size", pool_size, "negatives pre-drawn per positive (0 = fresh draws)");
        cmd.add_option("--in-dialogue-prob", in_dialogue_prob, "chance a negative comes from the same dialogue");
    }

    NegativePolicy policy() const {
        NegativePolicy p = NegativePolicy::preset(recipe);
        if (pool_size) {
            p.pool_size = *pool_size;
            if (*pool_size > 0) p.per_pos = *pool_size;
        }
        if (neg_per_pos) {
            if (p.pool_size > 0) {
                p.per_round = *neg_per_pos;
            } else {
                p.per_pos = *neg_per_pos;
                p.per_round = *neg_per_pos;
            }
        }
        if (rounds) p.rounds = *rounds;
        if (in_dialogue_prob) {
            p.in_dialogue_prob = *in_dialogue_prob;
            p.one_in_dialogue = false;
        }
        validate(p);
        return p;
    }
};

struct SynthFlags {
    std::string family = "diagonal";
    int k = 20;
    int blocks = 4;
    double eps = 0.05;
    std::size_t n = 5000;
    double noise_sigma = 0.0;
    std::string embed_mode = "onehot_concat";
    int proto_dim = 64;
    std::optional<double> dirichlet_alpha;
    std::vector<double> fractions{0.6, 0.2, 0.2};

    void add(CLI::App& cmd) {
        cmd.add_option("--family", family, "diagonal, block or independent")->capture_default_str();
        cmd.add_option("--K", k, "prototypes per side")->capture_default_str();
        cmd.add_option("--blocks", blocks, "blocks of the block family")->capture_default_str();
        cmd.add_option("--eps", eps, "off-structure probability mass")->capture_default_str();
        cmd.add_option("--n", n, "pairs to sample")->capture_default_str();
        cmd.add_option("--noise-sigma", noise_sigma, "Gaussian noise added to embeddings")->capture_default_str();
        cmd.add_option("--embed-mode", embed_mode, "onehot_concat or gaussian_prototypes")->capture_default_str();
        cmd.add_option("--proto-dim", proto_dim, "prototype dimension (gaussian mode)")->capture_default_str();
        cmd.add_option("--dirichlet-alpha", dirichlet_alpha, "Dirichlet marginals for the independent family");
        cmd.add_option("--fractions", fractions, "train/val/test fractions")->expected(3)->capture_default_str();
    }

    SynthOptions options(const NegativePolicy& policy, std::uint64_t seed) const {
        SynthOptions o;
        o.family = parse_family(family);
        o.k = k;
        o.n_blocks = blocks;
        o.eps = eps;
        o.n = n;
        o.embed.noise_sigma = noise_sigma;
        o.embed.mode = parse_embed_mode(embed_mode);
        o.embed.proto_dim = proto_dim;
        o.embed.seed = seed;
        o.policy = policy;
        o.seed = seed;
        o.fractions = {fractions[0], fractions[1], fractions[2]};
        o.dirichlet_alpha = dirichlet_alpha;
        return o;
    }
};

struct TrainFlags {
    std::string objective = "pmiscore";
    int epochs = 100;
    int batch = 256;
    std::optional<int> neg_per_pos;
    std::optional<int> rounds;
    double lr_numerator = 1e-3 * 1024.0;
    int patience = 0;
    double softcap = 20.0;
    int hidden1 = 256;
    int hidden2 = 128;

    void add(CLI::App& cmd, bool with_objective = true) {
        if (with_objective) {
            cmd.add_option("--objective", objective, "pmiscore, mine, infonce or fdiv:<kind>")->capture_default_str();
        }
        cmd.add_option("--epochs", epochs, "training epochs")->capture_default_str();
        cmd.add_option("--batch", batch, "positives per batch")->capture_default_str();
        cmd.add_option("--neg-per-pos", neg_per_pos, "negatives per positive per round (default: from data)");
        cmd.add_option("--rounds", rounds, "negative rounds to cycle through (default: from data)");
        cmd.add_option("--lr-numerator", lr_numerator, "learning rate is this divided by the input dimension")
            ->capture_default_str();
        cmd.add_option("--patience", patience, "epochs without improvement before stopping (0 = never)")
            ->capture_default_str();
        cmd.add_option("--softcap", softcap, "output cap")->capture_default_str();
        cmd.add_option("--hidden1", hidden1, "first hidden width")->capture_default_str();
        cmd.add_option("--hidden2", hidden2, "second hidden width")->capture_default_str();
    }

    TrainConfig config(const Dataset& train_set, std::uint64_t seed) const {
        TrainConfig c;
        c.objective = parse_objective(objective);
        c.epochs = epochs;
        c.batch_positives = batch;
        c.base_lr_numerator = lr_numerator;
        c.seed = seed;
        c.softcap = softcap;
        c.patience = patience;
        c.hidden1 = hidden1;
        c.hidden2 = hidden2;

        // Negatives per positive and round count follow the data unless given.
        std::size_t positives = 0;
        std::size_t round0 = 0;
        int max_round = 0;
        for (const auto& e : train_set) {
            if (e.label == Label::positive) {
                ++positives;
            } else {
                if (e.round == 0) ++round0;
                max_round = std::max<int>(max_round, e.round);
            }
        }
        c.neg_per_pos = neg_per_pos.value_or(positives > 0 ? static_cast<int>(round0 / positives) : 4);
        c.rounds = rounds.value_or(max_round + 1);
        validate(c);
        return c;
    }
};

struct ProviderFlags {
    std::string endpoint;
    std::string model;
    std::string cache_dir;
    std::size_t batch = 32;
    std::optional<std::size_t> stub_dim;
    int max_retries = 3;
    int timeout_ms = 60000;

    void add(CLI::App& cmd) {
        cmd.add_option("--endpoint", endpoint, "embeddings endpoint URL (empty = offline stub)");
        cmd.add_option("--model", model, "embedding model name");
        cmd.add_option("--cache-dir", cache_dir, "embedding cache directory");
        cmd.add_option("--embed-batch", batch, "texts per embedding request")->capture_default_str();
        cmd.add_option("--stub-dim", stub_dim, "vector size of the offline stub (default 64, or the checkpoint dimension)");
        cmd.add_option("--max-retries", max_retries, "retries per request")->capture_default_str();
        cmd.add_option("--timeout-ms", timeout_ms, "request timeout")->capture_default_str();
    }

    ProviderConfig config() const {
        ProviderConfig c = ProviderConfig::from_environment();
        if (!endpoint.empty()) c.endpoint = endpoint;
        if (!model.empty()) c.model_name = model;
        c.batch_size = batch;
        c.max_retries = max_retries;
        c.timeout = std::chrono::milliseconds(timeout_ms);
        c.cache_dir = cache_dir;
        return c;
    }

    std::unique_ptr<EmbeddingProvider> provider(const ProviderConfig& c, std::size_t default_dim = 64) const {
        if (c.endpoint.empty()) {
            const std::size_t dim = stub_dim.value_or(default_dim);
            spdlog::info("no endpoint configured; using the offline stub ({} dims)", dim);
            return std::make_unique<StubProvider>(dim, c.model_name);
        }
        validate(c);
        return std::make_unique<HttpProvider>(c);
    }
};

std::set<Metric> parse_metrics(const std::vector<std::string>& names) {
    std::set<Metric> out;
    for (const auto& name : names) out.insert(parse_metric(name));
    return out;
}

ordered_json read_meta(const fs::path& dir) {
    const fs::path path = dir / "meta.json";
    if (!fs::exists(path)) return ordered_json::object();
    try {
        return ordered_json::parse(read_text(path));
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::data, path.string() + ": " + e.what());
    }
}

DatasetSplits read_splits(const fs::path& dir) {
    if (!fs::is_directory(dir)) fail(ErrorKind::data, "data directory " + dir.string() + " does not exist");
    DatasetSplits s;
    s.train = read_dataset(dir / "train.jsonl");
    s.val = read_dataset(dir / "val.jsonl");
    if (fs::exists(dir / "test.jsonl")) s.test = read_dataset(dir / "test.jsonl");
    const auto meta = read_meta(dir);
    if (meta.contains("ctx_dim")) s.ctx_dim = meta.at("ctx_dim").get<std::size_t>();
    return s;
}

void write_json(const fs::path& path, const ordered_json& doc) { write_text(path, doc.dump(2) + "\n"); }

// Effective options of the global scope and the subcommand that ran.
std::string config_snapshot(const CLI::App& app, const CLI::App& sub) {
    std::istringstream all(app.config_to_str(true, false));
    const std::string prefix = sub.get_name() + ".";
    std::string out;
    std::string line;
    while (std::getline(all, line)) {
        const auto eq = line.find('=');
        const auto dot = line.find('.');
        const bool global = dot == std::string::npos || (eq != std::string::npos && dot > eq);
        if (global || line.starts_with(prefix)) out += line + "\n";
    }
    return out;
}

ordered_json train_config_json(const TrainConfig& c) {
    ordered_json j;
    j["objective"] = to_string(c.objective);
    j["epochs"] = c.epochs;
    j["batch"] = c.batch_positives;
    j["neg_per_pos"] = c.neg_per_pos;
    j["rounds"] = c.rounds;
    j["lr_numerator"] = c.base_lr_numerator;
    j["seed"] = c.seed;
    j["softcap"] = c.softcap;
    j["patience"] = c.patience;
    j["hidden1"] = c.hidden1;
    j["hidden2"] = c.hidden2;
    return j;
}

CheckpointMeta checkpoint_meta(const TrainState& state, const TrainConfig& config) {
    CheckpointMeta meta;
    meta.seed = config.seed;
    meta.objective = to_string(config.objective);
    meta.beta1 = state.adam.beta1;
    meta.beta2 = state.adam.beta2;
    meta.adam_eps = state.adam.eps;
    meta.weight_decay = state.adam.weight_decay;
    meta.kernels = std::string(kernels::active().name);
    meta.val_metric = std::string(to_string(state.metric));
    meta.best_val = state.best_val_metric;
    if (state.best_epoch >= 0) meta.best_epoch = state.best_epoch;
    return meta;
}

std::string history_jsonl(const TrainState& state) {
    std::string out;
    for (const auto& h : state.history) {
        ordered_json j;
        j["epoch"] = h.epoch;
        j["round"] = h.round;
        j["train_loss"] = h.train_loss;
        j["val_" + std::string(to_string(state.metric))] = h.val_metric;
        j["scored_pairs"] = h.scored_pairs;
        out += j.dump() + "\n";
    }
    return out;
}

void write_scatter(const fs::path& path, const ScorerParams& params, const Dataset& data) {
    std::string out = "# target_pmi\tscore\n";
    for (const auto& e : data) {
        if (e.label != Label::positive || !e.target_pmi) continue;
        out += fmt::format("{:.17g}\t{:.17g}\n", *e.target_pmi, pmis_score(params, e.vector));
    }
    write_text(path, out);
}

// Accepts "name:<family>" presets and data directories.
std::pair<std::string, std::function<DatasetSplits(std::uint64_t)>> dataset_source(
    const std::string& entry, const SynthFlags& base, const NegativePolicy& policy) {
    if (fs::is_directory(entry)) {
        const fs::path dir = entry;
        return {dir.filename().string(), [dir](std::uint64_t) { return read_splits(dir); }};
    }
    SynthFlags flags = base;
    flags.family = entry;
    parse_family(entry);
    return {entry, [flags, policy](std::uint64_t seed) {
                SynthDataset s = generate_synthetic(flags.options(policy, seed));
                DatasetSplits out;
                out.train = std::move(s.train);
                out.val = std::move(s.val);
                out.test = std::move(s.test);
                out.ctx_dim = s.ctx_dim;
                return out;
            }};
}

std::string escape_field(std::string_view text) {
    std::string out;
    for (std::size_t k = 0; k < text.size(); ++k) {
        if (text[k] == '\\' && k + 1 < text.size()) {
            const char next = text[k + 1];
            if (next == 'n') {
                out.push_back('\n');
                ++k;
                continue;
            }
            if (next == 't') {
                out.push_back('\t');
                ++k;
                continue;
            }
            if (next == '\\') {
                out.push_back('\\');
                ++k;
                continue;
            }
        }
        out.push_back(text[k]);
    }
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    auto logger = spdlog::stderr_color_mt("pmilab");
    spdlog::set_default_logger(logger);
    spdlog::set_pattern("[%l] %v");

    CLI::App app{"Pointwise mutual information estimation"};
    app.set_config("--config", "", "TOML or INI file with option values; flags override it");
    app.require_subcommand(1);
    app.fallthrough();
    std::uint64_t seed = 42;
    bool verbose = false;
    std::string kernel_name;
    app.add_option("--seed", seed, "random seed")->capture_default_str();
    app.add_flag("-v,--verbose", verbose, "debug logging");
    app.add_option("--kernels", kernel_name, "force a kernel table (scalar, avx2)");

    // synth
    auto* synth = app.add_subcommand("synth", "sample a synthetic dataset with known PMI");
    SynthFlags synth_flags;
    NegativeFlags synth_neg;
    std::string synth_out = "data";
    synth_flags.add(*synth);
    synth_neg.add(*synth, "flat");
    synth->add_option("--out", synth_out, "output directory")->capture_default_str();

    // embed
    auto* embed = app.add_subcommand("embed", "embed a dialogue corpus");
    std::string corpus;
    std::string corpus_format;
    std::vector<double> embed_fractions{0.6, 0.2, 0.2};
    std::size_t max_chars = 0;
    std::string embed_out = "data";
    ProviderFlags embed_provider;
    NegativeFlags embed_neg;
    embed->add_option("corpus", corpus, "corpus file (.jsonl or .csv)")->required();
    embed->add_option("--format", corpus_format, "jsonl or csv (default: from the extension)");
    embed->add_option("--fractions", embed_fractions, "train/val/test fractions")->expected(3)->capture_default_str();
    embed->add_option("--max-chars", max_chars, "keep only the last N characters of each context (0 = all)")
        ->capture_default_str();
    embed->add_option("--out", embed_out, "output directory")->capture_default_str();
    embed_provider.add(*embed);
    embed_neg.add(*embed, "dialogue-fixed");

    // train
    auto* train_cmd = app.add_subcommand("train", "train a scorer");
    std::string train_data;
    std::string run_dir = "run";
    std::string scatter_out;
    TrainFlags train_flags;
    train_cmd->add_option("--data", train_data, "directory with train/val[/test].jsonl")->required();
    train_cmd->add_option("--out", run_dir, "run directory")->capture_default_str();
    train_flags.add(*train_cmd);

    // eval
    auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint");
    std::string eval_ckpt;
    std::string eval_data;
    std::vector<std::string> eval_metrics;
    std::string eval_out;
    eval_cmd->add_option("--checkpoint", eval_ckpt, "checkpoint file")->required();
    eval_cmd->add_option("--data", eval_data, "embedded dataset file")->required();
    eval_cmd->add_option("--metrics", eval_metrics, "metrics to compute (default: what the data supports)");
    eval_cmd->add_option("--out", eval_out, "report file");
    eval_cmd->add_option("--scatter", scatter_out, "write target/score columns to this file");

    // score
    auto* score_cmd = app.add_subcommand("score", "score (context, response) lines");
    std::string score_ckpt;
    std::string score_input = "-";
    ProviderFlags score_provider;
    score_cmd->add_option("--checkpoint", score_ckpt, "checkpoint file")->required();
    score_cmd->add_option("--input", score_input,
                          "file of 'context<TAB>response' lines, '-' for stdin; \\n in a field is a turn break")
        ->capture_default_str();
    score_provider.add(*score_cmd);

    // compare
    auto* compare_cmd = app.add_subcommand("compare", "compare methods across datasets and seeds");
    std::vector<std::string> compare_datasets{"diagonal", "block", "independent"};
    std::vector<std::string> compare_methods{"pmiscore", "mine", "infonce", "kde"};
    std::vector<std::uint64_t> compare_seeds{1, 2, 3};
    std::vector<std::string> compare_metrics{"mse", "pearson", "spearman"};
    std::string compare_out = "compare";
    SynthFlags compare_synth;
    NegativeFlags compare_neg;
    TrainFlags compare_train;
    compare_cmd->add_option("--datasets", compare_datasets, "synthetic families or data directories")
        ->capture_default_str();
    compare_cmd->add_option("--methods", compare_methods, "objectives, kde or kde-joint")->capture_default_str();
    compare_cmd->add_option("--seeds", compare_seeds, "seeds per cell")->capture_default_str();
    compare_cmd->add_option("--metrics", compare_metrics, "reported metrics")->capture_default_str();
    compare_cmd->add_option("--out", compare_out, "output directory")->capture_default_str();
    compare_synth.add(*compare_cmd);
    compare_train.add(*compare_cmd, false);
    compare_cmd->add_option("--recipe", compare_neg.recipe, "negative preset for synthetic datasets")
        ->default_val("flat");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : static_cast<int>(ErrorKind::usage);
    }
    if (verbose) spdlog::set_level(spdlog::level::debug);

    try {
        if (!kernel_name.empty()) kernels::select(kernel_name);
        spdlog::debug("kernels: {}", kernels::active().name);

        if (*synth) {
            const SynthOptions options = synth_flags.options(synth_neg.policy(), seed);
            const SynthDataset data = generate_synthetic(options);
            const fs::path out = synth_out;
            write_dataset(out / "train.jsonl", data.train);
            write_dataset(out / "val.jsonl", data.val);
            write_dataset(out / "test.jsonl", data.test);
            ordered_json meta;
            meta["family"] = synth_flags.family;
            meta["K"] = synth_flags.k;
            meta["eps"] = synth_flags.eps;
            meta["n"] = synth_flags.n;
            meta["noise_sigma"] = synth_flags.noise_sigma;
            meta["embed_mode"] = std::string(to_string(options.embed.mode));
            meta["seed"] = seed;
            meta["mi"] = data.mi;
            meta["ctx_dim"] = data.ctx_dim;
            write_json(out / "meta.json", meta);
            write_text(out / "config.toml", config_snapshot(app, *synth));
            // Rounding can leave a tiny negative value for independent specs.
            std::cout << fmt::format("MI {:.10f} nats\n", std::max(0.0, data.mi));
            spdlog::info("wrote {} / {} / {} pairs to {}", data.train.size(), data.val.size(), data.test.size(),
                         out.string());
        } else if (*embed) {
            const CorpusFormat format =
                corpus_format.empty() ? guess_corpus_format(corpus) : parse_corpus_format(corpus_format);
            const CorpusLoad load = load_corpus(corpus, format);
            const ProviderConfig config = embed_provider.config();
            auto provider = embed_provider.provider(config);
            std::optional<EmbeddingCache> cache;
            if (!config.cache_dir.empty()) cache.emplace(config.cache_dir);

            DialogueDatasetOptions options;
            options.policy = embed_neg.policy();
            options.fractions = {embed_fractions[0], embed_fractions[1], embed_fractions[2]};
            options.seed = seed;
            options.batch_size = config.batch_size;
            options.max_chars = max_chars;
            const DialogueDataset data =
                build_dialogue_dataset(load.dialogues, *provider, cache ? &*cache : nullptr, options);
            const fs::path out = embed_out;
            write_dataset(out / "train.jsonl", data.train);
            write_dataset(out / "val.jsonl", data.val);
            write_dataset(out / "test.jsonl", data.test);
            ordered_json meta;
            meta["corpus"] = corpus;
            meta["model"] = provider->model_name();
            meta["dialogues"] = load.dialogues.size();
            meta["skipped_records"] = load.skipped;
            meta["positives"] = data.positives;
            meta["seed"] = seed;
            write_json(out / "meta.json", meta);
            write_text(out / "config.toml", config_snapshot(app, *embed));
            std::cout << fmt::format("{} positives embedded\n", data.positives);
        } else if (*train_cmd) {
            const DatasetSplits data = read_splits(train_data);
            const TrainConfig config = train_flags.config(data.train, seed);
            const fs::path out = run_dir;
            write_text(out / "config.toml", config_snapshot(app, *train_cmd));
            ordered_json effective;
            effective["data"] = train_data;
            effective["train"] = train_config_json(config);
            effective["kernels"] = std::string(kernels::active().name);
            write_json(out / "config.json", effective);

            TrainState state;
            try {
                state = train(data.train, data.val, config);
            } catch (const DivergedError& e) {
                const TrainState& last = e.last_good();
                write_text(out / "history.jsonl", history_jsonl(last));
                if (last.best_epoch >= 0) {
                    save_checkpoint(out / "best.ckpt.json", last.best_params, checkpoint_meta(last, config));
                }
                throw;
            }
            write_text(out / "history.jsonl", history_jsonl(state));
            save_checkpoint(out / "best.ckpt.json", state.best_params, checkpoint_meta(state, config));

            const Dataset& held_out = data.test.empty() ? data.val : data.test;
            const EvalReport report = evaluate(state.best_params, held_out, default_metrics(held_out));
            ordered_json doc;
            doc["split"] = data.test.empty() ? "val" : "test";
            doc["best_epoch"] = state.best_epoch;
            doc["epochs_run"] = state.history.size();
            doc["val_metric"] = std::string(to_string(state.metric));
            if (state.best_val_metric) doc["best_val"] = *state.best_val_metric;
            doc["metrics"] = to_json(report);
            write_json(out / "report.json", doc);
            std::cout << format_table(report);
        } else if (*eval_cmd) {
            const Checkpoint ckpt = load_checkpoint(eval_ckpt);
            const Dataset data = read_dataset(eval_data);
            const auto metrics = eval_metrics.empty() ? default_metrics(data) : parse_metrics(eval_metrics);
            const EvalReport report = evaluate(ckpt.params, data, metrics);
            if (!eval_out.empty()) write_json(eval_out, to_json(report));
            if (!scatter_out.empty()) write_scatter(scatter_out, ckpt.params, data);
            std::cout << format_table(report);
        } else if (*score_cmd) {
            const Checkpoint ckpt = load_checkpoint(score_ckpt);
            std::vector<std::string> prompts;
            std::istream* in = &std::cin;
            std::ifstream file;
            if (score_input != "-") {
                file.open(score_input);
                if (!file) fail(ErrorKind::data, "cannot open " + score_input);
                in = &file;
            }
            std::string line;
            std::size_t number = 0;
            while (std::getline(*in, line)) {
                ++number;
                if (!line.empty() && line.back() == '\r') line.pop_back();
                if (line.empty()) continue;
                const auto tab = line.find('\t');
                if (tab == std::string::npos) {
                    fail(ErrorKind::data, fmt::format("{}:{}: expected context<TAB>response", score_input, number));
                }
                prompts.push_back(render_prompt(escape_field(std::string_view(line).substr(0, tab)),
                                                escape_field(std::string_view(line).substr(tab + 1))));
            }
            const ProviderConfig config = score_provider.config();
            auto provider = score_provider.provider(config, ckpt.params.d);
            std::optional<EmbeddingCache> cache;
            if (!config.cache_dir.empty()) cache.emplace(config.cache_dir);
            EmbedStats stats;
            const auto vectors = embed_prompts(*provider, cache ? &*cache : nullptr, prompts, config.batch_size, &stats);
            for (const auto& v : vectors) {
                if (v.size() != ckpt.params.d) {
                    fail(ErrorKind::data, fmt::format("checkpoint expects dimension {} but embeddings have dimension {}",
                                                      ckpt.params.d, v.size()));
                }
                std::cout << fmt::format("{:.10g}\n", pmis_score(ckpt.params, v));
            }
            spdlog::info("scored {} pair(s): {} cache hit(s), {} provider call(s)", vectors.size(), stats.hits,
                         stats.requests);
        } else if (*compare_cmd) {
            const NegativePolicy policy = NegativePolicy::preset(compare_neg.recipe);
            CompareRequest request;
            for (const auto& entry : compare_datasets) request.datasets.push_back(dataset_source(entry, compare_synth, policy));
            request.methods = compare_methods;
            request.seeds = compare_seeds;
            for (const auto& m : compare_metrics) request.metrics.push_back(parse_metric(m));
            // Negatives per positive and rounds come from the first dataset.
            const DatasetSplits probe = request.datasets.front().second(compare_seeds.front());
            request.config = compare_train.config(probe.train, compare_seeds.front());
            const ComparisonTable table = compare(request);
            const fs::path out = compare_out;
            write_json(out / "comparison.json", to_json(table));
            const std::string text = format_table(table);
            write_text(out / "comparison.txt", text);
            write_text(out / "config.toml", config_snapshot(app, *compare_cmd));
            std::cout << text;
        }
    } catch (const Error& e) {
        spdlog::error("{}", e.what());
        return static_cast<int>(e.kind());
    } catch (const std::exception& e) {
        spdlog::error("{}", e.what());
        return static_cast<int>(ErrorKind::data);
    }
    return 0;
}
