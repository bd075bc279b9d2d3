#include "pmilab/io.hpp"

#include <fstream>
#include <sstream>

#include "pmilab/error.hpp"

namespace pmilab {

using nlohmann::json;
using nlohmann::ordered_json;

ordered_json to_json(const EmbeddedPair& pair) {
    ordered_json r;
    r["vector"] = pair.vector;
    r["label"] = pair.label == Label::positive ? 1 : 0;
    if (pair.target_pmi) r["target_pmi"] = *pair.target_pmi;
    if (pair.ctx_index) r["i"] = *pair.ctx_index;
    if (pair.resp_index) r["j"] = *pair.resp_index;
    if (pair.group) r["group"] = *pair.group;
    r["round"] = pair.round;
    if (pair.dialogue_id) r["dialogue_id"] = *pair.dialogue_id;
    if (pair.annotation) r["annotation"] = *pair.annotation;
    return r;
}

EmbeddedPair pair_from_json(const json& r) {
    EmbeddedPair p;
    p.vector = r.at("vector").get<std::vector<double>>();
    const int label = r.at("label").get<int>();
    if (label != 0 && label != 1) fail(ErrorKind::data, "label must be 0 or 1");
    p.label = label == 1 ? Label::positive : Label::negative;
    if (r.contains("target_pmi")) p.target_pmi = r.at("target_pmi").get<double>();
    if (r.contains("i")) p.ctx_index = r.at("i").get<std::int64_t>();
    if (r.contains("j")) p.resp_index = r.at("j").get<std::int64_t>();
    if (r.contains("group")) p.group = r.at("group").get<std::int64_t>();
    if (r.contains("round")) p.round = r.at("round").get<std::int32_t>();
    if (r.contains("dialogue_id")) p.dialogue_id = r.at("dialogue_id").get<std::string>();
    if (r.contains("annotation")) p.annotation = r.at("annotation").get<double>();
    return p;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) fail(ErrorKind::data, "cannot write " + path.string());
        out << text;
        if (!out) fail(ErrorKind::data, "cannot write " + path.string());
    }
    std::filesystem::rename(tmp, path);
}

std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorKind::data, "cannot open " + path.string());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

void write_dataset(const std::filesystem::path& path, const Dataset& data) {
    std::string text;
    for (const auto& pair : data) {
        text += to_json(pair).dump();
        text += '\n';
    }
    write_text(path, text);
}

Dataset read_dataset(const std::filesystem::path& path) {
    const std::string text = read_text(path);
    Dataset data;
    std::size_t line_no = 0;
    std::size_t start = 0;
    while (start < text.size()) {
        std::size_t end = text.find('\n', start);
        if (end == std::string::npos) end = text.size();
        ++line_no;
        const std::string_view line(text.data() + start, end - start);
        start = end + 1;
        if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
        const json record = json::parse(line, nullptr, false);
        if (record.is_discarded()) {
            fail(ErrorKind::data, path.string() + ":" + std::to_string(line_no) + ": malformed JSON");
        }
        try {
            data.push_back(pair_from_json(record));
        } catch (const json::exception& e) {
            fail(ErrorKind::data, path.string() + ":" + std::to_string(line_no) + ": " + e.what());
        } catch (const Error& e) {
            fail(ErrorKind::data, path.string() + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    validate_dataset(data);
    return data;
}

ordered_json checkpoint_to_json(const ScorerParams& params, const CheckpointMeta& meta) {
    ordered_json doc;
    doc["format_version"] = kCheckpointFormat;
    doc["d"] = params.d;
    doc["widths"] = {params.h1, params.h2};
    doc["cap"] = params.cap;
    doc["optimizer"] = {{"name", "adamw"},
                        {"beta1", meta.beta1},
                        {"beta2", meta.beta2},
                        {"eps", meta.adam_eps},
                        {"weight_decay", meta.weight_decay}};
    doc["seed"] = meta.seed;
    doc["rng"] = meta.rng;
    doc["objective"] = meta.objective;
    doc["kernels"] = meta.kernels;
    doc["val_metric"] = meta.val_metric;
    if (meta.best_val) doc["best_val"] = *meta.best_val;
    if (meta.best_epoch) doc["best_epoch"] = *meta.best_epoch;
    doc["weights"] = {{"w1", params.w1}, {"b1", params.b1}, {"a1", params.a1},
                      {"w2", params.w2}, {"b2", params.b2}, {"a2", params.a2},
                      {"w3", params.w3}, {"b3", params.b3}};
    return doc;
}

Checkpoint checkpoint_from_json(const json& doc) {
    try {
        if (doc.at("format_version").get<int>() != kCheckpointFormat) {
            fail(ErrorKind::data, "unsupported checkpoint format version");
        }
        Checkpoint ck;
        auto& p = ck.params;
        p.d = doc.at("d").get<std::size_t>();
        const auto widths = doc.at("widths").get<std::vector<std::size_t>>();
        if (widths.size() != 2) fail(ErrorKind::data, "checkpoint widths must list two hidden sizes");
        p.h1 = widths[0];
        p.h2 = widths[1];
        p.cap = doc.at("cap").get<double>();
        const auto& w = doc.at("weights");
        p.w1 = w.at("w1").get<std::vector<double>>();
        p.b1 = w.at("b1").get<std::vector<double>>();
        p.a1 = w.at("a1").get<double>();
        p.w2 = w.at("w2").get<std::vector<double>>();
        p.b2 = w.at("b2").get<std::vector<double>>();
        p.a2 = w.at("a2").get<double>();
        p.w3 = w.at("w3").get<std::vector<double>>();
        p.b3 = w.at("b3").get<double>();
        auto expect = [](const std::vector<double>& v, std::size_t n, const char* name) {
            if (v.size() != n) {
                fail(ErrorKind::data, std::string("checkpoint array ") + name + " has " +
                                          std::to_string(v.size()) + " entries, expected " +
                                          std::to_string(n));
            }
        };
        expect(p.w1, p.d * p.h1, "w1");
        expect(p.b1, p.h1, "b1");
        expect(p.w2, p.h1 * p.h2, "w2");
        expect(p.b2, p.h2, "b2");
        expect(p.w3, p.h2, "w3");
        if (!(p.cap > 0.0) || !all_finite(p)) fail(ErrorKind::data, "checkpoint holds invalid values");

        auto& m = ck.meta;
        const auto& opt = doc.at("optimizer");
        m.beta1 = opt.at("beta1").get<double>();
        m.beta2 = opt.at("beta2").get<double>();
        m.adam_eps = opt.at("eps").get<double>();
        m.weight_decay = opt.at("weight_decay").get<double>();
        m.seed = doc.at("seed").get<std::uint64_t>();
        m.rng = doc.value("rng", std::string(Rng::algorithm));
        m.objective = doc.at("objective").get<std::string>();
        m.kernels = doc.value("kernels", std::string());
        m.val_metric = doc.value("val_metric", std::string());
        if (doc.contains("best_val")) m.best_val = doc.at("best_val").get<double>();
        if (doc.contains("best_epoch")) m.best_epoch = doc.at("best_epoch").get<int>();
        return ck;
    } catch (const json::exception& e) {
        fail(ErrorKind::data, std::string("malformed checkpoint: ") + e.what());
    }
}

void save_checkpoint(const std::filesystem::path& path, const ScorerParams& params,
                     const CheckpointMeta& meta) {
    write_text(path, checkpoint_to_json(params, meta).dump(1) + "\n");
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    const json doc = json::parse(read_text(path), nullptr, false);
    if (doc.is_discarded()) fail(ErrorKind::data, path.string() + " is not valid JSON");
    return checkpoint_from_json(doc);
}

}  // namespace pmilab
