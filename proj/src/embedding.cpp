#include "pmilab/embedding.hpp"

#include <httplib.h>
#include <openssl/evp.h>

#include <array>
#include <bit>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>
#include <thread>

#include "pmilab/error.hpp"
#include "pmilab/rng.hpp"

namespace pmilab {

namespace {

constexpr std::array<char, 4> kCacheMagic{'P', 'M', 'I', 'V'};
constexpr std::uint32_t kCacheVersion = 1;

std::uint64_t fnv1a(const void* data, std::size_t size, std::uint64_t hash = 0xcbf29ce484222325ULL) {
    const auto* bytes = static_cast<const unsigned char*>(data);
    for (std::size_t k = 0; k < size; ++k) {
        hash ^= bytes[k];
        hash *= 0x100000001b3ULL;
    }
    return hash;
}

template <typename T>
void write_le(std::string& out, T value) {
    static_assert(std::endian::native == std::endian::little, "cache files are little-endian");
    char buf[sizeof(T)];
    std::memcpy(buf, &value, sizeof(T));
    out.append(buf, sizeof(T));
}

template <typename T>
bool read_le(std::string_view& in, T& value) {
    if (in.size() < sizeof(T)) return false;
    std::memcpy(&value, in.data(), sizeof(T));
    in.remove_prefix(sizeof(T));
    return true;
}

}  // namespace

ProviderConfig ProviderConfig::from_environment() {
    ProviderConfig config;
    if (const char* endpoint = std::getenv("PMILAB_EMBED_ENDPOINT")) config.endpoint = endpoint;
    if (const char* model = std::getenv("PMILAB_EMBED_MODEL")) config.model_name = model;
    return config;
}

void validate(const ProviderConfig& config) {
    if (config.batch_size < 1) fail(ErrorKind::usage, "batch size must be at least 1");
    if (config.max_retries < 0) fail(ErrorKind::usage, "max_retries must be non-negative");
}

StubProvider::StubProvider(std::size_t dim, std::string model) : dim_(dim), model_(std::move(model)) {
    if (dim_ == 0) fail(ErrorKind::usage, "stub dimension must be positive");
}

std::vector<std::vector<double>> StubProvider::embed_batch(std::span<const std::string> texts) {
    ++requests_;
    std::vector<std::vector<double>> out;
    out.reserve(texts.size());
    for (const auto& text : texts) {
        Rng rng(fnv1a(text.data(), text.size()));
        std::vector<double> v(dim_);
        for (auto& x : v) x = rng.normal();
        out.push_back(std::move(v));
    }
    return out;
}

HttpProvider::HttpProvider(ProviderConfig config) : config_(std::move(config)) {
    validate(config_);
    const std::string& url = config_.endpoint;
    const auto scheme_end = url.find("://");
    if (url.empty() || scheme_end == std::string::npos) {
        fail(ErrorKind::usage, "embedding endpoint must be an http URL, got '" + url + "'");
    }
    const auto path_start = url.find('/', scheme_end + 3);
    base_ = url.substr(0, path_start);
    path_ = path_start == std::string::npos ? "/" : url.substr(path_start);
}

std::vector<std::vector<double>> parse_embedding_response(const std::string& body,
                                                          std::size_t expected) {
    const auto doc = nlohmann::json::parse(body, nullptr, false);
    if (doc.is_discarded() || !doc.is_object()) fail(ErrorKind::data, "embedding response is not a JSON object");
    std::vector<std::vector<double>> out;
    try {
        if (doc.contains("data")) {
            out.resize(doc.at("data").size());
            std::size_t position = 0;
            for (const auto& item : doc.at("data")) {
                const std::size_t idx = item.contains("index") ? item.at("index").get<std::size_t>() : position;
                if (idx >= out.size()) fail(ErrorKind::data, "embedding response index out of range");
                out[idx] = item.at("embedding").get<std::vector<double>>();
                ++position;
            }
        } else if (doc.contains("embeddings")) {
            out = doc.at("embeddings").get<std::vector<std::vector<double>>>();
        } else {
            fail(ErrorKind::data, "embedding response has neither 'data' nor 'embeddings'");
        }
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::data, std::string("malformed embedding response: ") + e.what());
    }
    if (out.size() != expected) {
        fail(ErrorKind::data, "embedding response holds " + std::to_string(out.size()) +
                                  " vectors for " + std::to_string(expected) + " inputs");
    }
    return out;
}

std::vector<std::vector<double>> HttpProvider::embed_batch(std::span<const std::string> texts) {
    const nlohmann::json request = {{"model", config_.model_name},
                                    {"input", std::vector<std::string>(texts.begin(), texts.end())}};
    const std::string body = request.dump();

    httplib::Client client(base_);
    const auto secs = std::chrono::duration_cast<std::chrono::seconds>(config_.timeout);
    const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(config_.timeout - secs);
    client.set_connection_timeout(secs.count(), usecs.count());
    client.set_read_timeout(secs.count(), usecs.count());
    client.set_write_timeout(secs.count(), usecs.count());

    std::string last_error;
    auto delay = config_.backoff;
    for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
        if (attempt > 0) {
            std::this_thread::sleep_for(delay);
            delay *= 2;
        }
        ++requests_;
        auto result = client.Post(path_, body, "application/json");
        if (!result) {
            last_error = "transport error: " + httplib::to_string(result.error());
            continue;
        }
        if (result->status == 200) return parse_embedding_response(result->body, texts.size());
        last_error = "HTTP " + std::to_string(result->status);
        const bool transient = result->status == 429 || result->status >= 500;
        if (!transient) break;
    }
    fail(ErrorKind::data, "embedding request failed after " + std::to_string(config_.max_retries + 1) +
                              " attempt(s): " + last_error);
}

EmbeddingCache::EmbeddingCache(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    const auto probe = dir_ / ".write-probe";
    std::ofstream out(probe, std::ios::binary | std::ios::trunc);
    if (ec || !out) fail(ErrorKind::data, "cache directory " + dir_.string() + " is not writable");
    out.close();
    std::filesystem::remove(probe, ec);
}

std::string EmbeddingCache::key(std::string_view model_name, std::string_view prompt) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int length = 0;
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    const char nul = '\0';
    EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
    EVP_DigestUpdate(ctx, model_name.data(), model_name.size());
    EVP_DigestUpdate(ctx, &nul, 1);
    EVP_DigestUpdate(ctx, prompt.data(), prompt.size());
    EVP_DigestFinal_ex(ctx, digest, &length);
    EVP_MD_CTX_free(ctx);
    static constexpr char kHex[] = "0123456789abcdef";
    std::string hex;
    hex.reserve(2 * length);
    for (unsigned int k = 0; k < length; ++k) {
        hex.push_back(kHex[digest[k] >> 4]);
        hex.push_back(kHex[digest[k] & 0xf]);
    }
    return hex;
}

std::optional<std::vector<double>> EmbeddingCache::get(const std::string& key) const {
    std::ifstream in(dir_ / key, std::ios::binary);
    if (!in) return std::nullopt;
    const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    std::string_view view(bytes);
    if (view.size() < kCacheMagic.size() || !std::equal(kCacheMagic.begin(), kCacheMagic.end(), view.begin())) {
        return std::nullopt;
    }
    view.remove_prefix(kCacheMagic.size());
    std::uint32_t version = 0;
    std::uint64_t dim = 0;
    if (!read_le(view, version) || version != kCacheVersion || !read_le(view, dim)) return std::nullopt;
    if (view.size() != dim * sizeof(double) + sizeof(std::uint64_t)) return std::nullopt;
    const std::uint64_t checksum = fnv1a(view.data(), dim * sizeof(double));
    std::vector<double> v(dim);
    std::memcpy(v.data(), view.data(), dim * sizeof(double));
    view.remove_prefix(dim * sizeof(double));
    std::uint64_t stored = 0;
    read_le(view, stored);
    if (stored != checksum) return std::nullopt;
    return v;
}

void EmbeddingCache::put(const std::string& key, std::span<const double> vector) const {
    std::string bytes(kCacheMagic.begin(), kCacheMagic.end());
    write_le(bytes, kCacheVersion);
    write_le(bytes, static_cast<std::uint64_t>(vector.size()));
    bytes.append(reinterpret_cast<const char*>(vector.data()), vector.size_bytes());
    write_le(bytes, fnv1a(vector.data(), vector.size_bytes()));

    // Write-then-rename keeps readers from seeing a partial file.
    const auto final_path = dir_ / key;
    auto tmp = final_path;
    tmp += ".tmp-" + std::to_string(std::hash<std::thread::id>{}(std::this_thread::get_id()));
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) fail(ErrorKind::data, "cannot write cache entry " + tmp.string());
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        if (!out) fail(ErrorKind::data, "cannot write cache entry " + tmp.string());
    }
    std::filesystem::rename(tmp, final_path);
}

std::vector<std::vector<double>> embed_prompts(EmbeddingProvider& provider, EmbeddingCache* cache,
                                               std::span<const std::string> prompts,
                                               std::size_t batch_size, EmbedStats* stats) {
    if (batch_size < 1) fail(ErrorKind::usage, "batch size must be at least 1");
    EmbedStats local;
    const std::size_t requests_before = provider.requests();
    std::vector<std::vector<double>> out(prompts.size());
    std::vector<std::string> keys(prompts.size());
    std::vector<std::size_t> missing;
    for (std::size_t k = 0; k < prompts.size(); ++k) {
        if (cache) {
            keys[k] = EmbeddingCache::key(provider.model_name(), prompts[k]);
            if (auto hit = cache->get(keys[k])) {
                out[k] = std::move(*hit);
                ++local.hits;
                continue;
            }
        }
        missing.push_back(k);
    }
    local.misses = missing.size();

    std::optional<std::size_t> dim;
    auto check_dim = [&](const std::vector<double>& v) {
        if (!dim) dim = v.size();
        if (v.size() != *dim || v.empty()) {
            fail(ErrorKind::data, "embedding dimension changed from " + std::to_string(*dim) + " to " +
                                      std::to_string(v.size()));
        }
    };
    for (const auto& v : out) {
        if (!v.empty()) check_dim(v);
    }

    for (std::size_t start = 0; start < missing.size(); start += batch_size) {
        const std::size_t end = std::min(missing.size(), start + batch_size);
        std::vector<std::string> batch;
        for (std::size_t k = start; k < end; ++k) batch.push_back(prompts[missing[k]]);
        auto vectors = provider.embed_batch(batch);
        if (vectors.size() != batch.size()) fail(ErrorKind::data, "provider returned the wrong number of vectors");
        for (std::size_t k = start; k < end; ++k) {
            auto& v = vectors[k - start];
            check_dim(v);
            for (double x : v) {
                if (!std::isfinite(x)) fail(ErrorKind::data, "provider returned a non-finite embedding");
            }
            if (cache) cache->put(keys[missing[k]], v);
            out[missing[k]] = std::move(v);
        }
    }
    local.requests = provider.requests() - requests_before;
    if (stats) *stats = local;
    spdlog::debug("embed: {} hit(s), {} miss(es), {} request(s)", local.hits, local.misses, local.requests);
    return out;
}

}  // namespace pmilab
