#pragma once

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace pmilab {

struct ProviderConfig {
    std::string endpoint;  // e.g. http://localhost:8000/v1/embeddings
    std::string model_name = "stub";
    std::size_t batch_size = 32;
    std::chrono::milliseconds timeout{60000};
    int max_retries = 3;
    /// First retry delay; doubles on each further attempt.
    std::chrono::milliseconds backoff{200};
    std::filesystem::path cache_dir;

    /// Fills endpoint/model from PMILAB_EMBED_ENDPOINT / PMILAB_EMBED_MODEL
    /// when they are set.
    static ProviderConfig from_environment();
};

void validate(const ProviderConfig& config);

/// Turns texts into vectors, one per text and in order.
class EmbeddingProvider {
public:
    virtual ~EmbeddingProvider() = default;
    virtual std::vector<std::vector<double>> embed_batch(std::span<const std::string> texts) = 0;
    virtual std::string model_name() const = 0;
    /// Requests issued so far (including failed attempts).
    virtual std::size_t requests() const = 0;
};

/// Offline provider: a standard normal vector seeded from a hash of the
/// text, so equal texts always map to the same vector.
class StubProvider final : public EmbeddingProvider {
public:
    explicit StubProvider(std::size_t dim = 64, std::string model = "stub");

    std::vector<std::vector<double>> embed_batch(std::span<const std::string> texts) override;
    std::string model_name() const override { return model_; }
    std::size_t requests() const override { return requests_; }

private:
    std::size_t dim_;
    std::string model_;
    std::size_t requests_ = 0;
};

/// HTTP provider speaking the common embeddings schema:
///
///     POST <endpoint>  {"model": "...", "input": ["text", ...]}
///     200              {"data": [{"index": 0, "embedding": [...]}, ...]}
///
/// A bare {"embeddings": [[...], ...]} response is accepted as well.
/// Connection errors, 429 and 5xx responses are retried with exponential
/// backoff; other 4xx responses fail immediately.
class HttpProvider final : public EmbeddingProvider {
public:
    explicit HttpProvider(ProviderConfig config);

    std::vector<std::vector<double>> embed_batch(std::span<const std::string> texts) override;
    std::string model_name() const override { return config_.model_name; }
    std::size_t requests() const override { return requests_; }

private:
    ProviderConfig config_;
    std::string base_;
    std::string path_;
    std::size_t requests_ = 0;
};

/// Parses an embeddings response body; throws Error(data) on a malformed
/// document or a count mismatch.
std::vector<std::vector<double>> parse_embedding_response(const std::string& body,
                                                          std::size_t expected);

/// Content-addressed vector store: one file per key, named by the hex key.
/// Files carry a magic, the dimension, the payload and a checksum, so a
/// truncated or corrupted file reads as a miss.
class EmbeddingCache {
public:
    /// Creates the directory if needed; throws Error(data) if it is not
    /// writable.
    explicit EmbeddingCache(std::filesystem::path dir);

    /// SHA-256 over the model name, a NUL byte and the prompt bytes.
    static std::string key(std::string_view model_name, std::string_view prompt);

    std::optional<std::vector<double>> get(const std::string& key) const;
    void put(const std::string& key, std::span<const double> vector) const;

    const std::filesystem::path& dir() const noexcept { return dir_; }

private:
    std::filesystem::path dir_;
};

struct EmbedStats {
    std::size_t hits = 0;
    std::size_t misses = 0;
    std::size_t requests = 0;
};

/// Embeds prompts in batches of at most batch_size, serving cache hits
/// first. Each completed batch is written to the cache before the next is
/// requested. All vectors must share one dimension.
std::vector<std::vector<double>> embed_prompts(EmbeddingProvider& provider, EmbeddingCache* cache,
                                               std::span<const std::string> prompts,
                                               std::size_t batch_size, EmbedStats* stats = nullptr);

}  // namespace pmilab
