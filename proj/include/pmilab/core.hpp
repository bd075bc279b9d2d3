#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace pmilab {

enum class Label : std::uint8_t { negative = 0, positive = 1 };

/// One (context, response) example. Synthetic pairs carry prototype
/// indices; dialogue pairs carry the id of the dialogue they came from.
struct PairSample {
    std::string context;
    std::string response;
    Label label = Label::positive;
    std::optional<std::int64_t> ctx_index;
    std::optional<std::int64_t> resp_index;
    std::optional<std::string> dialogue_id;
    /// Human relevance annotation, when the corpus provides one.
    std::optional<double> annotation;
};

/// Throws Error(data) when the invariants of PairSample do not hold.
void validate(const PairSample& pair);

/// A pair-level embedding together with its label and bookkeeping.
///
/// `group` ties negatives to the positive they were built from; `round`
/// says which training round a negative belongs to (positives use 0).
struct EmbeddedPair {
    std::vector<double> vector;
    Label label = Label::positive;
    std::optional<double> target_pmi;
    std::optional<std::int64_t> group;
    std::int32_t round = 0;
    std::optional<std::int64_t> ctx_index;
    std::optional<std::int64_t> resp_index;
    std::optional<std::string> dialogue_id;
    std::optional<double> annotation;
};

using Dataset = std::vector<EmbeddedPair>;

/// Throws Error(data) if any vector is non-finite or dimensions disagree.
/// Returns the shared dimension (0 for an empty dataset).
std::size_t validate_dataset(std::span<const EmbeddedPair> data);

enum class FKind { kl, total_variation, pearson_chi2, jensen_shannon, squared_hellinger };

enum class ObjectiveKind { pmiscore, mine, infonce, fdiv };

struct Objective {
    ObjectiveKind kind = ObjectiveKind::pmiscore;
    FKind fkind = FKind::kl;  // only meaningful for fdiv

    friend bool operator==(const Objective&, const Objective&) = default;
};

/// Accepts "pmiscore", "mine", "infonce", "fdiv:<kind>" (for example
/// "fdiv:pearson_chi2").
Objective parse_objective(std::string_view text);
std::string to_string(const Objective& objective);
std::string_view to_string(FKind kind);
FKind parse_fkind(std::string_view text);

struct TrainConfig {
    Objective objective;
    int epochs = 100;
    int batch_positives = 256;
    int neg_per_pos = 4;
    int rounds = 1;
    double base_lr_numerator = 1e-3 * 1024.0;
    std::uint64_t seed = 42;
    double softcap = 20.0;
    /// Epochs without validation improvement before stopping; 0 disables.
    int patience = 0;
    int hidden1 = 256;
    int hidden2 = 128;
};

/// Throws Error(usage) on invalid values.
void validate(const TrainConfig& config);

double mean(std::span<const double> values);

/// log(sum(exp(values))) via the max shift.
double logsumexp(std::span<const double> values);

}  // namespace pmilab
