#include <doctest.h>

#include <filesystem>
#include <map>

#include "pmilab/dialogue_dataset.hpp"
#include "pmilab/error.hpp"

using namespace pmilab;

namespace {

std::vector<Dialogue> small_corpus(int dialogues, int turns) {
    std::vector<Dialogue> out;
    for (int d = 0; d < dialogues; ++d) {
        Dialogue dialogue;
        dialogue.id = "d" + std::to_string(d);
        for (int t = 0; t < turns; ++t) dialogue.turns.push_back("d" + std::to_string(d) + " t" + std::to_string(t));
        dialogue.annotation = 1.0 + d;
        out.push_back(dialogue);
    }
    return out;
}

}  // namespace

TEST_CASE("contexts are clipped from the left on a character boundary") {
    CHECK(clip_context("hello world", 0) == "hello world");
    CHECK(clip_context("hello world", 5) == "world");
    CHECK(clip_context("short", 50) == "short");
    // "\xC3\xA9" is one two-byte character.
    CHECK(clip_context("a\xC3\xA9z", 2) == "z");
    CHECK(clip_context("a\xC3\xA9z", 3) == "\xC3\xA9z");
}

TEST_CASE("dialogue dataset layout") {
    StubProvider provider(8);
    DialogueDatasetOptions options;
    options.fractions = {1.0, 0.0, 0.0};
    const auto data = build_dialogue_dataset(small_corpus(3, 3), provider, nullptr, options);
    CHECK(data.positives == 6);
    CHECK(data.val.empty());
    CHECK(data.test.empty());
    REQUIRE(data.train.size() == 6 * 5);

    std::map<std::int64_t, int> negatives;
    std::size_t annotated = 0;
    for (const auto& e : data.train) {
        CHECK(e.vector.size() == 8);
        CHECK(e.dialogue_id.has_value());
        REQUIRE(e.group.has_value());
        if (e.label == Label::negative) {
            ++negatives[*e.group];
        } else if (e.annotation) {
            ++annotated;
        }
    }
    CHECK(negatives.size() == 6);
    for (const auto& [group, count] : negatives) CHECK(count == 4);
    // Only the last pair of each dialogue carries its annotation.
    CHECK(annotated == 3);
}

TEST_CASE("training rounds and the cache") {
    const auto dir = std::filesystem::temp_directory_path() / "pmilab_dialogue_dataset_cache";
    std::filesystem::remove_all(dir);
    EmbeddingCache cache(dir);
    DialogueDatasetOptions options;
    options.policy = NegativePolicy::dialogue_probabilistic();
    options.policy.rounds = 3;
    options.fractions = {0.5, 0.25, 0.25};

    StubProvider first(4);
    const auto a = build_dialogue_dataset(small_corpus(8, 4), first, &cache, options);
    CHECK(a.stats.requests > 0);
    int max_round = 0;
    for (const auto& e : a.train) max_round = std::max<int>(max_round, e.round);
    CHECK(max_round == 2);
    for (const auto& e : a.val) CHECK(e.round == 0);

    StubProvider second(4);
    const auto b = build_dialogue_dataset(small_corpus(8, 4), second, &cache, options);
    CHECK(b.stats.requests == 0);
    CHECK(second.requests() == 0);
    REQUIRE(a.train.size() == b.train.size());
    for (std::size_t k = 0; k < a.train.size(); ++k) CHECK(a.train[k].vector == b.train[k].vector);
    std::filesystem::remove_all(dir);
}

TEST_CASE("dialogue dataset errors") {
    StubProvider provider(4);
    DialogueDatasetOptions options;
    CHECK_THROWS_AS(build_dialogue_dataset({}, provider, nullptr, options), Error);
    options.policy = NegativePolicy::synthetic_pool();
    CHECK_THROWS_AS(build_dialogue_dataset(small_corpus(4, 3), provider, nullptr, options), Error);
}
