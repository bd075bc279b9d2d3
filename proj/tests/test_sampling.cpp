#include <doctest.h>

#include <map>
#include <set>
#include <string>

#include "pmilab/error.hpp"
#include "pmilab/ingest.hpp"
#include "pmilab/sampling.hpp"

using namespace pmilab;

namespace {

std::vector<PairSample> synthetic_positives(std::size_t n) {
    std::vector<PairSample> out;
    for (std::size_t k = 0; k < n; ++k) {
        PairSample s;
        s.context = "c" + std::to_string(k % 7);
        s.response = "r" + std::to_string(k);
        s.ctx_index = static_cast<std::int64_t>(k % 7);
        s.resp_index = static_cast<std::int64_t>(k);
        out.push_back(s);
    }
    return out;
}

std::vector<PairSample> dialogue_positives() {
    std::vector<PairSample> out;
    for (int d = 0; d < 6; ++d) {
        Dialogue dlg{"d" + std::to_string(d), {}, std::nullopt};
        for (int t = 0; t < 5; ++t) dlg.turns.push_back("dialogue " + std::to_string(d) + " turn " + std::to_string(t));
        for (auto& p : build_pairs(dlg)) out.push_back(p);
    }
    return out;
}

}  // namespace

TEST_CASE("distinct_excluding") {
    Rng rng(5);
    for (int trial = 0; trial < 200; ++trial) {
        const auto v = distinct_excluding(20, 7, 19, rng);
        std::set<std::size_t> s(v.begin(), v.end());
        CHECK(s.size() == 19);
        CHECK_FALSE(s.contains(7));
        CHECK(*s.rbegin() < 20);
    }
    CHECK_THROWS_AS(distinct_excluding(5, 1, 5, rng), Error);
}

TEST_CASE("mismatch negatives") {
    const auto pos = synthetic_positives(50);
    Rng rng(2);
    const auto set = mismatch_negatives(pos, 4, rng);
    REQUIRE(set.pairs.size() == 200);
    for (std::size_t k = 0; k < set.pairs.size(); ++k) {
        const std::size_t p = k / 4;
        CHECK(set.positive[k] == p);
        CHECK(set.source[k] != p);
        CHECK(set.pairs[k].context == pos[p].context);
        CHECK(set.pairs[k].response == pos[set.source[k]].response);
        CHECK(set.pairs[k].label == Label::negative);
        CHECK(*set.pairs[k].resp_index == *pos[set.source[k]].resp_index);
    }
    CHECK_THROWS_AS(mismatch_negatives(synthetic_positives(1), 1, rng), Error);
}

TEST_CASE("pool preset yields 15 distinct negatives over 5 rounds of 3") {
    const auto policy = NegativePolicy::synthetic_pool();
    CHECK(policy.pool_size == 15);
    CHECK(policy.rounds == 5);
    CHECK(policy.per_round == 3);
    CHECK(policy.negatives_per_round() == 3);
    const auto pos = synthetic_positives(40);
    Rng rng(8);
    const auto pool = build_pool(pos, policy.pool_size, policy.per_round, rng);
    std::vector<std::set<std::size_t>> seen(pos.size());
    for (int r = 0; r < policy.rounds; ++r) {
        const auto set = pool_round(pos, pool, r);
        REQUIRE(set.pairs.size() == pos.size() * 3);
        for (std::size_t k = 0; k < set.pairs.size(); ++k) {
            CHECK(set.source[k] != set.positive[k]);
            CHECK(seen[set.positive[k]].insert(set.source[k]).second);
        }
    }
    for (const auto& s : seen) CHECK(s.size() == 15);
    CHECK_THROWS_AS(pool_round(pos, pool, 5), Error);
}

TEST_CASE("presets") {
    CHECK(NegativePolicy::preset("flat").per_pos == 4);
    CHECK(NegativePolicy::preset("dialogue-fixed").one_in_dialogue);
    CHECK(NegativePolicy::preset("dialogue-prob").in_dialogue_prob == 0.1);
    CHECK(NegativePolicy::preset("dialogue-prob").per_pos == 3);
    CHECK_THROWS_AS(NegativePolicy::preset("nope"), Error);
    NegativePolicy bad = NegativePolicy::synthetic_pool();
    bad.pool_size = 10;
    CHECK_THROWS_AS(validate(bad), Error);
}

TEST_CASE("fixed dialogue recipe: one in-dialogue plus three random") {
    const auto pos = dialogue_positives();
    Rng rng(4);
    const auto set = dialogue_negatives(pos, NegativePolicy::dialogue_fixed(), rng);
    REQUIRE(set.pairs.size() == pos.size() * 4);
    for (std::size_t p = 0; p < pos.size(); ++p) {
        int in = 0, out = 0;
        for (std::size_t k = p * 4; k < p * 4 + 4; ++k) {
            const auto& src = pos[set.source[k]];
            const bool same = src.dialogue_id == pos[p].dialogue_id;
            CHECK(static_cast<bool>(set.in_dialogue[k]) == same);
            (same ? in : out)++;
            CHECK(set.pairs[k].response != pos[p].response);
            CHECK(set.pairs[k].context == pos[p].context);
        }
        CHECK(in == 1);
        CHECK(out == 3);
    }
}

TEST_CASE("probabilistic dialogue recipe mixes at the requested rate") {
    std::vector<PairSample> pos;
    for (int rep = 0; rep < 20; ++rep) {
        for (auto p : dialogue_positives()) {
            p.dialogue_id = *p.dialogue_id + "-" + std::to_string(rep);
            p.response += " #" + std::to_string(rep);
            pos.push_back(p);
        }
    }
    Rng rng(6);
    const auto set = dialogue_negatives(pos, NegativePolicy::dialogue_probabilistic(), rng);
    double in = 0;
    for (auto flag : set.in_dialogue) in += flag;
    const double rate = in / static_cast<double>(set.in_dialogue.size());
    CHECK(std::abs(rate - 0.1) < 0.03);
}

TEST_CASE("no negative reuses the gold response text") {
    auto pos = dialogue_positives();
    pos[3].response = pos[10].response;  // duplicate text across dialogues
    Rng rng(1);
    const auto set = dialogue_negatives(pos, NegativePolicy::dialogue_fixed(), rng);
    for (std::size_t k = 0; k < set.pairs.size(); ++k) {
        CHECK(set.pairs[k].response != pos[set.positive[k]].response);
    }
}
