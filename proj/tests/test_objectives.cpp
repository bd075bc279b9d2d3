#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "pmilab/error.hpp"
#include "pmilab/objectives.hpp"
#include "pmilab/rng.hpp"

using namespace pmilab;

namespace {

ScoreBatch fixed_batch() { return {{0.3, -1.2, 2.0}, {0.5, -0.4, 1.1, -2.0, 0.0, 0.7}, 2}; }

ScoreBatch random_batch(Rng& rng, std::size_t n_pos, std::size_t per, double scale) {
    ScoreBatch b;
    b.negs_per_pos = per;
    for (std::size_t k = 0; k < n_pos; ++k) b.pos.push_back(scale * rng.normal());
    for (std::size_t k = 0; k < n_pos * per; ++k) b.neg.push_back(scale * rng.normal());
    return b;
}

}  // namespace

TEST_CASE("loss values on a fixed batch") {
    const auto b = fixed_batch();
    CHECK(pmiscore_loss(b).loss == doctest::Approx(1.0453825552315483).epsilon(1e-13));
    CHECK(mine_loss(b).loss == doctest::Approx(-0.021624668501916133).epsilon(1e-12));
    CHECK(infonce_loss(b).loss == doctest::Approx(1.2592138024849622).epsilon(1e-13));
    CHECK(fdiv_loss(FKind::kl, b).loss == doctest::Approx(0.04538255523154855).epsilon(1e-12));
    CHECK(fdiv_loss(FKind::pearson_chi2, b).loss == doctest::Approx(-2.149049429321937).epsilon(1e-13));
    CHECK(fdiv_loss(FKind::jensen_shannon, b).loss == doctest::Approx(0.12817568019393072).epsilon(1e-13));
    CHECK(fdiv_loss(FKind::squared_hellinger, b).loss == doctest::Approx(0.12072810222863933).epsilon(1e-13));
    CHECK(fdiv_loss(FKind::total_variation, b).loss == doctest::Approx(-1.0 / 6.0).epsilon(1e-15));
}

TEST_CASE("loss algebra") {
    Rng rng(99);
    for (int k = 0; k < 100; ++k) {
        const auto b = random_batch(rng, 5, 3, 3.0);
        // The kl form keeps the +1 that pmiscore drops.
        CHECK(std::abs(pmiscore_loss(b).loss - fdiv_loss(FKind::kl, b).loss - 1.0) < 1e-12);
    }
    ScoreBatch equal{{1.7, 1.7}, {1.7, 1.7, 1.7, 1.7}, 2};
    CHECK(mine_loss(equal).loss == doctest::Approx(0.0).epsilon(1e-15));
    ScoreBatch zeros{{0.0}, {0.0, 0.0, 0.0}, 3};
    CHECK(std::abs(infonce_loss(zeros).loss - std::log(4.0)) < 1e-12);

    auto b = fixed_batch();
    auto shifted = b;
    for (auto& s : shifted.pos) s += 5.0;
    for (auto& s : shifted.neg) s += 5.0;
    CHECK(infonce_loss(shifted).loss == doctest::Approx(infonce_loss(b).loss).epsilon(1e-12));
    CHECK(std::abs(pmiscore_loss(shifted).loss - pmiscore_loss(b).loss) > 1.0);
}

TEST_CASE("independent-score optimum of pmiscore") {
    // With pos and neg from one distribution, s = 0 is stationary: the
    // gradient sums to zero.
    ScoreBatch b{{0.0, 0.0}, {0.0, 0.0}, 1};
    const auto r = pmiscore_loss(b);
    CHECK(r.loss == doctest::Approx(1.0));
    double total = 0.0;
    for (double g : r.pos_grad) total += g;
    for (double g : r.neg_grad) total += g;
    CHECK(total == doctest::Approx(0.0));
}

TEST_CASE("loss gradients match central finite differences") {
    Rng rng(7);
    std::vector<Objective> objectives{{ObjectiveKind::pmiscore},
                                      {ObjectiveKind::mine},
                                      {ObjectiveKind::infonce},
                                      {ObjectiveKind::fdiv, FKind::kl},
                                      {ObjectiveKind::fdiv, FKind::pearson_chi2},
                                      {ObjectiveKind::fdiv, FKind::jensen_shannon},
                                      {ObjectiveKind::fdiv, FKind::squared_hellinger}};
    int instances = 0;
    for (int trial = 0; trial < 20; ++trial) {
        for (const auto& objective : objectives) {
            CAPTURE(to_string(objective));
            auto b = random_batch(rng, 1 + rng.below(5), 1 + rng.below(4), 1.5);
            const auto r = objective_loss(objective, b);
            REQUIRE(r.pos_grad.size() == b.pos.size());
            REQUIRE(r.neg_grad.size() == b.neg.size());
            constexpr double h = 1e-6;
            auto check = [&](double& slot, double analytic) {
                const double keep = slot;
                slot = keep + h;
                const double up = objective_loss(objective, b).loss;
                slot = keep - h;
                const double down = objective_loss(objective, b).loss;
                slot = keep;
                const double numeric = (up - down) / (2 * h);
                CHECK(std::abs(analytic - numeric) / std::max(1.0, std::abs(numeric)) < 1e-6);
            };
            for (std::size_t k = 0; k < b.pos.size(); ++k) check(b.pos[k], r.pos_grad[k]);
            for (std::size_t k = 0; k < b.neg.size(); ++k) check(b.neg[k], r.neg_grad[k]);
            ++instances;
        }
    }
    CHECK(instances >= 100);
}

TEST_CASE("total variation is evaluation-only") {
    CHECK_FALSE(is_trainable({ObjectiveKind::fdiv, FKind::total_variation}));
    CHECK(is_trainable({ObjectiveKind::fdiv, FKind::jensen_shannon}));
    const auto r = fdiv_loss(FKind::total_variation, fixed_batch());
    for (double g : r.pos_grad) CHECK(g == 0.0);
}

TEST_CASE("malformed batches are rejected") {
    ScoreBatch empty_neg{{1.0}, {}, 0};
    CHECK_THROWS_AS(pmiscore_loss(empty_neg), Error);
    ScoreBatch ragged{{1.0, 2.0}, {0.0, 0.0, 0.0}, 2};
    CHECK_THROWS_AS(infonce_loss(ragged), Error);
    CHECK_THROWS_AS(infonce_loss(0.0, std::vector<double>{}), Error);
}
