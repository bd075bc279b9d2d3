#include <doctest.h>

#include <cmath>
#include <set>

#include "pmilab/error.hpp"
#include "pmilab/synthetic.hpp"
#include "pmilab/synthetic_dataset.hpp"

using namespace pmilab;

TEST_CASE("diagonal family PMI and MI") {
    const auto spec = make_diagonal(2, 0.1);
    CHECK_NOTHROW(validate(spec));
    CHECK(analytic_pmi(spec, 0, 0) == doctest::Approx(std::log(1.8)).epsilon(1e-15));
    CHECK(analytic_pmi(spec, 0, 1) == doctest::Approx(std::log(0.2)).epsilon(1e-15));
    CHECK(mutual_information(spec) == doctest::Approx(0.3680642071684971).epsilon(1e-14));
    CHECK(mutual_information(make_diagonal(20, 0.05)) == doctest::Approx(2.649995081249796).epsilon(1e-13));
}

TEST_CASE("block family PMI and MI") {
    const auto spec = make_block(20, 4, 0.05);
    CHECK(analytic_pmi(spec, 0, 4) == doctest::Approx(1.33500106673234).epsilon(1e-14));
    CHECK(analytic_pmi(spec, 0, 19) == doctest::Approx(-2.70805020110221).epsilon(1e-14));
    CHECK(mutual_information(spec) == doctest::Approx(1.132848503340612).epsilon(1e-13));
    // Cells with equal mass share a bit-identical PMI.
    std::set<double> values;
    for (int i = 0; i < 20; ++i) {
        for (int j = 0; j < 20; ++j) values.insert(analytic_pmi(spec, i, j));
    }
    CHECK(values.size() == 2);
    CHECK_THROWS_AS(make_block(20, 3, 0.05), Error);
}

TEST_CASE("independent family has zero PMI") {
    const auto spec = make_independent(20);
    CHECK(mutual_information(spec) == doctest::Approx(0.0).scale(1.0).epsilon(1e-15));
    for (int i = 0; i < 20; ++i) CHECK(std::abs(analytic_pmi(spec, i, (i * 7) % 20)) < 1e-12);
    Rng rng(3);
    const auto dir = make_independent_dirichlet(6, 0.5, rng);
    CHECK_NOTHROW(validate(dir));
    CHECK(std::abs(mutual_information(dir)) < 1e-12);
}

TEST_CASE("PMI symmetry under transpose") {
    const auto spec = make_block(8, 2, 0.2);
    const auto t = transpose(spec);
    for (int i = 0; i < 8; ++i) {
        for (int j = 0; j < 8; ++j) CHECK(analytic_pmi(spec, i, j) == doctest::Approx(analytic_pmi(t, j, i)).epsilon(1e-15));
    }
}

TEST_CASE("zero-mass cells have undefined PMI") {
    const auto spec = make_diagonal(3, 0.0);
    CHECK_THROWS_WITH(analytic_pmi(spec, 0, 1), doctest::Contains("PMI undefined"));
    JointSpec bad{2, 2, {0.5, 0.5, 0.0, 0.1}, Family::custom};
    CHECK_THROWS_AS(validate(bad), Error);
}

TEST_CASE("sampling frequencies follow the joint") {
    const auto spec = make_diagonal(2, 0.1);
    Rng rng(9);
    const auto cells = sample_pairs(spec, 100000, rng);
    int diagonal = 0;
    for (auto [i, j] : cells) diagonal += i == j;
    // 5 binomial standard errors
    CHECK(std::abs(diagonal / 100000.0 - 0.9) < 5.0 * std::sqrt(0.09 / 100000.0));
}

TEST_CASE("onehot embedding") {
    const auto spec = make_diagonal(2, 0.1);
    Rng rng(1);
    const auto pair = embed_synthetic(spec, 0, 1, {}, rng);
    CHECK(pair.vector == std::vector<double>{1, 0, 0, 1});
    REQUIRE(pair.target_pmi.has_value());
    CHECK(*pair.target_pmi == analytic_pmi(spec, 0, 1));
    CHECK(*pair.ctx_index == 0);
    CHECK(*pair.resp_index == 1);
}

TEST_CASE("prototype tables are seed-determined") {
    const auto spec = make_block(8, 2, 0.1);
    SyntheticEmbedConfig cfg;
    cfg.mode = EmbedMode::gaussian_prototypes;
    cfg.proto_dim = 16;
    const SyntheticEmbedder a(spec, cfg), b(spec, cfg);
    CHECK(a.dimension() == 16);
    CHECK(a.ctx_prototype(3) == b.ctx_prototype(3));
    cfg.seed = 43;
    const SyntheticEmbedder c(spec, cfg);
    CHECK(a.ctx_prototype(3) != c.ctx_prototype(3));
}

TEST_CASE("generated dataset layout") {
    SynthOptions o;
    o.family = Family::block;
    o.embed.noise_sigma = 0.05;
    const auto data = generate_synthetic(o);
    auto count = [](const Dataset& d, Label l) {
        std::size_t n = 0;
        for (const auto& p : d) n += p.label == l;
        return n;
    };
    CHECK(count(data.train, Label::positive) == 3000);
    CHECK(count(data.val, Label::positive) == 1000);
    CHECK(count(data.test, Label::positive) == 1000);
    CHECK(count(data.train, Label::negative) == 3000 * 4);
    CHECK(data.ctx_dim == 20);
    CHECK(validate_dataset(data.train) == 40);
    CHECK(data.mi == doctest::Approx(1.132848503340612).epsilon(1e-13));

    const auto again = generate_synthetic(o);
    CHECK(again.test.front().vector == data.test.front().vector);
    o.seed = 7;
    CHECK(generate_synthetic(o).test.front().vector != data.test.front().vector);
}

TEST_CASE("pool preset materializes every round") {
    SynthOptions o;
    o.n = 200;
    o.policy = NegativePolicy::synthetic_pool();
    const auto data = generate_synthetic(o);
    std::set<int> rounds;
    std::size_t negatives = 0;
    for (const auto& p : data.train) {
        if (p.label == Label::negative) {
            rounds.insert(p.round);
            ++negatives;
        }
    }
    CHECK(rounds == std::set<int>{0, 1, 2, 3, 4});
    CHECK(negatives == 120 * 15);
}
