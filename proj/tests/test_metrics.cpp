#include <doctest.h>

#include <cmath>
#include <vector>

#include "pmilab/error.hpp"
#include "pmilab/metrics.hpp"
#include "pmilab/rng.hpp"

using namespace pmilab;

namespace {

double brute_auc(const std::vector<double>& pos, const std::vector<double>& neg) {
    double wins = 0.0;
    for (double p : pos) {
        for (double n : neg) wins += p > n ? 1.0 : (p == n ? 0.5 : 0.0);
    }
    return wins / static_cast<double>(pos.size() * neg.size());
}

// Rank of v = 1 + #smaller + (#equal - 1) / 2, counted pairwise.
std::vector<double> brute_ranks(const std::vector<double>& v) {
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        double less = 0, equal = 0;
        for (double w : v) {
            less += w < v[i];
            equal += w == v[i];
        }
        r[i] = 1.0 + less + (equal - 1.0) / 2.0;
    }
    return r;
}

}  // namespace

TEST_CASE("mse examples") {
    const std::vector<double> a{1.0, 2.0, 3.0};
    CHECK(mse(a, a) == 0.0);
    CHECK(mse(std::vector<double>{1, 1}, std::vector<double>{0, 2}) == 1.0);
    CHECK(mse(std::vector<double>{3.5, 4.5}, std::vector<double>{1, 2}) == doctest::Approx(6.25));
    CHECK_THROWS_AS(mse(a, std::vector<double>{1.0}), Error);
    CHECK_THROWS_AS(mse(std::vector<double>{}, std::vector<double>{}), Error);
}

TEST_CASE("pearson examples") {
    const std::vector<double> x{0.2, 1.5, -0.3, 2.2, 0.9};
    std::vector<double> y(x.size()), neg(x.size());
    for (std::size_t k = 0; k < x.size(); ++k) {
        y[k] = 2 * x[k] + 3;
        neg[k] = -x[k];
    }
    CHECK(pearson(x, y) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(pearson(x, neg) == doctest::Approx(-1.0).epsilon(1e-14));
    CHECK(pearson(x, std::vector<double>{1.0, 2.1, 0.3, 2.0, 1.7}) == doctest::Approx(0.9238438946567804).epsilon(1e-13));
    CHECK_THROWS_WITH(pearson(x, std::vector<double>(5, 1.0)), doctest::Contains("undefined correlation"));

    Rng rng(4);
    std::vector<double> u(20000), v(20000);
    for (std::size_t k = 0; k < u.size(); ++k) {
        u[k] = rng.normal();
        v[k] = rng.normal();
    }
    // 4 standard errors of a null correlation at n = 20000.
    CHECK(std::abs(pearson(u, v)) < 4.0 / std::sqrt(20000.0));
}

TEST_CASE("pearson stays in bounds") {
    Rng rng(12);
    for (int k = 0; k < 10000; ++k) {
        std::vector<double> x(3 + rng.below(5)), y(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) {
            x[i] = rng.normal();
            y[i] = rng.normal();
        }
        const double r = pearson(x, y);
        REQUIRE(r >= -1.0);
        REQUIRE(r <= 1.0);
    }
}

TEST_CASE("average ranks and spearman") {
    const auto r = average_ranks(std::vector<double>{3, 1, 4, 1, 5, 9, 2, 6, 5});
    CHECK(r == std::vector<double>{4, 1.5, 5, 1.5, 6.5, 9, 3, 8, 6.5});
    CHECK(spearman(std::vector<double>{1, 2, 3}, std::vector<double>{3, 2, 1}) == doctest::Approx(-1.0));
    CHECK(spearman(std::vector<double>{1, 1, 2}, std::vector<double>{1, 2, 3}) ==
          doctest::Approx(0.8660254037844387).epsilon(1e-14));
    CHECK_THROWS_AS(spearman(std::vector<double>{1, 1, 1}, std::vector<double>{1, 2, 3}), Error);

    Rng rng(21);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> x(30), y(30), fx(30);
        for (std::size_t k = 0; k < 30; ++k) {
            x[k] = static_cast<double>(rng.below(8));  // plenty of ties
            y[k] = rng.normal();
            fx[k] = std::exp(x[k]) + 3.0;
        }
        CHECK(average_ranks(x) == brute_ranks(x));
        CHECK(spearman(x, y) == doctest::Approx(pearson(brute_ranks(x), brute_ranks(y))).epsilon(1e-12));
        CHECK(spearman(fx, y) == doctest::Approx(spearman(x, y)).epsilon(1e-12));
    }
}

TEST_CASE("roc auc") {
    CHECK(roc_auc(std::vector<double>{2}, std::vector<double>{1}) == 1.0);
    CHECK(roc_auc(std::vector<double>(5, 0.3), std::vector<double>(7, 0.3)) == 0.5);
    CHECK(roc_auc(std::vector<double>{0.9, 0.4, 0.4, 0.7}, std::vector<double>{0.4, 0.1, 0.8}) ==
          doctest::Approx(0.6666666666666667).epsilon(1e-15));
    CHECK_THROWS_AS(roc_auc(std::vector<double>{}, std::vector<double>{1.0}), Error);

    Rng rng(31);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<double> pos(50), neg(50);
        for (auto& s : pos) s = std::round(4.0 * rng.normal()) / 4.0 + 0.3;
        for (auto& s : neg) s = std::round(4.0 * rng.normal()) / 4.0;
        const double a = roc_auc(pos, neg);
        CHECK(a == brute_auc(pos, neg));
        CHECK(roc_auc(neg, pos) == doctest::Approx(1.0 - a).epsilon(1e-15));
        std::vector<double> tp(pos), tn(neg);
        for (auto& s : tp) s = std::atan(s);
        for (auto& s : tn) s = std::atan(s);
        CHECK(roc_auc(tp, tn) == a);
    }
}

TEST_CASE("grouped auc averages per-group values") {
    const std::vector<double> scores{0.9, 0.1, 0.5, 0.2, 0.3, 0.4, 0.7};
    const std::vector<std::uint8_t> is_pos{1, 0, 0, 1, 0, 0, 1};
    const std::vector<std::int64_t> groups{0, 0, 0, 1, 1, 1, 2};
    // group 0: 1.0, group 1: 0.0, group 2 has no negatives.
    CHECK(grouped_roc_auc(scores, is_pos, groups) == doctest::Approx(0.5));
}

TEST_CASE("report json and table") {
    EvalReport r;
    r.n = 12;
    r.mse = 0.25;
    r.roc_auc = 0.75;
    const auto doc = to_json(r);
    CHECK(doc.at("n") == 12);
    CHECK_FALSE(doc.contains("pearson"));
    const auto back = report_from_json(nlohmann::json::parse(doc.dump()));
    CHECK(back.mse == r.mse);
    CHECK(back.roc_auc == r.roc_auc);
    CHECK_FALSE(back.pearson.has_value());
    const auto table = format_table(r);
    CHECK(table.find("mse") != std::string::npos);
    CHECK(table.find("roc_auc") != std::string::npos);

    const auto one = mean_std(std::vector<double>{0.4});
    CHECK(one.mean == 0.4);
    CHECK(one.std == 0.0);
    const auto two = mean_std(std::vector<double>{1.0, 3.0});
    CHECK(two.mean == 2.0);
    CHECK(two.std == 1.0);
}
