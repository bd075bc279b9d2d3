#include <doctest.h>

#include <cmath>
#include <vector>

#include "pmilab/error.hpp"
#include "pmilab/kde.hpp"
#include "pmilab/rng.hpp"

using namespace pmilab;

TEST_CASE("one-dimensional kde matches the reference estimator") {
    const std::vector<double> pts{-1.3, -0.2, 0.1, 0.4, 0.9, 1.7, 2.2, -0.7};
    const GaussianKde kde(pts, 1, GaussianKde::scott_factor(8, 1));
    CHECK(kde.factor() == doctest::Approx(0.6597539553864471).epsilon(1e-14));
    CHECK(kde.log_density(std::vector<double>{0.3}) == doctest::Approx(-1.2834004077029604).epsilon(1e-12));
    CHECK(kde.log_density(std::vector<double>{-2.0}) == doctest::Approx(-2.728518279136836).epsilon(1e-12));
}

TEST_CASE("kde of a standard normal sample") {
    Rng rng(42);
    std::vector<double> pts(5000);
    for (auto& x : pts) x = rng.normal();
    const GaussianKde kde(pts, 1, GaussianKde::scott_factor(5000, 1));
    CHECK(std::abs(kde.log_density(std::vector<double>{0.0}) + 0.9189) < 0.1);
}

TEST_CASE("identical fits score zero") {
    Rng rng(3);
    std::vector<double> pts(300 * 3);
    for (auto& x : pts) x = rng.normal();
    const auto model = kde_fit(pts, pts, 3);
    for (std::size_t r = 0; r < 300; ++r) {
        CHECK(std::abs(kde_score(model, std::span(pts).subspan(r * 3, 3))) <= 1e-6);
    }
}

TEST_CASE("separated classes score with the right sign") {
    Rng rng(4);
    std::vector<double> pos(400), neg(400);
    for (auto& x : pos) x = rng.normal() + 2.0;
    for (auto& x : neg) x = rng.normal() - 2.0;
    const auto model = kde_fit(pos, neg, 1);
    CHECK(kde_score(model, std::vector<double>{2.0}) > 2.0);
    CHECK(kde_score(model, std::vector<double>{-2.0}) < -2.0);
    // Far outside both samples the floor bounds the magnitude.
    CHECK(std::isfinite(kde_score(model, std::vector<double>{1e6})));
}

TEST_CASE("zero-variance dimensions are dropped") {
    std::vector<double> pos, neg;
    Rng rng(5);
    for (int r = 0; r < 50; ++r) {
        pos.insert(pos.end(), {rng.normal(), 1.0});
        neg.insert(neg.end(), {rng.normal(), 1.0});
    }
    const auto model = kde_fit(pos, neg, 2);
    CHECK(model.kept_dims == std::vector<std::size_t>{0});
    std::vector<double> flat(20, 3.0);
    CHECK_THROWS_AS(kde_fit(flat, flat, 2), Error);
}

TEST_CASE("density in input units includes the standardization") {
    Rng rng(6);
    std::vector<double> pos(4000), neg(4000);
    for (auto& x : pos) x = 3.0 * rng.normal();
    for (auto& x : neg) x = 3.0 * rng.normal();
    const auto model = kde_fit(pos, neg, 1);
    // N(0, 9) at 0: -log(3) - 0.9189
    CHECK(std::abs(kde_log_density_pos(model, std::vector<double>{0.0}) + std::log(3.0) + 0.9189) < 0.1);
}

TEST_CASE("pca projection keeps the leading directions") {
    Rng rng(7);
    const std::size_t dim = 6;
    std::vector<double> pos, neg;
    for (int r = 0; r < 200; ++r) {
        const double t = rng.normal();
        for (std::size_t k = 0; k < dim; ++k) pos.push_back(t + 0.05 * rng.normal());
        const double u = rng.normal();
        for (std::size_t k = 0; k < dim; ++k) neg.push_back(u + 0.05 * rng.normal());
    }
    KdeOptions opts;
    opts.use_pca = true;
    opts.pca_dims = 2;
    const auto model = kde_fit(pos, neg, dim, opts);
    CHECK(model.out_dim == 2);
    double norm = 0.0;
    for (std::size_t k = 0; k < dim; ++k) norm += model.projection[k * 2] * model.projection[k * 2];
    CHECK(norm == doctest::Approx(1.0));
    CHECK(std::abs(model.projection[0]) == doctest::Approx(1.0 / std::sqrt(6.0)).epsilon(0.01));
}

TEST_CASE("cross-validated bandwidth stays in the multiplier grid") {
    Rng rng(8);
    std::vector<double> pts(500);
    for (auto& x : pts) x = rng.normal();
    const double f = cross_validated_factor(pts, 1);
    const double scott = GaussianKde::scott_factor(500, 1);
    bool on_grid = false;
    for (double m : {0.25, 0.5, 0.75, 1.0, 1.5, 2.0}) on_grid = on_grid || std::abs(f - m * scott) < 1e-12;
    CHECK(on_grid);
}

TEST_CASE("joint form vanishes for independent parts") {
    Rng rng(9);
    std::vector<double> pos;
    for (int r = 0; r < 3000; ++r) pos.insert(pos.end(), {rng.normal(), rng.normal()});
    const auto model = kde_fit_joint(pos, 2, 1);
    double total = 0.0;
    for (int r = 0; r < 200; ++r) total += std::abs(kde_score(model, std::span(pos).subspan(r * 2, 2)));
    CHECK(total / 200 < 0.15);
    CHECK_THROWS_AS(kde_fit_joint(pos, 2, 2), Error);
}
