#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <vector>

#include "pmilab/error.hpp"
#include "pmilab/kernels.hpp"
#include "pmilab/rng.hpp"
#include "pmilab/scorer.hpp"

using namespace pmilab;

namespace {

std::vector<double> random_vector(Rng& rng, std::size_t n, double scale = 1.0) {
    std::vector<double> v(n);
    for (auto& x : v) x = scale * rng.normal();
    return v;
}

ScorerParams tiny_net() {
    auto p = ScorerParams::zeros(2, 2, 2);
    p.w1 = {0.5, -0.3, 0.2, 0.8};
    p.b1 = {0.1, -0.2};
    p.a1 = 0.25;
    p.w2 = {1.0, -0.5, 0.3, 0.7};
    p.b2 = {0.0, 0.05};
    p.a2 = 0.1;
    p.w3 = {2.0, -1.5};
    p.b3 = 0.3;
    return p;
}

double rel_err(double a, double b) { return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)}); }

}  // namespace

TEST_CASE("kernel variants agree with the scalar reference") {
    Rng rng(5);
    const auto& ref = kernels::scalar_table();
    for (const auto* table : kernels::available_tables()) {
        CAPTURE(table->name);
        for (std::size_t n : {0u, 1u, 3u, 4u, 7u, 8u, 17u, 64u, 255u, 1000u}) {
            auto x = random_vector(rng, n);
            auto y = random_vector(rng, n);
            auto y_ref = y;
            table->axpy(0.37, x.data(), y.data(), n);
            ref.axpy(0.37, x.data(), y_ref.data(), n);
            for (std::size_t k = 0; k < n; ++k) CHECK(y[k] == doctest::Approx(y_ref[k]).epsilon(1e-14));

            CHECK(table->dot(x.data(), y.data(), n) ==
                  doctest::Approx(ref.dot(x.data(), y.data(), n)).epsilon(1e-12).scale(n + 1.0));

            std::vector<double> out(n), out_ref(n), g(n), g_ref(n);
            if (n > 0) x[0] = 0.0;  // exercise the z == 0 branch
            table->prelu(0.25, x.data(), out.data(), n);
            ref.prelu(0.25, x.data(), out_ref.data(), n);
            CHECK(out == out_ref);
            table->prelu_backward(0.25, x.data(), y.data(), g.data(), n);
            ref.prelu_backward(0.25, x.data(), y.data(), g_ref.data(), n);
            CHECK(g == g_ref);
        }
    }
}

TEST_CASE("kernel selection") {
    if (const char* forced = std::getenv("PMILAB_KERNELS")) CHECK(kernels::active().name == forced);
    CHECK_THROWS_AS(kernels::select("neon512"), Error);
    const std::string before(kernels::active().name);
    kernels::select("scalar");
    CHECK(kernels::active().name == "scalar");
    kernels::select(before);
    CHECK(kernels::active().name == before);
}

TEST_CASE("scorer forward matches a hand-built network") {
    const auto p = tiny_net();
    CHECK(pmis_score(p, std::vector<double>{1.0, 2.0}) == doctest::Approx(2.4673668664726307).epsilon(1e-14));
    CHECK(pmis_score(p, std::vector<double>{-3.0, 0.5}) == doctest::Approx(-1.1624383738332646).epsilon(1e-14));
}

TEST_CASE("zero parameters score zero and softcap bounds the output") {
    const auto z = ScorerParams::zeros(5);
    CHECK(pmis_score(z, std::vector<double>{1, 2, 3, 4, 5}) == 0.0);
    CHECK(softcap(1e9, 20.0) <= 20.0);
    CHECK(softcap(-1e9, 20.0) >= -20.0);
    CHECK(softcap(0.1, 20.0) == doctest::Approx(0.1).epsilon(1e-4));
    auto p = tiny_net();
    p.b3 = 1e6;
    const double s = pmis_score(p, std::vector<double>{1.0, 2.0});
    CHECK(s <= 20.0);
    CHECK(s > 19.99);
}

TEST_CASE("init params respect fan-in bounds") {
    Rng rng(3);
    const auto p = init_params(10, rng);
    CHECK(p.w1.size() == 10 * 256);
    CHECK(p.w2.size() == 256 * 128);
    CHECK(p.parameter_count() == 10 * 256 + 256 + 1 + 256 * 128 + 128 + 1 + 128 + 1);
    const double b1 = 1.0 / std::sqrt(10.0), b2 = 1.0 / 16.0;
    CHECK(std::all_of(p.w1.begin(), p.w1.end(), [&](double w) { return std::abs(w) <= b1; }));
    CHECK(std::all_of(p.w2.begin(), p.w2.end(), [&](double w) { return std::abs(w) <= b2; }));
    CHECK(std::all_of(p.b1.begin(), p.b1.end(), [](double b) { return b == 0.0; }));
    CHECK(p.a1 == 0.25);
    CHECK(p.a2 == 0.25);
    Rng again(3);
    CHECK(init_params(10, again).w2 == p.w2);
}

TEST_CASE("batch forward equals per-row forward") {
    Rng rng(11);
    const auto p = init_params(6, rng, 16, 8);
    const auto inputs = random_vector(rng, 6 * 9);
    const auto batch = score_batch(p, inputs);
    REQUIRE(batch.size() == 9);
    for (std::size_t r = 0; r < 9; ++r) {
        CHECK(batch[r] == doctest::Approx(pmis_score(p, std::span(inputs).subspan(r * 6, 6))).epsilon(1e-14));
    }
}

TEST_CASE("scorer backward matches central finite differences") {
    Rng rng(2024);
    int instances = 0;
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t d = 1 + rng.below(6);
        auto p = init_params(d, rng, 4 + rng.below(8), 3 + rng.below(6), 20.0);
        p.a1 = 0.1 + 0.4 * rng.uniform();
        p.a2 = 0.1 + 0.4 * rng.uniform();
        for (auto& b : p.b1) b = 0.3 * rng.normal();
        for (auto& b : p.b2) b = 0.3 * rng.normal();
        p.b3 = rng.normal();
        const auto x = random_vector(rng, d, 2.0);
        const auto fwd = forward(p, x);
        const auto g = backward(p, fwd.tape, 1.0);

        constexpr double h = 1e-6;
        auto check = [&](double& slot, double analytic) {
            const double keep = slot;
            slot = keep + h;
            const double up = pmis_score(p, x);
            slot = keep - h;
            const double down = pmis_score(p, x);
            slot = keep;
            const double numeric = (up - down) / (2 * h);
            const double err = rel_err(analytic, numeric);
            worst = std::max(worst, err);
            CHECK(err < 1e-4);
        };
        auto params = p.tensors();
        const auto grads = g.params.tensors();
        for (std::size_t t = 0; t < ScorerParams::tensor_count; ++t) {
            for (std::size_t k = 0; k < params[t].size(); ++k) check(params[t][k], grads[t][k]);
        }
        auto xv = x;
        for (std::size_t k = 0; k < d; ++k) {
            const double keep = xv[k];
            xv[k] = keep + h;
            const double up = pmis_score(p, xv);
            xv[k] = keep - h;
            const double down = pmis_score(p, xv);
            xv[k] = keep;
            CHECK(rel_err(g.input[k], (up - down) / (2 * h)) < 1e-4);
        }
        ++instances;
    }
    CHECK(instances >= 100);
    MESSAGE("worst relative error " << worst);
}

TEST_CASE("batched backward sums the per-row gradients") {
    Rng rng(8);
    const auto p = init_params(3, rng, 5, 4);
    const auto inputs = random_vector(rng, 3 * 4);
    const std::vector<double> dscores{0.5, -1.0, 2.0, 0.25};
    ActivationTape tape;
    forward_batch(p, inputs, tape);
    auto grads = ScorerParams::zeros(3, 5, 4);
    backward_batch(p, tape, dscores, grads);

    auto expected = ScorerParams::zeros(3, 5, 4);
    for (std::size_t r = 0; r < 4; ++r) {
        const auto f = forward(p, std::span(inputs).subspan(r * 3, 3));
        const auto g = backward(p, f.tape, dscores[r]);
        auto e = expected.tensors();
        const auto gt = g.params.tensors();
        for (std::size_t t = 0; t < ScorerParams::tensor_count; ++t) {
            for (std::size_t k = 0; k < e[t].size(); ++k) e[t][k] += gt[t][k];
        }
    }
    const auto got = grads.tensors();
    const auto want = expected.tensors();
    for (std::size_t t = 0; t < ScorerParams::tensor_count; ++t) {
        for (std::size_t k = 0; k < got[t].size(); ++k) CHECK(got[t][k] == doctest::Approx(want[t][k]).epsilon(1e-12));
    }
}

TEST_CASE("backward refuses a stale tape") {
    Rng rng(1);
    auto p = init_params(2, rng, 4, 3);
    auto f = forward(p, std::vector<double>{0.1, 0.2});
    auto grads = ScorerParams::zeros(2, 4, 3);
    auto state = AdamState::for_params(p);
    auto g = backward(p, f.tape, 1.0);
    adamw_step(p, g.params, state, 1e-3);
    CHECK_THROWS_AS(backward_batch(p, f.tape, std::vector<double>{1.0}, grads), Error);
}

TEST_CASE("adamw matches the decoupled reference update") {
    auto p = ScorerParams::zeros(1, 1, 1);
    p.w1 = {0.5};
    p.b1 = {-1.0};
    p.a1 = 0.25;
    p.w2 = {2.0};
    p.b2 = {0.1};
    p.a2 = 0.25;
    p.w3 = {-0.3};
    p.b3 = 0.0;
    auto state = AdamState::for_params(p);
    const std::vector<std::vector<double>> steps{{0.1, -0.2, 3.0, 0.0, 1e-3, -0.5, 2.0, -1.0},
                                                 {-0.05, 0.4, 1.0, 0.2, 0.0, 0.5, -2.0, 0.3}};
    for (const auto& gv : steps) {
        auto g = ScorerParams::zeros(1, 1, 1);
        auto gt = g.tensors();
        for (std::size_t t = 0; t < 8; ++t) gt[t][0] = gv[t];
        adamw_step(p, g, state, 0.01);
    }
    const std::vector<double> want{0.4872376359402391,  -0.9934620456545538, 0.23124036306504958,
                                   1.992158652290383,   0.08328061323055191, 0.25942268652107264,
                                   -0.30941268716316295, 0.014277485757087365};
    const auto got = p.tensors();
    for (std::size_t t = 0; t < 8; ++t) CHECK(got[t][0] == doctest::Approx(want[t]).epsilon(1e-12));
    CHECK(state.step_count == 2);
    CHECK(p.generation == 2);
}

TEST_CASE("adamw rejects non-finite gradients") {
    auto p = ScorerParams::zeros(1, 1, 1);
    auto state = AdamState::for_params(p);
    auto g = ScorerParams::zeros(1, 1, 1);
    g.b3 = std::nan("");
    try {
        adamw_step(p, g, state, 0.01);
        FAIL("expected divergence");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::divergence);
    }
}

TEST_CASE("learning rate rule") {
    CHECK(learning_rate(1024) == doctest::Approx(1e-3).epsilon(1e-15));
    CHECK(learning_rate(4096) == doctest::Approx(2.5e-4).epsilon(1e-15));
    CHECK_THROWS_AS(learning_rate(0), Error);
}

TEST_CASE("lipschitz bound dominates observed slopes") {
    Rng rng(17);
    const auto p = init_params(4, rng, 16, 8);
    const double bound = lipschitz_bound(p);
    for (int k = 0; k < 200; ++k) {
        const auto x = random_vector(rng, 4);
        const auto y = random_vector(rng, 4);
        double dist = 0.0;
        for (int i = 0; i < 4; ++i) dist += (x[i] - y[i]) * (x[i] - y[i]);
        CHECK(std::abs(pmis_score(p, x) - pmis_score(p, y)) <= bound * std::sqrt(dist) + 1e-12);
    }
}
