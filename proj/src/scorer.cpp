#include "pmilab/scorer.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "pmilab/error.hpp"
#include "pmilab/kernels.hpp"

namespace pmilab {

ScorerParams ScorerParams::zeros(std::size_t d, std::size_t h1, std::size_t h2, double cap) {
    ScorerParams p;
    p.d = d;
    p.h1 = h1;
    p.h2 = h2;
    p.w1.assign(d * h1, 0.0);
    p.b1.assign(h1, 0.0);
    p.a1 = 0.0;
    p.w2.assign(h1 * h2, 0.0);
    p.b2.assign(h2, 0.0);
    p.a2 = 0.0;
    p.w3.assign(h2, 0.0);
    p.b3 = 0.0;
    p.cap = cap;
    return p;
}

std::array<std::span<double>, ScorerParams::tensor_count> ScorerParams::tensors() {
    return {std::span<double>(w1), std::span<double>(b1), std::span<double>(&a1, 1),
            std::span<double>(w2), std::span<double>(b2), std::span<double>(&a2, 1),
            std::span<double>(w3), std::span<double>(&b3, 1)};
}

std::array<std::span<const double>, ScorerParams::tensor_count> ScorerParams::tensors() const {
    return {std::span<const double>(w1), std::span<const double>(b1),
            std::span<const double>(&a1, 1), std::span<const double>(w2),
            std::span<const double>(b2), std::span<const double>(&a2, 1),
            std::span<const double>(w3), std::span<const double>(&b3, 1)};
}

std::size_t ScorerParams::parameter_count() const {
    std::size_t n = 0;
    for (auto t : tensors()) n += t.size();
    return n;
}

bool all_finite(const ScorerParams& params) {
    for (auto t : params.tensors()) {
        for (double x : t) {
            if (!std::isfinite(x)) return false;
        }
    }
    return std::isfinite(params.cap);
}

ScorerParams init_params(std::size_t d, Rng& rng, std::size_t h1, std::size_t h2, double cap) {
    if (d < 1) fail(ErrorKind::usage, "input dimension must be at least 1");
    if (!(cap > 0.0)) fail(ErrorKind::usage, "softcap limit must be positive");
    ScorerParams p = ScorerParams::zeros(d, h1, h2, cap);
    auto fill = [&](std::vector<double>& w, std::size_t fan_in) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
        for (auto& x : w) x = bound * (2.0 * rng.uniform() - 1.0);
    };
    fill(p.w1, d);
    fill(p.w2, h1);
    fill(p.w3, h2);
    p.a1 = 0.25;
    p.a2 = 0.25;
    return p;
}

double softcap(double x, double cap) { return cap * std::tanh(x / cap); }

namespace {

void check_shape(const ScorerParams& params, std::size_t cols, const char* what) {
    if (cols != params.d) {
        fail(ErrorKind::data, std::string(what) + ": input dimension " + std::to_string(cols) +
                                  " does not match scorer dimension " + std::to_string(params.d));
    }
}

// out[r] = b + x[r] * W for each of `rows` rows.
void affine(const kernels::KernelTable& kt, std::span<const double> x, std::size_t rows,
            std::size_t in, const std::vector<double>& w, const std::vector<double>& b,
            std::size_t out_width, double* out) {
    for (std::size_t r = 0; r < rows; ++r) {
        double* o = out + r * out_width;
        std::copy(b.begin(), b.end(), o);
        const double* xr = x.data() + r * in;
        for (std::size_t k = 0; k < in; ++k) {
            if (xr[k] != 0.0) kt.axpy(xr[k], w.data() + k * out_width, o, out_width);
        }
    }
}

}  // namespace

std::vector<double> forward_batch(const ScorerParams& params, std::span<const double> inputs,
                                  ActivationTape& tape) {
    if (params.d == 0 || inputs.size() % params.d != 0) {
        fail(ErrorKind::data, "forward: input length " + std::to_string(inputs.size()) +
                                  " is not a multiple of scorer dimension " +
                                  std::to_string(params.d));
    }
    const auto& kt = kernels::active();
    const std::size_t rows = inputs.size() / params.d;
    tape.rows = rows;
    tape.generation = params.generation;
    tape.x.assign(inputs.begin(), inputs.end());
    tape.z1.resize(rows * params.h1);
    tape.a1.resize(rows * params.h1);
    tape.z2.resize(rows * params.h2);
    tape.a2.resize(rows * params.h2);
    tape.z3.resize(rows);

    affine(kt, inputs, rows, params.d, params.w1, params.b1, params.h1, tape.z1.data());
    kt.prelu(params.a1, tape.z1.data(), tape.a1.data(), tape.z1.size());
    affine(kt, tape.a1, rows, params.h1, params.w2, params.b2, params.h2, tape.z2.data());
    kt.prelu(params.a2, tape.z2.data(), tape.a2.data(), tape.z2.size());

    std::vector<double> scores(rows);
    for (std::size_t r = 0; r < rows; ++r) {
        tape.z3[r] = kt.dot(params.w3.data(), tape.a2.data() + r * params.h2, params.h2) + params.b3;
        scores[r] = softcap(tape.z3[r], params.cap);
    }
    return scores;
}

std::vector<double> score_batch(const ScorerParams& params, std::span<const double> inputs) {
    ActivationTape tape;
    return forward_batch(params, inputs, tape);
}

ForwardResult forward(const ScorerParams& params, std::span<const double> x) {
    check_shape(params, x.size(), "forward");
    ForwardResult result{0.0, {}};
    result.score = forward_batch(params, x, result.tape).front();
    return result;
}

void backward_batch(const ScorerParams& params, const ActivationTape& tape,
                    std::span<const double> dscores, ScorerParams& grads,
                    std::span<double> input_grads) {
    if (tape.generation != params.generation || tape.x.size() != tape.rows * params.d ||
        tape.z1.size() != tape.rows * params.h1) {
        fail(ErrorKind::usage, "backward: stale activation tape");
    }
    if (dscores.size() != tape.rows) fail(ErrorKind::usage, "backward: one dscore per row required");
    if (grads.w1.size() != params.w1.size() || grads.w2.size() != params.w2.size() ||
        grads.w3.size() != params.w3.size()) {
        fail(ErrorKind::usage, "backward: gradient buffer has the wrong shape");
    }
    if (!input_grads.empty() && input_grads.size() != tape.x.size()) {
        fail(ErrorKind::usage, "backward: input gradient buffer has the wrong shape");
    }

    const auto& kt = kernels::active();
    const std::size_t d = params.d, h1 = params.h1, h2 = params.h2;
    std::vector<double> dh2(h2), dz2(h2), dh1(h1), dz1(h1);

    for (std::size_t r = 0; r < tape.rows; ++r) {
        const double t = std::tanh(tape.z3[r] / params.cap);
        const double dz3 = dscores[r] * (1.0 - t * t);
        if (dz3 == 0.0) {
            if (!input_grads.empty()) std::fill_n(input_grads.data() + r * d, d, 0.0);
            continue;
        }
        const double* a2 = tape.a2.data() + r * h2;
        const double* z2 = tape.z2.data() + r * h2;
        const double* a1 = tape.a1.data() + r * h1;
        const double* z1 = tape.z1.data() + r * h1;
        const double* x = tape.x.data() + r * d;

        kt.axpy(dz3, a2, grads.w3.data(), h2);
        grads.b3 += dz3;
        for (std::size_t k = 0; k < h2; ++k) dh2[k] = dz3 * params.w3[k];

        kt.prelu_backward(params.a2, z2, dh2.data(), dz2.data(), h2);
        for (std::size_t k = 0; k < h2; ++k) {
            if (!(z2[k] > 0.0)) grads.a2 += z2[k] * dh2[k];
        }
        for (std::size_t k = 0; k < h1; ++k) {
            if (a1[k] != 0.0) kt.axpy(a1[k], dz2.data(), grads.w2.data() + k * h2, h2);
            dh1[k] = kt.dot(params.w2.data() + k * h2, dz2.data(), h2);
        }
        kt.axpy(1.0, dz2.data(), grads.b2.data(), h2);

        kt.prelu_backward(params.a1, z1, dh1.data(), dz1.data(), h1);
        for (std::size_t k = 0; k < h1; ++k) {
            if (!(z1[k] > 0.0)) grads.a1 += z1[k] * dh1[k];
        }
        for (std::size_t k = 0; k < d; ++k) {
            if (x[k] != 0.0) kt.axpy(x[k], dz1.data(), grads.w1.data() + k * h1, h1);
        }
        kt.axpy(1.0, dz1.data(), grads.b1.data(), h1);

        if (!input_grads.empty()) {
            double* gx = input_grads.data() + r * d;
            for (std::size_t k = 0; k < d; ++k) gx[k] = kt.dot(params.w1.data() + k * h1, dz1.data(), h1);
        }
    }
}

Gradients backward(const ScorerParams& params, const ActivationTape& tape, double dscore) {
    if (tape.rows != 1) fail(ErrorKind::usage, "backward: tape must hold a single row");
    Gradients g{ScorerParams::zeros(params.d, params.h1, params.h2, params.cap),
                std::vector<double>(params.d, 0.0)};
    const double ds[1] = {dscore};
    backward_batch(params, tape, ds, g.params, g.input);
    return g;
}

double pmis_score(const ScorerParams& params, std::span<const double> x) {
    check_shape(params, x.size(), "pmis_score");
    return score_batch(params, x).front();
}

AdamState AdamState::for_params(const ScorerParams& params) {
    AdamState state;
    state.m = ScorerParams::zeros(params.d, params.h1, params.h2, params.cap);
    state.v = ScorerParams::zeros(params.d, params.h1, params.h2, params.cap);
    return state;
}

void adamw_step(ScorerParams& params, const ScorerParams& grads, AdamState& state, double lr) {
    if (!(lr > 0.0)) fail(ErrorKind::usage, "learning rate must be positive");
    auto p = params.tensors();
    auto g = grads.tensors();
    auto m = state.m.tensors();
    auto v = state.v.tensors();
    for (std::size_t t = 0; t < ScorerParams::tensor_count; ++t) {
        if (g[t].size() != p[t].size() || m[t].size() != p[t].size() || v[t].size() != p[t].size()) {
            fail(ErrorKind::usage, "adamw_step: shape mismatch");
        }
        for (double x : g[t]) {
            if (!std::isfinite(x)) fail(ErrorKind::divergence, "diverged: non-finite gradient");
        }
    }

    state.step_count += 1;
    const double step = static_cast<double>(state.step_count);
    const double correction1 = 1.0 - std::pow(state.beta1, step);
    const double correction2 = 1.0 - std::pow(state.beta2, step);
    const double decay = 1.0 - lr * state.weight_decay;
    for (std::size_t t = 0; t < ScorerParams::tensor_count; ++t) {
        for (std::size_t k = 0; k < p[t].size(); ++k) {
            const double gk = g[t][k];
            m[t][k] = state.beta1 * m[t][k] + (1.0 - state.beta1) * gk;
            v[t][k] = state.beta2 * v[t][k] + (1.0 - state.beta2) * gk * gk;
            const double m_hat = m[t][k] / correction1;
            const double v_hat = v[t][k] / correction2;
            p[t][k] = p[t][k] * decay - lr * m_hat / (std::sqrt(v_hat) + state.eps);
        }
    }
    params.generation += 1;
}

double learning_rate(long d, double numerator) {
    if (d <= 0) fail(ErrorKind::usage, "embedding dimension must be positive");
    return numerator / static_cast<double>(d);
}

double lipschitz_bound(const ScorerParams& params) {
    auto frob = [](const std::vector<double>& w) {
        double s = 0.0;
        for (double x : w) s += x * x;
        return std::sqrt(s);
    };
    const double prelu1 = std::max(1.0, std::abs(params.a1));
    const double prelu2 = std::max(1.0, std::abs(params.a2));
    return frob(params.w3) * prelu2 * frob(params.w2) * prelu1 * frob(params.w1);
}

}  // namespace pmilab
