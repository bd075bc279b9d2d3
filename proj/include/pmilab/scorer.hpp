#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "pmilab/rng.hpp"

namespace pmilab {

/// Weights of the pair scorer
///
///     Linear(d, h1) -> PReLU -> Linear(h1, h2) -> PReLU -> Linear(h2, 1) -> softcap
///
/// Weight matrices are row-major with one row per input unit, so w1 holds
/// d rows of h1 entries. PReLU slopes are shared per layer. The same struct
/// carries gradients and optimizer moments.
struct ScorerParams {
    std::size_t d = 0;
    std::size_t h1 = 0;
    std::size_t h2 = 0;
    std::vector<double> w1, b1;
    double a1 = 0.25;
    std::vector<double> w2, b2;
    double a2 = 0.25;
    std::vector<double> w3;
    double b3 = 0.0;
    double cap = 20.0;
    /// Bumped by every optimizer step; activation tapes record it.
    std::uint64_t generation = 0;

    /// All-zero parameters of the given shape.
    static ScorerParams zeros(std::size_t d, std::size_t h1 = 256, std::size_t h2 = 128,
                              double cap = 20.0);

    static constexpr std::size_t tensor_count = 8;
    /// Trainable tensors in fixed order: w1, b1, a1, w2, b2, a2, w3, b3.
    std::array<std::span<double>, tensor_count> tensors();
    std::array<std::span<const double>, tensor_count> tensors() const;

    std::size_t parameter_count() const;
};

bool all_finite(const ScorerParams& params);

/// Fan-in scaled uniform weights U(-1/sqrt(fan_in), 1/sqrt(fan_in)), zero
/// biases, PReLU slopes 0.25.
ScorerParams init_params(std::size_t d, Rng& rng, std::size_t h1 = 256, std::size_t h2 = 128,
                         double cap = 20.0);

double softcap(double x, double cap);

/// Activations of a batch of forward passes, kept for backward.
struct ActivationTape {
    std::size_t rows = 0;
    std::uint64_t generation = 0;
    std::vector<double> x, z1, a1, z2, a2, z3;
};

/// Scores every row of `inputs` (rows x d, row-major).
std::vector<double> forward_batch(const ScorerParams& params, std::span<const double> inputs,
                                  ActivationTape& tape);

/// Scores without recording a tape.
std::vector<double> score_batch(const ScorerParams& params, std::span<const double> inputs);

struct ForwardResult {
    double score;
    ActivationTape tape;
};

ForwardResult forward(const ScorerParams& params, std::span<const double> x);

/// Adds d(sum_r dscore[r] * score_r)/d(theta) into `grads` (which must be
/// shaped like params). When `input_grads` is non-empty it receives the
/// gradient with respect to each input row. Throws on a stale tape.
void backward_batch(const ScorerParams& params, const ActivationTape& tape,
                    std::span<const double> dscores, ScorerParams& grads,
                    std::span<double> input_grads = {});

struct Gradients {
    ScorerParams params;
    std::vector<double> input;
};

Gradients backward(const ScorerParams& params, const ActivationTape& tape, double dscore);

/// Pointwise mutual information estimate for one pair embedding: the
/// softcapped network output, already in log-ratio units.
double pmis_score(const ScorerParams& params, std::span<const double> x);

struct AdamState {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.01;
    std::uint64_t step_count = 0;
    ScorerParams m;
    ScorerParams v;

    static AdamState for_params(const ScorerParams& params);
};

/// Decoupled weight decay followed by a bias-corrected Adam update.
/// Throws Error(divergence) if any gradient is non-finite.
void adamw_step(ScorerParams& params, const ScorerParams& grads, AdamState& state, double lr);

/// numerator / d, with numerator 1e-3 * 1024 by default.
double learning_rate(long d, double numerator = 1e-3 * 1024.0);

/// Upper bound on the Lipschitz constant of the scorer in the input,
/// from Frobenius norms of the weights.
double lipschitz_bound(const ScorerParams& params);

}  // namespace pmilab
