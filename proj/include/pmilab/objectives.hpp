#pragma once

#include <span>
#include <vector>

#include "pmilab/core.hpp"

namespace pmilab {

/// Scores of one training batch. When negs_per_pos > 0 the negatives of
/// positive p occupy neg[p * negs_per_pos, (p + 1) * negs_per_pos).
struct ScoreBatch {
    std::vector<double> pos;
    std::vector<double> neg;
    std::size_t negs_per_pos = 0;
};

/// Loss value with its gradient for every positive and negative score.
struct LossResult {
    double loss = 0.0;
    std::vector<double> pos_grad;
    std::vector<double> neg_grad;
};

/// -(E+[s] - E-[exp(s)]), the dual KL objective with its constant dropped.
LossResult pmiscore_loss(const ScoreBatch& batch);

/// -(E+[s] - log E-[exp(s)]).
LossResult mine_loss(const ScoreBatch& batch);

/// -log(exp(s0) / (exp(s0) + sum_k exp(neg_k))) for a single positive.
LossResult infonce_loss(double pos_score, std::span<const double> neg_scores);

/// InfoNCE averaged over the positives of a grouped batch.
LossResult infonce_loss(const ScoreBatch& batch);

/// -(E+[df(D)] - E-[f*(df(D))]) with D = exp(s), for the f listed by kind.
/// total_variation has zero gradient almost everywhere.
LossResult fdiv_loss(FKind kind, const ScoreBatch& batch);

LossResult objective_loss(const Objective& objective, const ScoreBatch& batch);

/// False for objectives that only make sense for evaluation
/// (total variation has no useful gradient).
bool is_trainable(const Objective& objective);

}  // namespace pmilab
