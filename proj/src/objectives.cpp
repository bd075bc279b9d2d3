#include "pmilab/objectives.hpp"

#include <cmath>
#include <numbers>

#include "pmilab/error.hpp"

namespace pmilab {

namespace {

void require_sides(const ScoreBatch& batch, const char* name) {
    if (batch.pos.empty() || batch.neg.empty()) {
        fail(ErrorKind::data, std::string(name) + ": positive and negative scores are both required");
    }
}

// log(1 + e^s) without overflow.
double softplus(double s) { return s > 0.0 ? s + std::log1p(std::exp(-s)) : std::log1p(std::exp(s)); }

double sigmoid(double s) {
    if (s >= 0.0) return 1.0 / (1.0 + std::exp(-s));
    const double e = std::exp(s);
    return e / (1.0 + e);
}

double sign(double s) { return s > 0.0 ? 1.0 : (s < 0.0 ? -1.0 : 0.0); }

struct FPair {
    double value;
    double derivative;
};

// df(exp(s)) and its derivative in s.
FPair positive_term(FKind kind, double s) {
    switch (kind) {
        case FKind::kl: return {s + 1.0, 1.0};
        case FKind::pearson_chi2: return {2.0 * (std::exp(s) - 1.0), 2.0 * std::exp(s)};
        case FKind::jensen_shannon:
            // log(2D / (1 + D)) = log 2 + s - softplus(s)
            return {std::numbers::ln2 + s - softplus(s), 1.0 - sigmoid(s)};
        case FKind::squared_hellinger:
            return {1.0 - std::exp(-0.5 * s), 0.5 * std::exp(-0.5 * s)};
        case FKind::total_variation: return {sign(s), 0.0};
    }
    fail(ErrorKind::usage, "unsupported f-divergence kind");
}

// f*(df(exp(s))) and its derivative in s.
FPair negative_term(FKind kind, double s) {
    switch (kind) {
        case FKind::kl: return {std::exp(s), std::exp(s)};
        case FKind::pearson_chi2: return {std::exp(2.0 * s) - 1.0, 2.0 * std::exp(2.0 * s)};
        case FKind::jensen_shannon:
            // -log(2 / (1 + D)) = softplus(s) - log 2
            return {softplus(s) - std::numbers::ln2, sigmoid(s)};
        case FKind::squared_hellinger:
            return {std::exp(0.5 * s) - 1.0, 0.5 * std::exp(0.5 * s)};
        case FKind::total_variation: return {sign(s), 0.0};
    }
    fail(ErrorKind::usage, "unsupported f-divergence kind");
}

}  // namespace

LossResult pmiscore_loss(const ScoreBatch& batch) {
    require_sides(batch, "pmiscore_loss");
    const double np = static_cast<double>(batch.pos.size());
    const double nn = static_cast<double>(batch.neg.size());
    LossResult out;
    out.pos_grad.assign(batch.pos.size(), -1.0 / np);
    out.neg_grad.resize(batch.neg.size());
    double exp_sum = 0.0;
    for (std::size_t k = 0; k < batch.neg.size(); ++k) {
        const double e = std::exp(batch.neg[k]);
        exp_sum += e;
        out.neg_grad[k] = e / nn;
    }
    out.loss = -(mean(batch.pos) - exp_sum / nn);
    return out;
}

LossResult mine_loss(const ScoreBatch& batch) {
    require_sides(batch, "mine_loss");
    const double np = static_cast<double>(batch.pos.size());
    const double nn = static_cast<double>(batch.neg.size());
    const double lse = logsumexp(batch.neg);
    LossResult out;
    out.pos_grad.assign(batch.pos.size(), -1.0 / np);
    out.neg_grad.resize(batch.neg.size());
    for (std::size_t k = 0; k < batch.neg.size(); ++k) out.neg_grad[k] = std::exp(batch.neg[k] - lse);
    out.loss = -(mean(batch.pos) - (lse - std::log(nn)));
    return out;
}

LossResult infonce_loss(double pos_score, std::span<const double> neg_scores) {
    if (neg_scores.empty()) fail(ErrorKind::data, "infonce_loss: at least one negative required");
    std::vector<double> all;
    all.reserve(neg_scores.size() + 1);
    all.push_back(pos_score);
    all.insert(all.end(), neg_scores.begin(), neg_scores.end());
    const double lse = logsumexp(all);
    LossResult out;
    out.loss = lse - pos_score;
    out.pos_grad = {std::exp(pos_score - lse) - 1.0};
    out.neg_grad.resize(neg_scores.size());
    for (std::size_t k = 0; k < neg_scores.size(); ++k) out.neg_grad[k] = std::exp(neg_scores[k] - lse);
    return out;
}

LossResult infonce_loss(const ScoreBatch& batch) {
    require_sides(batch, "infonce_loss");
    const std::size_t per = batch.negs_per_pos;
    if (per == 0 || batch.neg.size() != batch.pos.size() * per) {
        fail(ErrorKind::data, "infonce_loss: negatives must be grouped per positive");
    }
    const double np = static_cast<double>(batch.pos.size());
    LossResult out;
    out.pos_grad.resize(batch.pos.size());
    out.neg_grad.resize(batch.neg.size());
    for (std::size_t p = 0; p < batch.pos.size(); ++p) {
        const auto group = std::span<const double>(batch.neg).subspan(p * per, per);
        const LossResult one = infonce_loss(batch.pos[p], group);
        out.loss += one.loss / np;
        out.pos_grad[p] = one.pos_grad[0] / np;
        for (std::size_t k = 0; k < per; ++k) out.neg_grad[p * per + k] = one.neg_grad[k] / np;
    }
    return out;
}

LossResult fdiv_loss(FKind kind, const ScoreBatch& batch) {
    require_sides(batch, "fdiv_loss");
    const double np = static_cast<double>(batch.pos.size());
    const double nn = static_cast<double>(batch.neg.size());
    LossResult out;
    out.pos_grad.resize(batch.pos.size());
    out.neg_grad.resize(batch.neg.size());
    double pos_sum = 0.0;
    double neg_sum = 0.0;
    for (std::size_t k = 0; k < batch.pos.size(); ++k) {
        const FPair t = positive_term(kind, batch.pos[k]);
        pos_sum += t.value;
        out.pos_grad[k] = -t.derivative / np;
    }
    for (std::size_t k = 0; k < batch.neg.size(); ++k) {
        const FPair t = negative_term(kind, batch.neg[k]);
        neg_sum += t.value;
        out.neg_grad[k] = t.derivative / nn;
    }
    out.loss = -(pos_sum / np - neg_sum / nn);
    return out;
}

LossResult objective_loss(const Objective& objective, const ScoreBatch& batch) {
    switch (objective.kind) {
        case ObjectiveKind::pmiscore: return pmiscore_loss(batch);
        case ObjectiveKind::mine: return mine_loss(batch);
        case ObjectiveKind::infonce: return infonce_loss(batch);
        case ObjectiveKind::fdiv: return fdiv_loss(objective.fkind, batch);
    }
    fail(ErrorKind::usage, "unknown objective");
}

bool is_trainable(const Objective& objective) {
    return !(objective.kind == ObjectiveKind::fdiv && objective.fkind == FKind::total_variation);
}

}  // namespace pmilab
