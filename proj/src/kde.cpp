#include "pmilab/kde.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <atomic>
#include <cmath>
#include <numbers>
#include <spdlog/spdlog.h>

#include "pmilab/core.hpp"
#include "pmilab/error.hpp"

namespace pmilab {

namespace {

// Per-side spread below this (in standardized units) is treated as this.
constexpr double kMinSpread = 1e-3;

double floored(double log_p) {
    if (log_p >= kKdeLogFloor) return log_p;
    static std::atomic<bool> warned{false};
    if (!warned.exchange(true)) {
        spdlog::warn("kde: density below exp({}) clamped to the floor", kKdeLogFloor);
    }
    return kKdeLogFloor;
}

struct Standardizer {
    std::vector<std::size_t> kept;
    std::vector<double> center;
    std::vector<double> scale;
};

Standardizer fit_standardizer(std::span<const double> a, std::span<const double> b, std::size_t dim) {
    const std::size_t rows = (a.size() + b.size()) / dim;
    Standardizer s;
    for (std::size_t k = 0; k < dim; ++k) {
        double sum = 0.0;
        for (std::size_t r = 0; r < a.size() / dim; ++r) sum += a[r * dim + k];
        for (std::size_t r = 0; r < b.size() / dim; ++r) sum += b[r * dim + k];
        const double mu = sum / static_cast<double>(rows);
        double ss = 0.0;
        for (std::size_t r = 0; r < a.size() / dim; ++r) ss += (a[r * dim + k] - mu) * (a[r * dim + k] - mu);
        for (std::size_t r = 0; r < b.size() / dim; ++r) ss += (b[r * dim + k] - mu) * (b[r * dim + k] - mu);
        const double sd = std::sqrt(ss / static_cast<double>(rows));
        if (!(sd > 0.0)) {
            spdlog::warn("kde: dropping zero-variance dimension {}", k);
            continue;
        }
        s.kept.push_back(k);
        s.center.push_back(mu);
        s.scale.push_back(sd);
    }
    if (s.kept.empty()) fail(ErrorKind::data, "kde: every dimension has zero variance");
    return s;
}

std::vector<double> apply(const Standardizer& s, std::span<const double> m, std::size_t dim) {
    const std::size_t rows = m.size() / dim;
    const std::size_t out = s.kept.size();
    std::vector<double> z(rows * out);
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t k = 0; k < out; ++k) {
            z[r * out + k] = (m[r * dim + s.kept[k]] - s.center[k]) / s.scale[k];
        }
    }
    return z;
}

std::vector<double> columns(std::span<const double> m, std::size_t dim, std::size_t from,
                            std::size_t to) {
    const std::size_t rows = m.size() / dim;
    std::vector<double> out;
    out.reserve(rows * (to - from));
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t k = from; k < to; ++k) out.push_back(m[r * dim + k]);
    }
    return out;
}

double choose_factor(std::span<const double> points, std::size_t dim, BandwidthRule rule) {
    if (rule == BandwidthRule::cross_validated) return cross_validated_factor(points, dim);
    return GaussianKde::scott_factor(points.size() / dim, dim);
}

}  // namespace

GaussianKde::GaussianKde(std::vector<double> points, std::size_t dim, double factor)
    : points_(std::move(points)), dim_(dim), factor_(factor) {
    if (dim_ == 0 || points_.size() % dim_ != 0) fail(ErrorKind::data, "kde: malformed point matrix");
    const std::size_t n = points_.size() / dim_;
    if (n < 2) fail(ErrorKind::data, "kde: at least 2 samples per side required");
    if (!(factor_ > 0.0)) fail(ErrorKind::usage, "kde: bandwidth factor must be positive");

    bandwidths_.resize(dim_);
    inv_bandwidths_.resize(dim_);
    double log_h = 0.0;
    for (std::size_t k = 0; k < dim_; ++k) {
        double sum = 0.0;
        for (std::size_t r = 0; r < n; ++r) sum += points_[r * dim_ + k];
        const double mu = sum / static_cast<double>(n);
        double ss = 0.0;
        for (std::size_t r = 0; r < n; ++r) ss += (points_[r * dim_ + k] - mu) * (points_[r * dim_ + k] - mu);
        const double sd = std::max(std::sqrt(ss / static_cast<double>(n - 1)), kMinSpread);
        bandwidths_[k] = factor_ * sd;
        inv_bandwidths_[k] = 1.0 / bandwidths_[k];
        log_h += std::log(bandwidths_[k]);
    }
    log_norm_ = -log_h - 0.5 * static_cast<double>(dim_) * std::log(2.0 * std::numbers::pi) -
                std::log(static_cast<double>(n));
}

double GaussianKde::scott_factor(std::size_t n, std::size_t dim) {
    return std::pow(static_cast<double>(n), -1.0 / (static_cast<double>(dim) + 4.0));
}

double GaussianKde::log_density(std::span<const double> x) const {
    if (x.size() != dim_) fail(ErrorKind::data, "kde: query has the wrong dimension");
    const std::size_t n = size();
    std::vector<double> exponents(n);
    for (std::size_t r = 0; r < n; ++r) {
        const double* p = points_.data() + r * dim_;
        double q = 0.0;
        for (std::size_t k = 0; k < dim_; ++k) {
            const double u = (x[k] - p[k]) * inv_bandwidths_[k];
            q += u * u;
        }
        exponents[r] = -0.5 * q;
    }
    return logsumexp(exponents) + log_norm_;
}

double cross_validated_factor(std::span<const double> points, std::size_t dim) {
    constexpr std::size_t kMaxPoints = 2000;
    constexpr std::size_t kFolds = 5;
    constexpr double kMultipliers[] = {0.25, 0.5, 0.75, 1.0, 1.5, 2.0};

    const std::size_t n_all = points.size() / dim;
    const std::size_t stride = std::max<std::size_t>(1, (n_all + kMaxPoints - 1) / kMaxPoints);
    std::vector<std::size_t> rows;
    for (std::size_t r = 0; r < n_all; r += stride) rows.push_back(r);
    const std::size_t n = rows.size();
    if (n < 2 * kFolds) return GaussianKde::scott_factor(n_all, dim);

    const double scott = GaussianKde::scott_factor(n - n / kFolds, dim);
    double best_factor = scott;
    double best_score = -std::numeric_limits<double>::infinity();
    for (double mult : kMultipliers) {
        double total = 0.0;
        for (std::size_t fold = 0; fold < kFolds; ++fold) {
            std::vector<double> train;
            std::vector<std::size_t> held;
            for (std::size_t idx = 0; idx < n; ++idx) {
                if (idx % kFolds == fold) {
                    held.push_back(rows[idx]);
                } else {
                    const double* p = points.data() + rows[idx] * dim;
                    train.insert(train.end(), p, p + dim);
                }
            }
            const GaussianKde kde(std::move(train), dim, scott * mult);
            for (std::size_t r : held) {
                total += std::max(kde.log_density(points.subspan(r * dim, dim)), kKdeLogFloor);
            }
        }
        if (total > best_score) {
            best_score = total;
            best_factor = mult * GaussianKde::scott_factor(n_all, dim);
        }
    }
    return best_factor;
}

std::vector<double> KdeModel::transform(std::span<const double> x) const {
    std::vector<double> z(kept_dims.size());
    for (std::size_t k = 0; k < kept_dims.size(); ++k) {
        if (kept_dims[k] >= x.size()) fail(ErrorKind::data, "kde: query has the wrong dimension");
        z[k] = (x[kept_dims[k]] - center[k]) / scale[k];
    }
    if (projection.empty()) return z;
    std::vector<double> out(out_dim, 0.0);
    for (std::size_t k = 0; k < z.size(); ++k) {
        for (std::size_t c = 0; c < out_dim; ++c) out[c] += z[k] * projection[k * out_dim + c];
    }
    return out;
}

KdeModel kde_fit(std::span<const double> pos, std::span<const double> neg, std::size_t dim,
                 const KdeOptions& options) {
    if (dim == 0 || pos.size() % dim != 0 || neg.size() % dim != 0) {
        fail(ErrorKind::data, "kde: malformed sample matrices");
    }
    if (pos.size() / dim < 2 || neg.size() / dim < 2) {
        fail(ErrorKind::data, "kde: at least 2 samples per side required");
    }
    const Standardizer st = fit_standardizer(pos, neg, dim);
    KdeModel model;
    model.kept_dims = st.kept;
    model.center = st.center;
    model.scale = st.scale;
    std::vector<double> zpos = apply(st, pos, dim);
    std::vector<double> zneg = apply(st, neg, dim);
    const std::size_t kept = st.kept.size();
    model.out_dim = kept;

    if (options.use_pca && kept > options.pca_dims) {
        const std::size_t n_pos = zpos.size() / kept;
        const std::size_t n_neg = zneg.size() / kept;
        Eigen::MatrixXd pooled(n_pos + n_neg, kept);
        for (std::size_t r = 0; r < n_pos; ++r) {
            for (std::size_t k = 0; k < kept; ++k) pooled(r, k) = zpos[r * kept + k];
        }
        for (std::size_t r = 0; r < n_neg; ++r) {
            for (std::size_t k = 0; k < kept; ++k) pooled(n_pos + r, k) = zneg[r * kept + k];
        }
        // Standardized columns are already centred.
        const Eigen::MatrixXd cov = (pooled.transpose() * pooled) / static_cast<double>(pooled.rows());
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
        const std::size_t out = options.pca_dims;
        model.out_dim = out;
        model.projection.resize(kept * out);
        // Eigenvalues come back ascending; keep the largest `out`.
        for (std::size_t c = 0; c < out; ++c) {
            const auto col = solver.eigenvectors().col(static_cast<Eigen::Index>(kept - 1 - c));
            for (std::size_t k = 0; k < kept; ++k) model.projection[k * out + c] = col(static_cast<Eigen::Index>(k));
        }
        auto project = [&](const std::vector<double>& z) {
            const std::size_t rows = z.size() / kept;
            std::vector<double> p(rows * out, 0.0);
            for (std::size_t r = 0; r < rows; ++r) {
                for (std::size_t k = 0; k < kept; ++k) {
                    const double v = z[r * kept + k];
                    for (std::size_t c = 0; c < out; ++c) p[r * out + c] += v * model.projection[k * out + c];
                }
            }
            return p;
        };
        zpos = project(zpos);
        zneg = project(zneg);
    }

    const std::size_t d = model.out_dim;
    const double fpos = choose_factor(zpos, d, options.bandwidth);
    const double fneg = choose_factor(zneg, d, options.bandwidth);
    model.pos = GaussianKde(std::move(zpos), d, fpos);
    model.neg = GaussianKde(std::move(zneg), d, fneg);
    return model;
}

double kde_score(const KdeModel& model, std::span<const double> x) {
    const std::vector<double> z = model.transform(x);
    return floored(model.pos.log_density(z)) - floored(model.neg.log_density(z));
}

double kde_log_density_pos(const KdeModel& model, std::span<const double> x) {
    double log_jacobian = 0.0;
    for (double s : model.scale) log_jacobian -= std::log(s);
    return floored(model.pos.log_density(model.transform(x)) + log_jacobian);
}

KdeJointModel kde_fit_joint(std::span<const double> pos, std::size_t dim, std::size_t ctx_dim,
                            BandwidthRule bandwidth) {
    if (dim == 0 || pos.size() % dim != 0) fail(ErrorKind::data, "kde: malformed sample matrix");
    if (ctx_dim == 0 || ctx_dim >= dim) fail(ErrorKind::usage, "kde: context width must split the vector");
    if (pos.size() / dim < 2) fail(ErrorKind::data, "kde: at least 2 samples required");

    const Standardizer st = fit_standardizer(pos, {}, dim);
    KdeJointModel model;
    model.ctx_dim = ctx_dim;
    model.center.assign(dim, 0.0);
    model.scale.assign(dim, 1.0);
    std::vector<bool> keep(dim, false);
    for (std::size_t k = 0; k < st.kept.size(); ++k) {
        keep[st.kept[k]] = true;
        model.center[st.kept[k]] = st.center[k];
        model.scale[st.kept[k]] = st.scale[k];
    }
    // Dropped dims stay in the layout but are constant, so they are
    // removed from the fitted densities by tracking kept counts per part.
    std::size_t kept_ctx = 0;
    for (std::size_t k = 0; k < ctx_dim; ++k) kept_ctx += keep[k] ? 1 : 0;
    const std::size_t kept_all = st.kept.size();
    if (kept_ctx == 0 || kept_ctx == kept_all) {
        fail(ErrorKind::data, "kde: context or response part has no varying dimension");
    }
    std::vector<double> z = apply(st, pos, dim);
    model.joint = GaussianKde(z, kept_all, choose_factor(z, kept_all, bandwidth));
    auto zc = columns(z, kept_all, 0, kept_ctx);
    auto zr = columns(z, kept_all, kept_ctx, kept_all);
    model.ctx = GaussianKde(zc, kept_ctx, choose_factor(zc, kept_ctx, bandwidth));
    model.resp = GaussianKde(zr, kept_all - kept_ctx, choose_factor(zr, kept_all - kept_ctx, bandwidth));
    for (std::size_t k = 0; k < dim; ++k) {
        if (!keep[k]) model.scale[k] = 0.0;  // marks a dropped dim
    }
    return model;
}

double kde_score(const KdeJointModel& model, std::span<const double> x) {
    if (x.size() != model.scale.size()) fail(ErrorKind::data, "kde: query has the wrong dimension");
    std::vector<double> z;
    z.reserve(x.size());
    for (std::size_t k = 0; k < x.size(); ++k) {
        if (model.scale[k] > 0.0) z.push_back((x[k] - model.center[k]) / model.scale[k]);
    }
    const std::size_t kc = model.ctx.dim();
    const std::span<const double> zs(z);
    return floored(model.joint.log_density(zs)) - floored(model.ctx.log_density(zs.first(kc))) -
           floored(model.resp.log_density(zs.subspan(kc)));
}

}  // namespace pmilab
