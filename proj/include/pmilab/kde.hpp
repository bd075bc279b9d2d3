#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace pmilab {

/// Log-density floor, log(exp(-745)).
inline constexpr double kKdeLogFloor = -745.0;

enum class BandwidthRule { scott, cross_validated };

/// Product-Gaussian kernel density estimate over the rows of a point
/// matrix. Bandwidth along dimension k is factor * std_k of the points.
class GaussianKde {
public:
    GaussianKde() = default;

    /// points is rows x dim, row-major; rows >= 2.
    GaussianKde(std::vector<double> points, std::size_t dim, double factor);

    /// Scott's factor n^(-1/(dim+4)).
    static double scott_factor(std::size_t n, std::size_t dim);

    std::size_t dim() const noexcept { return dim_; }
    std::size_t size() const noexcept { return dim_ == 0 ? 0 : points_.size() / dim_; }
    double factor() const noexcept { return factor_; }
    std::span<const double> bandwidths() const noexcept { return bandwidths_; }

    /// log p(x), not floored.
    double log_density(std::span<const double> x) const;

private:
    std::vector<double> points_;
    std::size_t dim_ = 0;
    double factor_ = 1.0;
    std::vector<double> bandwidths_;
    std::vector<double> inv_bandwidths_;
    double log_norm_ = 0.0;
};

/// Scott factor scaled by the multiplier from {0.25, 0.5, 0.75, 1, 1.5, 2}
/// that maximizes 5-fold held-out log-likelihood (on at most 2000 points).
double cross_validated_factor(std::span<const double> points, std::size_t dim);

struct KdeOptions {
    bool use_pca = false;
    std::size_t pca_dims = 128;
    BandwidthRule bandwidth = BandwidthRule::scott;
};

/// Standardize on pooled data, optionally project onto the leading
/// principal directions, then fit one KDE per class.
struct KdeModel {
    std::vector<std::size_t> kept_dims;  // zero-variance input dims are dropped
    std::vector<double> center;          // per kept dim
    std::vector<double> scale;           // per kept dim
    /// kept_dims.size() x out_dim, row-major, orthonormal columns; empty
    /// when no projection is applied.
    std::vector<double> projection;
    std::size_t out_dim = 0;
    GaussianKde pos;
    GaussianKde neg;

    /// Maps an input vector into the space the densities live in.
    std::vector<double> transform(std::span<const double> x) const;
};

/// pos and neg are row-major matrices with `dim` columns.
KdeModel kde_fit(std::span<const double> pos, std::span<const double> neg, std::size_t dim,
                 const KdeOptions& options = {});

/// log p+(x) - log p-(x), each side floored at kKdeLogFloor.
double kde_score(const KdeModel& model, std::span<const double> x);

/// log p+(x) in the original input units (standardization Jacobian
/// included). Only a true density when no projection is applied.
double kde_log_density_pos(const KdeModel& model, std::span<const double> x);

/// Joint-versus-marginals form: log p(c, r) - log p(c) - log p(r), with the
/// context occupying the first ctx_dim input columns. Fit on positives.
struct KdeJointModel {
    std::size_t ctx_dim = 0;
    std::vector<double> center;
    std::vector<double> scale;
    GaussianKde joint;
    GaussianKde ctx;
    GaussianKde resp;
};

KdeJointModel kde_fit_joint(std::span<const double> pos, std::size_t dim, std::size_t ctx_dim,
                            BandwidthRule bandwidth = BandwidthRule::scott);

double kde_score(const KdeJointModel& model, std::span<const double> x);

}  // namespace pmilab
