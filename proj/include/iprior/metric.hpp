#pragma once

#include "iprior/data.hpp"

#include <optional>

namespace iprior {

enum class MetricKind { euclidean, mahalanobis, sobolev_curve };

std::string_view to_string(MetricKind kind) noexcept;
MetricKind parse_metric_kind(std::string_view text);

struct Metric {
    MetricKind kind = MetricKind::euclidean;
    /// Mahalanobis S; the training sample covariance when absent.
    std::optional<Matrix> covariance;
};

/// Frozen metric state. Maps each observation to coordinates z such that the
/// metric inner product is the Euclidean dot product of coordinates:
///   euclidean      z = x
///   mahalanobis    z = L⁻¹x with S = LLᵀ
///   sobolev_curve  z_k = √Δt_k · (x_{k+1} − x_k)/Δt_k
/// The last is the trapezoid rule applied to the piecewise-constant
/// forward-difference derivative, i.e. ∫ ẋ ẋ′ dt on the grid.
class Embedding {
public:
    Embedding() = default;

    static Embedding fit(const Metric &metric, const CovariateColumn &train);

    Matrix coordinates(const CovariateColumn &col) const;

    MetricKind kind() const noexcept { return kind_; }
    /// The S actually used (after any ridge), Mahalanobis only.
    const Matrix &covariance() const noexcept { return covariance_; }
    bool ridge_applied() const noexcept { return ridge_applied_; }

private:
    MetricKind kind_ = MetricKind::euclidean;
    Matrix covariance_;
    Matrix lower_factor_;
    bool ridge_applied_ = false;
};

/// ‖z_i − z′_j‖ over coordinate rows.
Matrix cross_distance(const Matrix &a, const Matrix &b);
/// Symmetric zero-diagonal distance matrix of one coordinate set.
Matrix self_distance(const Matrix &a);

namespace serial {
Matrix cross_distance(const Matrix &a, const Matrix &b);
Matrix self_distance(const Matrix &a);
} // namespace serial

Matrix pairwise_distance(const CovariateColumn &col, const Metric &metric);
Matrix inner_product_matrix(const CovariateColumn &col, const Metric &metric);

} // namespace iprior
