#include "iprior/metric.hpp"

#include "iprior/parallel.hpp"

#include <cmath>

namespace iprior {

std::string_view to_string(MetricKind kind) noexcept {
    switch (kind) {
    case MetricKind::euclidean: return "euclidean";
    case MetricKind::mahalanobis: return "mahalanobis";
    case MetricKind::sobolev_curve: return "sobolev_curve";
    }
    return "?";
}

MetricKind parse_metric_kind(std::string_view text) {
    if (text == "euclidean")
        return MetricKind::euclidean;
    if (text == "mahalanobis")
        return MetricKind::mahalanobis;
    if (text == "sobolev_curve" || text == "sobolev")
        return MetricKind::sobolev_curve;
    raise(ErrorCode::spec_error, "unknown metric '" + std::string(text) + "'");
}

namespace {

Matrix sample_covariance(const Matrix &x) {
    const Index n = x.rows();
    const Eigen::RowVectorXd mean = x.colwise().mean();
    const Matrix centered = x.rowwise() - mean;
    return (centered.transpose() * centered) / static_cast<double>(std::max<Index>(n - 1, 1));
}

} // namespace

Embedding Embedding::fit(const Metric &metric, const CovariateColumn &train) {
    Embedding e;
    e.kind_ = metric.kind;
    if (train.kind() == ColumnKind::categorical)
        raise(ErrorCode::spec_error, "column '" + train.name() + "': metrics need numeric covariates");

    switch (metric.kind) {
    case MetricKind::euclidean:
        break;
    case MetricKind::sobolev_curve:
        if (train.kind() != ColumnKind::functional_curve)
            raise(ErrorCode::spec_error, "column '" + train.name() + "': sobolev_curve needs a functional column");
        if (train.grid().size() < 2)
            raise(ErrorCode::spec_error, "column '" + train.name() + "': sobolev_curve needs at least 2 grid points");
        break;
    case MetricKind::mahalanobis: {
        if (train.kind() != ColumnKind::real_vector)
            raise(ErrorCode::spec_error, "column '" + train.name() + "': mahalanobis needs a real vector column");
        const Index d = train.dimension();
        if (metric.covariance) {
            e.covariance_ = *metric.covariance;
            if (e.covariance_.rows() != d || e.covariance_.cols() != d)
                raise(ErrorCode::spec_error, "column '" + train.name() + "': S has the wrong shape");
            Eigen::LLT<Matrix> llt(e.covariance_);
            if (llt.info() != Eigen::Success)
                raise(ErrorCode::spec_error, "column '" + train.name() + "': supplied S is singular or indefinite");
            e.lower_factor_ = llt.matrixL();
            break;
        }
        e.covariance_ = sample_covariance(train.values());
        const double trace = e.covariance_.trace();
        if (!(trace > 0.0))
            raise(ErrorCode::spec_error, "column '" + train.name() + "': sample covariance is singular (zero trace)");
        Eigen::SelfAdjointEigenSolver<Matrix> eig(e.covariance_, Eigen::EigenvaluesOnly);
        const double lo = eig.eigenvalues().minCoeff();
        const double hi = eig.eigenvalues().maxCoeff();
        if (!(lo > 1e-12 * hi)) {
            e.covariance_.diagonal().array() += 1e-8 * trace;
            e.ridge_applied_ = true;
        }
        Eigen::LLT<Matrix> llt(e.covariance_);
        if (llt.info() != Eigen::Success)
            raise(ErrorCode::spec_error, "column '" + train.name() + "': sample covariance is singular");
        e.lower_factor_ = llt.matrixL();
        break;
    }
    }
    return e;
}

Matrix Embedding::coordinates(const CovariateColumn &col) const {
    switch (kind_) {
    case MetricKind::euclidean:
        return col.values();
    case MetricKind::mahalanobis:
        // rows z = L⁻¹ x  ⇔  Zᵀ = L⁻¹ Xᵀ
        return lower_factor_.triangularView<Eigen::Lower>().solve(col.values().transpose()).transpose();
    case MetricKind::sobolev_curve: {
        const auto &grid = col.grid();
        const Index m = static_cast<Index>(grid.size());
        if (m < 2)
            raise(ErrorCode::spec_error, "sobolev_curve needs at least 2 grid points");
        Matrix z(col.size(), m - 1);
        for (Index k = 0; k + 1 < m; ++k) {
            const double dt = grid[static_cast<std::size_t>(k + 1)] - grid[static_cast<std::size_t>(k)];
            z.col(k) = (col.values().col(k + 1) - col.values().col(k)) / std::sqrt(dt);
        }
        return z;
    }
    }
    return col.values();
}

Matrix cross_distance(const Matrix &a, const Matrix &b) {
    if (a.cols() != b.cols())
        raise(ErrorCode::schema_error, "distance: coordinate dimensions differ");
    Matrix out(a.rows(), b.rows());
    parallel::fill(out, [&](Index i, Index j) { return (a.row(i) - b.row(j)).norm(); });
    return out;
}

Matrix self_distance(const Matrix &a) {
    Matrix out(a.rows(), a.rows());
    parallel::fill_symmetric(out, [&](Index i, Index j) { return i == j ? 0.0 : (a.row(i) - a.row(j)).norm(); });
    return out;
}

namespace serial {

Matrix cross_distance(const Matrix &a, const Matrix &b) {
    if (a.cols() != b.cols())
        raise(ErrorCode::schema_error, "distance: coordinate dimensions differ");
    Matrix out(a.rows(), b.rows());
    parallel::serial::fill(out, [&](Index i, Index j) { return (a.row(i) - b.row(j)).norm(); });
    return out;
}

Matrix self_distance(const Matrix &a) {
    Matrix out(a.rows(), a.rows());
    parallel::serial::fill_symmetric(out,
                                     [&](Index i, Index j) { return i == j ? 0.0 : (a.row(i) - a.row(j)).norm(); });
    return out;
}

} // namespace serial

Matrix pairwise_distance(const CovariateColumn &col, const Metric &metric) {
    const auto emb = Embedding::fit(metric, col);
    return self_distance(emb.coordinates(col));
}

Matrix inner_product_matrix(const CovariateColumn &col, const Metric &metric) {
    const auto emb = Embedding::fit(metric, col);
    const Matrix z = emb.coordinates(col);
    Matrix g = z * z.transpose();
    return (g + g.transpose()) * 0.5;
}

} // namespace iprior
