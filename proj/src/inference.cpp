#include "iprior/inference.hpp"

#include "iprior/parallel.hpp"

#include <cmath>
#include <numbers>

namespace iprior {

void symmetric_eigen(const Matrix &h, Matrix &basis, Vector &eigenvalues) {
    if (h.rows() != h.cols())
        raise(ErrorCode::spec_error, "eigen: matrix is not square");
    if (!h.allFinite())
        raise(ErrorCode::numerical_error, "eigen: non-finite kernel matrix");
    Eigen::SelfAdjointEigenSolver<Matrix> eig(h);
    if (eig.info() != Eigen::Success)
        raise(ErrorCode::numerical_error, "eigen: symmetric eigendecomposition did not converge");
    basis = eig.eigenvectors();
    eigenvalues = eig.eigenvalues();
}

MarginalCovariance MarginalCovariance::factor(const Matrix &h, double psi) {
    MarginalCovariance v;
    symmetric_eigen(h, v.basis_, v.h_eigenvalues_);
    v.psi_ = psi;
    v.compute_v();
    return v;
}

MarginalCovariance MarginalCovariance::from_eigen(Matrix basis, Vector h_eigenvalues, double psi) {
    MarginalCovariance v;
    v.basis_ = std::move(basis);
    v.h_eigenvalues_ = std::move(h_eigenvalues);
    v.psi_ = psi;
    v.compute_v();
    return v;
}

MarginalCovariance MarginalCovariance::with_psi(double psi) const {
    return from_eigen(basis_, h_eigenvalues_, psi);
}

void MarginalCovariance::compute_v() {
    if (!(psi_ > 0.0) || !std::isfinite(psi_))
        raise(ErrorCode::numerical_error, "marginal covariance: psi must be positive and finite");
    const Vector d2 = h_eigenvalues_.array().square();
    v_eigenvalues_ = psi_ * d2.array() + 1.0 / psi_;
    if (v_eigenvalues_.allFinite() && (v_eigenvalues_.array() > 0.0).all())
        return;
    const double jitter = 1e-10 * (h_eigenvalues_.size() ? h_eigenvalues_.cwiseAbs().maxCoeff() : 0.0);
    v_eigenvalues_ = psi_ * (d2.array() + jitter) + 1.0 / psi_;
    jittered_ = true;
    log_event("marginal covariance: eigenvalues of V_y not strictly positive; applied jitter " +
              std::to_string(jitter));
    if (!v_eigenvalues_.allFinite() || !(v_eigenvalues_.array() > 0.0).all())
        raise(ErrorCode::numerical_error, "marginal covariance: V_y is not positive definite");
}

Vector MarginalCovariance::solve(const Vector &r) const {
    const Vector rot = basis_.transpose() * r;
    return basis_ * rot.cwiseQuotient(v_eigenvalues_);
}

double MarginalCovariance::log_determinant() const { return v_eigenvalues_.array().log().sum(); }

Vector MarginalCovariance::apply_h(const Vector &x) const {
    const Vector rot = basis_.transpose() * x;
    return basis_ * rot.cwiseProduct(h_eigenvalues_);
}

Matrix MarginalCovariance::h() const {
    Matrix h = basis_ * h_eigenvalues_.asDiagonal() * basis_.transpose();
    return (h + h.transpose()) * 0.5;
}

Matrix MarginalCovariance::inverse() const {
    Matrix inv = basis_ * v_eigenvalues_.cwiseInverse().asDiagonal() * basis_.transpose();
    return (inv + inv.transpose()) * 0.5;
}

Matrix MarginalCovariance::dense() const {
    Matrix v = basis_ * v_eigenvalues_.asDiagonal() * basis_.transpose();
    return (v + v.transpose()) * 0.5;
}

MarginalCovariance marginal_cov(const Matrix &h, double psi) {
    if (!(psi > 0.0))
        raise(ErrorCode::spec_error, "marginal_cov: psi must be positive");
    return MarginalCovariance::factor(h, psi);
}

double log_marginal_likelihood(const MarginalCovariance &v, const Vector &residual) {
    if (residual.size() != v.size())
        raise(ErrorCode::spec_error, "log likelihood: residual length does not match the factorization");
    const Vector rot = v.basis().transpose() * residual;
    const double quad = (rot.array().square() / v.v_eigenvalues().array()).sum();
    const double n = static_cast<double>(residual.size());
    const double value = -0.5 * n * std::log(2.0 * std::numbers::pi) - 0.5 * v.log_determinant() - 0.5 * quad;
    if (!std::isfinite(value))
        raise(ErrorCode::numerical_error, "log likelihood is not finite (log|V_y| = " +
                                              std::to_string(v.log_determinant()) + ", quadratic form = " +
                                              std::to_string(quad) + ")");
    return value;
}

double log_marginal_likelihood(const Matrix &h, double psi, const Vector &y, double f0) {
    return log_marginal_likelihood(marginal_cov(h, psi), y - Vector::Constant(y.size(), f0));
}

double log_marginal_likelihood(const AnovaSpec &spec, const Vector &scales, double psi, const TermCache &cache,
                               const Vector &residual) {
    return log_marginal_likelihood(MarginalCovariance::factor(assemble(spec, scales, cache), psi), residual);
}

Vector posterior_weights(const MarginalCovariance &v, const Vector &residual) {
    const Vector rot = v.basis().transpose() * residual;
    const Vector scaled =
        (v.psi() * v.h_eigenvalues().array() * rot.array() / v.v_eigenvalues().array()).matrix();
    return v.basis() * scaled;
}

LikelihoodGradient log_likelihood_gradient(const AnovaSpec &spec, const Vector &scales, double psi,
                                           const TermCache &cache, const Vector &residual) {
    const Matrix h = assemble(spec, scales, cache);
    const auto v = MarginalCovariance::factor(h, psi);
    const Vector alpha = v.solve(residual);
    const Vector h_alpha = h * alpha;
    // M = H V⁻¹ (symmetric: H and V_y share eigenvectors)
    const Vector ratio = v.h_eigenvalues().cwiseQuotient(v.v_eigenvalues());
    const Matrix m = v.basis() * ratio.asDiagonal() * v.basis().transpose();

    LikelihoodGradient g;
    g.scales.resize(static_cast<Index>(spec.num_scales()));
    for (std::size_t k = 0; k < spec.num_scales(); ++k) {
        const Matrix dh = d_assemble(spec, scales, cache, k);
        const double trace_term = (m.array() * dh.array()).sum();
        g.scales(static_cast<Index>(k)) = -psi * trace_term + psi * (dh * alpha).dot(h_alpha);
    }
    const double inv_psi2 = 1.0 / (psi * psi);
    const double trace_psi =
        ((v.h_eigenvalues().array().square() - inv_psi2) / v.v_eigenvalues().array()).sum();
    const double quad_psi = h_alpha.squaredNorm() - inv_psi2 * alpha.squaredNorm();
    g.log_psi = psi * (-0.5 * trace_psi + 0.5 * quad_psi);
    return g;
}

Posterior posterior_f(const Matrix &cross, double f0, const Vector &weights, const MarginalCovariance &v) {
    if (cross.cols() != v.size() || weights.size() != v.size())
        raise(ErrorCode::schema_error, "posterior: cross kernel does not match the training sample");
    Posterior p;
    p.mean = (cross * weights).array() + f0;
    const Matrix b = cross * v.basis() * v.v_eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal();
    p.covariance = b * b.transpose();
    p.covariance = (p.covariance + p.covariance.transpose()) * 0.5;
    return p;
}

Vector posterior_variance(const Matrix &cross, const MarginalCovariance &v) {
    if (cross.cols() != v.size())
        raise(ErrorCode::schema_error, "posterior: cross kernel does not match the training sample");
    const Matrix b = cross * v.basis() * v.v_eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal();
    return b.rowwise().squaredNorm();
}

double fisher_information(const Vector &row_x, const Vector &row_x_prime, double psi) {
    if (row_x.size() != row_x_prime.size())
        raise(ErrorCode::spec_error, "fisher information: kernel rows differ in length");
    return psi * row_x.dot(row_x_prime);
}

Matrix fisher_information(const Matrix &rows_a, const Matrix &rows_b, double psi) {
    if (rows_a.cols() != rows_b.cols())
        raise(ErrorCode::spec_error, "fisher information: kernel rows differ in length");
    return psi * rows_a * rows_b.transpose();
}

// ---- fitted models -----------------------------------------------------------

std::string_view to_string(FitStatus s) noexcept {
    switch (s) {
    case FitStatus::converged: return "converged";
    case FitStatus::stalled: return "stalled";
    case FitStatus::fixed: return "fixed";
    }
    return "?";
}

void ModelSpec::validate() const {
    anova.validate();
    if (kernels.size() != anova.covariates.size())
        raise(ErrorCode::spec_error, "model: one kernel per covariate required");
    for (const auto v : anova.scale_covariates())
        kernels[v].validate();
}

std::vector<const CovariateColumn *> spec_columns(const ModelSpec &spec, const Dataset &data) {
    std::vector<const CovariateColumn *> cols;
    for (const auto &name : spec.anova.covariates) {
        if (!data.has_column(name))
            raise(ErrorCode::schema_error, "data has no column '" + name + "' required by the model");
        cols.push_back(&data.column(name));
    }
    return cols;
}

std::vector<Matrix> FittedModel::train_grams() const {
    std::vector<Matrix> grams(train_columns.size());
    for (const auto v : spec.anova.scale_covariates())
        grams[v] = gram(spec.kernels[v], train_columns[v]).gram;
    return grams;
}

TermCache FittedModel::train_cache() const { return TermCache(spec.anova, train_grams()); }

Matrix FittedModel::cross_h(const Dataset &points) const {
    std::vector<Matrix> cross(train_columns.size());
    const auto live = spec.anova.scale_covariates();
    for (const auto v : live) {
        const auto &name = spec.anova.covariates[v];
        if (!points.has_column(name))
            raise(ErrorCode::schema_error, "data has no column '" + name + "' required by the model");
        cross[v] = cross_gram(spec.kernels[v], stats[v], train_columns[v], points.column(name));
    }
    if (points.n() == 0)
        return Matrix(0, n());
    return assemble(spec.anova, scales, TermCache(spec.anova, cross));
}

Vector FittedModel::fitted() const {
    return factor.apply_h(weights).array() + f0;
}

FittedModel make_model(const Dataset &data, const ModelSpec &spec, const GramSet &grams, const Vector &scales,
                       double psi) {
    spec.validate();
    data.validate_for_fit();
    FittedModel m;
    m.spec = spec;
    for (const auto *c : spec_columns(spec, data))
        m.train_columns.push_back(*c);
    m.stats = grams.stats;
    m.response_name = data.response_name;
    m.y = data.response;
    m.f0 = data.response.mean();
    m.scales = scales;
    m.psi = psi;
    m.factor = MarginalCovariance::factor(assemble(spec.anova, scales, TermCache(spec.anova, grams.train)), psi);
    m.weights = posterior_weights(m.factor, m.residual());
    m.log_likelihood = log_marginal_likelihood(m.factor, m.residual());
    m.status = FitStatus::fixed;
    return m;
}

FittedModel make_model(const Dataset &data, const ModelSpec &spec, const Vector &scales, double psi) {
    spec.validate();
    const auto cols = spec_columns(spec, data);
    GramSet grams;
    grams.train.resize(cols.size());
    grams.stats.resize(cols.size());
    for (const auto v : spec.anova.scale_covariates()) {
        auto kg = gram(spec.kernels[v], *cols[v]);
        grams.train[v] = std::move(kg.gram);
        grams.stats[v] = std::move(kg.stats);
    }
    return make_model(data, spec, grams, scales, psi);
}

Posterior posterior_f(const FittedModel &model, const Dataset &points) {
    return posterior_f(model.cross_h(points), model.f0, model.weights, model.factor);
}

Predictive predictive(const FittedModel &model, const Dataset &points) {
    const Matrix cross = model.cross_h(points);
    Predictive p;
    p.mean = (cross * model.weights).array() + model.f0;
    p.variance = posterior_variance(cross, model.factor).array() + 1.0 / model.psi;
    return p;
}

} // namespace iprior
