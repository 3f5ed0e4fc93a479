#pragma once

#include "iprior/anova.hpp"
#include "iprior/data.hpp"
#include "iprior/kernels.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace iprior {

/// V_y = ψH² + ψ⁻¹I held as H = U D Uᵀ, so V_y = U(ψD² + ψ⁻¹)Uᵀ.
/// V_y is never formed or inverted densely on the solve path.
class MarginalCovariance {
public:
    MarginalCovariance() = default;

    /// Eigendecomposes the symmetric H.
    static MarginalCovariance factor(const Matrix &h, double psi);
    /// Reuses an existing eigendecomposition of H.
    static MarginalCovariance from_eigen(Matrix basis, Vector h_eigenvalues, double psi);

    MarginalCovariance with_psi(double psi) const;

    Index size() const noexcept { return h_eigenvalues_.size(); }
    double psi() const noexcept { return psi_; }
    const Matrix &basis() const noexcept { return basis_; }
    const Vector &h_eigenvalues() const noexcept { return h_eigenvalues_; }
    /// ψd_i² + ψ⁻¹, all strictly positive.
    const Vector &v_eigenvalues() const noexcept { return v_eigenvalues_; }
    bool jittered() const noexcept { return jittered_; }

    Vector solve(const Vector &r) const;
    double log_determinant() const;
    /// H·x through the factorization.
    Vector apply_h(const Vector &x) const;
    Matrix h() const;
    /// Dense V_y⁻¹, only for posterior covariances and tests.
    Matrix inverse() const;
    Matrix dense() const;

private:
    void compute_v();

    Matrix basis_;
    Vector h_eigenvalues_;
    Vector v_eigenvalues_;
    double psi_ = 1.0;
    bool jittered_ = false;
};

/// Eigendecomposition of a symmetric matrix. Throws numerical_error on failure.
void symmetric_eigen(const Matrix &h, Matrix &basis, Vector &eigenvalues);

MarginalCovariance marginal_cov(const Matrix &h, double psi);

/// −(n/2)log 2π − ½log|V_y| − ½ rᵀV_y⁻¹r with r = y − f₀.
double log_marginal_likelihood(const MarginalCovariance &v, const Vector &residual);
double log_marginal_likelihood(const Matrix &h, double psi, const Vector &y, double f0);

/// ŵ = ΨH V_y⁻¹ r, through the shared factorization.
Vector posterior_weights(const MarginalCovariance &v, const Vector &residual);

struct LikelihoodGradient {
    Vector scales;       ///< ∂L/∂λ_k
    double log_psi = 0.0; ///< ∂L/∂log ψ
};

/// Analytic gradient using ∂V_y/∂λ = ψ(H′H + HH′) and ∂V_y/∂ψ = H² − ψ⁻²I.
LikelihoodGradient log_likelihood_gradient(const AnovaSpec &spec, const Vector &scales, double psi,
                                           const TermCache &cache, const Vector &residual);

/// L at (λ, ψ) assembled from a term cache.
double log_marginal_likelihood(const AnovaSpec &spec, const Vector &scales, double psi, const TermCache &cache,
                               const Vector &residual);

struct Posterior {
    Vector mean;
    Matrix covariance;
};

/// Posterior of f at new points from the cross kernel rows h(x, x_i):
/// mean f₀ + Σ h(x,x_i)ŵ_i, covariance Σ_ij h(x,x_i)h(x′,x_j)(V_y⁻¹)_ij.
Posterior posterior_f(const Matrix &cross, double f0, const Vector &weights, const MarginalCovariance &v);

/// Diagonal of the posterior covariance only.
Vector posterior_variance(const Matrix &cross, const MarginalCovariance &v);

/// I[f](x, x′) = ψ Σ_i h(x,x_i)h(x′,x_i) for iid errors; one row of cross kernel per point.
double fisher_information(const Vector &row_x, const Vector &row_x_prime, double psi);
Matrix fisher_information(const Matrix &rows_a, const Matrix &rows_b, double psi);

// ---- fitted models -----------------------------------------------------------

/// Covariates, their kernels and the interaction structure of one model.
struct ModelSpec {
    AnovaSpec anova;
    std::vector<KernelSpec> kernels; ///< one per anova.covariates entry

    void validate() const;
};

enum class FitStatus { converged, stalled, fixed };

std::string_view to_string(FitStatus s) noexcept;

struct TraceRow {
    int iteration = 0;
    double log_likelihood = 0.0;
    Vector scales;
    double psi = 0.0;
};

struct FittedModel {
    ModelSpec spec;
    std::vector<CovariateColumn> train_columns; ///< anova.covariates order
    std::vector<CenteringStats> stats;
    std::string response_name;
    Vector y;
    double f0 = 0.0;
    Vector scales;
    double psi = 1.0;
    Vector weights;
    MarginalCovariance factor;
    double log_likelihood = 0.0;
    std::vector<TraceRow> trace;
    FitStatus status = FitStatus::fixed;
    int iterations = 0;
    int restart = -1;
    std::uint64_t seed = 0;

    Index n() const noexcept { return y.size(); }
    /// Per-covariate train Grams (recomputed from the stored training columns).
    std::vector<Matrix> train_grams() const;
    TermCache train_cache() const;
    /// H_λ(x_new, x_i), one row per row of `points`.
    Matrix cross_h(const Dataset &points) const;
    Vector fitted() const;
    Vector residual() const { return y - Vector::Constant(y.size(), f0); }
};

/// Posterior quantities at fixed (λ, ψ) for `data`; no estimation. f₀ = ȳ.
FittedModel make_model(const Dataset &data, const ModelSpec &spec, const Vector &scales, double psi);

/// Same, reusing Grams and centering statistics that were already built.
FittedModel make_model(const Dataset &data, const ModelSpec &spec, const GramSet &grams, const Vector &scales,
                       double psi);

Posterior posterior_f(const FittedModel &model, const Dataset &points);

struct Predictive {
    Vector mean;
    Vector variance; ///< posterior variance + 1/ψ̂
};

Predictive predictive(const FittedModel &model, const Dataset &points);

/// Columns of `data` named by the spec, in spec order.
std::vector<const CovariateColumn *> spec_columns(const ModelSpec &spec, const Dataset &data);

} // namespace iprior
