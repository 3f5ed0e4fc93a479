#pragma once

#include "iprior/inference.hpp"

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace iprior {

struct FitConfig {
    int max_iter = 500;
    double rel_tol = 1e-8;
    int restarts = 8;
    std::uint64_t seed = 1;
    double init_low = -1.0;  ///< λ starts uniform on [init_low, init_high] ...
    double init_high = 1.0;
    bool include_ones_start = true; ///< ... plus the all-ones point as restart 0
    std::optional<double> psi_init; ///< default 1/var(y)
    int mstep_max_cycles = 500;
    double mstep_tol = 1e-10;

    void validate() const;
};

/// Name and version of the restart PRNG, recorded in model artifacts.
inline constexpr const char *prng_name = "mt19937_64+splitmix64/v1";

/// Deterministic starting scales for one restart.
Vector start_scales(const FitConfig &config, std::size_t num_scales, int restart);

/// Frozen conditional moments of w given y at (λ⁰, ψ⁰):
/// w̃ = ΨHV_y⁻¹r and W̃ = V_y⁻¹ + w̃w̃ᵀ (the factorization stands in for V_y⁻¹).
struct EStep {
    MarginalCovariance factor;
    Vector residual;
    Vector weights;
    double log_likelihood = 0.0;

    Matrix second_moment() const;
    double trace_second_moment() const;
};

EStep e_step(const Matrix &h, double psi, const Vector &residual);
EStep e_step(MarginalCovariance factor, const Vector &residual);

/// Q(λ, ψ) = −½ψ‖r‖² − ½tr[V_y(λ,ψ)W̃⁰] + ψ rᵀH_λw̃⁰, additive constant fixed at 0.
double q_value(const Matrix &h, double psi, const EStep &frozen);

struct QGradient {
    Vector scales;
    double psi = 0.0;
};

/// ∂Q/∂λ_k = −½ψ tr[(H′H + HH′)W̃] + ψ rᵀH′w̃ and ∂Q/∂ψ, dense evaluation.
QGradient q_gradient(const AnovaSpec &spec, const Vector &scales, double psi, const TermCache &cache,
                     const EStep &frozen);

/// Q restricted to the ANOVA family: with g = g(λ) the term coefficients,
///   Q = −½ψ r2 − ½ψ gᵀGg − ½ψ⁻¹ trW + ψ gᵀb,
/// G_st = tr[T_s T_t W̃], b_s = rᵀT_s w̃ for the term products T_s.
struct QCoefficients {
    Matrix gram;  ///< G
    Vector cross; ///< b
    double residual_sq = 0.0;
    double trace_w = 0.0;

    // Kept for the ψ update, which needs E‖r − Hw‖² without cancellation.
    Vector residual;
    Vector inv_v;                    ///< 1/v_i of the E-step factorization
    std::vector<Vector> term_weights; ///< T_s w̃
    std::vector<Matrix> rotated;      ///< UᵀT_sU
    Vector term_eigenvalues;          ///< single-term models: UᵀTU is this diagonal, `rotated` stays empty

    double value(const Vector &coefficients, double psi) const;
    /// The ψ-free part −½gᵀGg + gᵀb.
    double scale_part(const Vector &coefficients) const;
    /// ‖r − Hw̃‖² + tr[HV⁻¹H], a sum of nonnegative terms; equals r2 + gᵀGg − 2gᵀb.
    double expected_residual_sq(const Vector &coefficients) const;
};

/// `rotated[s]` may carry UᵀT_sU for the E-step basis U; computed when empty.
QCoefficients q_coefficients(const TermCache &cache, const EStep &frozen,
                             const std::vector<Matrix> &rotated = {});
/// One-term case where the E-step basis diagonalizes T with eigenvalues `term_eigenvalues`; O(n²).
QCoefficients q_coefficients_single(const TermCache &cache, const EStep &frozen, const Vector &term_eigenvalues);

struct MStepResult {
    Vector scales;
    double psi = 0.0;
    int cycles = 0;
    double q_before = 0.0;
    double q_after = 0.0;
};

/// Cyclic exact coordinate ascent over λ (Q is quadratic in each coordinate),
/// then the closed-form ψ⁺ = √(trW̃ / (‖r‖² + tr[H²W̃] − 2rᵀHw̃)).
MStepResult m_step(const AnovaSpec &spec, const QCoefficients &q, const Vector &scales, double psi,
                   const FitConfig &config = {});

struct EMRun {
    Vector scales;
    double psi = 0.0;
    double log_likelihood = -std::numeric_limits<double>::infinity();
    std::vector<TraceRow> trace;
    FitStatus status = FitStatus::stalled;
    int iterations = 0;
    bool failed = false;
    std::string failure;
};

/// One EM run from a given start.
EMRun run_em(const AnovaSpec &spec, const TermCache &cache, const Vector &residual, Vector scales, double psi,
             const FitConfig &config);

/// Multi-start EM; keeps the run with the highest final log likelihood.
FittedModel em_fit(const Dataset &data, const ModelSpec &spec, const FitConfig &config);
FittedModel em_fit(const Dataset &data, const ModelSpec &spec, const GramSet &grams, const FitConfig &config);

enum class Hyperparameter { gamma, sigma };

struct ProfileProbe {
    double value = 0.0;
    double log_likelihood = -std::numeric_limits<double>::infinity();
};

struct ProfileResult {
    double best = 0.0;
    FittedModel model;
    std::vector<ProfileProbe> probes;
};

/// Golden-section search of the profile log likelihood over one kernel
/// hyperparameter (γ linearly, σ on log scale) of covariate `covariate`.
ProfileResult profile_hyperparameter(const Dataset &data, ModelSpec spec, std::size_t covariate, Hyperparameter which,
                                     double low, double high, const FitConfig &config, double tolerance = 1e-3);

/// Profile log likelihood at one hyperparameter value (−∞ when the inner fit fails).
double profile_value(const Dataset &data, ModelSpec spec, std::size_t covariate, Hyperparameter which, double value,
                     const FitConfig &config, FittedModel *model = nullptr);

struct StandardErrors {
    bool available = false;
    Vector scales;          ///< SE of each λ
    double log_psi = 0.0;   ///< SE of log ψ
    Matrix hessian;         ///< of L over (λ, log ψ)
    std::string diagnostic;
};

/// Inverse of the negative central-difference Hessian of L over (λ, log ψ),
/// step 1e−4·(1+|θ|).
StandardErrors standard_errors(const FittedModel &model);

} // namespace iprior
