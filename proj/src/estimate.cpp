#include "iprior/estimate.hpp"

#include "iprior/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace iprior {

void FitConfig::validate() const {
    if (max_iter < 1 || restarts < 1 || mstep_max_cycles < 1)
        raise(ErrorCode::config_error, "fit: max_iter, restarts and mstep_max_cycles must be positive");
    if (!(rel_tol > 0.0) || !(mstep_tol > 0.0))
        raise(ErrorCode::config_error, "fit: tolerances must be positive");
    if (!(init_high >= init_low))
        raise(ErrorCode::config_error, "fit: empty initialisation interval");
    if (psi_init && !(*psi_init > 0.0))
        raise(ErrorCode::config_error, "fit: psi_init must be positive");
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

// std::uniform_real_distribution is implementation-defined; this is not.
double unit_uniform(std::mt19937_64 &gen) { return static_cast<double>(gen() >> 11) * 0x1.0p-53; }

} // namespace

Vector start_scales(const FitConfig &config, std::size_t num_scales, int restart) {
    const auto s = static_cast<Index>(num_scales);
    if (restart == 0 && config.include_ones_start)
        return Vector::Ones(s);
    std::mt19937_64 gen(splitmix64(config.seed ^ splitmix64(static_cast<std::uint64_t>(restart))));
    Vector v(s);
    for (Index k = 0; k < s; ++k)
        v(k) = config.init_low + (config.init_high - config.init_low) * unit_uniform(gen);
    return v;
}

// ---- E-step and Q ------------------------------------------------------------

Matrix EStep::second_moment() const {
    Matrix w = factor.inverse();
    w.noalias() += weights * weights.transpose();
    return w;
}

double EStep::trace_second_moment() const {
    return factor.v_eigenvalues().cwiseInverse().sum() + weights.squaredNorm();
}

EStep e_step(MarginalCovariance factor, const Vector &residual) {
    EStep e;
    e.factor = std::move(factor);
    e.residual = residual;
    e.weights = posterior_weights(e.factor, residual);
    e.log_likelihood = log_marginal_likelihood(e.factor, residual);
    return e;
}

EStep e_step(const Matrix &h, double psi, const Vector &residual) {
    return e_step(MarginalCovariance::factor(h, psi), residual);
}

double q_value(const Matrix &h, double psi, const EStep &frozen) {
    const Vector &r = frozen.residual;
    const Vector &w = frozen.weights;
    // tr[H² W̃] = tr[H V⁻¹ H] + ‖Hw̃‖² with V⁻¹ = U diag(1/v) Uᵀ
    const Matrix hu = h * frozen.factor.basis();
    const double tr_h2_vinv =
        (hu.array().square().rowwise() * frozen.factor.v_eigenvalues().cwiseInverse().transpose().array()).sum();
    const Vector hw = h * w;
    const double tr_h2_w = tr_h2_vinv + hw.squaredNorm();
    const double tr_vw = psi * tr_h2_w + frozen.trace_second_moment() / psi;
    return -0.5 * psi * r.squaredNorm() - 0.5 * tr_vw + psi * r.dot(hw);
}

QGradient q_gradient(const AnovaSpec &spec, const Vector &scales, double psi, const TermCache &cache,
                     const EStep &frozen) {
    const Matrix h = assemble(spec, scales, cache);
    const Matrix w2 = frozen.second_moment();
    const Vector &r = frozen.residual;
    const Vector &w = frozen.weights;
    QGradient g;
    g.scales.resize(static_cast<Index>(spec.num_scales()));
    for (std::size_t k = 0; k < spec.num_scales(); ++k) {
        const Matrix dh = d_assemble(spec, scales, cache, k);
        const Matrix dv = dh * h + h * dh; // ∂(H²)/∂λ_k, both product-rule terms
        g.scales(static_cast<Index>(k)) = -0.5 * psi * (dv.array() * w2.array()).sum() + psi * r.dot(dh * w);
    }
    const Matrix h2 = h * h;
    const double tr_h2_w = (h2.array() * w2.array()).sum();
    const double tr_w = w2.trace();
    g.psi = -0.5 * r.squaredNorm() - 0.5 * (tr_h2_w - tr_w / (psi * psi)) + r.dot(h * w);
    return g;
}

double QCoefficients::scale_part(const Vector &coefficients) const {
    return -0.5 * coefficients.dot(gram * coefficients) + coefficients.dot(cross);
}

double QCoefficients::value(const Vector &coefficients, double psi) const {
    return -0.5 * psi * residual_sq - 0.5 * trace_w / psi + psi * scale_part(coefficients);
}

double QCoefficients::expected_residual_sq(const Vector &coefficients) const {
    if (term_eigenvalues.size() > 0) {
        const double g = coefficients(0);
        return (residual - g * term_weights[0]).squaredNorm() +
               g * g * (term_eigenvalues.array().square() * inv_v.array()).sum();
    }
    Vector fit = residual;
    Matrix h = Matrix::Zero(inv_v.size(), inv_v.size());
    for (std::size_t s = 0; s < rotated.size(); ++s) {
        const double g = coefficients(static_cast<Index>(s));
        fit -= g * term_weights[s];
        h += g * rotated[s];
    }
    return fit.squaredNorm() + (h.array().square().colwise() * inv_v.array()).sum();
}

QCoefficients q_coefficients(const TermCache &cache, const EStep &frozen, const std::vector<Matrix> &rotated) {
    const auto s_count = cache.size();
    const Vector inv_v = frozen.factor.v_eigenvalues().cwiseInverse();
    const Vector &w = frozen.weights;
    const Vector &r = frozen.residual;

    std::vector<Matrix> rot(s_count);
    std::vector<Vector> tw(s_count);
    for (std::size_t s = 0; s < s_count; ++s) {
        rot[s] = rotated.empty() ? parallel::rotate(frozen.factor.basis(), cache.product(s)) : rotated[s];
        tw[s] = cache.product(s) * w;
    }

    QCoefficients q;
    const auto sc = static_cast<Index>(s_count);
    q.gram.resize(sc, sc);
    q.cross.resize(sc);
    for (std::size_t s = 0; s < s_count; ++s) {
        const Matrix weighted = inv_v.asDiagonal() * rot[s];
        for (std::size_t t = s; t < s_count; ++t) {
            const double g = (weighted.array() * rot[t].array()).sum() + tw[s].dot(tw[t]);
            q.gram(static_cast<Index>(s), static_cast<Index>(t)) = g;
            q.gram(static_cast<Index>(t), static_cast<Index>(s)) = g;
        }
        q.cross(static_cast<Index>(s)) = r.dot(tw[s]);
    }
    q.residual_sq = r.squaredNorm();
    q.trace_w = inv_v.sum() + w.squaredNorm();
    q.residual = r;
    q.inv_v = inv_v;
    q.term_weights = std::move(tw);
    q.rotated = std::move(rot);
    return q;
}

QCoefficients q_coefficients_single(const TermCache &cache, const EStep &frozen, const Vector &term_eigenvalues) {
    if (cache.size() != 1)
        raise(ErrorCode::spec_error, "q coefficients: single-term path needs exactly one term");
    QCoefficients q;
    q.inv_v = frozen.factor.v_eigenvalues().cwiseInverse();
    q.residual = frozen.residual;
    q.term_weights = {cache.product(0) * frozen.weights};
    q.term_eigenvalues = term_eigenvalues;
    q.gram = Matrix::Constant(1, 1, (term_eigenvalues.array().square() * q.inv_v.array()).sum() +
                                        q.term_weights[0].squaredNorm());
    q.cross = Vector::Constant(1, q.residual.dot(q.term_weights[0]));
    q.residual_sq = q.residual.squaredNorm();
    q.trace_w = q.inv_v.sum() + frozen.weights.squaredNorm();
    return q;
}

MStepResult m_step(const AnovaSpec &spec, const QCoefficients &q, const Vector &scales, double psi,
                   const FitConfig &config) {
    MStepResult out;
    out.scales = scales;
    Vector g = term_coefficients(spec, out.scales);
    out.q_before = q.value(g, psi);

    const double g_scale = std::max(q.gram.diagonal().cwiseAbs().maxCoeff(), 1e-300);
    double previous = q.scale_part(g);
    for (int cycle = 1; cycle <= config.mstep_max_cycles; ++cycle) {
        out.cycles = cycle;
        for (std::size_t k = 0; k < spec.num_scales(); ++k) {
            const auto ki = static_cast<Index>(k);
            const double current = out.scales(ki);
            // g is affine in λ_k: g = α + λ_k β, so the ψ-free part of Q is an exact quadratic.
            const Vector beta = term_coefficient_derivative(spec, out.scales, k);
            const Vector alpha = g - current * beta;
            const double a2 = beta.dot(q.gram * beta);
            const double a1 = beta.dot(q.cross) - alpha.dot(q.gram * beta);
            double candidate = current;
            if (a2 > 1e-14 * g_scale * std::max(beta.squaredNorm(), 1e-300)) {
                candidate = a1 / a2;
            } else if (a1 != 0.0) {
                // Flat curvature: best end of the trust interval |Δλ_k| ≤ 1.
                candidate = current + (a1 > 0.0 ? 1.0 : -1.0);
            }
            if (!std::isfinite(candidate))
                continue;
            const Vector g_new = alpha + candidate * beta;
            if (q.scale_part(g_new) >= q.scale_part(g)) {
                out.scales(ki) = candidate;
                g = g_new;
            }
        }
        const double now = q.scale_part(g);
        if (std::abs(now - previous) < config.mstep_tol)
            break;
        previous = now;
    }

    // ∂Q/∂ψ = 0: ψ⁻² trW̃ = ‖r‖² + tr[H²W̃] − 2rᵀHw̃ = E‖r − Hw‖² (≥ 0)
    const double denom =
        q.rotated.empty() && q.term_eigenvalues.size() == 0 ? q.residual_sq + g.dot(q.gram * g) - 2.0 * g.dot(q.cross) : q.expected_residual_sq(g);
    if (!(denom > 0.0) || !(q.trace_w > 0.0) || !std::isfinite(denom))
        raise(ErrorCode::numerical_error, "m-step: nonpositive psi radicand (" + std::to_string(denom) +
                                              "); E-step quantities are numerically inconsistent");
    out.psi = std::sqrt(q.trace_w / denom);
    out.q_after = q.value(g, out.psi);
    return out;
}

// ---- EM driver ----------------------------------------------------------------

EMRun run_em(const AnovaSpec &spec, const TermCache &cache, const Vector &residual, Vector scales, double psi,
             const FitConfig &config) {
    EMRun run;
    try {
        // With one term H = g·T keeps T's eigenvectors, so T is factored once.
        const bool single_term = cache.size() == 1;
        Matrix term_basis;
        Vector term_eigen;
        if (single_term)
            symmetric_eigen(cache.product(0), term_basis, term_eigen);

        double previous = -std::numeric_limits<double>::infinity();
        for (int it = 0;; ++it) {
            if (!scales.allFinite() || !(psi > 0.0) || !std::isfinite(psi))
                raise(ErrorCode::numerical_error, "em: parameters left the finite range");
            auto factor = single_term
                              ? MarginalCovariance::from_eigen(term_basis,
                                                               term_coefficients(spec, scales)(0) * term_eigen, psi)
                              : MarginalCovariance::factor(assemble(spec, scales, cache), psi);
            const EStep e = e_step(std::move(factor), residual);
            run.trace.push_back({it, e.log_likelihood, scales, psi});
            run.scales = scales;
            run.psi = psi;
            run.log_likelihood = e.log_likelihood;
            run.iterations = it;

            if (it > 0) {
                const double drop = previous - e.log_likelihood;
                if (drop > 1e-8 * (1.0 + std::abs(previous)))
                    log_event("em: log likelihood decreased by " + std::to_string(drop) + " at iteration " +
                              std::to_string(it));
                if (std::abs(e.log_likelihood - previous) <= config.rel_tol * (1.0 + std::abs(previous))) {
                    run.status = FitStatus::converged;
                    break;
                }
            }
            if (it >= config.max_iter) {
                run.status = FitStatus::stalled;
                break;
            }
            previous = e.log_likelihood;

            const QCoefficients q = single_term ? q_coefficients_single(cache, e, term_eigen) : q_coefficients(cache, e);
            const MStepResult m = m_step(spec, q, scales, psi, config);
            scales = m.scales;
            psi = m.psi;
        }
    } catch (const Error &err) {
        run.failed = true;
        run.failure = err.what();
    }
    return run;
}

FittedModel em_fit(const Dataset &data, const ModelSpec &spec, const GramSet &grams, const FitConfig &config) {
    config.validate();
    spec.validate();
    data.validate_for_fit();
    const TermCache cache(spec.anova, grams.train);
    const Vector &y = data.response;
    const double f0 = y.mean();
    const Vector residual = y.array() - f0;
    double psi0 = 1.0;
    if (config.psi_init) {
        psi0 = *config.psi_init;
    } else {
        const double var = residual.squaredNorm() / static_cast<double>(y.size() - 1);
        psi0 = var > 0.0 ? 1.0 / var : 1.0;
    }

    const auto restarts = static_cast<std::size_t>(config.restarts);
    std::vector<EMRun> runs(restarts);
    parallel::for_each_index(restarts, [&](std::size_t r) {
        runs[r] = run_em(spec.anova, cache, residual, start_scales(config, spec.anova.num_scales(), static_cast<int>(r)),
                         psi0, config);
    });

    int best = -1;
    std::string failures;
    for (std::size_t r = 0; r < restarts; ++r) {
        if (runs[r].failed) {
            failures += " [restart " + std::to_string(r) + ": " + runs[r].failure + "]";
            continue;
        }
        if (best < 0 || runs[r].log_likelihood > runs[static_cast<std::size_t>(best)].log_likelihood)
            best = static_cast<int>(r);
    }
    if (best < 0)
        raise(ErrorCode::fit_error, "all " + std::to_string(restarts) + " EM restarts failed:" + failures);
    if (!failures.empty())
        log_event("em: some restarts failed:" + failures);

    const EMRun &win = runs[static_cast<std::size_t>(best)];
    FittedModel model = make_model(data, spec, grams, win.scales, win.psi);
    model.trace = win.trace;
    model.status = win.status;
    model.iterations = win.iterations;
    model.restart = best;
    model.seed = config.seed;
    return model;
}

FittedModel em_fit(const Dataset &data, const ModelSpec &spec, const FitConfig &config) {
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
    return em_fit(data, spec, grams, config);
}

// ---- profile search -------------------------------------------------------------

double profile_value(const Dataset &data, ModelSpec spec, std::size_t covariate, Hyperparameter which, double value,
                     const FitConfig &config, FittedModel *model) {
    if (covariate >= spec.kernels.size())
        raise(ErrorCode::spec_error, "profile: covariate index out of range");
    auto &k = spec.kernels[covariate];
    if (which == Hyperparameter::gamma)
        k.gamma = value;
    else
        k.sigma = value;
    try {
        auto fit = em_fit(data, spec, config);
        const double ll = fit.log_likelihood;
        if (model)
            *model = std::move(fit);
        return ll;
    } catch (const Error &err) {
        log_event("profile: fit failed at " + std::to_string(value) + ": " + err.what());
        return -std::numeric_limits<double>::infinity();
    }
}

ProfileResult profile_hyperparameter(const Dataset &data, ModelSpec spec, std::size_t covariate, Hyperparameter which,
                                     double low, double high, const FitConfig &config, double tolerance) {
    if (covariate >= spec.kernels.size())
        raise(ErrorCode::spec_error, "profile: covariate index out of range");
    const auto family = spec.kernels[covariate].family;
    if (which == Hyperparameter::gamma) {
        if (family != KernelFamily::fbm)
            raise(ErrorCode::spec_error, "profile: gamma needs an fbm kernel");
        if (!(low > 0.0 && high < 1.0 && low < high))
            raise(ErrorCode::spec_error, "profile: gamma interval must lie inside (0,1)");
    } else {
        if (family != KernelFamily::sqexp)
            raise(ErrorCode::spec_error, "profile: sigma needs an sqexp kernel");
        if (!(low > 0.0 && low < high))
            raise(ErrorCode::spec_error, "profile: sigma interval must lie inside (0,inf)");
    }
    if (!(tolerance > 0.0))
        raise(ErrorCode::spec_error, "profile: tolerance must be positive");

    // σ is searched on log scale; the stopping width is measured in σ itself.
    const bool log_scale = which == Hyperparameter::sigma;
    auto to_value = [&](double u) { return log_scale ? std::exp(u) : u; };
    double a = log_scale ? std::log(low) : low;
    double b = log_scale ? std::log(high) : high;

    ProfileResult result;
    double best_ll = -std::numeric_limits<double>::infinity();
    bool have_model = false;
    auto probe = [&](double u) {
        const double value = to_value(u);
        FittedModel fit;
        const double ll = profile_value(data, spec, covariate, which, value, config, &fit);
        result.probes.push_back({value, ll});
        if (ll > best_ll || !have_model) {
            if (std::isfinite(ll) || !have_model) {
                best_ll = ll;
                result.best = value;
                if (std::isfinite(ll)) {
                    result.model = std::move(fit);
                    have_model = true;
                }
            }
        }
        return ll;
    };

    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = b - inv_phi * (b - a);
    double d = a + inv_phi * (b - a);
    double fc = probe(c);
    double fd = probe(d);
    while (to_value(b) - to_value(a) > tolerance) {
        if (fc >= fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = probe(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = probe(d);
        }
    }
    if (!have_model)
        raise(ErrorCode::fit_error, "profile: every probe failed");
    return result;
}

// ---- standard errors ---------------------------------------------------------------

StandardErrors standard_errors(const FittedModel &model) {
    StandardErrors se;
    if (model.status != FitStatus::converged) {
        se.diagnostic = "model status is " + std::string(to_string(model.status)) + "; standard errors need a converged fit";
        return se;
    }
    const auto p = static_cast<Index>(model.spec.anova.num_scales());
    const Index dim = p + 1;
    Vector theta(dim);
    theta.head(p) = model.scales;
    theta(p) = std::log(model.psi);
    const TermCache cache = model.train_cache();
    const Vector residual = model.residual();
    auto loglik = [&](const Vector &t) {
        return log_marginal_likelihood(model.spec.anova, t.head(p), std::exp(t(p)), cache, residual);
    };

    try {
        Vector step(dim);
        for (Index i = 0; i < dim; ++i)
            step(i) = 1e-4 * (1.0 + std::abs(theta(i)));
        const double center = loglik(theta);
        Matrix hess(dim, dim);
        for (Index i = 0; i < dim; ++i) {
            Vector tp = theta, tm = theta;
            tp(i) += step(i);
            tm(i) -= step(i);
            hess(i, i) = (loglik(tp) - 2.0 * center + loglik(tm)) / (step(i) * step(i));
            for (Index j = 0; j < i; ++j) {
                Vector pp = theta, pm = theta, mp = theta, mm = theta;
                pp(i) += step(i); pp(j) += step(j);
                pm(i) += step(i); pm(j) -= step(j);
                mp(i) -= step(i); mp(j) += step(j);
                mm(i) -= step(i); mm(j) -= step(j);
                const double v = (loglik(pp) - loglik(pm) - loglik(mp) + loglik(mm)) / (4.0 * step(i) * step(j));
                hess(i, j) = v;
                hess(j, i) = v;
            }
        }
        se.hessian = hess;
        const Matrix info = -hess;
        Eigen::LLT<Matrix> llt(info);
        if (llt.info() != Eigen::Success) {
            se.diagnostic = "negative Hessian of the log likelihood is not positive definite";
            return se;
        }
        const Matrix cov = llt.solve(Matrix::Identity(dim, dim));
        const Vector sd = cov.diagonal().cwiseSqrt();
        if (!sd.allFinite()) {
            se.diagnostic = "non-finite covariance of the estimates";
            return se;
        }
        se.scales = sd.head(p);
        se.log_psi = sd(p);
        se.available = true;
    } catch (const Error &err) {
        se.diagnostic = err.what();
    }
    return se;
}

} // namespace iprior
