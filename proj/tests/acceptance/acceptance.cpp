// Acceptance suite: one PASS/FAIL/SKIP line per criterion.
// Exit status is nonzero when any property suite (1-9) fails; the dataset
// reproductions (10, 11, cow selection) are reported but depend on local data.

#include "support.hpp"

#include "iprior/applications.hpp"
#include "iprior/config.hpp"

#include <CLI11.hpp>
#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <numeric>
#include <iostream>
#include <sstream>

using namespace iprior;
namespace fs = std::filesystem;

namespace {

enum class Outcome { pass, fail, skip };

struct Line {
    Outcome outcome = Outcome::fail;
    std::string detail;
};

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

Line verdict(bool ok, const std::string &detail) { return {ok ? Outcome::pass : Outcome::fail, detail}; }

// ---- 1 ----

Line centering() {
    double worst_sum = 0.0, worst_cross = 0.0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        auto g = testing::rng(1000 + seed);
        const Index n = 12 + static_cast<Index>(seed % 7);
        std::uniform_real_distribution<double> u(0.1, 0.95);
        const auto x = CovariateColumn::real("x", testing::normal_matrix(g, n, 1 + static_cast<Index>(seed % 3)));
        const auto c = CovariateColumn::categorical("c", testing::random_labels(g, n, 2 + static_cast<int>(seed % 4)));
        std::vector<double> grid;
        for (int t = 0; t < 15; ++t)
            grid.push_back(0.1 * t);
        const auto curve = CovariateColumn::functional("k", grid, testing::normal_matrix(g, n, 15));
        const std::vector<std::pair<KernelSpec, const CovariateColumn *>> cases{
            {KernelSpec::constant(), &x},
            {KernelSpec::canonical_finite(), &c},
            {KernelSpec::pearson(), &c},
            {KernelSpec::canonical_linear(), &x},
            {KernelSpec::canonical_linear(MetricKind::sobolev_curve), &curve},
            {KernelSpec::mahalanobis(), &x},
            {KernelSpec::fbm(u(g)), &x},
            {KernelSpec::fbm(u(g), MetricKind::sobolev_curve), &curve},
            {KernelSpec::sqexp(0.3 + u(g)), &x},
        };
        for (const auto &[spec, col] : cases) {
            const auto kg = gram(spec, *col);
            if (spec.applies_centering())
                for (Index i = 0; i < n; ++i) {
                    const double scale = std::max(kg.gram.row(i).cwiseAbs().sum(), 1e-300);
                    worst_sum = std::max(worst_sum, std::abs(kg.gram.row(i).sum()) / scale);
                }
            std::vector<Index> pick;
            for (Index i = 0; i < n; i += 3)
                pick.push_back(i);
            const Matrix cross = cross_gram(spec, kg.stats, *col, col->select(pick));
            for (std::size_t r = 0; r < pick.size(); ++r)
                worst_cross = std::max(worst_cross, (cross.row(static_cast<Index>(r)) - kg.gram.row(pick[r])).cwiseAbs().maxCoeff() /
                                                        std::max(1.0, testing::max_abs(kg.gram)));
        }
    }
    return verdict(worst_sum <= 1e-8 && worst_cross <= 1e-12,
                   "max relative row sum " + fmt(worst_sum) + " (tol 1e-8), max cross-row deviation " + fmt(worst_cross) +
                       " (tol 1e-12), 20 seeds x 9 kernel/metric cases");
}

// ---- 2 ----

Line pearson_fisher() {
    double worst = 0.0, worst_total = 0.0;
    auto g = testing::rng(2);
    for (int rep = 0; rep < 20; ++rep) {
        const Index n = 5 + rep;
        const auto col = CovariateColumn::categorical("c", testing::random_labels(g, n, 1 + rep % 6));
        const Matrix hp = gram(KernelSpec::pearson(), col).gram;
        const Matrix info = fisher_information(hp, hp, 1.0);
        const double scale = std::max(1.0, testing::max_abs(hp));
        worst = std::max(worst, testing::max_abs(info / static_cast<double>(n) - hp) / scale);
        worst_total = std::max(worst_total, testing::max_abs(info - static_cast<double>(n) * hp) / (n * scale));
    }
    return verdict(worst <= 1e-9 && worst_total <= 1e-9,
                   "per-observation information I/n vs Pearson Gram " + fmt(worst) + ", total I vs n*Gram " +
                       fmt(worst_total) + " (tol 1e-9, 20 samples)");
}

// ---- 3 ----

struct Instance {
    Dataset data;
    ModelSpec spec;
    TermCache cache;
    Vector residual;
};

Instance random_instance(std::uint64_t seed, Index n, Parameterization p) {
    auto g = testing::rng(seed);
    Instance in;
    in.data = testing::random_dataset(g, n);
    in.spec = testing::three_way_spec(p);
    const auto grams = build_gram_set(in.spec.kernels, spec_columns(in.spec, in.data));
    in.cache = TermCache(in.spec.anova, grams.train);
    in.residual = in.data.response.array() - in.data.response.mean();
    return in;
}

Line gradients() {
    double worst_l = 0.0, worst_q = 0.0;
    int checks = 0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto p = seed % 2 ? Parameterization::extended : Parameterization::parsimonious;
        const auto in = random_instance(300 + seed, 20, p);
        auto g = testing::rng(400 + seed);
        const auto s = static_cast<Index>(in.spec.anova.num_scales());
        const Vector l = testing::normal_vector(g, s);
        const double lpsi = 0.5 * testing::normal_vector(g, 1)(0);
        const double h = 1e-6;

        const auto grad = log_likelihood_gradient(in.spec.anova, l, std::exp(lpsi), in.cache, in.residual);
        auto ll = [&](const Vector &sc, double lp) {
            return log_marginal_likelihood(in.spec.anova, sc, std::exp(lp), in.cache, in.residual);
        };
        for (Index k = 0; k < s; ++k) {
            Vector lp = l, lm = l;
            lp(k) += h;
            lm(k) -= h;
            worst_l = std::max(worst_l, testing::rel_err((ll(lp, lpsi) - ll(lm, lpsi)) / (2 * h), grad.scales(k)));
            ++checks;
        }
        worst_l = std::max(worst_l, testing::rel_err((ll(l, lpsi + h) - ll(l, lpsi - h)) / (2 * h), grad.log_psi));

        const EStep frozen =
            e_step(assemble(in.spec.anova, testing::normal_vector(g, s), in.cache), std::exp(lpsi), in.residual);
        const double psi = 0.5 + std::exp(lpsi);
        const QGradient qg = q_gradient(in.spec.anova, l, psi, in.cache, frozen);
        auto qv = [&](const Vector &sc, double ps) { return q_value(assemble(in.spec.anova, sc, in.cache), ps, frozen); };
        for (Index k = 0; k < s; ++k) {
            Vector lp = l, lm = l;
            lp(k) += h;
            lm(k) -= h;
            worst_q = std::max(worst_q, testing::rel_err((qv(lp, psi) - qv(lm, psi)) / (2 * h), qg.scales(k)));
        }
        worst_q = std::max(worst_q, testing::rel_err((qv(l, psi + h) - qv(l, psi - h)) / (2 * h), qg.psi));
        checks += static_cast<int>(s) + 2;
    }
    return verdict(worst_l <= 1e-5 && worst_q <= 1e-5,
                   "max relative error dL " + fmt(worst_l) + ", dQ " + fmt(worst_q) + " (tol 1e-5, " +
                       std::to_string(checks) + " partials, n=20, 3 covariates with interaction)");
}

// ---- 4 ----

double grid_argmax(const std::function<long double(double)> &q, double centre) {
    double lo = centre - 20.0, hi = centre + 20.0, best = centre;
    for (double step = 1e-2; step >= 1e-9; step /= 10.0) {
        long double best_q = -std::numeric_limits<long double>::infinity();
        for (double t = lo; t <= hi + 0.5 * step; t += step)
            if (const long double v = q(t); v > best_q) {
                best_q = v;
                best = t;
            }
        lo = best - step;
        hi = best + step;
    }
    return best;
}

Line em_monotone() {
    double worst_drop = 0.0;
    std::size_t iterations = 0;
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        const auto p = seed % 2 ? Parameterization::extended : Parameterization::parsimonious;
        const auto in = random_instance(500 + seed, 20, p);
        FitConfig cfg;
        cfg.restarts = 1;
        cfg.max_iter = 100;
        cfg.include_ones_start = seed % 3 != 0;
        cfg.seed = seed;
        const EMRun run = run_em(in.spec.anova, in.cache, in.residual,
                                 start_scales(cfg, in.spec.anova.num_scales(), seed % 3 == 0 ? 1 : 0),
                                 1.0 / std::max(1e-3, in.residual.squaredNorm() / 19.0), cfg);
        for (std::size_t t = 1; t < run.trace.size(); ++t)
            worst_drop = std::max(worst_drop, run.trace[t - 1].log_likelihood - run.trace[t].log_likelihood);
        iterations += run.trace.size();
    }

    // single coordinate updates against a refined grid search of Q along that coordinate
    double worst_arg = 0.0, worst_gap = 0.0;
    int coords = 0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto p = seed % 2 ? Parameterization::extended : Parameterization::parsimonious;
        const auto in = random_instance(600 + seed, 20, p);
        auto g = testing::rng(700 + seed);
        const auto s = static_cast<Index>(in.spec.anova.num_scales());
        const Vector start = testing::normal_vector(g, s);
        const double psi = 1.0 + 0.1 * static_cast<double>(seed);
        const EStep frozen = e_step(assemble(in.spec.anova, start, in.cache), psi, in.residual);
        const QCoefficients q = q_coefficients(in.cache, frozen);
        FitConfig one;
        one.mstep_max_cycles = 1;
        const MStepResult m = m_step(in.spec.anova, q, start, psi, one);
        for (Index k = 0; k < s; ++k) {
            // coordinates before k already moved, the rest still at the start
            Vector base = start;
            base.head(k) = m.scales.head(k);
            // H is affine in one coordinate; Q along it, in extended precision, straight from r, w~ and W~
            using LMatrix = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;
            Vector at0 = base, at1 = base;
            at0(k) = 0.0;
            at1(k) = 1.0;
            const Matrix h0 = assemble(in.spec.anova, at0, in.cache);
            const LMatrix a = h0.cast<long double>();
            const LMatrix bm = (assemble(in.spec.anova, at1, in.cache) - h0).cast<long double>();
            const LMatrix w2 = frozen.second_moment().cast<long double>();
            const LMatrix rw = in.residual.cast<long double>() * frozen.weights.cast<long double>().transpose();
            const long double lin = (bm * rw).trace() - (bm * w2 * a).trace();
            const long double quad = (bm * w2 * bm).trace();
            auto along = [&](double t) {
                const long double x = t;
                return x * lin - 0.5L * x * x * quad;
            };
            auto q_along = [&](double t) {
                Vector sc = base;
                sc(k) = t;
                return q_value(assemble(in.spec.anova, sc, in.cache), psi, frozen);
            };
            const double best = grid_argmax(along, m.scales(k));
            const double gap = q_along(best) - q_along(m.scales(k));
            worst_gap = std::max(worst_gap, gap / (1.0 + std::abs(q_along(best))));
            worst_arg = std::max(worst_arg, std::abs(best - m.scales(k)) / std::max(1.0, std::abs(best)));
            ++coords;
        }
    }
    // the grid resolves the argmax only down to where Q is flat to rounding
    const bool ok = worst_drop <= 1e-8 && worst_gap <= 1e-14 && worst_arg <= 1e-8;
    return verdict(ok, "50 runs / " + std::to_string(iterations) + " iterations, largest L decrease " + fmt(worst_drop) +
                           " (slack 1e-8); " + std::to_string(coords) + " coordinate updates vs 1e-9 grid: argmax gap " +
                           fmt(worst_arg) + " (tol 1e-8), Q shortfall " + fmt(worst_gap));
}

// ---- 5 ----

Line e_step_monte_carlo() {
    auto g = testing::rng(5);
    Matrix x(3, 1);
    x << -0.8, 0.1, 1.2;
    const Matrix h = gram(KernelSpec::fbm(0.5), CovariateColumn::real("x", x)).gram;
    const Vector r = (Vector(3) << 0.6, -0.5, -0.1).finished();
    const double psi = 1.5;
    const EStep exact = e_step(h, psi, r);
    const Matrix w_tilde = exact.second_moment();

    const int draws = 100000;
    std::normal_distribution<double> z(0.0, std::sqrt(psi));
    std::vector<Vector> ws(draws);
    std::vector<double> logw(draws);
    double top = -std::numeric_limits<double>::infinity();
    for (int d = 0; d < draws; ++d) {
        Vector w(3);
        for (Index i = 0; i < 3; ++i)
            w(i) = z(g);
        logw[d] = -0.5 * psi * (r - h * w).squaredNorm();
        top = std::max(top, logw[d]);
        ws[d] = w;
    }
    double total = 0.0, total_sq = 0.0;
    std::vector<double> wt(draws);
    for (int d = 0; d < draws; ++d) {
        wt[d] = std::exp(logw[d] - top);
        total += wt[d];
        total_sq += wt[d] * wt[d];
    }
    Matrix est = Matrix::Zero(3, 3);
    for (int d = 0; d < draws; ++d)
        est += wt[d] * ws[d] * ws[d].transpose();
    est /= total;
    double worst = 0.0;
    for (Index a = 0; a < 3; ++a)
        for (Index b = 0; b < 3; ++b) {
            double var = 0.0;
            for (int d = 0; d < draws; ++d) {
                const double dev = ws[d](a) * ws[d](b) - est(a, b);
                var += wt[d] * wt[d] * dev * dev;
            }
            const double se = std::sqrt(var) / total;
            worst = std::max(worst, std::abs(est(a, b) - w_tilde(a, b)) / se);
        }
    return verdict(worst <= 3.0, "1e5 prior draws, effective size " + fmt(total * total / total_sq) +
                                     ", largest |MC - exact| / SE = " + fmt(worst) + " (tol 3)");
}

// ---- 6 ----

Line posterior_oracle() {
    double worst_mean = 0.0, worst_cov = 0.0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        auto g = testing::rng(800 + seed);
        const Dataset d = testing::random_dataset(g, 10);
        const ModelSpec spec = testing::three_way_spec();
        const Vector l = testing::normal_vector(g, 3);
        const double psi = 0.4 + static_cast<double>(seed) * 0.3;
        const FittedModel m = make_model(d, spec, l, psi);
        const Posterior post = posterior_f(m, d);

        const auto grams = build_gram_set(spec.kernels, spec_columns(spec, d));
        const Matrix h = assemble(spec.anova, l, grams.train);
        // (f, y) jointly normal: f = f0 + Hw, w ~ N(0, psi I), y = f + e, e ~ N(0, I/psi)
        const Matrix cff = psi * h * h;
        const Matrix cyy = cff + Matrix::Identity(10, 10) / psi;
        const Eigen::LLT<Matrix> llt(cyy);
        const Vector f0 = Vector::Constant(10, d.response.mean());
        const Vector mean = f0 + cff * llt.solve(d.response - f0);
        const Matrix cov = cff - cff * llt.solve(cff);
        worst_mean = std::max(worst_mean, testing::max_abs(post.mean - mean) / std::max(1.0, testing::max_abs(mean)));
        worst_cov = std::max(worst_cov, testing::max_abs(post.covariance - cov) / std::max(1.0, testing::max_abs(cov)));
    }
    return verdict(worst_mean <= 1e-9 && worst_cov <= 1e-9, "10 instances n=10: mean deviation " + fmt(worst_mean) +
                                                                ", covariance deviation " + fmt(worst_cov) + " (tol 1e-9)");
}

// ---- 7 ----

Line parameterizations() {
    double worst = 0.0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        auto g = testing::rng(900 + seed);
        const Dataset d = testing::random_dataset(g, 25);
        const ModelSpec p = testing::three_way_spec();
        const ModelSpec e = testing::three_way_spec(Parameterization::extended);
        const Vector l = testing::normal_vector(g, 3);
        const double psi = std::exp(testing::normal_vector(g, 1)(0));
        const double lp = make_model(d, p, l, psi).log_likelihood;
        const double le = make_model(d, e, term_coefficients(p.anova, l), psi).log_likelihood;
        worst = std::max(worst, std::abs(lp - le) / std::max(1.0, std::abs(lp)));
    }
    const std::vector<LongitudinalModel> models{LongitudinalModel::none, LongitudinalModel::x, LongitudinalModel::c,
                                                LongitudinalModel::c_x, LongitudinalModel::cx};
    std::string pars, ext;
    for (const auto m : models) {
        pars += std::to_string(longitudinal_spec("t", "c", "x", m, 0.3).anova.num_scales());
        ext += std::to_string(longitudinal_spec("t", "c", "x", m, 0.3, Parameterization::extended).anova.num_scales());
    }
    const bool counts = pars == "12233" && ext.substr(1) == "3357";
    return verdict(worst <= 1e-8 && counts, "log-likelihood deviation " + fmt(worst) +
                                                " (tol 1e-8); counts parsimonious " + pars + ", extended " + ext);
}

// ---- 8 ----

Line interpolation() {
    double worst = 0.0, min_eig = std::numeric_limits<double>::infinity();
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        auto g = testing::rng(1100 + seed);
        const Index n = 30;
        std::uniform_real_distribution<double> u(-0.2, 0.2);
        Matrix x(n, 1);
        for (Index i = 0; i < n; ++i)
            x(i, 0) = 0.5 * static_cast<double>(i) + u(g);
        Dataset d;
        d.columns.push_back(CovariateColumn::real("x", x));
        d.response_name = "y";
        d.response = x.col(0).array().sin() + 0.3 * testing::normal_vector(g, n).array();
        ModelSpec spec;
        spec.anova = AnovaSpec::from_terms({"x"}, {{0}}, Parameterization::parsimonious);
        KernelSpec k = KernelSpec::sqexp(0.3);
        k.centered = false;
        spec.kernels = {k};
        const FittedModel m = make_model(d, spec, Vector::Ones(1), 1e8);
        min_eig = std::min(min_eig, m.factor.h_eigenvalues().cwiseAbs().minCoeff());
        const Vector fitted = posterior_f(m, d).mean;
        const double sd = std::sqrt((d.response.array() - d.response.mean()).square().sum() / (n - 1));
        worst = std::max(worst, (fitted - d.response).cwiseAbs().maxCoeff() / sd);
    }
    return verdict(worst <= 1e-4 && min_eig > 1e-6, "psi=1e8, uncentered sqexp (smallest |eigenvalue| " + fmt(min_eig) +
                                      "): max |fitted - y| / sd(y) = " + fmt(worst) + " (tol 1e-4)");
}

// ---- 9 ----

Line recovery() {
    auto g = testing::rng(9);
    const Index n = 100;
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Matrix x(n, 1);
    for (Index i = 0; i < n; ++i)
        x(i, 0) = u(g);
    const auto col = CovariateColumn::real("x", x);
    const double psi = 4.0;
    const Matrix h = gram(KernelSpec::fbm(0.5), col).gram;
    const Vector w = std::sqrt(psi) * testing::normal_vector(g, n);
    Dataset d;
    d.columns.push_back(col);
    d.response_name = "y";
    d.response = (h * w).array() + testing::normal_vector(g, n).array() / std::sqrt(psi);
    ModelSpec spec;
    spec.anova = AnovaSpec::from_terms({"x"}, {{0}}, Parameterization::parsimonious);
    spec.kernels = {KernelSpec::fbm(0.5)};
    FitConfig cfg;
    cfg.restarts = 2;
    cfg.max_iter = 5000;
    const ProfileResult prof = profile_hyperparameter(d, spec, 0, Hyperparameter::gamma, 0.05, 0.95, cfg, 1e-3);

    // two separable blobs
    const Index m = 40;
    Matrix b(m, 2);
    std::vector<std::string> labels;
    std::normal_distribution<double> e(0.0, 0.5);
    for (Index i = 0; i < m; ++i) {
        const double c = i % 2 ? 1.5 : -1.5;
        b(i, 0) = c + e(g);
        b(i, 1) = c + e(g);
        labels.push_back(i % 2 ? "pos" : "neg");
    }
    const auto bc = CovariateColumn::real("x", b);
    FitConfig ccfg;
    ccfg.restarts = 2;
    const Classifier cls = build_classifier({bc}, labels, {KernelSpec::canonical_linear()}, ccfg);
    const auto errors = classification_metrics(cls.predict({bc}).predicted, labels, cls.classes).errors;
    return verdict(prof.best >= 0.3 && prof.best <= 0.7 && errors == 0,
                   "profile gamma* = " + fmt(prof.best) + " (want [0.3, 0.7], n=100); blob training errors " +
                       std::to_string(errors) + " / " + std::to_string(m));
}

// ---- 10 ----

Line tecator(const fs::path &dir) {
    const fs::path file = dir / "tecator.csv";
    if (!fs::exists(file))
        return {Outcome::skip, "no " + file.string() + " (run scripts/fetch_tecator.py)"};
    const Schema schema{{"spectrum", ColumnKind::functional_curve, {}}};
    const Dataset all = load_dataset(file, schema, "fat");
    if (all.n() != 215)
        return {Outcome::fail, "expected 215 rows, found " + std::to_string(all.n())};
    std::vector<Index> train(172), test(43);
    std::iota(train.begin(), train.end(), 0);
    std::iota(test.begin(), test.end(), 172);
    const Dataset tr = all.select(train), te = all.select(test);

    auto run = [&](KernelSpec k) {
        ModelSpec spec;
        spec.anova = AnovaSpec::from_terms({"spectrum"}, {{0}}, Parameterization::parsimonious);
        spec.kernels = {k};
        FitConfig cfg;
        cfg.restarts = 4;
        cfg.max_iter = 50000;
        const FittedModel m = em_fit(tr, spec, cfg);
        return std::pair{rmse(posterior_f(m, tr).mean, tr.response), rmse(posterior_f(m, te).mean, te.response)};
    };
    const auto [lin_train, lin_test] = run(KernelSpec::canonical_linear(MetricKind::sobolev_curve));
    const auto [fbm_train, fbm_test] = run(KernelSpec::fbm(0.5, MetricKind::sobolev_curve));
    const bool lin_ok = std::abs(lin_test - 3.15) <= 0.15 && std::abs(lin_train - 2.82) <= 0.15;
    const bool fbm_ok = std::abs(fbm_test - 0.67) <= 0.10 && fbm_train <= 0.05;
    return verdict(lin_ok && fbm_ok, "linear train " + fmt(lin_train) + " (2.82+-0.15) test " + fmt(lin_test) +
                                         " (3.15+-0.15)" + (lin_ok ? "" : " [out of band]") + "; fbm-1/2 train " +
                                         fmt(fbm_train) + " (<=0.05) test " + fmt(fbm_test) + " (0.67+-0.10)" +
                                         (fbm_ok ? "" : " [out of band]"));
}

// ---- 11 ----

Line vowel(const fs::path &dir) {
    const fs::path train = dir / "vowel.train.csv", test = dir / "vowel.test.csv";
    if (!fs::exists(train) || !fs::exists(test))
        return {Outcome::skip, "no " + train.string() + " / " + test.string()};
    Schema schema{{"x", ColumnKind::real_vector, {}}};
    for (int k = 1; k <= 10; ++k)
        schema[0].sources.push_back("x." + std::to_string(k));
    auto labels_of = [](const fs::path &p) {
        const auto t = csv::read(p);
        const auto at = static_cast<std::size_t>(std::find(t.header.begin(), t.header.end(), "y") - t.header.begin());
        if (at == t.header.size())
            raise(ErrorCode::schema_error, p.string() + ": no column 'y'");
        std::vector<std::string> out;
        for (const auto &row : t.rows)
            out.push_back(row[at]);
        return out;
    };
    const Dataset tr = load_dataset(train, schema, "", false), te = load_dataset(test, schema, "", false);
    const auto ytr = labels_of(train), yte = labels_of(test);
    FitConfig cfg;
    cfg.restarts = 2;
    cfg.max_iter = 2000;
    const Classifier c = build_classifier({tr.columns[0]}, ytr, {KernelSpec::fbm(0.652)}, cfg);
    const double e_tr = classification_metrics(c.predict({tr.columns[0]}).predicted, ytr, c.classes).error_rate();
    const double e_te = classification_metrics(c.predict({te.columns[0]}).predicted, yte, c.classes).error_rate();
    return verdict(e_tr == 0.0 && std::abs(e_te - 0.35) <= 0.03,
                   "train error " + fmt(e_tr) + " (0), test error " + fmt(e_te) + " (0.35+-0.03)");
}

// ---- cow selection ----

Line cow(const fs::path &dir) {
    const fs::path file = dir / "cow.csv";
    if (!fs::exists(file))
        return {Outcome::skip, "no " + file.string() + " (columns weight, cow, treatment, time)"};
    const Schema schema{{"time", ColumnKind::real_vector, {}},
                        {"cow", ColumnKind::categorical, {}},
                        {"treatment", ColumnKind::categorical, {}}};
    const Dataset d = load_dataset(file, schema, "weight");
    const std::vector<LongitudinalModel> models{LongitudinalModel::none, LongitudinalModel::x, LongitudinalModel::c,
                                                LongitudinalModel::c_x, LongitudinalModel::cx};
    std::string detail;
    bool ok = true;
    for (const auto p : {Parameterization::parsimonious, Parameterization::extended}) {
        FitConfig cfg;
        cfg.restarts = 4;
        cfg.max_iter = 5000;
        std::vector<ModelReport> reports;
        for (const auto m : models)
            reports.push_back(make_report(std::string(to_string(m)),
                                          build_longitudinal(d, "time", "cow", "treatment", m, 0.3, cfg, p)));
        const auto by_aic = std::min_element(reports.begin(), reports.end(),
                                             [](const auto &a, const auto &b) { return a.aic < b.aic; });
        const auto by_bic = std::min_element(reports.begin(), reports.end(),
                                             [](const auto &a, const auto &b) { return a.bic < b.bic; });
        ok = ok && by_aic->label == "{C,X}" && by_bic->label == "{C,X}";
        detail += std::string(to_string(p)) + ": AIC picks " + by_aic->label + ", BIC picks " + by_bic->label + "; ";
    }
    return verdict(ok, detail + "want {C,X}");
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"acceptance criteria"};
    fs::path data_dir = "data";
    app.add_option("--data-dir", data_dir, "Directory holding optional datasets");
    CLI11_PARSE(app, argc, argv);

    struct Criterion {
        std::string id;
        std::string name;
        bool gating;
        std::function<Line()> run;
    };
    const std::vector<Criterion> criteria{
        {"1", "centering", true, centering},
        {"2", "pearson fisher identity", true, pearson_fisher},
        {"3", "gradient checks", true, gradients},
        {"4", "em monotonicity and m-step", true, em_monotone},
        {"5", "e-step monte carlo", true, e_step_monte_carlo},
        {"6", "posterior conditioning", true, posterior_oracle},
        {"7", "parameterization equivalence", true, parameterizations},
        {"8", "interpolation limit", true, interpolation},
        {"9", "synthetic recovery", true, recovery},
        {"10", "tecator", false, [&] { return tecator(data_dir); }},
        {"11", "vowel", false, [&] { return vowel(data_dir); }},
        {"cow", "cow model selection", false, [&] { return cow(data_dir); }},
    };

    int gating_failures = 0, other_failures = 0;
    for (const auto &c : criteria) {
        const auto start = std::chrono::steady_clock::now();
        Line line;
        try {
            line = c.run();
        } catch (const std::exception &e) {
            line = {Outcome::fail, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        const char *tag = line.outcome == Outcome::pass ? "PASS" : line.outcome == Outcome::fail ? "FAIL" : "SKIP";
        std::cout << tag << " [" << c.id << "] " << c.name << ": " << line.detail << " (" << fmt(secs) << " s)"
                  << std::endl;
        if (line.outcome == Outcome::fail)
            ++(c.gating ? gating_failures : other_failures);
    }
    std::cout << "property suites: " << (gating_failures ? "FAIL" : "PASS") << " (" << gating_failures
              << " failing); dataset reproductions failing: " << other_failures << std::endl;
    return gating_failures ? 1 : 0;
}
