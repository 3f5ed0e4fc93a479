#include "iprior/kernels.hpp"

#include "iprior/parallel.hpp"

#include <cmath>
#include <unordered_map>

namespace iprior {

std::string_view to_string(KernelFamily family) noexcept {
    switch (family) {
    case KernelFamily::constant: return "constant";
    case KernelFamily::canonical_finite: return "canonical_finite";
    case KernelFamily::pearson: return "pearson";
    case KernelFamily::canonical_linear: return "canonical_linear";
    case KernelFamily::mahalanobis: return "mahalanobis";
    case KernelFamily::fbm: return "fbm";
    case KernelFamily::sqexp: return "sqexp";
    }
    return "?";
}

KernelFamily parse_kernel_family(std::string_view text) {
    for (auto f : {KernelFamily::constant, KernelFamily::canonical_finite, KernelFamily::pearson,
                   KernelFamily::canonical_linear, KernelFamily::mahalanobis, KernelFamily::fbm, KernelFamily::sqexp})
        if (to_string(f) == text)
            return f;
    if (text == "linear" || text == "canonical")
        return KernelFamily::canonical_linear;
    raise(ErrorCode::spec_error, "unknown kernel family '" + std::string(text) + "'");
}

KernelSpec KernelSpec::constant() {
    KernelSpec s;
    s.family = KernelFamily::constant;
    s.centered = false;
    return s;
}

KernelSpec KernelSpec::canonical_finite(bool centered) {
    KernelSpec s;
    s.family = KernelFamily::canonical_finite;
    s.centered = centered;
    return s;
}

KernelSpec KernelSpec::pearson() {
    KernelSpec s;
    s.family = KernelFamily::pearson;
    return s;
}

KernelSpec KernelSpec::canonical_linear(MetricKind metric) {
    KernelSpec s;
    s.family = KernelFamily::canonical_linear;
    s.metric.kind = metric;
    return s;
}

KernelSpec KernelSpec::mahalanobis() {
    KernelSpec s;
    s.family = KernelFamily::mahalanobis;
    s.metric.kind = MetricKind::mahalanobis;
    return s;
}

KernelSpec KernelSpec::fbm(double gamma, MetricKind metric) {
    KernelSpec s;
    s.family = KernelFamily::fbm;
    s.gamma = gamma;
    s.metric.kind = metric;
    return s;
}

KernelSpec KernelSpec::sqexp(double sigma, MetricKind metric) {
    KernelSpec s;
    s.family = KernelFamily::sqexp;
    s.sigma = sigma;
    s.metric.kind = metric;
    return s;
}

bool KernelSpec::is_categorical() const noexcept {
    return family == KernelFamily::canonical_finite || family == KernelFamily::pearson;
}

bool KernelSpec::applies_centering() const noexcept {
    return centered && family != KernelFamily::constant && family != KernelFamily::pearson;
}

void KernelSpec::validate() const {
    if (family == KernelFamily::fbm && !(gamma > 0.0 && gamma < 1.0))
        raise(ErrorCode::spec_error, "fbm: Hurst coefficient must lie in (0,1), got " + std::to_string(gamma));
    if (family == KernelFamily::sqexp && !(sigma > 0.0 && std::isfinite(sigma)))
        raise(ErrorCode::spec_error, "sqexp: sigma must be positive, got " + std::to_string(sigma));
    if (family == KernelFamily::mahalanobis && metric.kind != MetricKind::mahalanobis)
        raise(ErrorCode::spec_error, "mahalanobis kernel needs the mahalanobis metric");
}

void KernelSpec::validate_for(const CovariateColumn &col) const {
    validate();
    if (family == KernelFamily::constant)
        return;
    const bool categorical_col = col.kind() == ColumnKind::categorical;
    if (is_categorical() != categorical_col) {
        raise(ErrorCode::spec_error, "kernel " + std::string(to_string(family)) + " is incompatible with " +
                                         std::string(to_string(col.kind())) + " column '" + col.name() + "'");
    }
}

namespace {

Metric effective_metric(const KernelSpec &spec) {
    Metric m = spec.metric;
    if (spec.family == KernelFamily::mahalanobis)
        m.kind = MetricKind::mahalanobis;
    return m;
}

/// Training level index of each label in `col`, −1 when unseen.
std::vector<int> level_index(const CenteringStats &stats, const CovariateColumn &col) {
    std::unordered_map<std::string, int> index;
    for (std::size_t k = 0; k < stats.levels.size(); ++k)
        index.emplace(stats.levels[k], static_cast<int>(k));
    std::vector<int> out(static_cast<std::size_t>(col.size()), -1);
    for (Index i = 0; i < col.size(); ++i) {
        const auto it = index.find(col.label(i));
        if (it != index.end())
            out[static_cast<std::size_t>(i)] = it->second;
    }
    return out;
}

/// Pre-centering kernel as a functor over (row of a, row of b).
template <class Fill>
Matrix evaluate(const KernelSpec &spec, const CenteringStats &stats, const CovariateColumn &a,
                const CovariateColumn &b, Fill &&fill) {
    Matrix out(a.size(), b.size());
    switch (spec.family) {
    case KernelFamily::constant:
        out.setOnes();
        return out;
    case KernelFamily::canonical_finite:
    case KernelFamily::pearson: {
        const auto ia = level_index(stats, a);
        const auto ib = level_index(stats, b);
        if (spec.family == KernelFamily::canonical_finite) {
            // Unseen labels are compared by string so two unseen equal labels still match.
            fill(out, [&](Index i, Index j) { return a.label(i) == b.label(j) ? 1.0 : 0.0; });
        } else {
            fill(out, [&](Index i, Index j) {
                const int la = ia[static_cast<std::size_t>(i)];
                const int lb = ib[static_cast<std::size_t>(j)];
                if (la < 0 || lb < 0)
                    return 0.0;
                const double p = stats.level_probs(la);
                if (!(p > 0.0) || !(stats.level_probs(lb) > 0.0))
                    return 0.0;
                return (la == lb ? 1.0 / p : 0.0) - 1.0;
            });
        }
        return out;
    }
    default:
        break;
    }

    const Matrix za = stats.embedding.coordinates(a);
    const Matrix zb = stats.embedding.coordinates(b);
    if (za.cols() != zb.cols())
        raise(ErrorCode::schema_error, "kernel: point dimensions differ");

    switch (spec.family) {
    case KernelFamily::canonical_linear:
    case KernelFamily::mahalanobis:
        fill(out, [&](Index i, Index j) { return za.row(i).dot(zb.row(j)); });
        break;
    case KernelFamily::fbm: {
        const double e = 2.0 * spec.gamma;
        if (spec.applies_centering()) {
            // Terms in ‖x‖ and ‖x′‖ alone vanish under centering.
            fill(out, [&](Index i, Index j) { return -0.5 * std::pow((za.row(i) - zb.row(j)).norm(), e); });
        } else {
            fill(out, [&](Index i, Index j) {
                return -0.5 * (std::pow((za.row(i) - zb.row(j)).norm(), e) - std::pow(za.row(i).norm(), e) -
                               std::pow(zb.row(j).norm(), e));
            });
        }
        break;
    }
    case KernelFamily::sqexp: {
        const double denom = 2.0 * spec.sigma * spec.sigma;
        fill(out, [&](Index i, Index j) { return std::exp(-(za.row(i) - zb.row(j)).squaredNorm() / denom); });
        break;
    }
    default:
        break;
    }
    return out;
}

struct ParallelFill {
    template <class Entry>
    void operator()(Matrix &out, Entry &&entry) const {
        parallel::fill(out, std::forward<Entry>(entry));
    }
};

struct SymmetricFill {
    template <class Entry>
    void operator()(Matrix &out, Entry &&entry) const {
        parallel::fill_symmetric(out, std::forward<Entry>(entry));
    }
};

CenteringStats base_stats(const KernelSpec &spec, const CovariateColumn &col) {
    CenteringStats stats;
    if (spec.family == KernelFamily::constant)
        return stats;
    if (spec.is_categorical()) {
        stats.levels = col.levels();
        stats.level_probs = Vector::Zero(static_cast<Index>(stats.levels.size()));
        for (const int c : col.codes())
            stats.level_probs(c) += 1.0;
        stats.level_probs /= static_cast<double>(col.size());
        return stats;
    }
    stats.embedding = Embedding::fit(effective_metric(spec), col);
    stats.train_coordinates = stats.embedding.coordinates(col);
    return stats;
}

} // namespace

Matrix raw_cross_kernel(const KernelSpec &spec, const CenteringStats &stats, const CovariateColumn &a,
                        const CovariateColumn &b) {
    return evaluate(spec, stats, a, b, ParallelFill{});
}

KernelGram gram(const KernelSpec &spec, const CovariateColumn &col) {
    spec.validate_for(col);
    if (col.size() < 1)
        raise(ErrorCode::spec_error, "kernel: empty column '" + col.name() + "'");
    KernelGram out;
    out.stats = base_stats(spec, col);
    const Index n = col.size();
    Matrix raw = evaluate(spec, out.stats, col, col, SymmetricFill{});

    if (!spec.applies_centering()) {
        out.stats.row_means = Vector::Zero(n);
        out.stats.grand_mean = 0.0;
        out.gram = std::move(raw);
        return out;
    }
    out.stats.row_means = raw.rowwise().mean();
    out.stats.grand_mean = out.stats.row_means.mean();
    const Vector &m = out.stats.row_means;
    const double g = out.stats.grand_mean;
    out.gram.resize(n, n);
    parallel::fill_symmetric(out.gram, [&](Index i, Index j) { return raw(i, j) - m(i) - m(j) + g; });
    return out;
}

Matrix cross_gram(const KernelSpec &spec, const CenteringStats &stats, const CovariateColumn &train,
                  const CovariateColumn &new_points) {
    if (spec.family != KernelFamily::constant)
        train.require_compatible(new_points);
    if (stats.row_means.size() != train.size())
        raise(ErrorCode::spec_error, "cross_gram: statistics do not belong to this training column");
    Matrix raw = evaluate(spec, stats, new_points, train, ParallelFill{});
    if (!spec.applies_centering())
        return raw;
    const Vector m_new = raw.rowwise().mean();
    const Vector &m = stats.row_means;
    const double g = stats.grand_mean;
    Matrix out(raw.rows(), raw.cols());
    parallel::fill(out, [&](Index i, Index j) { return raw(i, j) - m_new(i) - m(j) + g; });
    return out;
}

bool pearson_fisher_identity_check(const CovariateColumn &col) {
    if (col.kind() != ColumnKind::categorical)
        raise(ErrorCode::spec_error, "pearson identity: column '" + col.name() + "' is not categorical");
    const auto kg = gram(KernelSpec::pearson(), col);
    const Matrix &h = kg.gram;
    const Index n = h.rows();
    for (Index a = 0; a < n; ++a) {
        for (Index b = 0; b < n; ++b) {
            double info = 0.0;
            for (Index i = 0; i < n; ++i)
                info += h(a, i) * h(b, i);
            info /= static_cast<double>(n);
            if (std::abs(info - h(a, b)) > 1e-9 * std::max(1.0, std::abs(h(a, b))))
                return false;
        }
    }
    return true;
}

GramSet build_gram_set(const std::vector<KernelSpec> &specs, const std::vector<const CovariateColumn *> &columns) {
    if (specs.size() != columns.size())
        raise(ErrorCode::spec_error, "gram set: kernel and column counts differ");
    GramSet set;
    set.train.resize(specs.size());
    set.stats.resize(specs.size());
    for (std::size_t k = 0; k < specs.size(); ++k) {
        auto kg = gram(specs[k], *columns[k]);
        set.train[k] = std::move(kg.gram);
        set.stats[k] = std::move(kg.stats);
    }
    return set;
}

} // namespace iprior
