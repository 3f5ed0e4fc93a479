#pragma once

#include "iprior/data.hpp"
#include "iprior/metric.hpp"

#include <string>
#include <vector>

namespace iprior {

enum class KernelFamily { constant, canonical_finite, pearson, canonical_linear, mahalanobis, fbm, sqexp };

std::string_view to_string(KernelFamily family) noexcept;
KernelFamily parse_kernel_family(std::string_view text);

struct KernelSpec {
    KernelFamily family = KernelFamily::canonical_linear;
    double gamma = 0.5; ///< Hurst coefficient, fbm only
    double sigma = 1.0; ///< length scale, sqexp only
    Metric metric;      ///< numeric families; mahalanobis forces MetricKind::mahalanobis
    bool centered = true;

    static KernelSpec constant();
    static KernelSpec canonical_finite(bool centered = true);
    static KernelSpec pearson();
    static KernelSpec canonical_linear(MetricKind metric = MetricKind::euclidean);
    static KernelSpec mahalanobis();
    static KernelSpec fbm(double gamma, MetricKind metric = MetricKind::euclidean);
    static KernelSpec sqexp(double sigma, MetricKind metric = MetricKind::euclidean);

    bool is_categorical() const noexcept;
    /// Constant is never centered; Pearson is centered by construction.
    bool applies_centering() const noexcept;
    void validate() const;
    void validate_for(const CovariateColumn &col) const;
};

/// Everything a kernel needs from the training sample, frozen at fit time.
struct CenteringStats {
    Vector row_means;  ///< m_i = (1/n) Σ_j h(x_i, x_j) of the pre-centering kernel
    double grand_mean = 0.0;
    std::vector<std::string> levels; ///< categorical: training levels
    Vector level_probs;              ///< categorical: p(level) over the training sample
    Embedding embedding;             ///< numeric: frozen metric
    Matrix train_coordinates;        ///< numeric: embedded training points
};

struct KernelGram {
    Matrix gram; ///< n×n, centered when the spec asks for it
    CenteringStats stats;
};

/// Train Gram of `col` under `spec` with its centering statistics.
KernelGram gram(const KernelSpec &spec, const CovariateColumn &col);

/// h_cent(x_new, x_i): one row per new point, one column per training point.
/// Centering uses the training statistics only.
Matrix cross_gram(const KernelSpec &spec, const CenteringStats &stats, const CovariateColumn &train,
                  const CovariateColumn &new_points);

/// Raw (uncentered) kernel between two point sets, evaluated through the
/// training statistics for p(x) and the metric.
Matrix raw_cross_kernel(const KernelSpec &spec, const CenteringStats &stats, const CovariateColumn &a,
                        const CovariateColumn &b);

/// True iff (1/n) Σ_i h_p(x, x_i) h_p(x', x_i) = h_p(x, x') over all sample
/// pairs to 1e−9, i.e. the per-observation Fisher information of a unit-precision
/// Pearson model reproduces the Pearson kernel.
bool pearson_fisher_identity_check(const CovariateColumn &col);

/// Per-covariate train Grams for one model, in the order of `specs`.
struct GramSet {
    std::vector<Matrix> train;
    std::vector<CenteringStats> stats;
};

GramSet build_gram_set(const std::vector<KernelSpec> &specs, const std::vector<const CovariateColumn *> &columns);

} // namespace iprior
