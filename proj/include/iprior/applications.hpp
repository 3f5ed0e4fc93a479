#pragma once

#include "iprior/estimate.hpp"

#include <optional>
#include <string>
#include <vector>

namespace iprior {

// ---- multi-class classification ----------------------------------------------

/// One regression row per (observation, class): y_jk = 1 iff c_k = j.
/// Rows are observation-major: row k·|C| + j.
struct ExpandedClassification {
    Dataset data;
    std::vector<std::string> classes;
    Index observations = 0;
};

/// `classes` fixes the class order; empty means order of first appearance in `labels`.
/// Labels may be empty (prediction points), in which case the response is left empty.
ExpandedClassification expand_classification(const std::vector<CovariateColumn> &features,
                                             const std::vector<std::string> &labels, const std::string &class_column,
                                             std::vector<std::string> classes = {});

struct ClassPrediction {
    Matrix class_means; ///< observations × classes, posterior means of f(x, j)
    std::vector<std::string> predicted;
    std::vector<bool> tied;
};

struct Classifier {
    FittedModel model;
    std::string class_column;
    std::vector<std::string> classes;
    std::vector<std::string> features;

    /// Argmax over classes; ties go to the earliest class and are logged.
    ClassPrediction predict(const std::vector<CovariateColumn> &features) const;
};

/// Model y_jk = 1/|C| + α_j + Σ_f f_{f,j}(x_k) + ε: terms {class} and {class × feature}
/// for every feature, no feature main effects; Pearson kernel on the class.
ModelSpec classifier_spec(const std::string &class_column, const std::vector<std::string> &features,
                          const std::vector<KernelSpec> &feature_kernels,
                          Parameterization p = Parameterization::parsimonious);

Classifier build_classifier(const std::vector<CovariateColumn> &features, const std::vector<std::string> &labels,
                            const std::vector<KernelSpec> &feature_kernels, const FitConfig &config,
                            const std::string &class_column = "class");

struct ClassificationMetrics {
    Index total = 0;
    Index errors = 0;
    Index unknown_labels = 0; ///< true labels never seen in training, counted as errors
    double error_rate() const { return total == 0 ? 0.0 : static_cast<double>(errors) / static_cast<double>(total); }
};

ClassificationMetrics classification_metrics(const std::vector<std::string> &predicted,
                                             const std::vector<std::string> &actual,
                                             const std::vector<std::string> &classes);

// ---- multilevel ------------------------------------------------------------------

enum class MultilevelVariant { varying_intercept, constant_slope, varying_slope };
std::string_view to_string(MultilevelVariant v) noexcept;
MultilevelVariant parse_multilevel_variant(std::string_view text);

/// Pearson kernel on the group, centered canonical kernel on the covariate.
ModelSpec multilevel_spec(const std::string &group, const std::string &covariate, MultilevelVariant variant,
                          Parameterization p = Parameterization::parsimonious);

FittedModel build_multilevel(const Dataset &data, const std::string &group, const std::string &covariate,
                             MultilevelVariant variant, const FitConfig &config,
                             Parameterization p = Parameterization::parsimonious);

struct GroupEffects {
    std::vector<std::string> levels;
    Vector intercepts; ///< f̂(x = 0, j)
    Vector slopes;     ///< f̂(1, j) − f̂(0, j)
    double mean_intercept = 0.0;
    double mean_slope = 0.0;
    double sd_intercept = 0.0; ///< sample SD across groups
    double sd_slope = 0.0;
    double correlation = 0.0;  ///< NaN when either SD is zero
};

GroupEffects extract_group_effects(const FittedModel &model, const std::string &group, const std::string &covariate);

// ---- longitudinal -------------------------------------------------------------------

enum class LongitudinalModel { none, x, c, c_x, cx };
std::string_view to_string(LongitudinalModel m) noexcept; ///< "{}", "{X}", "{C}", "{C,X}", "{CX}"
LongitudinalModel parse_longitudinal_model(std::string_view text);

/// Time (FBM-γ), unit C and treatment X (Pearson). Covariates not used by the model are omitted.
ModelSpec longitudinal_spec(const std::string &time, const std::string &unit, const std::string &treatment,
                            LongitudinalModel model, double gamma = 0.3,
                            Parameterization p = Parameterization::parsimonious);

FittedModel build_longitudinal(const Dataset &data, const std::string &time, const std::string &unit,
                               const std::string &treatment, LongitudinalModel model, double gamma,
                               const FitConfig &config, Parameterization p = Parameterization::parsimonious);

// ---- reports and comparison -----------------------------------------------------------

struct ModelReport {
    std::string label;
    double log_likelihood = 0.0;
    std::size_t num_scales = 0;
    std::size_t num_error = 1;
    Index n_rows = 0;
    double aic = 0.0;
    double bic = 0.0;
    std::optional<double> train_rmse;
    std::optional<double> test_rmse;
    std::optional<double> train_error_rate;
    std::optional<double> test_error_rate;

    std::size_t num_parameters() const noexcept { return num_scales + num_error; }
};

double aic(double log_likelihood, std::size_t k);
double bic(double log_likelihood, std::size_t k, Index n);

ModelReport make_report(const std::string &label, const FittedModel &model);

struct ComparisonRow {
    ModelReport report;
    std::size_t rank = 0;              ///< 1-based, by BIC
    bool likelihood_group = false;     ///< shares its parameter count with another model
    bool likelihood_selected = false;  ///< highest L within that group
};

/// Sorted by BIC (ties by label). Throws config_error on duplicate labels and
/// data_mismatch when the reports were fitted on different row counts.
std::vector<ComparisonRow> compare_models(const std::vector<ModelReport> &reports);

double rmse(const Vector &a, const Vector &b);

} // namespace iprior
