#include "iprior/applications.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>

namespace iprior {

// ---- classification ---------------------------------------------------------------

ExpandedClassification expand_classification(const std::vector<CovariateColumn> &features,
                                             const std::vector<std::string> &labels, const std::string &class_column,
                                             std::vector<std::string> classes) {
    if (features.empty())
        raise(ErrorCode::spec_error, "classifier: no feature columns");
    const Index n = features.front().size();
    for (const auto &f : features) {
        if (f.size() != n)
            raise(ErrorCode::load_error, "classifier: feature '" + f.name() + "' length differs");
        if (f.name() == class_column)
            raise(ErrorCode::spec_error, "classifier: feature name '" + f.name() + "' clashes with the class column");
    }
    const bool labelled = !labels.empty();
    if (labelled && static_cast<Index>(labels.size()) != n)
        raise(ErrorCode::load_error, "classifier: label count differs from the feature rows");
    if (classes.empty()) {
        std::set<std::string> seen;
        for (const auto &l : labels)
            if (seen.insert(l).second)
                classes.push_back(l);
    }
    if (classes.size() < 2)
        raise(ErrorCode::spec_error, "classifier: needs at least 2 classes");

    const auto c = static_cast<Index>(classes.size());
    std::vector<Index> rows;
    std::vector<std::string> class_labels;
    rows.reserve(static_cast<std::size_t>(n * c));
    for (Index k = 0; k < n; ++k)
        for (Index j = 0; j < c; ++j) {
            rows.push_back(k);
            class_labels.push_back(classes[static_cast<std::size_t>(j)]);
        }

    ExpandedClassification out;
    out.classes = classes;
    out.observations = n;
    out.data.response_name = "indicator";
    out.data.columns.push_back(CovariateColumn::categorical(class_column, class_labels));
    for (const auto &f : features)
        out.data.columns.push_back(f.select(rows));
    if (labelled) {
        out.data.response = Vector::Zero(n * c);
        for (Index k = 0; k < n; ++k)
            for (Index j = 0; j < c; ++j)
                if (labels[static_cast<std::size_t>(k)] == classes[static_cast<std::size_t>(j)])
                    out.data.response(k * c + j) = 1.0;
    }
    return out;
}

ModelSpec classifier_spec(const std::string &class_column, const std::vector<std::string> &features,
                          const std::vector<KernelSpec> &feature_kernels, Parameterization p) {
    if (features.empty())
        raise(ErrorCode::spec_error, "classifier: no feature columns");
    if (features.size() != feature_kernels.size())
        raise(ErrorCode::spec_error, "classifier: one kernel per feature is required");
    std::vector<std::string> covariates{class_column};
    covariates.insert(covariates.end(), features.begin(), features.end());
    std::vector<Term> terms{{0}};
    for (std::size_t f = 0; f < features.size(); ++f)
        terms.push_back({0, f + 1});
    ModelSpec spec;
    spec.anova = AnovaSpec::from_terms(covariates, terms, p);
    spec.kernels.push_back(KernelSpec::pearson());
    spec.kernels.insert(spec.kernels.end(), feature_kernels.begin(), feature_kernels.end());
    spec.validate();
    return spec;
}

Classifier build_classifier(const std::vector<CovariateColumn> &features, const std::vector<std::string> &labels,
                            const std::vector<KernelSpec> &feature_kernels, const FitConfig &config,
                            const std::string &class_column) {
    if (labels.empty())
        raise(ErrorCode::load_error, "classifier: no training labels");
    auto expanded = expand_classification(features, labels, class_column);
    Classifier c;
    c.class_column = class_column;
    c.classes = expanded.classes;
    for (const auto &f : features)
        c.features.push_back(f.name());
    const ModelSpec spec = classifier_spec(class_column, c.features, feature_kernels);
    // One-hot rows make ȳ = 1/|C|, the intended f₀.
    c.model = em_fit(expanded.data, spec, config);
    return c;
}

ClassPrediction Classifier::predict(const std::vector<CovariateColumn> &points) const {
    const auto expanded = expand_classification(points, {}, class_column, classes);
    const Vector mean = posterior_f(model, expanded.data).mean;
    const auto c = static_cast<Index>(classes.size());
    ClassPrediction out;
    out.class_means.resize(expanded.observations, c);
    for (Index k = 0; k < expanded.observations; ++k) {
        out.class_means.row(k) = mean.segment(k * c, c).transpose();
        Index best = 0;
        bool tie = false;
        for (Index j = 1; j < c; ++j) {
            if (out.class_means(k, j) > out.class_means(k, best)) {
                best = j;
                tie = false;
            } else if (out.class_means(k, j) == out.class_means(k, best)) {
                tie = true;
            }
        }
        if (tie)
            log_event("classifier: tie at observation " + std::to_string(k + 1) + ", chose '" +
                      classes[static_cast<std::size_t>(best)] + "'");
        out.predicted.push_back(classes[static_cast<std::size_t>(best)]);
        out.tied.push_back(tie);
    }
    return out;
}

ClassificationMetrics classification_metrics(const std::vector<std::string> &predicted,
                                             const std::vector<std::string> &actual,
                                             const std::vector<std::string> &classes) {
    if (predicted.size() != actual.size())
        raise(ErrorCode::data_mismatch, "classification metrics: prediction and label counts differ");
    const std::set<std::string> known(classes.begin(), classes.end());
    ClassificationMetrics m;
    m.total = static_cast<Index>(actual.size());
    for (std::size_t i = 0; i < actual.size(); ++i) {
        if (!known.count(actual[i])) {
            ++m.unknown_labels;
            ++m.errors;
        } else if (predicted[i] != actual[i]) {
            ++m.errors;
        }
    }
    if (m.unknown_labels > 0)
        log_event("classification metrics: " + std::to_string(m.unknown_labels) +
                  " labels absent from training counted as errors");
    return m;
}

// ---- multilevel ----------------------------------------------------------------------

std::string_view to_string(MultilevelVariant v) noexcept {
    switch (v) {
    case MultilevelVariant::varying_intercept: return "varying_intercept";
    case MultilevelVariant::constant_slope: return "constant_slope";
    case MultilevelVariant::varying_slope: return "varying_slope";
    }
    return "?";
}

MultilevelVariant parse_multilevel_variant(std::string_view text) {
    if (text == "varying_intercept") return MultilevelVariant::varying_intercept;
    if (text == "constant_slope") return MultilevelVariant::constant_slope;
    if (text == "varying_slope") return MultilevelVariant::varying_slope;
    raise(ErrorCode::spec_error, "unknown multilevel variant '" + std::string(text) + "'");
}

ModelSpec multilevel_spec(const std::string &group, const std::string &covariate, MultilevelVariant variant,
                          Parameterization p) {
    ModelSpec spec;
    if (variant == MultilevelVariant::varying_intercept) {
        spec.anova = AnovaSpec::from_terms({group}, {{0}}, p);
        spec.kernels = {KernelSpec::pearson()};
    } else {
        const std::vector<std::string> cov{group, covariate};
        spec.anova = variant == MultilevelVariant::constant_slope ? AnovaSpec::from_terms(cov, {{0}, {1}}, p)
                                                                  : AnovaSpec::from_sperner(cov, {{0, 1}}, p);
        spec.kernels = {KernelSpec::pearson(), KernelSpec::canonical_linear()};
    }
    spec.validate();
    return spec;
}

FittedModel build_multilevel(const Dataset &data, const std::string &group, const std::string &covariate,
                             MultilevelVariant variant, const FitConfig &config, Parameterization p) {
    if (data.column(group).kind() != ColumnKind::categorical)
        raise(ErrorCode::spec_error, "multilevel: group column '" + group + "' must be categorical");
    if (variant != MultilevelVariant::varying_intercept && data.column(covariate).kind() == ColumnKind::categorical)
        raise(ErrorCode::spec_error, "multilevel: covariate '" + covariate + "' must be numeric");
    return em_fit(data, multilevel_spec(group, covariate, variant, p), config);
}

namespace {

double sample_sd(const Vector &v) {
    if (v.size() < 2)
        return 0.0;
    return std::sqrt((v.array() - v.mean()).square().sum() / static_cast<double>(v.size() - 1));
}

} // namespace

GroupEffects extract_group_effects(const FittedModel &model, const std::string &group, const std::string &covariate) {
    const auto &cov = model.spec.anova.covariates;
    const auto g_it = std::find(cov.begin(), cov.end(), group);
    if (g_it == cov.end())
        raise(ErrorCode::spec_error, "group effects: model has no covariate '" + group + "'");
    const auto g = static_cast<std::size_t>(g_it - cov.begin());
    if (model.spec.kernels[g].family != KernelFamily::pearson)
        raise(ErrorCode::spec_error, "group effects: '" + group + "' does not carry a Pearson kernel");
    for (std::size_t v = 0; v < cov.size(); ++v)
        if (v != g && cov[v] != covariate)
            raise(ErrorCode::spec_error, "group effects: model has covariate '" + cov[v] +
                                             "' outside the multilevel pair");
    const auto x_it = std::find(cov.begin(), cov.end(), covariate);
    Index dim = 1;
    if (x_it != cov.end())
        dim = model.train_columns[static_cast<std::size_t>(x_it - cov.begin())].dimension();
    if (dim != 1)
        raise(ErrorCode::spec_error, "group effects: covariate must be one-dimensional");

    GroupEffects out;
    out.levels = model.train_columns[g].levels();
    const auto m = static_cast<Index>(out.levels.size());
    std::vector<std::string> labels;
    Matrix x(2 * m, 1);
    for (Index j = 0; j < m; ++j) {
        labels.push_back(out.levels[static_cast<std::size_t>(j)]);
        labels.push_back(out.levels[static_cast<std::size_t>(j)]);
        x(2 * j, 0) = 0.0;
        x(2 * j + 1, 0) = 1.0;
    }
    Dataset points;
    points.columns.push_back(CovariateColumn::categorical(group, labels));
    points.columns.push_back(CovariateColumn::real(covariate, x));
    const Vector f = posterior_f(model, points).mean;
    out.intercepts.resize(m);
    out.slopes.resize(m);
    for (Index j = 0; j < m; ++j) {
        out.intercepts(j) = f(2 * j);
        out.slopes(j) = f(2 * j + 1) - f(2 * j);
    }
    out.mean_intercept = out.intercepts.mean();
    out.mean_slope = out.slopes.mean();
    out.sd_intercept = sample_sd(out.intercepts);
    out.sd_slope = sample_sd(out.slopes);
    if (out.sd_intercept > 0.0 && out.sd_slope > 0.0 && m > 1) {
        const double cov_is = ((out.intercepts.array() - out.mean_intercept) * (out.slopes.array() - out.mean_slope))
                                  .sum() /
                              static_cast<double>(m - 1);
        out.correlation = cov_is / (out.sd_intercept * out.sd_slope);
    } else {
        out.correlation = std::numeric_limits<double>::quiet_NaN();
    }
    return out;
}

// ---- longitudinal -------------------------------------------------------------------------

std::string_view to_string(LongitudinalModel m) noexcept {
    switch (m) {
    case LongitudinalModel::none: return "{}";
    case LongitudinalModel::x: return "{X}";
    case LongitudinalModel::c: return "{C}";
    case LongitudinalModel::c_x: return "{C,X}";
    case LongitudinalModel::cx: return "{CX}";
    }
    return "?";
}

LongitudinalModel parse_longitudinal_model(std::string_view text) {
    std::string t;
    for (const char ch : text)
        if (ch != '{' && ch != '}' && ch != ' ')
            t += static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
    if (t.empty() || t == "NONE") return LongitudinalModel::none;
    if (t == "X") return LongitudinalModel::x;
    if (t == "C") return LongitudinalModel::c;
    if (t == "C,X" || t == "X,C") return LongitudinalModel::c_x;
    if (t == "CX" || t == "XC") return LongitudinalModel::cx;
    raise(ErrorCode::spec_error, "unknown longitudinal model '" + std::string(text) + "'");
}

ModelSpec longitudinal_spec(const std::string &time, const std::string &unit, const std::string &treatment,
                            LongitudinalModel model, double gamma, Parameterization p) {
    const bool use_c = model == LongitudinalModel::c || model == LongitudinalModel::c_x || model == LongitudinalModel::cx;
    const bool use_x = model == LongitudinalModel::x || model == LongitudinalModel::c_x || model == LongitudinalModel::cx;
    ModelSpec spec;
    std::vector<std::string> cov{time};
    spec.kernels.push_back(KernelSpec::fbm(gamma));
    std::size_t c = 0, x = 0;
    if (use_c) {
        c = cov.size();
        cov.push_back(unit);
        spec.kernels.push_back(KernelSpec::pearson());
    }
    if (use_x) {
        x = cov.size();
        cov.push_back(treatment);
        spec.kernels.push_back(KernelSpec::pearson());
    }
    std::vector<Term> family;
    switch (model) {
    case LongitudinalModel::none: family = {{0}}; break;
    case LongitudinalModel::x: family = {{0, x}}; break;
    case LongitudinalModel::c: family = {{0, c}}; break;
    case LongitudinalModel::c_x: family = {{0, c}, {0, x}}; break;
    case LongitudinalModel::cx: family = {{0, c, x}}; break;
    }
    spec.anova = AnovaSpec::from_sperner(cov, family, p);
    spec.validate();
    return spec;
}

FittedModel build_longitudinal(const Dataset &data, const std::string &time, const std::string &unit,
                               const std::string &treatment, LongitudinalModel model, double gamma,
                               const FitConfig &config, Parameterization p) {
    return em_fit(data, longitudinal_spec(time, unit, treatment, model, gamma, p), config);
}

// ---- reports ---------------------------------------------------------------------------------

double aic(double log_likelihood, std::size_t k) { return -2.0 * log_likelihood + 2.0 * static_cast<double>(k); }

double bic(double log_likelihood, std::size_t k, Index n) {
    return -2.0 * log_likelihood + static_cast<double>(k) * std::log(static_cast<double>(n));
}

ModelReport make_report(const std::string &label, const FittedModel &model) {
    ModelReport r;
    r.label = label;
    r.log_likelihood = model.log_likelihood;
    r.num_scales = model.spec.anova.num_scales();
    r.num_error = 1;
    r.n_rows = model.n();
    r.aic = aic(r.log_likelihood, r.num_parameters());
    r.bic = bic(r.log_likelihood, r.num_parameters(), r.n_rows);
    return r;
}

std::vector<ComparisonRow> compare_models(const std::vector<ModelReport> &reports) {
    if (reports.empty())
        raise(ErrorCode::config_error, "compare: no models");
    std::set<std::string> labels;
    for (const auto &r : reports) {
        if (!labels.insert(r.label).second)
            raise(ErrorCode::config_error, "compare: duplicate model label '" + r.label + "'");
        if (r.n_rows != reports.front().n_rows)
            raise(ErrorCode::data_mismatch, "compare: '" + r.label + "' has " + std::to_string(r.n_rows) +
                                                " rows, '" + reports.front().label + "' has " +
                                                std::to_string(reports.front().n_rows));
    }
    std::vector<ComparisonRow> rows;
    for (const auto &r : reports)
        rows.push_back({r, 0, false, false});
    std::map<std::size_t, std::vector<std::size_t>> by_k;
    for (std::size_t i = 0; i < rows.size(); ++i)
        by_k[rows[i].report.num_parameters()].push_back(i);
    for (const auto &[k, members] : by_k) {
        if (members.size() < 2)
            continue;
        std::size_t best = members.front();
        for (const auto i : members) {
            rows[i].likelihood_group = true;
            if (rows[i].report.log_likelihood > rows[best].report.log_likelihood)
                best = i;
        }
        rows[best].likelihood_selected = true;
    }
    std::stable_sort(rows.begin(), rows.end(), [](const ComparisonRow &a, const ComparisonRow &b) {
        if (a.report.bic != b.report.bic)
            return a.report.bic < b.report.bic;
        return a.report.label < b.report.label;
    });
    for (std::size_t i = 0; i < rows.size(); ++i)
        rows[i].rank = i + 1;
    return rows;
}

double rmse(const Vector &a, const Vector &b) {
    if (a.size() != b.size())
        raise(ErrorCode::data_mismatch, "rmse: length mismatch");
    if (a.size() == 0)
        return 0.0;
    return std::sqrt((a - b).squaredNorm() / static_cast<double>(a.size()));
}

} // namespace iprior
