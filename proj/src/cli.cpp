#include "iprior/cli.hpp"

#include "iprior/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <set>

namespace iprior {

namespace {

std::string num(double v) { return csv::format_number(v); }

std::vector<CovariateColumn> feature_columns(const RunConfig &config, const Dataset &data) {
    std::vector<CovariateColumn> out;
    for (const auto &[name, k] : config.kernels)
        out.push_back(data.column(name));
    return out;
}

std::vector<KernelSpec> feature_kernels(const RunConfig &config) {
    std::vector<KernelSpec> out;
    for (const auto &kv : config.kernels)
        out.push_back(kv.second);
    return out;
}

Vector fixed_vector(const std::vector<double> &v) {
    return Eigen::Map<const Vector>(v.data(), static_cast<Index>(v.size()));
}

void check_fixed(const ModelSpec &spec, const std::vector<double> &scales) {
    if (scales.size() != spec.anova.num_scales())
        raise(ErrorCode::config_error, "fixed_scales has " + std::to_string(scales.size()) + " values, the model needs " +
                                           std::to_string(spec.anova.num_scales()));
}

/// Rows whose categorical labels were never seen in training.
std::vector<bool> extrapolated(const FittedModel &model, const Dataset &points) {
    std::vector<bool> flag(static_cast<std::size_t>(points.n()), false);
    for (const auto &train : model.train_columns) {
        if (train.kind() != ColumnKind::categorical || !points.has_column(train.name()))
            continue;
        const std::set<std::string> known(train.levels().begin(), train.levels().end());
        const auto &col = points.column(train.name());
        for (Index i = 0; i < col.size(); ++i)
            if (!known.count(col.label(i)))
                flag[static_cast<std::size_t>(i)] = true;
    }
    return flag;
}

std::string classifier_header(const std::vector<std::string> &classes, bool with_label) {
    std::vector<std::string> h{"row"};
    if (with_label)
        h.push_back("label");
    h.push_back("predicted");
    for (const auto &c : classes)
        h.push_back("mean_" + c);
    h.push_back("extrapolation");
    return csv::join_row(h);
}

std::string classifier_rows(const ClassPrediction &p, const std::vector<std::string> *labels,
                            const std::vector<bool> &extra) {
    std::string out;
    for (Index k = 0; k < p.class_means.rows(); ++k) {
        std::vector<std::string> row{std::to_string(k + 1)};
        if (labels)
            row.push_back((*labels)[static_cast<std::size_t>(k)]);
        row.push_back(p.predicted[static_cast<std::size_t>(k)]);
        for (Index j = 0; j < p.class_means.cols(); ++j)
            row.push_back(num(p.class_means(k, j)));
        row.push_back(extra[static_cast<std::size_t>(k)] ? "1" : "0");
        out += csv::join_row(row);
    }
    return out;
}

std::string regression_predictions(const FittedModel &model, const Dataset &points) {
    std::string out = csv::join_row({"row", "mean", "variance", "extrapolation"});
    if (points.n() == 0)
        return out;
    const Predictive p = predictive(model, points);
    const auto extra = extrapolated(model, points);
    for (Index i = 0; i < points.n(); ++i)
        out += csv::join_row({std::to_string(i + 1), num(p.mean(i)), num(p.variance(i)),
                              extra[static_cast<std::size_t>(i)] ? "1" : "0"});
    return out;
}

Dataset classifier_points(const Classifier &c, const Dataset &data) {
    Dataset d;
    for (const auto &f : c.features)
        d.columns.push_back(data.column(f));
    return d;
}

} // namespace

FitOutcome run_fit(const RunConfig &config) {
    if (config.threads)
        parallel::set_thread_limit(*config.threads);
    FitOutcome out;
    out.config = config;
    out.data = load_run_data(config);
    out.stored.label = config.label;
    out.stored.schema = config.schema;
    const auto &train = out.data.train;

    if (config.type == ModelType::classification) {
        if (config.profile)
            raise(ErrorCode::config_error, "profile search is not available for classifiers");
        const auto features = feature_columns(config, train);
        Classifier c;
        if (config.fixed_scales) {
            auto expanded = expand_classification(features, out.data.train_labels, config.response);
            c.classes = expanded.classes;
            c.class_column = config.response;
            for (const auto &f : features)
                c.features.push_back(f.name());
            const ModelSpec spec = classifier_spec(config.response, c.features, feature_kernels(config),
                                                   config.parameterization);
            check_fixed(spec, *config.fixed_scales);
            c.model = make_model(expanded.data, spec, fixed_vector(*config.fixed_scales), *config.fixed_psi);
        } else {
            c = build_classifier(features, out.data.train_labels, feature_kernels(config), config.fit,
                                 config.response);
        }
        out.stored.model = c.model;
        out.stored.classifier = ClassifierInfo{c.class_column, c.classes, c.features};
        out.report = make_report(config.label, c.model);
        const auto train_pred = c.predict(features);
        out.report.train_error_rate =
            classification_metrics(train_pred.predicted, out.data.train_labels, c.classes).error_rate();
        if (out.data.test && !out.data.test_labels.empty()) {
            const auto test_pred = c.predict(feature_columns(config, *out.data.test));
            out.report.test_error_rate =
                classification_metrics(test_pred.predicted, out.data.test_labels, c.classes).error_rate();
        }
    } else {
        ModelSpec spec = regression_spec(config);
        FittedModel model;
        if (config.fixed_scales) {
            check_fixed(spec, *config.fixed_scales);
            model = make_model(train, spec, fixed_vector(*config.fixed_scales), *config.fixed_psi);
        } else if (config.profile) {
            const auto &p = *config.profile;
            const auto &cov = spec.anova.covariates;
            const auto it = std::find(cov.begin(), cov.end(), p.covariate);
            if (it == cov.end())
                raise(ErrorCode::config_error, "profile covariate '" + p.covariate + "' is not in the model");
            try {
                out.profile = profile_hyperparameter(train, spec, static_cast<std::size_t>(it - cov.begin()), p.which,
                                                     p.low, p.high, config.fit, p.tolerance);
            } catch (const Error &e) {
                if (e.code() == ErrorCode::spec_error)
                    raise(ErrorCode::config_error, e.what());
                throw;
            }
            model = out.profile->model;
        } else {
            model = em_fit(train, spec, config.fit);
        }
        out.stored.model = model;
        out.report = make_report(config.label, model);
        out.report.train_rmse = rmse(model.fitted(), model.y);
        if (out.data.test && out.data.test->response.size() > 0) {
            const Posterior post = posterior_f(model, *out.data.test);
            out.report.test_rmse = rmse(post.mean, out.data.test->response);
        }
    }
    if (config.standard_errors)
        out.se = standard_errors(out.stored.model);
    else
        out.se.diagnostic = "disabled";
    return out;
}

std::string predictions_csv(const StoredModel &stored, const csv::Table &table) {
    Schema schema = stored.schema;
    std::set<std::string> needed(stored.model.spec.anova.covariates.begin(), stored.model.spec.anova.covariates.end());
    if (stored.classifier) {
        needed.erase(stored.classifier->class_column);
        needed.insert(stored.classifier->features.begin(), stored.classifier->features.end());
    }
    std::erase_if(schema, [&](const ColumnSchema &cs) { return !needed.count(cs.name); });
    auto has = [&](const std::string &h) { return std::find(table.header.begin(), table.header.end(), h) != table.header.end(); };
    for (const auto &cs : schema) {
        if (cs.kind == ColumnKind::functional_curve) {
            if (!std::any_of(table.header.begin(), table.header.end(),
                             [&](const std::string &h) { return h.rfind(cs.name, 0) == 0 && h != cs.name; }))
                raise(ErrorCode::schema_error, "prediction data has no functional block '" + cs.name + ":<t>'");
            continue;
        }
        for (const auto &s : cs.sources.empty() ? std::vector<std::string>{cs.name} : cs.sources)
            if (!has(s))
                raise(ErrorCode::schema_error, "prediction data has no column '" + s + "'");
    }
    Dataset points;
    try {
        points = parse_dataset(table, schema, std::string(), false);
    } catch (const Error &e) {
        raise(ErrorCode::schema_error, e.what());
    }
    for (const auto &train : stored.model.train_columns)
        if (points.has_column(train.name()))
            train.require_compatible(points.column(train.name()));

    if (!stored.classifier)
        return regression_predictions(stored.model, points);

    const Classifier c = as_classifier(stored);
    std::string out = classifier_header(c.classes, false);
    if (points.n() == 0)
        return out;
    const auto p = c.predict(classifier_points(c, points).columns);
    return out + classifier_rows(p, nullptr, extrapolated(c.model, points));
}

void write_fit_outputs(const FitOutcome &o, const std::filesystem::path &dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec)
        raise(ErrorCode::config_error, "cannot create output directory '" + dir.string() + "': " + ec.message());
    const FittedModel &m = o.stored.model;
    const auto names = m.spec.anova.scale_names();

    save_model(dir / "model.json", o.stored);

    {
        std::vector<std::string> h{"iteration", "log_likelihood"};
        for (const auto &n : names)
            h.push_back("lambda_" + n);
        h.push_back("psi");
        std::string s = csv::join_row(h);
        for (const auto &t : m.trace) {
            std::vector<std::string> row{std::to_string(t.iteration), num(t.log_likelihood)};
            for (Index k = 0; k < t.scales.size(); ++k)
                row.push_back(num(t.scales(k)));
            row.push_back(num(t.psi));
            s += csv::join_row(row);
        }
        csv::write_atomic(dir / "trace.csv", s);
    }

    {
        const auto &r = o.report;
        const double nan = std::numeric_limits<double>::quiet_NaN();
        std::vector<std::string> h{"label", "n", "log_likelihood", "num_lambda", "num_error", "aic", "bic", "psi",
                                   "se_log_psi", "status", "iterations", "restart"};
        std::vector<std::string> row{r.label,
                                     std::to_string(r.n_rows),
                                     num(r.log_likelihood),
                                     std::to_string(r.num_scales),
                                     std::to_string(r.num_error),
                                     num(r.aic),
                                     num(r.bic),
                                     num(m.psi),
                                     num(o.se.available ? o.se.log_psi : nan),
                                     std::string(to_string(m.status)),
                                     std::to_string(m.iterations),
                                     std::to_string(m.restart)};
        for (std::size_t k = 0; k < names.size(); ++k) {
            h.push_back("lambda_" + names[k]);
            row.push_back(num(m.scales(static_cast<Index>(k))));
            h.push_back("se_lambda_" + names[k]);
            row.push_back(num(o.se.available ? o.se.scales(static_cast<Index>(k)) : nan));
        }
        if (o.stored.classifier) {
            h.insert(h.end(), {"train_error_rate", "test_error_rate"});
            row.push_back(num(r.train_error_rate.value_or(nan)));
            row.push_back(num(r.test_error_rate.value_or(nan)));
        } else {
            h.insert(h.end(), {"train_rmse", "test_rmse"});
            row.push_back(num(r.train_rmse.value_or(nan)));
            row.push_back(num(r.test_rmse.value_or(nan)));
        }
        if (o.profile) {
            h.push_back("profile_" + o.config.profile->covariate + "_" +
                        (o.config.profile->which == Hyperparameter::gamma ? "gamma" : "sigma"));
            row.push_back(num(o.profile->best));
        }
        csv::write_atomic(dir / "report.csv", csv::join_row(h) + csv::join_row(row));
    }

    if (o.stored.classifier) {
        const Classifier c = as_classifier(o.stored);
        const auto features = feature_columns(o.config, o.data.train);
        const auto p = c.predict(features);
        const std::vector<bool> none(static_cast<std::size_t>(o.data.train.n()), false);
        csv::write_atomic(dir / "fitted.csv",
                          classifier_header(c.classes, true) + classifier_rows(p, &o.data.train_labels, none));
        if (o.data.test) {
            const auto &test = *o.data.test;
            const bool labelled = !o.data.test_labels.empty();
            std::string s = classifier_header(c.classes, labelled);
            if (test.n() > 0) {
                const auto tp = c.predict(feature_columns(o.config, test));
                s += classifier_rows(tp, labelled ? &o.data.test_labels : nullptr, extrapolated(c.model, test));
            }
            csv::write_atomic(dir / "predictions.csv", s);
        }
    } else {
        const Matrix cross = m.cross_h(o.data.train);
        const Vector mean = (cross * m.weights).array() + m.f0;
        const Vector sd = posterior_variance(cross, m.factor).cwiseMax(0.0).cwiseSqrt();
        std::string s = csv::join_row({"row", "y", "fitted", "sd", "lower", "upper"});
        for (Index i = 0; i < m.n(); ++i)
            s += csv::join_row({std::to_string(i + 1), num(m.y(i)), num(mean(i)), num(sd(i)),
                                num(mean(i) - 2.0 * sd(i)), num(mean(i) + 2.0 * sd(i))});
        csv::write_atomic(dir / "fitted.csv", s);
        if (o.data.test)
            csv::write_atomic(dir / "predictions.csv", regression_predictions(m, *o.data.test));
    }

    if (o.profile) {
        std::string s = csv::join_row({"value", "log_likelihood"});
        for (const auto &p : o.profile->probes)
            s += csv::join_row({num(p.value), num(p.log_likelihood)});
        csv::write_atomic(dir / "profile.csv", s);
    }
}

void cmd_fit(const std::filesystem::path &config, const std::optional<std::filesystem::path> &out_dir) {
    const RunConfig c = load_config(config);
    const FitOutcome o = run_fit(c);
    write_fit_outputs(o, out_dir.value_or(c.out_dir));
}

void cmd_predict(const std::filesystem::path &model, const std::filesystem::path &data,
                 const std::optional<std::filesystem::path> &out, std::ostream &stdout_stream) {
    const StoredModel stored = load_model(model);
    const std::string s = predictions_csv(stored, csv::read(data));
    if (out)
        csv::write_atomic(*out, s);
    else
        stdout_stream << s;
}

void cmd_compare(const std::vector<std::filesystem::path> &configs, const std::optional<std::filesystem::path> &out,
                 std::ostream &stdout_stream) {
    if (configs.empty())
        raise(ErrorCode::config_error, "compare: no configs");
    std::vector<RunConfig> parsed;
    std::set<std::string> labels;
    for (const auto &p : configs) {
        parsed.push_back(load_config(p));
        if (!labels.insert(parsed.back().label).second)
            raise(ErrorCode::config_error, "compare: duplicate model label '" + parsed.back().label + "'");
    }
    std::vector<ModelReport> reports;
    Vector reference_y;
    std::vector<std::string> reference_labels;
    for (std::size_t i = 0; i < parsed.size(); ++i) {
        const FitOutcome o = run_fit(parsed[i]);
        const Vector &y = o.stored.model.y;
        if (i == 0) {
            reference_y = y;
            reference_labels = o.data.train_labels;
        } else if (y.size() != reference_y.size() || y != reference_y || o.data.train_labels != reference_labels) {
            raise(ErrorCode::data_mismatch, "compare: '" + parsed[i].label + "' was fitted on different data rows than '" +
                                                parsed[0].label + "'");
        }
        reports.push_back(o.report);
    }
    const auto rows = compare_models(reports);
    std::string s = csv::join_row({"rank", "label", "n", "log_likelihood", "num_lambda", "num_parameters", "aic", "bic",
                                   "likelihood_group", "likelihood_selected"});
    for (const auto &r : rows)
        s += csv::join_row({std::to_string(r.rank), r.report.label, std::to_string(r.report.n_rows),
                            num(r.report.log_likelihood), std::to_string(r.report.num_scales),
                            std::to_string(r.report.num_parameters()), num(r.report.aic), num(r.report.bic),
                            r.likelihood_group ? "1" : "0", r.likelihood_selected ? "1" : "0"});
    if (out)
        csv::write_atomic(*out, s);
    else
        stdout_stream << s;
}

void cmd_gram(const std::filesystem::path &config, const std::string &covariate,
              const std::optional<std::filesystem::path> &out, std::ostream &stdout_stream) {
    const RunConfig c = load_config(config);
    const auto it = std::find_if(c.kernels.begin(), c.kernels.end(), [&](const auto &kv) { return kv.first == covariate; });
    if (it == c.kernels.end())
        raise(ErrorCode::config_error, "gram: covariate '" + covariate + "' has no kernel");
    const RunData d = load_run_data(c);
    const Matrix g = gram(it->second, d.train.column(covariate)).gram;
    std::vector<std::string> h;
    for (Index j = 0; j < g.cols(); ++j)
        h.push_back("h" + std::to_string(j + 1));
    std::string s = csv::join_row(h);
    for (Index i = 0; i < g.rows(); ++i) {
        std::vector<std::string> row;
        for (Index j = 0; j < g.cols(); ++j)
            row.push_back(num(g(i, j)));
        s += csv::join_row(row);
    }
    if (out)
        csv::write_atomic(*out, s);
    else
        stdout_stream << s;
}

} // namespace iprior
