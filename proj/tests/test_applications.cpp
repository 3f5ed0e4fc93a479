#include "support.hpp"

#include "iprior/applications.hpp"

#include <doctest.h>

using namespace iprior;

namespace {

struct Blobs {
    CovariateColumn x;
    std::vector<std::string> labels;
};

Blobs blobs(Index n, std::uint64_t seed, double sep = 3.0) {
    auto g = testing::rng(seed);
    std::normal_distribution<double> e(0.0, 0.5);
    Matrix x(n, 2);
    std::vector<std::string> labels;
    for (Index i = 0; i < n; ++i) {
        const bool pos = i % 2 == 0;
        x(i, 0) = (pos ? sep : -sep) / 2 + e(g);
        x(i, 1) = (pos ? sep : -sep) / 2 + e(g);
        labels.push_back(pos ? "pos" : "neg");
    }
    return {CovariateColumn::real("x", x), labels};
}

FitConfig quick() {
    FitConfig c;
    c.restarts = 2;
    c.max_iter = 300;
    return c;
}

Dataset multilevel_data(const std::vector<double> &slopes, double noise, Index per_group, std::uint64_t seed) {
    auto g = testing::rng(seed);
    std::normal_distribution<double> e(0.0, 1.0);
    std::vector<std::string> groups;
    std::vector<double> xs, ys;
    for (std::size_t j = 0; j < slopes.size(); ++j)
        for (Index i = 0; i < per_group; ++i) {
            const double x = -1.0 + 2.0 * static_cast<double>(i) / static_cast<double>(per_group - 1);
            groups.push_back("g" + std::to_string(j));
            xs.push_back(x);
            ys.push_back(slopes[j] * x + noise * e(g));
        }
    Dataset d;
    d.columns.push_back(CovariateColumn::categorical("group", groups));
    d.columns.push_back(CovariateColumn::real("x", Eigen::Map<const Matrix>(xs.data(), static_cast<Index>(xs.size()), 1)));
    d.response_name = "y";
    d.response = Eigen::Map<const Vector>(ys.data(), static_cast<Index>(ys.size()));
    return d;
}

} // namespace

TEST_CASE("expanded classification data is one-hot per observation") {
    const auto b = blobs(6, 1);
    const auto e = expand_classification({b.x}, b.labels, "class");
    CHECK(e.data.n() == 12);
    CHECK(e.classes == std::vector<std::string>{"pos", "neg"});
    for (Index k = 0; k < 6; ++k)
        CHECK(e.data.response.segment(2 * k, 2).sum() == 1.0);
    CHECK_THROWS_AS(expand_classification({b.x}, std::vector<std::string>(6, "pos"), "class"), Error);
    CHECK_THROWS_AS(expand_classification({}, b.labels, "class"), Error);
}

TEST_CASE("separable blobs are classified without training errors") {
    const auto b = blobs(40, 2);
    const Classifier c = build_classifier({b.x}, b.labels, {KernelSpec::canonical_linear()}, quick());
    const auto p = c.predict({b.x});
    CHECK(classification_metrics(p.predicted, b.labels, c.classes).errors == 0);
    for (Index k = 0; k < p.class_means.rows(); ++k)
        CHECK(std::abs(p.class_means.row(k).sum() - 1.0) < 1e-6);
    CHECK(c.model.spec.anova.terms == std::vector<Term>{{0}, {0, 1}});
}

TEST_CASE("one observation per class is fitted exactly") {
    Matrix x(3, 1);
    x << -1.0, 0.0, 2.0;
    const auto col = CovariateColumn::real("x", x);
    const std::vector<std::string> labels{"a", "b", "c"};
    FitConfig cfg = quick();
    cfg.max_iter = 2000;
    const Classifier c = build_classifier({col}, labels, {KernelSpec::fbm(0.5)}, cfg);
    CHECK(classification_metrics(c.predict({col}).predicted, labels, c.classes).errors == 0);
}

TEST_CASE("relabelling classes permutes the class means") {
    const auto b = blobs(20, 3, 1.0);
    std::vector<std::string> renamed;
    for (const auto &l : b.labels)
        renamed.push_back(l == "pos" ? "zeta" : "alpha");
    const Classifier c1 = build_classifier({b.x}, b.labels, {KernelSpec::fbm(0.5)}, quick());
    const Classifier c2 = build_classifier({b.x}, renamed, {KernelSpec::fbm(0.5)}, quick());
    const auto p1 = c1.predict({b.x});
    const auto p2 = c2.predict({b.x});
    CHECK((p1.class_means - p2.class_means).cwiseAbs().maxCoeff() < 1e-8);
    for (std::size_t k = 0; k < p1.predicted.size(); ++k)
        CHECK((p1.predicted[k] == "pos") == (p2.predicted[k] == "zeta"));
}

TEST_CASE("classification metrics") {
    const std::vector<std::string> truth{"a", "b", "c", "a"};
    CHECK(classification_metrics(truth, truth, {"a", "b", "c"}).errors == 0);
    std::vector<std::string> eleven, constant;
    std::vector<std::string> classes;
    for (int c = 0; c < 11; ++c)
        classes.push_back("k" + std::to_string(c));
    for (int r = 0; r < 5; ++r)
        for (int c = 0; c < 11; ++c) {
            eleven.push_back(classes[static_cast<std::size_t>(c)]);
            constant.push_back("k0");
        }
    CHECK(classification_metrics(constant, eleven, classes).error_rate() == doctest::Approx(10.0 / 11.0));
    const auto m = classification_metrics({"a", "a"}, {"a", "z"}, {"a", "b"});
    CHECK(m.errors == 1);
    CHECK(m.unknown_labels == 1);
}

TEST_CASE("multilevel pearson gram and prior variances") {
    const auto col = CovariateColumn::categorical("school", {"s1", "s1", "s1", "s2", "s3", "s3"});
    const Matrix h = gram(KernelSpec::pearson(), col).gram;
    const Vector p = (Vector(3) << 0.5, 1.0 / 6.0, 1.0 / 3.0).finished();
    Matrix dp = p.cwiseInverse().asDiagonal();
    dp.array() -= 1.0;
    for (Index i = 0; i < 6; ++i)
        for (Index j = 0; j < 6; ++j)
            CHECK(std::abs(h(i, j) - dp(col.codes()[static_cast<std::size_t>(i)], col.codes()[static_cast<std::size_t>(j)])) <
                  1e-12);
    // fewer pupils, larger prior variance
    CHECK(h(3, 3) > h(4, 4));
    CHECK(h(4, 4) > h(0, 0));
}

TEST_CASE("multilevel parameter counts") {
    CHECK(multilevel_spec("g", "x", MultilevelVariant::varying_intercept).anova.num_scales() == 1);
    CHECK(multilevel_spec("g", "x", MultilevelVariant::constant_slope).anova.num_scales() == 2);
    CHECK(multilevel_spec("g", "x", MultilevelVariant::varying_slope).anova.num_scales() == 2);
    CHECK(multilevel_spec("g", "x", MultilevelVariant::varying_slope).anova.terms.size() == 3);
}

TEST_CASE("identical groups give identical effects") {
    Dataset one = multilevel_data({2.0}, 0.3, 12, 4);
    Dataset d = one;
    std::vector<std::string> groups;
    for (Index i = 0; i < 12; ++i)
        groups.push_back("a");
    for (Index i = 0; i < 12; ++i)
        groups.push_back("b");
    Matrix x(24, 1);
    x << one.columns[1].values(), one.columns[1].values();
    d.columns = {CovariateColumn::categorical("group", groups), CovariateColumn::real("x", x)};
    d.response = (Vector(24) << one.response, one.response).finished();
    const FittedModel m = build_multilevel(d, "group", "x", MultilevelVariant::varying_slope, quick());
    const GroupEffects e = extract_group_effects(m, "group", "x");
    CHECK(std::abs(e.intercepts(0) - e.intercepts(1)) < 1e-8);
    CHECK(std::abs(e.intercepts(0) - d.response.mean()) < 1e-8); // α_j ≈ 0 on top of f₀
    CHECK(e.sd_intercept < 1e-8);
}

TEST_CASE("slopes are recovered and match the difference quotient") {
    const Dataset d = multilevel_data({1.0, 3.0}, 0.05, 25, 5);
    FitConfig cfg = quick();
    cfg.max_iter = 3000;
    const FittedModel m = build_multilevel(d, "group", "x", MultilevelVariant::varying_slope, cfg);
    const GroupEffects e = extract_group_effects(m, "group", "x");
    CHECK(std::abs(e.slopes(0) - 1.0) < 0.2);
    CHECK(std::abs(e.slopes(1) - 3.0) < 0.2);

    Dataset pts;
    pts.columns.push_back(CovariateColumn::categorical("group", {"g1", "g1"}));
    pts.columns.push_back(CovariateColumn::real("x", (Matrix(2, 1) << 0.0, 1.0).finished()));
    const Vector f = posterior_f(m, pts).mean;
    CHECK(e.slopes(1) == f(1) - f(0));
    CHECK(e.intercepts(1) == f(0));
    CHECK(std::abs(e.mean_slope - 2.0) < 0.2);

    CHECK_THROWS_AS(extract_group_effects(m, "x", "group"), Error);
}

TEST_CASE("longitudinal parameter counts") {
    const std::vector<LongitudinalModel> models{LongitudinalModel::none, LongitudinalModel::x, LongitudinalModel::c,
                                                LongitudinalModel::c_x, LongitudinalModel::cx};
    const std::vector<std::size_t> pars{1, 2, 2, 3, 3}, ext{1, 3, 3, 5, 7};
    for (std::size_t i = 0; i < models.size(); ++i) {
        CHECK(longitudinal_spec("t", "c", "x", models[i], 0.3).anova.num_scales() == pars[i]);
        CHECK(longitudinal_spec("t", "c", "x", models[i], 0.3, Parameterization::extended).anova.num_scales() == ext[i]);
        CHECK(parse_longitudinal_model(to_string(models[i])) == models[i]);
    }
}

namespace {

Dataset growth_data(std::uint64_t seed) {
    auto g = testing::rng(seed);
    std::normal_distribution<double> e(0.0, 1.0);
    std::vector<std::string> unit, treat;
    std::vector<double> t, y;
    for (int c = 0; c < 8; ++c) {
        const double offset = 0.5 * e(g);
        const bool treated = c % 2 == 1;
        for (int k = 0; k < 6; ++k) {
            unit.push_back("cow" + std::to_string(c));
            treat.push_back(treated ? "B" : "A");
            t.push_back(k);
            y.push_back(std::sqrt(1.0 + k) * (treated ? 1.5 : 1.0) + offset + 0.2 * e(g));
        }
    }
    Dataset d;
    d.columns.push_back(CovariateColumn::real("time", Eigen::Map<const Matrix>(t.data(), static_cast<Index>(t.size()), 1)));
    d.columns.push_back(CovariateColumn::categorical("cow", unit));
    d.columns.push_back(CovariateColumn::categorical("treatment", treat));
    d.response_name = "weight";
    d.response = Eigen::Map<const Vector>(y.data(), static_cast<Index>(y.size()));
    return d;
}

} // namespace

TEST_CASE("longitudinal: extended at induced scales equals parsimonious") {
    const Dataset d = growth_data(6);
    const ModelSpec p = longitudinal_spec("time", "cow", "treatment", LongitudinalModel::cx, 0.3);
    const ModelSpec e = longitudinal_spec("time", "cow", "treatment", LongitudinalModel::cx, 0.3, Parameterization::extended);
    const Vector l = (Vector(3) << 0.7, -0.4, 1.3).finished();
    const FittedModel mp = make_model(d, p, l, 1.4);
    const Vector u = term_coefficients(p.anova, l);
    const FittedModel me = make_model(d, e, u, 1.4);
    CHECK(std::abs(mp.log_likelihood - me.log_likelihood) < 1e-8);
}

TEST_CASE("longitudinal: nested models order by likelihood") {
    const Dataset d = growth_data(7);
    FitConfig cfg;
    cfg.restarts = 4;
    cfg.max_iter = 2000;
    const FittedModel c = build_longitudinal(d, "time", "cow", "treatment", LongitudinalModel::c, 0.3, cfg);
    const FittedModel cx = build_longitudinal(d, "time", "cow", "treatment", LongitudinalModel::c_x, 0.3, cfg);
    CHECK(cx.log_likelihood >= c.log_likelihood - 1e-6);
}

TEST_CASE("reports and comparison") {
    ModelReport a{"a", -10.0, 2, 1, 50};
    ModelReport b{"b", -12.0, 2, 1, 50};
    ModelReport c{"c", -11.0, 3, 1, 50};
    for (auto *r : {&a, &b, &c}) {
        r->aic = aic(r->log_likelihood, r->num_parameters());
        r->bic = bic(r->log_likelihood, r->num_parameters(), r->n_rows);
    }
    CHECK(a.aic == -2.0 * -10.0 + 2.0 * 3.0);
    CHECK(a.bic == -2.0 * -10.0 + 3.0 * std::log(50.0));
    const auto rows = compare_models({b, c, a});
    REQUIRE(rows.size() == 3);
    CHECK(rows[0].report.label == "a");
    CHECK(rows[0].rank == 1);
    CHECK(rows[0].likelihood_selected);
    for (const auto &r : rows) {
        if (r.report.label == "b") {
            CHECK(r.likelihood_group);
            CHECK_FALSE(r.likelihood_selected);
        }
        if (r.report.label == "c")
            CHECK_FALSE(r.likelihood_group);
    }
    const auto one = compare_models({a});
    CHECK_FALSE(one[0].likelihood_group);
    CHECK_FALSE(one[0].likelihood_selected);

    ModelReport other = b;
    other.n_rows = 49;
    try {
        compare_models({a, other});
        FAIL("expected data mismatch");
    } catch (const Error &e) {
        CHECK(e.code() == ErrorCode::data_mismatch);
    }
    try {
        compare_models({a, a});
        FAIL("expected config error");
    } catch (const Error &e) {
        CHECK(e.code() == ErrorCode::config_error);
    }

    const Dataset d = growth_data(8);
    const FittedModel m = make_model(d, longitudinal_spec("time", "cow", "treatment", LongitudinalModel::c, 0.3),
                                     Vector::Ones(2), 1.0);
    const ModelReport r = make_report("m", m);
    CHECK(r.num_parameters() == 3);
    CHECK(r.aic == aic(m.log_likelihood, 3));
    CHECK(r.bic == bic(m.log_likelihood, 3, 48));
}
