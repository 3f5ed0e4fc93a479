#include "iprior/model_io.hpp"

#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <sstream>

namespace iprior {

using nlohmann::json;

namespace {

constexpr const char *format_tag = "iprior-model/1";

json vector_json(const Vector &v) { return std::vector<double>(v.data(), v.data() + v.size()); }

json matrix_json(const Matrix &m) {
    json rows = json::array();
    for (Index i = 0; i < m.rows(); ++i) {
        const Vector r = m.row(i).transpose();
        rows.push_back(vector_json(r));
    }
    return rows;
}

Vector json_vector(const json &j) {
    const auto v = j.get<std::vector<double>>();
    return Eigen::Map<const Vector>(v.data(), static_cast<Index>(v.size()));
}

Matrix json_matrix(const json &j, Index cols) {
    Matrix m(static_cast<Index>(j.size()), cols);
    for (std::size_t i = 0; i < j.size(); ++i) {
        const auto row = j[i].get<std::vector<double>>();
        if (static_cast<Index>(row.size()) != cols)
            raise(ErrorCode::load_error, "model: ragged matrix");
        for (Index c = 0; c < cols; ++c)
            m(static_cast<Index>(i), c) = row[static_cast<std::size_t>(c)];
    }
    return m;
}

json kernel_json(const KernelSpec &k) {
    json j{{"family", to_string(k.family)},
           {"gamma", k.gamma},
           {"sigma", k.sigma},
           {"metric", to_string(k.metric.kind)},
           {"centered", k.centered}};
    if (k.metric.covariance)
        j["covariance"] = matrix_json(*k.metric.covariance);
    return j;
}

KernelSpec json_kernel(const json &j) {
    KernelSpec k;
    k.family = parse_kernel_family(j.at("family").get<std::string>());
    k.gamma = j.at("gamma").get<double>();
    k.sigma = j.at("sigma").get<double>();
    k.metric.kind = parse_metric_kind(j.at("metric").get<std::string>());
    k.centered = j.at("centered").get<bool>();
    if (j.contains("covariance")) {
        const auto &c = j.at("covariance");
        k.metric.covariance = json_matrix(c, static_cast<Index>(c.size()));
    }
    return k;
}

json column_json(const CovariateColumn &c) {
    json j{{"name", c.name()}, {"kind", to_string(c.kind())}};
    if (c.kind() == ColumnKind::categorical) {
        j["levels"] = c.levels();
        j["codes"] = c.codes();
    } else {
        j["dimension"] = c.dimension();
        j["values"] = matrix_json(c.values());
        if (c.kind() == ColumnKind::functional_curve)
            j["grid"] = c.grid();
    }
    return j;
}

CovariateColumn json_column(const json &j) {
    const auto name = j.at("name").get<std::string>();
    const auto kind = j.at("kind").get<std::string>();
    if (kind == "categorical") {
        const auto levels = j.at("levels").get<std::vector<std::string>>();
        std::vector<std::string> labels;
        for (const int code : j.at("codes").get<std::vector<int>>()) {
            if (code < 0 || static_cast<std::size_t>(code) >= levels.size())
                raise(ErrorCode::load_error, "model: categorical code out of range in '" + name + "'");
            labels.push_back(levels[static_cast<std::size_t>(code)]);
        }
        return CovariateColumn::categorical(name, labels);
    }
    const Matrix values = json_matrix(j.at("values"), j.at("dimension").get<Index>());
    if (kind == "real")
        return CovariateColumn::real(name, values);
    if (kind == "functional")
        return CovariateColumn::functional(name, j.at("grid").get<std::vector<double>>(), values);
    raise(ErrorCode::load_error, "model: unknown column kind '" + kind + "'");
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

Schema schema_of_columns(const std::vector<CovariateColumn> &columns) {
    Dataset d;
    d.columns = columns;
    return schema_of(d);
}

ColumnKind parse_column_kind(const std::string &s) {
    if (s == "categorical") return ColumnKind::categorical;
    if (s == "real") return ColumnKind::real_vector;
    if (s == "functional") return ColumnKind::functional_curve;
    raise(ErrorCode::load_error, "model: unknown column kind '" + s + "'");
}

FitStatus parse_status(const std::string &s) {
    if (s == "converged") return FitStatus::converged;
    if (s == "stalled") return FitStatus::stalled;
    if (s == "fixed") return FitStatus::fixed;
    raise(ErrorCode::load_error, "model: unknown status '" + s + "'");
}

} // namespace

std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string model_to_json(const StoredModel &stored) {
    const FittedModel &m = stored.model;
    json payload;
    payload["format"] = format_tag;
    payload["label"] = stored.label;
    payload["prng"] = prng_name;
    payload["seed"] = m.seed;
    payload["restart"] = m.restart;
    payload["status"] = to_string(m.status);
    payload["iterations"] = m.iterations;
    payload["response"] = {{"name", m.response_name}, {"values", vector_json(m.y)}};
    payload["f0"] = m.f0;
    payload["psi"] = m.psi;
    payload["scales"] = vector_json(m.scales);
    payload["scale_names"] = m.spec.anova.scale_names();
    payload["log_likelihood"] = m.log_likelihood;
    payload["weights"] = vector_json(m.weights);
    json terms = json::array();
    for (const auto &t : m.spec.anova.terms)
        terms.push_back(t);
    payload["anova"] = {{"covariates", m.spec.anova.covariates},
                        {"terms", terms},
                        {"parameterization", to_string(m.spec.anova.parameterization)}};
    json kernels = json::array();
    for (const auto &k : m.spec.kernels)
        kernels.push_back(kernel_json(k));
    payload["kernels"] = kernels;
    json columns = json::array();
    for (const auto &c : m.train_columns)
        columns.push_back(column_json(c));
    payload["train_columns"] = columns;
    json schema = json::array();
    for (const auto &cs : stored.schema.empty() ? schema_of_columns(m.train_columns) : stored.schema)
        schema.push_back({{"name", cs.name}, {"kind", to_string(cs.kind)}, {"sources", cs.sources}});
    payload["schema"] = schema;
    if (stored.classifier)
        payload["classifier"] = {{"class_column", stored.classifier->class_column},
                                 {"classes", stored.classifier->classes},
                                 {"features", stored.classifier->features}};
    const std::string body = payload.dump();
    payload["checksum"] = "fnv1a64:" + hex64(fnv1a64(body));
    return payload.dump(1) + "\n";
}

StoredModel model_from_json(std::string_view text) {
    json payload;
    try {
        payload = json::parse(text);
    } catch (const json::exception &e) {
        raise(ErrorCode::load_error, std::string("model: invalid JSON: ") + e.what());
    }
    try {
        if (payload.value("format", "") != format_tag)
            raise(ErrorCode::load_error, "model: unsupported format '" + payload.value("format", "") + "'");
        const auto checksum = payload.at("checksum").get<std::string>();
        payload.erase("checksum");
        const auto expected = "fnv1a64:" + hex64(fnv1a64(payload.dump()));
        if (checksum != expected)
            raise(ErrorCode::load_error, "model: checksum mismatch (file " + checksum + ", content " + expected + ")");
        if (payload.at("prng").get<std::string>() != prng_name)
            log_event("model: written with PRNG '" + payload.at("prng").get<std::string>() + "'");

        ModelSpec spec;
        const auto &a = payload.at("anova");
        spec.anova = AnovaSpec::from_terms(a.at("covariates").get<std::vector<std::string>>(),
                                           a.at("terms").get<std::vector<Term>>(),
                                           parse_parameterization(a.at("parameterization").get<std::string>()));
        for (const auto &k : payload.at("kernels"))
            spec.kernels.push_back(json_kernel(k));

        Dataset data;
        data.response_name = payload.at("response").at("name").get<std::string>();
        data.response = json_vector(payload.at("response").at("values"));
        for (const auto &c : payload.at("train_columns"))
            data.columns.push_back(json_column(c));

        StoredModel out;
        out.label = payload.value("label", "");
        out.model = make_model(data, spec, json_vector(payload.at("scales")), payload.at("psi").get<double>());
        auto &m = out.model;
        const double f0 = payload.at("f0").get<double>();
        if (std::abs(m.f0 - f0) > 1e-12 * (1.0 + std::abs(f0)))
            raise(ErrorCode::load_error, "model: stored f0 disagrees with the training response");
        const double ll = payload.at("log_likelihood").get<double>();
        if (std::abs(m.log_likelihood - ll) > 1e-8 * (1.0 + std::abs(ll)))
            raise(ErrorCode::load_error, "model: stored log likelihood disagrees with the rebuilt model");
        m.f0 = f0;
        m.status = parse_status(payload.at("status").get<std::string>());
        m.iterations = payload.at("iterations").get<int>();
        m.restart = payload.at("restart").get<int>();
        m.seed = payload.at("seed").get<std::uint64_t>();
        for (const auto &cs : payload.at("schema"))
            out.schema.push_back({cs.at("name").get<std::string>(), parse_column_kind(cs.at("kind").get<std::string>()),
                                  cs.at("sources").get<std::vector<std::string>>()});
        if (payload.contains("classifier")) {
            const auto &c = payload.at("classifier");
            out.classifier = ClassifierInfo{c.at("class_column").get<std::string>(),
                                            c.at("classes").get<std::vector<std::string>>(),
                                            c.at("features").get<std::vector<std::string>>()};
        }
        return out;
    } catch (const json::exception &e) {
        raise(ErrorCode::load_error, std::string("model: malformed content: ") + e.what());
    }
}

void save_model(const std::filesystem::path &path, const StoredModel &stored) {
    csv::write_atomic(path, model_to_json(stored));
}

StoredModel load_model(const std::filesystem::path &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        raise(ErrorCode::load_error, "cannot open model '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return model_from_json(ss.str());
}

Classifier as_classifier(const StoredModel &stored) {
    if (!stored.classifier)
        raise(ErrorCode::spec_error, "model is not a classifier");
    Classifier c;
    c.model = stored.model;
    c.class_column = stored.classifier->class_column;
    c.classes = stored.classifier->classes;
    c.features = stored.classifier->features;
    return c;
}

} // namespace iprior
