#include "iprior/config.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace iprior {

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos)
        return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(std::string_view s, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (;;) {
        const auto pos = s.find(sep, start);
        out.push_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
        if (pos == std::string_view::npos)
            break;
        start = pos + 1;
    }
    return out;
}

std::vector<std::string> words(std::string_view s) {
    std::istringstream in{std::string(s)};
    std::vector<std::string> out;
    for (std::string w; in >> w;)
        out.push_back(w);
    return out;
}

[[noreturn]] void config_fail(const std::string &message) { raise(ErrorCode::config_error, message); }

double number(const std::string &text, const std::string &key) {
    try {
        return parse_number(text, key);
    } catch (const Error &) {
        config_fail("'" + key + "' expects a number, got '" + text + "'");
    }
}

int integer(const std::string &text, const std::string &key) {
    const double v = number(text, key);
    if (v != std::floor(v) || std::abs(v) > 1e9)
        config_fail("'" + key + "' expects an integer, got '" + text + "'");
    return static_cast<int>(v);
}

bool boolean(const std::string &text, const std::string &key) {
    if (text == "true" || text == "yes" || text == "1" || text == "on")
        return true;
    if (text == "false" || text == "no" || text == "0" || text == "off")
        return false;
    config_fail("'" + key + "' expects true or false, got '" + text + "'");
}

std::filesystem::path resolve(const std::filesystem::path &base, const std::string &p) {
    const std::filesystem::path path(p);
    return path.is_absolute() || base.empty() ? path : base / path;
}

} // namespace

RowRange parse_row_range(std::string_view text) {
    const auto parts = split(text, '-');
    if (parts.size() != 2)
        config_fail("row range must look like 'first-last', got '" + std::string(text) + "'");
    RowRange r{integer(parts[0], "rows"), integer(parts[1], "rows")};
    if (r.first < 1 || r.last < r.first)
        config_fail("invalid row range '" + std::string(text) + "'");
    return r;
}

KernelSpec parse_kernel_line(std::string_view text) {
    const auto w = words(text);
    if (w.empty())
        config_fail("empty kernel specification");
    KernelSpec k;
    try {
        k.family = parse_kernel_family(w[0]);
    } catch (const Error &e) {
        config_fail(e.what());
    }
    if (k.family == KernelFamily::mahalanobis)
        k.metric.kind = MetricKind::mahalanobis;
    for (std::size_t i = 1; i < w.size(); ++i) {
        const auto eq = w[i].find('=');
        if (eq == std::string::npos)
            config_fail("kernel option '" + w[i] + "' must be key=value");
        const auto key = w[i].substr(0, eq);
        const auto value = w[i].substr(eq + 1);
        if (key == "gamma")
            k.gamma = number(value, key);
        else if (key == "sigma")
            k.sigma = number(value, key);
        else if (key == "centered")
            k.centered = boolean(value, key);
        else if (key == "metric") {
            try {
                k.metric.kind = parse_metric_kind(value);
            } catch (const Error &e) {
                config_fail(e.what());
            }
        } else
            config_fail("unknown kernel option '" + key + "'");
    }
    try {
        k.validate();
    } catch (const Error &e) {
        config_fail(e.what());
    }
    return k;
}

std::vector<Term> parse_terms(std::string_view text, const std::vector<std::string> &covariates) {
    std::vector<Term> terms;
    for (const auto &piece : split(text, '+')) {
        if (piece.empty())
            config_fail("empty term in '" + std::string(text) + "'");
        Term t;
        for (const auto &name : split(piece, '*')) {
            const auto it = std::find(covariates.begin(), covariates.end(), name);
            if (it == covariates.end())
                config_fail("term '" + piece + "' references '" + name + "', which has no kernel");
            t.push_back(static_cast<std::size_t>(it - covariates.begin()));
        }
        std::sort(t.begin(), t.end());
        if (std::adjacent_find(t.begin(), t.end()) != t.end())
            config_fail("term '" + piece + "' repeats a covariate");
        terms.push_back(t);
    }
    return terms;
}

RunConfig parse_config(std::string_view text, const std::filesystem::path &base_dir) {
    static const std::map<std::string, std::set<std::string>> known{
        {"data", {"train", "test", "rows", "test_rows", "response"}},
        {"columns", {}},
        {"kernels", {}},
        {"model", {"type", "terms", "sperner", "parameterization", "label", "profile", "standard_errors"}},
        {"fit",
         {"max_iter", "tol", "restarts", "seed", "init_low", "init_high", "ones_start", "psi_init",
          "mstep_max_cycles", "mstep_tol", "fixed_scales", "fixed_psi", "threads"}},
        {"output", {"dir"}},
    };
    RunConfig c;
    std::string section;
    std::set<std::string> seen;
    std::istringstream in{std::string(text)};
    std::string raw;
    int line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        const auto line = trim(raw);
        if (line.empty() || line[0] == '#' || line[0] == ';')
            continue;
        const auto where = "line " + std::to_string(line_no) + ": ";
        if (line.front() == '[') {
            if (line.back() != ']')
                config_fail(where + "unterminated section header");
            section = trim(std::string_view(line).substr(1, line.size() - 2));
            if (!known.count(section))
                config_fail(where + "unknown section [" + section + "]");
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            config_fail(where + "expected key = value");
        if (section.empty())
            config_fail(where + "key outside any section");
        const auto key = trim(std::string_view(line).substr(0, eq));
        const auto value = trim(std::string_view(line).substr(eq + 1));
        if (key.empty())
            config_fail(where + "empty key");
        const auto &allowed = known.at(section);
        if (!allowed.empty() && !allowed.count(key))
            config_fail(where + "unknown key '" + key + "' in [" + section + "]");
        if (!seen.insert(section + "." + key).second)
            config_fail(where + "duplicate key '" + key + "' in [" + section + "]");

        if (section == "data") {
            if (key == "train") c.train = resolve(base_dir, value);
            else if (key == "test") c.test = resolve(base_dir, value);
            else if (key == "rows") c.train_rows = parse_row_range(value);
            else if (key == "test_rows") c.test_rows = parse_row_range(value);
            else if (key == "response") c.response = value;
        } else if (section == "columns") {
            const auto colon = value.find(':');
            const auto kind = trim(std::string_view(value).substr(0, colon));
            ColumnSchema cs;
            cs.name = key;
            if (kind == "categorical") cs.kind = ColumnKind::categorical;
            else if (kind == "real") cs.kind = ColumnKind::real_vector;
            else if (kind == "functional") cs.kind = ColumnKind::functional_curve;
            else config_fail(where + "unknown column kind '" + kind + "'");
            if (colon != std::string::npos) {
                if (cs.kind != ColumnKind::real_vector)
                    config_fail(where + "only real columns take source columns");
                cs.sources = split(std::string_view(value).substr(colon + 1), ',');
                for (const auto &s : cs.sources)
                    if (s.empty())
                        config_fail(where + "empty source column name");
            }
            c.schema.push_back(cs);
        } else if (section == "kernels") {
            try {
                c.kernels.emplace_back(key, parse_kernel_line(value));
            } catch (const Error &e) {
                config_fail(where + e.what());
            }
        } else if (section == "model") {
            if (key == "type") {
                if (value == "regression") c.type = ModelType::regression;
                else if (value == "classification") c.type = ModelType::classification;
                else config_fail(where + "unknown model type '" + value + "'");
            } else if (key == "terms") c.terms = value;
            else if (key == "sperner") c.sperner = value;
            else if (key == "parameterization") {
                try {
                    c.parameterization = parse_parameterization(value);
                } catch (const Error &e) {
                    config_fail(where + e.what());
                }
            } else if (key == "label") c.label = value;
            else if (key == "standard_errors") c.standard_errors = boolean(value, key);
            else if (key == "profile") {
                const auto w = words(value);
                if (w.size() != 4 && w.size() != 5)
                    config_fail(where + "profile expects 'covariate gamma|sigma low high [tolerance]'");
                ProfileSetting p;
                p.covariate = w[0];
                if (w[1] == "gamma") p.which = Hyperparameter::gamma;
                else if (w[1] == "sigma") p.which = Hyperparameter::sigma;
                else config_fail(where + "profile hyperparameter must be gamma or sigma");
                p.low = number(w[2], "profile");
                p.high = number(w[3], "profile");
                if (w.size() == 5)
                    p.tolerance = number(w[4], "profile");
                c.profile = p;
            }
        } else if (section == "fit") {
            auto &f = c.fit;
            if (key == "max_iter") f.max_iter = integer(value, key);
            else if (key == "tol") f.rel_tol = number(value, key);
            else if (key == "restarts") f.restarts = integer(value, key);
            else if (key == "seed") {
                const double s = number(value, key);
                if (s < 0 || s != std::floor(s) || s > 9.007199254740992e15)
                    config_fail(where + "seed must be a non-negative integer");
                f.seed = static_cast<std::uint64_t>(s);
            } else if (key == "init_low") f.init_low = number(value, key);
            else if (key == "init_high") f.init_high = number(value, key);
            else if (key == "ones_start") f.include_ones_start = boolean(value, key);
            else if (key == "psi_init") f.psi_init = number(value, key);
            else if (key == "mstep_max_cycles") f.mstep_max_cycles = integer(value, key);
            else if (key == "mstep_tol") f.mstep_tol = number(value, key);
            else if (key == "fixed_psi") c.fixed_psi = number(value, key);
            else if (key == "threads") c.threads = integer(value, key);
            else if (key == "fixed_scales") {
                std::vector<double> v;
                for (const auto &s : split(value, ','))
                    v.push_back(number(s, key));
                c.fixed_scales = v;
            }
        } else if (section == "output") {
            c.out_dir = resolve(base_dir, value);
        }
    }

    if (c.train.empty())
        config_fail("[data] train is required");
    if (c.response.empty())
        config_fail("[data] response is required");
    if (c.kernels.empty())
        config_fail("[kernels] must assign at least one kernel");
    std::set<std::string> declared;
    for (const auto &cs : c.schema) {
        if (!declared.insert(cs.name).second)
            config_fail("column '" + cs.name + "' declared twice");
        if (cs.name == c.response)
            config_fail("response '" + c.response + "' must not be declared as a covariate column");
    }
    for (const auto &[name, k] : c.kernels)
        if (!declared.count(name))
            config_fail("kernel assigned to undeclared column '" + name + "'");
    if (!c.terms.empty() && !c.sperner.empty())
        config_fail("[model] give terms or sperner, not both");
    if (c.type == ModelType::classification && (!c.terms.empty() || !c.sperner.empty()))
        config_fail("classification models fix their own terms");
    if (c.fixed_scales.has_value() != c.fixed_psi.has_value())
        config_fail("fixed_scales and fixed_psi go together");
    if (c.fixed_scales && c.profile)
        config_fail("profile search needs estimated parameters");
    if (c.profile) {
        const auto it = std::find_if(c.kernels.begin(), c.kernels.end(),
                                     [&](const auto &kv) { return kv.first == c.profile->covariate; });
        if (it == c.kernels.end())
            config_fail("profile covariate '" + c.profile->covariate + "' has no kernel");
    }
    if (c.threads && *c.threads < 1)
        config_fail("threads must be positive");
    try {
        c.fit.validate();
    } catch (const Error &e) {
        config_fail(e.what());
    }
    return c;
}

RunConfig load_config(const std::filesystem::path &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        raise(ErrorCode::config_error, "cannot open config '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    RunConfig c = parse_config(ss.str(), path.parent_path());
    c.source = path;
    if (c.label.empty())
        c.label = path.stem().string();
    return c;
}

ModelSpec regression_spec(const RunConfig &config) {
    std::vector<std::string> names;
    for (const auto &kv : config.kernels)
        names.push_back(kv.first);
    std::vector<Term> terms;
    bool sperner = false;
    if (!config.terms.empty()) {
        terms = parse_terms(config.terms, names);
    } else if (!config.sperner.empty()) {
        for (const auto &piece : split(config.sperner, ','))
            for (const auto &t : parse_terms(piece, names))
                terms.push_back(t);
        sperner = true;
    } else {
        for (std::size_t v = 0; v < names.size(); ++v)
            terms.push_back({v});
    }
    // Keep only covariates that occur in some term, renumbering the terms.
    std::vector<long> slot(names.size(), -1);
    for (const auto &t : terms)
        for (const auto v : t)
            slot[v] = 0;
    ModelSpec spec;
    std::vector<std::string> used;
    for (std::size_t v = 0; v < names.size(); ++v) {
        if (slot[v] < 0)
            continue;
        slot[v] = static_cast<long>(used.size());
        used.push_back(names[v]);
        spec.kernels.push_back(config.kernels[v].second);
    }
    for (auto &t : terms)
        for (auto &v : t)
            v = static_cast<std::size_t>(slot[v]);
    try {
        spec.anova = sperner ? AnovaSpec::from_sperner(used, terms, config.parameterization)
                             : AnovaSpec::from_terms(used, terms, config.parameterization);
        spec.validate();
    } catch (const Error &e) {
        raise(ErrorCode::config_error, e.what());
    }
    return spec;
}

namespace {

csv::Table select_rows(const csv::Table &t, const std::optional<RowRange> &range, const std::string &what) {
    if (!range)
        return t;
    if (range->last > static_cast<Index>(t.rows.size()))
        raise(ErrorCode::config_error, what + " rows " + std::to_string(range->first) + "-" +
                                           std::to_string(range->last) + " exceed the " +
                                           std::to_string(t.rows.size()) + " data rows");
    csv::Table out;
    out.header = t.header;
    out.rows.assign(t.rows.begin() + (range->first - 1), t.rows.begin() + range->last);
    return out;
}

void check_columns(const csv::Table &t, const RunConfig &c, const std::string &what, bool need_response) {
    auto has = [&](const std::string &h) { return std::find(t.header.begin(), t.header.end(), h) != t.header.end(); };
    for (const auto &cs : c.schema) {
        if (cs.kind == ColumnKind::functional_curve) {
            const bool any = std::any_of(t.header.begin(), t.header.end(),
                                         [&](const std::string &h) { return h.rfind(cs.name, 0) == 0 && h != cs.name; });
            if (!any)
                raise(ErrorCode::config_error, what + " data has no functional block '" + cs.name + ":<t>'");
            continue;
        }
        const auto sources = cs.sources.empty() ? std::vector<std::string>{cs.name} : cs.sources;
        for (const auto &s : sources)
            if (!has(s))
                raise(ErrorCode::config_error, what + " data has no column '" + s + "'");
    }
    if (need_response && !has(c.response))
        raise(ErrorCode::config_error, what + " data has no response column '" + c.response + "'");
}

std::vector<std::string> labels_of(const csv::Table &t, const std::string &column) {
    const auto idx = static_cast<std::size_t>(std::find(t.header.begin(), t.header.end(), column) - t.header.begin());
    std::vector<std::string> out;
    for (const auto &row : t.rows)
        out.push_back(row[idx]);
    return out;
}

} // namespace

RunData load_run_data(const RunConfig &config) {
    const csv::Table full = csv::read(config.train);
    const bool classify = config.type == ModelType::classification;
    RunData d;
    const auto train_table = select_rows(full, config.train_rows, "train");
    check_columns(train_table, config, "train", true);
    d.train = parse_dataset(train_table, config.schema, classify ? std::string() : config.response, !classify);
    if (classify) {
        d.train_labels = labels_of(train_table, config.response);
        d.train.response_name = config.response;
        d.train.response.resize(0);
    }

    std::optional<csv::Table> test_table;
    if (config.test)
        test_table = select_rows(csv::read(*config.test), config.test_rows, "test");
    else if (config.test_rows)
        test_table = select_rows(full, config.test_rows, "test");
    if (test_table) {
        check_columns(*test_table, config, "test", false);
        const bool has_response =
            std::find(test_table->header.begin(), test_table->header.end(), config.response) != test_table->header.end();
        d.test = parse_dataset(*test_table, config.schema, classify ? std::string() : config.response, false);
        d.test->response_name = config.response;
        if (classify) {
            if (has_response)
                d.test_labels = labels_of(*test_table, config.response);
            d.test->response.resize(0);
        }
    }
    return d;
}

} // namespace iprior
