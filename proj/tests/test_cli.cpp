#include "support.hpp"

#include "iprior/cli.hpp"

#include <doctest.h>

#include <cstdlib>
#include <functional>
#include <sys/wait.h>
#include <fstream>
#include <sstream>

using namespace iprior;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string &name) {
    const fs::path p = fs::temp_directory_path() / ("iprior_test_cli_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path &p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

void spit(const fs::path &p, const std::string &text) {
    std::ofstream out(p, std::ios::binary);
    out << text;
}

const fs::path configs = fs::path(IPRIOR_TEST_DIR) / "configs";

ErrorCode code_of(const std::function<void()> &f) {
    try {
        f();
    } catch (const Error &e) {
        return e.code();
    }
    FAIL("no error raised");
    return ErrorCode::config_error;
}

int run_cli(const std::string &args) {
    const char *bin = std::getenv("IPRIOR_CLI");
    if (!bin)
        return -1;
    const int rc = std::system((std::string(bin) + " " + args + " >/dev/null 2>&1").c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

} // namespace

TEST_CASE("config grammar") {
    const RunConfig c = parse_config(R"(
# comment
[data]
train = a.csv
rows = 1-10
response = y
[columns]
x = real
g = categorical
v = real : v1, v2
[kernels]
x = fbm gamma=0.3 centered=false
g = pearson
v = sqexp sigma=2
[model]
terms = x + g + x*g
profile = x gamma 0.1 0.9 0.01
standard_errors = false
[fit]
restarts = 4
seed = 11
tol = 1e-7
)",
                                     "/base");
    CHECK(c.train == fs::path("/base/a.csv"));
    CHECK(c.train_rows->first == 1);
    CHECK(c.train_rows->last == 10);
    CHECK(c.schema.size() == 3);
    CHECK(c.schema[2].sources == std::vector<std::string>{"v1", "v2"});
    CHECK(c.kernels[0].second.family == KernelFamily::fbm);
    CHECK(c.kernels[0].second.gamma == 0.3);
    CHECK_FALSE(c.kernels[0].second.centered);
    CHECK(c.kernels[2].second.sigma == 2.0);
    CHECK(c.profile->covariate == "x");
    CHECK(c.profile->tolerance == 0.01);
    CHECK_FALSE(c.standard_errors);
    CHECK(c.fit.restarts == 4);
    CHECK(c.fit.seed == 11);
    CHECK(c.fit.rel_tol == 1e-7);
    const ModelSpec s = regression_spec(c);
    CHECK(s.anova.covariates == std::vector<std::string>{"x", "g"});
    CHECK(s.anova.terms.size() == 3);

    CHECK(parse_terms("a*b + c", {"a", "b", "c"}).size() == 2);
    CHECK(parse_row_range("3-7").last == 7);

    CHECK(code_of([] { parse_config("[nope]\n"); }) == ErrorCode::config_error);
    CHECK(code_of([] { parse_config("[data]\nfoo = 1\n"); }) == ErrorCode::config_error);
    CHECK(code_of([] { parse_kernel_line("fbm gamma=2"); }) != ErrorCode::fit_error);
    CHECK(code_of([] { parse_kernel_line("wavelet"); }) == ErrorCode::config_error);
    CHECK(code_of([] { parse_row_range("7-3"); }) == ErrorCode::config_error);
    CHECK(code_of([] { parse_terms("a + q", {"a"}); }) != ErrorCode::fit_error);
}

TEST_CASE("fit writes reproducible artifacts") {
    const fs::path a = scratch("fit_a"), b = scratch("fit_b");
    cmd_fit(configs / "small.ini", a);
    cmd_fit(configs / "small.ini", b);
    for (const char *f : {"model.json", "trace.csv", "report.csv", "fitted.csv"}) {
        REQUIRE(fs::exists(a / f));
        CHECK(slurp(a / f) == slurp(b / f));
    }
    const auto report = csv::read(a / "report.csv");
    CHECK(report.rows.size() == 1);
    CHECK(report.header[0] == "label");
    CHECK(report.rows[0][0] == "small");

    // outputs read back as ordinary datasets
    const Dataset fitted = load_dataset(a / "fitted.csv", {{"row", ColumnKind::real_vector, {}}}, "fitted");
    CHECK(fitted.n() == 10);
    const Dataset trace = load_dataset(a / "trace.csv", {{"iteration", ColumnKind::real_vector, {}}}, "log_likelihood");
    CHECK(trace.n() >= 1);
    for (Index i = 1; i < trace.n(); ++i)
        CHECK(trace.response(i) >= trace.response(i - 1) - 1e-8 * (1 + std::abs(trace.response(i))));
}

TEST_CASE("predict reproduces fitted means") {
    const fs::path dir = scratch("predict");
    cmd_fit(configs / "small.ini", dir);
    std::ostringstream out;
    cmd_predict(dir / "model.json", configs / "small.csv", std::nullopt, out);
    const auto pred = csv::parse(out.str());
    const auto fitted = csv::read(dir / "fitted.csv");
    REQUIRE(pred.rows.size() == fitted.rows.size());
    const auto col = [](const csv::Table &t, const std::string &name) {
        return static_cast<std::size_t>(std::find(t.header.begin(), t.header.end(), name) - t.header.begin());
    };
    for (std::size_t i = 0; i < pred.rows.size(); ++i) {
        CHECK(std::abs(std::stod(pred.rows[i][col(pred, "mean")]) - std::stod(fitted.rows[i][col(fitted, "fitted")])) <
              1e-10);
        CHECK(pred.rows[i][col(pred, "extrapolation")] == "0");
    }

    spit(dir / "empty.csv", "x,g\n");
    std::ostringstream empty;
    cmd_predict(dir / "model.json", dir / "empty.csv", std::nullopt, empty);
    CHECK(csv::parse(empty.str()).rows.empty());

    spit(dir / "new.csv", "x,g\n0.5,zz\n0.5,a\n");
    std::ostringstream fresh;
    cmd_predict(dir / "model.json", dir / "new.csv", dir / "new_pred.csv", fresh);
    const auto np = csv::read(dir / "new_pred.csv");
    CHECK(np.rows[0][col(np, "extrapolation")] == "1");
    CHECK(np.rows[1][col(np, "extrapolation")] == "0");

    spit(dir / "bad.csv", "x,h\n0.5,a\n");
    CHECK(code_of([&] {
              std::ostringstream s;
              cmd_predict(dir / "model.json", dir / "bad.csv", std::nullopt, s);
          }) == ErrorCode::schema_error);
}

TEST_CASE("tampered model files are rejected") {
    const fs::path dir = scratch("tamper");
    cmd_fit(configs / "small.ini", dir);
    std::string json = slurp(dir / "model.json");
    const auto at = json.find("\"psi\"");
    REQUIRE(at != std::string::npos);
    const auto digit = json.find_first_of("123456789", at);
    json[digit] = json[digit] == '9' ? '8' : static_cast<char>(json[digit] + 1);
    spit(dir / "model.json", json);
    CHECK(code_of([&] { load_model(dir / "model.json"); }) == ErrorCode::load_error);
    spit(dir / "garbage.json", "{not json");
    CHECK(code_of([&] { load_model(dir / "garbage.json"); }) == ErrorCode::load_error);
}

TEST_CASE("compare") {
    const fs::path dir = scratch("compare");
    std::ostringstream one;
    cmd_compare({configs / "small.ini"}, std::nullopt, one);
    const auto t = csv::parse(one.str());
    REQUIRE(t.rows.size() == 1);
    const auto flag = std::find(t.header.begin(), t.header.end(), "likelihood_group") - t.header.begin();
    CHECK(t.rows[0][static_cast<std::size_t>(flag)] == "0");

    CHECK(code_of([&] {
              std::ostringstream s;
              cmd_compare({configs / "small.ini", configs / "small.ini"}, std::nullopt, s);
          }) == ErrorCode::config_error);

    std::string text = slurp(configs / "small.ini");
    spit(dir / "small.csv", slurp(configs / "small.csv"));
    spit(dir / "linear.ini", text + "[model]\nlabel = linear\n");
    std::string fewer = text;
    fewer.replace(fewer.find("response = y"), 12, "rows = 1-9\nresponse = y");
    spit(dir / "fewer.ini", fewer + "[model]\nlabel = fewer\n");
    CHECK(code_of([&] {
              std::ostringstream s;
              cmd_compare({configs / "small.ini", dir / "fewer.ini"}, std::nullopt, s);
          }) == ErrorCode::data_mismatch);
    std::ostringstream two;
    cmd_compare({configs / "small.ini", dir / "linear.ini"}, dir / "cmp.csv", two);
    CHECK(csv::read(dir / "cmp.csv").rows.size() == 2);
}

TEST_CASE("gram") {
    std::ostringstream out;
    cmd_gram(configs / "small.ini", "g", std::nullopt, out);
    const auto t = csv::parse(out.str());
    CHECK(t.rows.size() == 10);
    CHECK(code_of([&] {
              std::ostringstream s;
              cmd_gram(configs / "small.ini", "nope", std::nullopt, s);
          }) != ErrorCode::fit_error);
}

TEST_CASE("binary exit codes") {
    if (!std::getenv("IPRIOR_CLI"))
        return;
    const fs::path dir = scratch("binary");
    CHECK(run_cli("fit " + (configs / "small.ini").string() + " -o " + dir.string()) == 0);
    CHECK(run_cli("fit " + (configs / "missing_column.ini").string() + " -o " + dir.string()) == 2);
    CHECK(run_cli("predict " + (dir / "nothing.json").string() + " " + (configs / "small.csv").string()) == 5);
    CHECK(run_cli("frobnicate") == 2);
}
