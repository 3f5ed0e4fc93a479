#pragma once

#include "iprior/applications.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace iprior {

/// 1-based inclusive row range of a CSV file.
struct RowRange {
    Index first = 1;
    Index last = 1;
};

struct ProfileSetting {
    std::string covariate;
    Hyperparameter which = Hyperparameter::gamma;
    double low = 0.0;
    double high = 0.0;
    double tolerance = 1e-3;
};

enum class ModelType { regression, classification };

/// Parsed run configuration. Paths are resolved against the config file's directory.
struct RunConfig {
    std::filesystem::path source; ///< the config file, empty for in-memory text
    std::filesystem::path train;
    std::optional<std::filesystem::path> test;
    std::optional<RowRange> train_rows;
    std::optional<RowRange> test_rows;
    std::string response;
    Schema schema;
    std::vector<std::pair<std::string, KernelSpec>> kernels; ///< declaration order
    ModelType type = ModelType::regression;
    std::string terms;   ///< "a + b + a*b"
    std::string sperner; ///< "a*b, c"
    Parameterization parameterization = Parameterization::parsimonious;
    std::string label;
    std::optional<ProfileSetting> profile;
    bool standard_errors = true;
    FitConfig fit;
    std::optional<std::vector<double>> fixed_scales;
    std::optional<double> fixed_psi;
    std::optional<int> threads;
    std::filesystem::path out_dir = "out";
};

RunConfig parse_config(std::string_view text, const std::filesystem::path &base_dir = {});
RunConfig load_config(const std::filesystem::path &path);

/// Kernel line: `family key=value ...`, keys gamma, sigma, metric, centered.
KernelSpec parse_kernel_line(std::string_view text);
/// `a + b + a*b` against the covariate names.
std::vector<Term> parse_terms(std::string_view text, const std::vector<std::string> &covariates);
RowRange parse_row_range(std::string_view text);

/// Regression model spec: covariates are the declared kernels that appear in the
/// terms (declaration order). Without terms or sperner, one main effect per kernel.
ModelSpec regression_spec(const RunConfig &config);

struct RunData {
    Dataset train;
    std::optional<Dataset> test;
    std::vector<std::string> train_labels; ///< classification only
    std::vector<std::string> test_labels;
};

/// Loads the training (and test) data; for classification the response column
/// is read as class labels.
RunData load_run_data(const RunConfig &config);

} // namespace iprior
