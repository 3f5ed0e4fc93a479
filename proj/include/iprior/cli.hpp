#pragma once

#include "iprior/config.hpp"
#include "iprior/model_io.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace iprior {

struct FitOutcome {
    RunConfig config;
    RunData data;
    StoredModel stored;
    ModelReport report;
    StandardErrors se;
    std::optional<ProfileResult> profile;
};

/// Loads data and fits the configured model; writes nothing.
FitOutcome run_fit(const RunConfig &config);

/// model.json, trace.csv, report.csv, fitted.csv, plus predictions.csv / profile.csv when applicable.
void write_fit_outputs(const FitOutcome &outcome, const std::filesystem::path &dir);

/// Prediction table for rows of `table` laid out like the training CSV.
/// Regression: row, mean, variance, extrapolation. Classifier: row, predicted,
/// one mean_<class> column per class, extrapolation.
std::string predictions_csv(const StoredModel &stored, const csv::Table &table);

void cmd_fit(const std::filesystem::path &config, const std::optional<std::filesystem::path> &out_dir);
void cmd_predict(const std::filesystem::path &model, const std::filesystem::path &data,
                 const std::optional<std::filesystem::path> &out, std::ostream &stdout_stream);
void cmd_compare(const std::vector<std::filesystem::path> &configs, const std::optional<std::filesystem::path> &out,
                 std::ostream &stdout_stream);
void cmd_gram(const std::filesystem::path &config, const std::string &covariate,
              const std::optional<std::filesystem::path> &out, std::ostream &stdout_stream);

} // namespace iprior
