#pragma once

#include "iprior/applications.hpp"

#include <filesystem>
#include <optional>
#include <string>

namespace iprior {

/// Classifier metadata carried alongside the regression model.
struct ClassifierInfo {
    std::string class_column;
    std::vector<std::string> classes;
    std::vector<std::string> features;
};

struct StoredModel {
    FittedModel model;
    std::optional<ClassifierInfo> classifier;
    std::string label;
    Schema schema; ///< CSV layout of the covariates; derived from the columns when empty
};

/// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::string_view bytes);

std::string model_to_json(const StoredModel &stored);
/// Rebuilds Grams and the factorization from the stored training columns.
/// Throws load_error on malformed input or checksum mismatch.
StoredModel model_from_json(std::string_view text);

void save_model(const std::filesystem::path &path, const StoredModel &stored);
StoredModel load_model(const std::filesystem::path &path);

Classifier as_classifier(const StoredModel &stored);

} // namespace iprior
