#pragma once

#include "iprior/common.hpp"
#include "iprior/csv.hpp"

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace iprior {

enum class ColumnKind { categorical, real_vector, functional_curve };

std::string_view to_string(ColumnKind kind) noexcept;

/// How one covariate is read from CSV.
///  - categorical: one column of labels.
///  - real_vector: the CSV columns listed in `sources` (just `name` when empty).
///  - functional_curve: every header `name:<t>` (or `name<t>`), t numeric and ascending.
struct ColumnSchema {
    std::string name;
    ColumnKind kind = ColumnKind::real_vector;
    std::vector<std::string> sources;
};

using Schema = std::vector<ColumnSchema>;

/// A covariate with one payload per observation. Immutable once built.
class CovariateColumn {
public:
    CovariateColumn() = default;

    static CovariateColumn categorical(std::string name, const std::vector<std::string> &labels);
    static CovariateColumn real(std::string name, Matrix values);
    static CovariateColumn functional(std::string name, std::vector<double> grid, Matrix values);

    const std::string &name() const noexcept { return name_; }
    ColumnKind kind() const noexcept { return kind_; }
    Index size() const noexcept;
    /// Vector length (real), grid length (functional), 1 for categorical.
    Index dimension() const noexcept;

    // categorical payloads; levels in order of first appearance
    const std::vector<std::string> &levels() const noexcept { return levels_; }
    const std::vector<int> &codes() const noexcept { return codes_; }
    const std::string &label(Index i) const { return levels_[static_cast<std::size_t>(codes_[static_cast<std::size_t>(i)])]; }

    // numeric payloads: one row per observation
    const Matrix &values() const noexcept { return values_; }
    const std::vector<double> &grid() const noexcept { return grid_; }

    CovariateColumn select(std::span<const Index> rows) const;
    CovariateColumn renamed(std::string name) const;

    /// Same kind and the same dimension/grid; throws schema_error naming the mismatch otherwise.
    void require_compatible(const CovariateColumn &other) const;

private:
    std::string name_;
    ColumnKind kind_ = ColumnKind::real_vector;
    std::vector<std::string> levels_;
    std::vector<int> codes_;
    Matrix values_;
    std::vector<double> grid_;
};

struct Dataset {
    std::vector<CovariateColumn> columns;
    std::string response_name;
    Vector response; // empty when the file carried no response column

    Index n() const noexcept;
    bool has_column(std::string_view name) const noexcept;
    const CovariateColumn &column(std::string_view name) const;
    Dataset select(std::span<const Index> rows) const;
    /// Checks the training-time invariants (n ≥ 2, response present and finite).
    void validate_for_fit() const;
};

/// Builds a Dataset from an in-memory table. With `response_required == false`
/// a missing response column yields an empty response vector.
Dataset parse_dataset(const csv::Table &table, const Schema &schema, const std::string &response,
                      bool response_required = true);

Dataset load_dataset(const std::filesystem::path &path, const Schema &schema, const std::string &response,
                     bool response_required = true);

/// Header + rows in the same layout parse_dataset reads.
csv::Table to_table(const Dataset &data);
std::string to_csv(const Dataset &data);

/// Schema that reproduces the columns of `data` through to_table/parse_dataset.
Schema schema_of(const Dataset &data);

double parse_number(const std::string &cell, const std::string &context);

} // namespace iprior
