#include "iprior/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <unordered_map>

namespace iprior {

std::string_view to_string(ColumnKind kind) noexcept {
    switch (kind) {
    case ColumnKind::categorical: return "categorical";
    case ColumnKind::real_vector: return "real";
    case ColumnKind::functional_curve: return "functional";
    }
    return "?";
}

double parse_number(const std::string &cell, const std::string &context) {
    const auto first = cell.find_first_not_of(" \t");
    const auto last = cell.find_last_not_of(" \t");
    if (first == std::string::npos)
        raise(ErrorCode::load_error, context + ": empty numeric cell");
    const char *begin = cell.data() + first;
    const char *end = cell.data() + last + 1;
    if (*begin == '+')
        ++begin;
    double v = 0.0;
    const auto res = std::from_chars(begin, end, v);
    if (res.ec != std::errc{} || res.ptr != end)
        raise(ErrorCode::load_error, context + ": non-numeric cell '" + cell + "'");
    return v;
}

// ---- CovariateColumn -------------------------------------------------------

CovariateColumn CovariateColumn::categorical(std::string name, const std::vector<std::string> &labels) {
    CovariateColumn c;
    c.name_ = std::move(name);
    c.kind_ = ColumnKind::categorical;
    std::unordered_map<std::string, int> index;
    c.codes_.reserve(labels.size());
    for (const auto &l : labels) {
        auto [it, inserted] = index.try_emplace(l, static_cast<int>(c.levels_.size()));
        if (inserted)
            c.levels_.push_back(l);
        c.codes_.push_back(it->second);
    }
    return c;
}

CovariateColumn CovariateColumn::real(std::string name, Matrix values) {
    if (values.cols() < 1)
        raise(ErrorCode::spec_error, "real column '" + name + "' needs dimension >= 1");
    if (!values.allFinite())
        raise(ErrorCode::load_error, "real column '" + name + "' has non-finite values");
    CovariateColumn c;
    c.name_ = std::move(name);
    c.kind_ = ColumnKind::real_vector;
    c.values_ = std::move(values);
    return c;
}

CovariateColumn CovariateColumn::functional(std::string name, std::vector<double> grid, Matrix values) {
    if (grid.empty())
        raise(ErrorCode::load_error, "functional column '" + name + "' has an empty grid");
    if (static_cast<Index>(grid.size()) != values.cols())
        raise(ErrorCode::load_error, "functional column '" + name + "': grid length does not match samples");
    for (std::size_t k = 1; k < grid.size(); ++k) {
        if (!(grid[k] > grid[k - 1]))
            raise(ErrorCode::load_error, "functional column '" + name + "': grid is not strictly ascending at " +
                                             csv::format_number(grid[k]));
    }
    if (!values.allFinite())
        raise(ErrorCode::load_error, "functional column '" + name + "' has non-finite samples");
    CovariateColumn c;
    c.name_ = std::move(name);
    c.kind_ = ColumnKind::functional_curve;
    c.grid_ = std::move(grid);
    c.values_ = std::move(values);
    return c;
}

Index CovariateColumn::size() const noexcept {
    return kind_ == ColumnKind::categorical ? static_cast<Index>(codes_.size()) : values_.rows();
}

Index CovariateColumn::dimension() const noexcept {
    return kind_ == ColumnKind::categorical ? 1 : values_.cols();
}

CovariateColumn CovariateColumn::select(std::span<const Index> rows) const {
    if (kind_ == ColumnKind::categorical) {
        std::vector<std::string> labels;
        labels.reserve(rows.size());
        for (const Index r : rows)
            labels.push_back(label(r));
        return categorical(name_, labels);
    }
    Matrix v(static_cast<Index>(rows.size()), values_.cols());
    for (std::size_t i = 0; i < rows.size(); ++i)
        v.row(static_cast<Index>(i)) = values_.row(rows[i]);
    CovariateColumn c = *this;
    c.values_ = std::move(v);
    return c;
}

CovariateColumn CovariateColumn::renamed(std::string name) const {
    CovariateColumn c = *this;
    c.name_ = std::move(name);
    return c;
}

void CovariateColumn::require_compatible(const CovariateColumn &other) const {
    if (kind_ != other.kind_)
        raise(ErrorCode::schema_error, "column '" + name_ + "': kind " + std::string(to_string(kind_)) +
                                           " vs " + std::string(to_string(other.kind_)));
    if (dimension() != other.dimension())
        raise(ErrorCode::schema_error, "column '" + name_ + "': dimension " + std::to_string(dimension()) +
                                           " vs " + std::to_string(other.dimension()));
    if (kind_ == ColumnKind::functional_curve && grid_ != other.grid_)
        raise(ErrorCode::schema_error, "column '" + name_ + "': functional grids differ");
}

// ---- Dataset ----------------------------------------------------------------

Index Dataset::n() const noexcept {
    if (!columns.empty())
        return columns.front().size();
    return response.size();
}

bool Dataset::has_column(std::string_view name) const noexcept {
    return std::any_of(columns.begin(), columns.end(), [&](const auto &c) { return c.name() == name; });
}

const CovariateColumn &Dataset::column(std::string_view name) const {
    for (const auto &c : columns)
        if (c.name() == name)
            return c;
    raise(ErrorCode::config_error, "unknown column '" + std::string(name) + "'");
}

Dataset Dataset::select(std::span<const Index> rows) const {
    Dataset out;
    out.response_name = response_name;
    for (const auto &c : columns)
        out.columns.push_back(c.select(rows));
    if (response.size() > 0) {
        out.response.resize(static_cast<Index>(rows.size()));
        for (std::size_t i = 0; i < rows.size(); ++i)
            out.response(static_cast<Index>(i)) = response(rows[i]);
    }
    return out;
}

void Dataset::validate_for_fit() const {
    if (response.size() == 0)
        raise(ErrorCode::load_error, "dataset has no response '" + response_name + "'");
    if (response.size() < 2)
        raise(ErrorCode::load_error, "dataset needs at least 2 observations");
    for (const auto &c : columns)
        if (c.size() != response.size())
            raise(ErrorCode::load_error, "column '" + c.name() + "' length differs from the response");
    if (!response.allFinite())
        raise(ErrorCode::load_error, "response has non-finite values");
}

// ---- CSV mapping --------------------------------------------------------------

namespace {

std::optional<double> grid_point(const std::string &header, const std::string &name) {
    if (header.size() <= name.size() || header.compare(0, name.size(), name) != 0)
        return std::nullopt;
    std::string rest = header.substr(name.size());
    if (rest.front() == ':')
        rest.erase(0, 1);
    if (rest.empty())
        return std::nullopt;
    double v = 0.0;
    const auto res = std::from_chars(rest.data(), rest.data() + rest.size(), v);
    if (res.ec != std::errc{} || res.ptr != rest.data() + rest.size())
        return std::nullopt;
    return v;
}

std::size_t header_index(const csv::Table &table, const std::string &name) {
    const auto it = std::find(table.header.begin(), table.header.end(), name);
    if (it == table.header.end())
        raise(ErrorCode::load_error, "missing column '" + name + "'");
    return static_cast<std::size_t>(it - table.header.begin());
}

} // namespace

Dataset parse_dataset(const csv::Table &table, const Schema &schema, const std::string &response,
                      bool response_required) {
    const auto n = static_cast<Index>(table.rows.size());
    Dataset data;
    data.response_name = response;

    for (const auto &col : schema) {
        switch (col.kind) {
        case ColumnKind::categorical: {
            const auto idx = header_index(table, col.name);
            std::vector<std::string> labels;
            labels.reserve(table.rows.size());
            for (const auto &row : table.rows) {
                if (row[idx].empty())
                    raise(ErrorCode::load_error, "column '" + col.name + "': missing label");
                labels.push_back(row[idx]);
            }
            data.columns.push_back(CovariateColumn::categorical(col.name, labels));
            break;
        }
        case ColumnKind::real_vector: {
            const auto sources = col.sources.empty() ? std::vector<std::string>{col.name} : col.sources;
            Matrix values(n, static_cast<Index>(sources.size()));
            for (std::size_t s = 0; s < sources.size(); ++s) {
                const auto idx = header_index(table, sources[s]);
                for (Index i = 0; i < n; ++i)
                    values(i, static_cast<Index>(s)) = parse_number(
                        table.rows[static_cast<std::size_t>(i)][idx],
                        "column '" + sources[s] + "' row " + std::to_string(i + 1));
            }
            data.columns.push_back(CovariateColumn::real(col.name, std::move(values)));
            break;
        }
        case ColumnKind::functional_curve: {
            std::vector<std::size_t> indices;
            std::vector<double> grid;
            for (std::size_t h = 0; h < table.header.size(); ++h) {
                if (const auto t = grid_point(table.header[h], col.name)) {
                    indices.push_back(h);
                    grid.push_back(*t);
                }
            }
            if (indices.empty())
                raise(ErrorCode::load_error, "missing functional column block '" + col.name + ":<t>'");
            Matrix values(n, static_cast<Index>(indices.size()));
            for (Index i = 0; i < n; ++i)
                for (std::size_t k = 0; k < indices.size(); ++k)
                    values(i, static_cast<Index>(k)) =
                        parse_number(table.rows[static_cast<std::size_t>(i)][indices[k]],
                                     "column '" + table.header[indices[k]] + "' row " + std::to_string(i + 1));
            data.columns.push_back(CovariateColumn::functional(col.name, std::move(grid), std::move(values)));
            break;
        }
        }
    }

    const auto it = std::find(table.header.begin(), table.header.end(), response);
    if (it == table.header.end()) {
        if (response_required)
            raise(ErrorCode::load_error, "missing response column '" + response + "'");
    } else {
        const auto idx = static_cast<std::size_t>(it - table.header.begin());
        data.response.resize(n);
        for (Index i = 0; i < n; ++i)
            data.response(i) = parse_number(table.rows[static_cast<std::size_t>(i)][idx],
                                            "column '" + response + "' row " + std::to_string(i + 1));
    }
    return data;
}

Dataset load_dataset(const std::filesystem::path &path, const Schema &schema, const std::string &response,
                     bool response_required) {
    return parse_dataset(csv::read(path), schema, response, response_required);
}

csv::Table to_table(const Dataset &data) {
    csv::Table t;
    for (const auto &c : data.columns) {
        switch (c.kind()) {
        case ColumnKind::categorical: t.header.push_back(c.name()); break;
        case ColumnKind::real_vector:
            if (c.dimension() == 1)
                t.header.push_back(c.name());
            else
                for (Index k = 0; k < c.dimension(); ++k)
                    t.header.push_back(c.name() + "." + std::to_string(k + 1));
            break;
        case ColumnKind::functional_curve:
            for (const double g : c.grid())
                t.header.push_back(c.name() + ":" + csv::format_number(g));
            break;
        }
    }
    const bool with_response = data.response.size() > 0;
    if (with_response)
        t.header.push_back(data.response_name);

    const Index n = data.n();
    t.rows.resize(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) {
        auto &row = t.rows[static_cast<std::size_t>(i)];
        for (const auto &c : data.columns) {
            if (c.kind() == ColumnKind::categorical) {
                row.push_back(c.label(i));
            } else {
                for (Index k = 0; k < c.dimension(); ++k)
                    row.push_back(csv::format_number(c.values()(i, k)));
            }
        }
        if (with_response)
            row.push_back(csv::format_number(data.response(i)));
    }
    return t;
}

std::string to_csv(const Dataset &data) {
    const auto t = to_table(data);
    std::string out = csv::join_row(t.header);
    for (const auto &row : t.rows)
        out += csv::join_row(row);
    return out;
}

Schema schema_of(const Dataset &data) {
    Schema s;
    for (const auto &c : data.columns) {
        ColumnSchema cs{c.name(), c.kind(), {}};
        if (c.kind() == ColumnKind::real_vector && c.dimension() > 1)
            for (Index k = 0; k < c.dimension(); ++k)
                cs.sources.push_back(c.name() + "." + std::to_string(k + 1));
        s.push_back(std::move(cs));
    }
    return s;
}

} // namespace iprior
