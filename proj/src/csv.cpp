#include "iprior/csv.hpp"

#include "iprior/common.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <system_error>

namespace iprior::csv {

namespace {

std::vector<std::vector<std::string>> split_records(std::string_view text) {
    std::vector<std::vector<std::string>> records;
    std::vector<std::string> record;
    std::string field;
    bool quoted = false;
    bool field_started = false;
    std::size_t line = 1;

    auto end_field = [&] {
        record.push_back(std::move(field));
        field.clear();
        field_started = false;
    };
    auto end_record = [&] {
        end_field();
        // A blank line is not a record.
        if (!(record.size() == 1 && record.front().empty()))
            records.push_back(std::move(record));
        record.clear();
    };

    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                if (c == '\n')
                    ++line;
                field.push_back(c);
            }
            continue;
        }
        switch (c) {
        case '"':
            if (field_started && !field.empty())
                raise(ErrorCode::load_error, "csv: stray quote on line " + std::to_string(line));
            quoted = true;
            field_started = true;
            break;
        case ',':
            end_field();
            break;
        case '\r':
            break;
        case '\n':
            end_record();
            ++line;
            break;
        default:
            field.push_back(c);
            field_started = true;
        }
    }
    if (quoted)
        raise(ErrorCode::load_error, "csv: unterminated quoted field");
    if (field_started || !field.empty() || !record.empty())
        end_record();
    return records;
}

} // namespace

Table parse(std::string_view text) {
    auto records = split_records(text);
    if (records.empty())
        raise(ErrorCode::load_error, "csv: missing header row");
    Table table;
    table.header = std::move(records.front());
    for (auto &h : table.header) {
        const auto first = h.find_first_not_of(" \t");
        const auto last = h.find_last_not_of(" \t");
        h = first == std::string::npos ? std::string{} : h.substr(first, last - first + 1);
    }
    table.rows.reserve(records.size() - 1);
    for (std::size_t r = 1; r < records.size(); ++r) {
        if (records[r].size() != table.header.size()) {
            raise(ErrorCode::load_error, "csv: ragged row " + std::to_string(r) + " has " +
                                             std::to_string(records[r].size()) + " cells, header has " +
                                             std::to_string(table.header.size()));
        }
        table.rows.push_back(std::move(records[r]));
    }
    return table;
}

Table read(const std::filesystem::path &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        raise(ErrorCode::load_error, "csv: cannot open " + path.string());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse(buffer.str());
}

std::string quote(std::string_view field) {
    if (field.find_first_of(",\"\r\n") == std::string_view::npos)
        return std::string(field);
    std::string out = "\"";
    for (const char c : field) {
        if (c == '"')
            out.push_back('"');
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

std::string format_number(double value) {
    if (std::isnan(value))
        return "nan";
    if (std::isinf(value))
        return value > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, res.ptr);
}

std::string join_row(const std::vector<std::string> &fields) {
    std::string line;
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i > 0)
            line.push_back(',');
        line += quote(fields[i]);
    }
    line.push_back('\n');
    return line;
}

void write_atomic(const std::filesystem::path &path, std::string_view content) {
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out)
            raise(ErrorCode::load_error, "cannot write " + tmp.string());
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out)
            raise(ErrorCode::load_error, "short write to " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec)
        raise(ErrorCode::load_error, "cannot rename " + tmp.string() + ": " + ec.message());
}

} // namespace iprior::csv
