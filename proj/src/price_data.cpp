#include "mpcport/price_data.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "mpcport/errors.hpp"

namespace mpcport {

double PriceTable::index_return(int day) const {
    if (day < 1 || day >= days()) {
        throw std::invalid_argument("index_return: day out of range");
    }
    return index_closes(day) / index_closes(day - 1) - 1.0;
}

std::vector<double> PriceTable::index_returns() const {
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(std::max(0, days() - 1)));
    for (int d = 1; d < days(); ++d) out.push_back(index_return(d));
    return out;
}

Eigen::VectorXd PriceTable::asset_returns(int day) const {
    if (day < 1 || day >= days()) {
        throw std::invalid_argument("asset_returns: day out of range");
    }
    return (closes.row(day).array() / closes.row(day - 1).array() - 1.0).transpose();
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, ',')) out.push_back(field);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

double parse_price(const std::string& field, int line, const std::string& column) {
    const std::string t = trim(field);
    char* end = nullptr;
    const double v = std::strtod(t.c_str(), &end);
    if (t.empty() || end != t.c_str() + t.size()) {
        throw DataError("line " + std::to_string(line) + ", column '" + column +
                        "': not a number: '" + t + "'");
    }
    if (!(v > 0.0)) {
        throw DataError("line " + std::to_string(line) + ", column '" + column +
                        "': non-positive price " + t);
    }
    return v;
}

}  // namespace

PriceTable load_prices(const std::string& path, const CsvSchema& schema) {
    std::ifstream in(path);
    if (!in) {
        throw DataError("cannot open price file: " + path);
    }
    std::string line;
    if (!std::getline(in, line)) {
        throw DataError("empty price file: " + path);
    }
    const auto header = split_csv_line(line);
    std::vector<std::string> names;
    names.reserve(header.size());
    for (const auto& h : header) names.push_back(trim(h));

    auto column_of = [&](const std::string& name) {
        const auto it = std::find(names.begin(), names.end(), name);
        return it == names.end() ? -1 : static_cast<int>(it - names.begin());
    };
    const int date_col = column_of(schema.date_column);
    if (date_col < 0) {
        throw DataError(path + ": missing date column '" + schema.date_column + "'");
    }
    const int index_col = column_of(schema.index_column);
    if (index_col < 0) {
        throw DataError(path + ": missing index column '" + schema.index_column + "'");
    }

    std::vector<int> asset_cols;
    PriceTable table;
    table.index_name = schema.index_column;
    if (schema.asset_columns.empty()) {
        for (int c = 0; c < static_cast<int>(names.size()); ++c) {
            if (c != date_col && c != index_col) {
                asset_cols.push_back(c);
                table.asset_names.push_back(names[static_cast<std::size_t>(c)]);
            }
        }
    } else {
        for (const auto& name : schema.asset_columns) {
            const int c = column_of(name);
            if (c < 0) throw DataError(path + ": missing asset column '" + name + "'");
            asset_cols.push_back(c);
            table.asset_names.push_back(name);
        }
    }
    if (asset_cols.empty()) {
        throw DataError(path + ": no asset columns");
    }

    const int n = static_cast<int>(asset_cols.size());
    std::vector<std::string> dates;
    std::vector<Eigen::VectorXd> rows;
    std::vector<double> index_vals;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        auto fields = split_csv_line(line);
        if (static_cast<int>(fields.size()) < static_cast<int>(names.size())) {
            fields.resize(names.size());
        }
        const std::string date = trim(fields[static_cast<std::size_t>(date_col)]);
        if (date.empty()) {
            throw DataError("line " + std::to_string(lineno) + ": empty date");
        }
        if (!dates.empty() && date <= dates.back()) {
            throw DataError("line " + std::to_string(lineno) + ": date " + date +
                            " not after " + dates.back());
        }
        Eigen::VectorXd row(n);
        for (int a = 0; a < n; ++a) {
            const auto& field = fields[static_cast<std::size_t>(asset_cols[static_cast<std::size_t>(a)])];
            const auto& column = table.asset_names[static_cast<std::size_t>(a)];
            if (trim(field).empty()) {
                if (!schema.lenient || rows.empty()) {
                    throw DataError("line " + std::to_string(lineno) + ", column '" + column +
                                    "': missing price");
                }
                row(a) = rows.back()(a);
                table.fills.push_back({lineno, column});
            } else {
                row(a) = parse_price(field, lineno, column);
            }
        }
        const auto& ifield = fields[static_cast<std::size_t>(index_col)];
        double ival;
        if (trim(ifield).empty()) {
            if (!schema.lenient || index_vals.empty()) {
                throw DataError("line " + std::to_string(lineno) + ", column '" +
                                schema.index_column + "': missing price");
            }
            ival = index_vals.back();
            table.fills.push_back({lineno, schema.index_column});
        } else {
            ival = parse_price(ifield, lineno, schema.index_column);
        }
        dates.push_back(date);
        rows.push_back(std::move(row));
        index_vals.push_back(ival);
    }
    if (dates.empty()) {
        throw DataError(path + ": no data rows");
    }

    table.dates = std::move(dates);
    table.closes.resize(static_cast<Eigen::Index>(rows.size()), n);
    table.index_closes.resize(static_cast<Eigen::Index>(index_vals.size()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
        table.closes.row(static_cast<Eigen::Index>(r)) = rows[r].transpose();
        table.index_closes(static_cast<Eigen::Index>(r)) = index_vals[r];
    }
    return table;
}

void write_prices_csv(const std::string& path, const PriceTable& table) {
    std::ofstream out(path);
    if (!out) {
        throw DataError("cannot write price file: " + path);
    }
    out << "date";
    for (const auto& name : table.asset_names) out << ',' << name;
    out << ',' << table.index_name << '\n';
    for (int d = 0; d < table.days(); ++d) {
        out << table.dates[static_cast<std::size_t>(d)];
        for (int a = 0; a < table.num_assets(); ++a) {
            out << ',' << format_number(table.closes(d, a));
        }
        out << ',' << format_number(table.index_closes(d)) << '\n';
    }
}

std::string format_number(double value) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.12g", value);
    return buf;
}

}  // namespace mpcport
