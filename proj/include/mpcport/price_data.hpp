#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace mpcport {

/// Column mapping for price CSV files. Asset columns default to every column
/// that is neither the date nor the index.
struct CsvSchema {
    std::string date_column = "date";
    std::string index_column = "INDEX";
    std::vector<std::string> asset_columns;
    bool lenient = false;  // forward-fill missing prices instead of rejecting
};

struct FillEvent {
    int line = 0;  // 1-based file line
    std::string column;
};

/// Daily close prices for the tradeable assets plus one reference index
/// series, with strictly increasing ISO-8601 dates.
struct PriceTable {
    std::vector<std::string> dates;
    std::vector<std::string> asset_names;
    std::string index_name;
    Eigen::MatrixXd closes;        // days x assets
    Eigen::VectorXd index_closes;  // days
    std::vector<FillEvent> fills;  // lenient-mode repairs

    int days() const { return static_cast<int>(dates.size()); }
    int num_assets() const { return static_cast<int>(asset_names.size()); }

    /// Simple return of the index on day d (d >= 1).
    double index_return(int day) const;

    /// All index returns; element d-1 is the return of day d.
    std::vector<double> index_returns() const;

    /// Simple asset returns of day d (d >= 1), one entry per asset.
    Eigen::VectorXd asset_returns(int day) const;
};

/// Reads and validates a price CSV (header row, `.` decimals, UTF-8).
/// Throws DataError for malformed files, non-positive prices, missing cells
/// in strict mode, or non-monotone dates.
PriceTable load_prices(const std::string& path, const CsvSchema& schema);

/// Writes a table in the same CSV layout load_prices reads.
void write_prices_csv(const std::string& path, const PriceTable& table);

/// Shortest round-trippable decimal form, 12 significant digits.
std::string format_number(double value);

}  // namespace mpcport
