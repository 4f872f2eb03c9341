#pragma once

#include <cstddef>
#include <istream>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace forge {

/// Benchmark suites (rows) scored at each epoch checkpoint (columns).
struct ScoreMatrix {
    std::vector<std::string> suites;
    std::vector<std::string> epochs;
    std::vector<std::vector<double>> scores;  // [suite][epoch]

    /// Throws ConfigError unless rectangular with >= 1 suite and >= 1 epoch.
    void validate() const;

    static ScoreMatrix from_csv(std::istream& in);
    static ScoreMatrix from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;
};

struct SelectionResult {
    std::vector<std::vector<double>> normalized;  // [suite][epoch], in [0, 100]
    std::vector<std::vector<int>> display;        // floored normalized values
    std::vector<double> totals;                   // mean of unfloored normalized values per epoch
    std::vector<double> display_totals;           // totals truncated to two decimals
    std::size_t selected_index = 0;
    std::string selected_epoch;

    nlohmann::json to_json(const ScoreMatrix& matrix) const;
};

/// 100 * (x - min) / (max - min); a constant row maps to all zeros.
std::vector<double> minmax_normalize(std::span<const double> row);

/// Floors a normalized value for display, absorbing representation error so an
/// exact 10 computed as 9.9999999 shows as 10.
int display_floor(double value) noexcept;
/// Truncates toward zero at two decimals with the same tolerance.
double truncate_2dp(double value) noexcept;

std::vector<double> total_scores(const ScoreMatrix& matrix);
SelectionResult select_checkpoint(const ScoreMatrix& matrix);

/// Arithmetic mean; throws ConfigError on empty input.
double suite_mean(std::span<const double> sub_scores);

}  // namespace forge
