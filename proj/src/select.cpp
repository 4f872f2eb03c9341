#include "forge/select.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "forge/error.hpp"

namespace forge {

using nlohmann::json;

namespace {

constexpr double kDisplayTolerance = 1e-9;

std::string trim(std::string s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                cell.push_back('"');
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                cell.push_back(c);
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            cells.push_back(trim(std::move(cell)));
            cell.clear();
        } else {
            cell.push_back(c);
        }
    }
    cells.push_back(trim(std::move(cell)));
    return cells;
}

double parse_score(const std::string& cell, std::size_t line_no) {
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(cell, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || used != cell.size() || !std::isfinite(v)) {
        throw ConfigError("line " + std::to_string(line_no) + ": '" + cell + "' is not a number");
    }
    return v;
}

}  // namespace

void ScoreMatrix::validate() const {
    if (suites.empty()) throw ConfigError("score matrix has no suites");
    if (epochs.empty()) throw ConfigError("score matrix has no epochs");
    if (scores.size() != suites.size()) throw ConfigError("score matrix row count differs from suite count");
    for (std::size_t s = 0; s < scores.size(); ++s) {
        if (scores[s].size() != epochs.size()) {
            throw ConfigError("suite '" + suites[s] + "' has " + std::to_string(scores[s].size()) +
                              " scores for " + std::to_string(epochs.size()) + " epochs");
        }
        for (double v : scores[s]) {
            if (!std::isfinite(v)) throw ConfigError("suite '" + suites[s] + "' has a non-finite score");
        }
    }
}

ScoreMatrix ScoreMatrix::from_csv(std::istream& in) {
    ScoreMatrix m;
    std::string line;
    std::size_t line_no = 0;
    bool header = true;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        auto cells = split_csv_line(line);
        if (header) {
            if (cells.size() < 2) throw ConfigError("CSV header needs a label column and at least one epoch");
            m.epochs.assign(cells.begin() + 1, cells.end());
            header = false;
            continue;
        }
        if (cells.size() != m.epochs.size() + 1) {
            throw ConfigError("line " + std::to_string(line_no) + ": expected " + std::to_string(m.epochs.size() + 1) +
                              " cells, got " + std::to_string(cells.size()));
        }
        m.suites.push_back(cells[0]);
        std::vector<double> row;
        for (std::size_t i = 1; i < cells.size(); ++i) row.push_back(parse_score(cells[i], line_no));
        m.scores.push_back(std::move(row));
    }
    m.validate();
    return m;
}

ScoreMatrix ScoreMatrix::from_json(const json& j) {
    ScoreMatrix m;
    try {
        m.suites = j.at("suites").get<std::vector<std::string>>();
        m.epochs = j.at("epochs").get<std::vector<std::string>>();
        m.scores = j.at("scores").get<std::vector<std::vector<double>>>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("bad score matrix JSON: ") + e.what());
    }
    m.validate();
    return m;
}

json ScoreMatrix::to_json() const { return {{"suites", suites}, {"epochs", epochs}, {"scores", scores}}; }

std::vector<double> minmax_normalize(std::span<const double> row) {
    if (row.empty()) throw ConfigError("cannot normalize an empty row");
    const auto [lo, hi] = std::minmax_element(row.begin(), row.end());
    const double min = *lo, range = *hi - *lo;
    std::vector<double> out(row.size(), 0.0);
    if (range > 0.0) {
        for (std::size_t i = 0; i < row.size(); ++i) out[i] = (row[i] - min) / range * 100.0;  // divide first: the max maps to exactly 100
    }
    return out;
}

int display_floor(double value) noexcept { return static_cast<int>(std::floor(value + kDisplayTolerance)); }

double truncate_2dp(double value) noexcept {
    const double scaled = value * 100.0;
    return std::trunc(scaled + (scaled >= 0 ? 1e-6 : -1e-6)) / 100.0;
}

std::vector<double> total_scores(const ScoreMatrix& matrix) {
    matrix.validate();
    std::vector<double> totals(matrix.epochs.size(), 0.0);
    for (const auto& row : matrix.scores) {
        const auto norm = minmax_normalize(row);
        for (std::size_t e = 0; e < norm.size(); ++e) totals[e] += norm[e];
    }
    for (auto& t : totals) t /= static_cast<double>(matrix.suites.size());
    return totals;
}

SelectionResult select_checkpoint(const ScoreMatrix& matrix) {
    matrix.validate();
    SelectionResult r;
    for (const auto& row : matrix.scores) {
        auto norm = minmax_normalize(row);
        std::vector<int> shown(norm.size());
        std::transform(norm.begin(), norm.end(), shown.begin(), display_floor);
        r.normalized.push_back(std::move(norm));
        r.display.push_back(std::move(shown));
    }
    r.totals = total_scores(matrix);
    for (double t : r.totals) r.display_totals.push_back(truncate_2dp(t));
    // Earliest epoch wins ties.
    r.selected_index = static_cast<std::size_t>(std::max_element(r.totals.begin(), r.totals.end()) - r.totals.begin());
    r.selected_epoch = matrix.epochs[r.selected_index];
    return r;
}

json SelectionResult::to_json(const ScoreMatrix& matrix) const {
    json rows = json::array();
    for (std::size_t s = 0; s < matrix.suites.size(); ++s) {
        rows.push_back({{"suite", matrix.suites[s]},
                        {"scores", matrix.scores[s]},
                        {"normalized", normalized[s]},
                        {"display", display[s]}});
    }
    return {{"epochs", matrix.epochs},
            {"suites", std::move(rows)},
            {"totals", totals},
            {"display_totals", display_totals},
            {"selected_index", selected_index},
            {"selected_epoch", selected_epoch}};
}

double suite_mean(std::span<const double> sub_scores) {
    if (sub_scores.empty()) throw ConfigError("suite_mean of an empty list");
    return std::accumulate(sub_scores.begin(), sub_scores.end(), 0.0) / static_cast<double>(sub_scores.size());
}

}  // namespace forge
