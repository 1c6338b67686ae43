#pragma once

#include "dfdx/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace dfdx::test {

/// One CSV row keyed by column name; blank cells are absent.
struct CsvRow {
    std::string label;
    std::map<std::string, double> cells;
};

inline std::vector<CsvRow> read_csv(const std::string& path) {
    std::ifstream in(path);
    std::vector<CsvRow> rows;
    std::vector<std::string> header;
    for (std::string line; std::getline(in, line);) {
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        for (std::string cell; std::getline(ss, cell, ',');) cells.push_back(cell);
        if (line.back() == ',') cells.emplace_back();
        if (header.empty()) {
            header = cells;
            continue;
        }
        CsvRow row{cells.at(0), {}};
        for (std::size_t i = 1; i < cells.size() && i < header.size(); ++i) {
            if (!cells[i].empty()) row.cells[header[i]] = std::stod(cells[i]);
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

inline GroupCounts counts_of(const CsvRow& row, const std::string& prefix) {
    auto get = [&](const std::string& k) {
        auto it = row.cells.find(prefix + "_" + k);
        return it == row.cells.end() ? std::size_t{0} : static_cast<std::size_t>(it->second);
    };
    return GroupCounts{get("tp"), get("fp"), get("fn")};
}

/// Per-application counts from the count table; annotation counts carry no
/// security breakdown.
inline EvalCounts eval_counts_of(const CsvRow& row) {
    EvalCounts c;
    c.services = counts_of(row, "s");
    c.external_entities = counts_of(row, "e");
    c.information_flows = counts_of(row, "i");
    c.annotations = counts_of(row, "a");
    return c;
}

struct TableMismatch {
    std::string row;
    std::string column;
    std::optional<double> computed;
    std::optional<double> expected;
};

/// A blank cell accepts an undefined or zero value; otherwise |computed - expected| must
/// stay within `tolerance` (plus 1e-9 for binary rounding).
inline bool cell_matches(const std::optional<double>& computed, const std::optional<double>& expected,
                         double tolerance) {
    if (!expected) return !computed || *computed == 0.0;
    return computed && std::fabs(*computed - *expected) <= tolerance + 1e-9;
}

/// Recomputes the metrics table from the count table: per-application rows, the
/// two application groups and the whole set, each group scored from summed counts.
/// Also checks that the listed sums equal the sums of the application rows.
inline std::vector<TableMismatch> check_tables(const std::string& counts_csv, const std::string& metrics_csv,
                                               double tolerance, std::size_t* cells_checked = nullptr) {
    auto count_rows = read_csv(counts_csv);
    auto metric_rows = read_csv(metrics_csv);
    std::map<std::string, EvalCounts> apps;
    std::map<std::string, std::map<std::string, double>> listed_sums;
    for (const auto& r : count_rows) {
        if (r.label.rfind("Sum", 0) == 0) {
            listed_sums[r.label] = r.cells;
        } else {
            apps[r.label] = eval_counts_of(r);
        }
    }
    auto group = [&](int lo, int hi) {
        std::vector<EvalCounts> out;
        for (int i = lo; i <= hi; ++i) out.push_back(apps.at(std::to_string(i)));
        return out;
    };
    std::map<std::string, std::vector<EvalCounts>> groups{
        {"1-7", group(1, 7)}, {"8-17", group(8, 17)}, {"all", group(1, 17)}};

    std::vector<TableMismatch> mismatches;
    std::size_t checked = 0;
    for (const auto& [label, sums] : listed_sums) {
        auto suffix = label.substr(label.find(' ') + 1);
        EvalCounts total;
        for (const auto& c : groups.at(suffix)) total += c;
        auto o = total.overall();
        std::map<std::string, std::size_t> recomputed{
            {"s_tp", total.services.tp}, {"s_fp", total.services.fp}, {"s_fn", total.services.fn},
            {"e_tp", total.external_entities.tp}, {"e_fp", total.external_entities.fp}, {"e_fn", total.external_entities.fn},
            {"i_tp", total.information_flows.tp}, {"i_fp", total.information_flows.fp}, {"i_fn", total.information_flows.fn},
            {"a_tp", total.annotations.tp}, {"a_fp", total.annotations.fp}, {"a_fn", total.annotations.fn},
            {"o_tp", o.tp}, {"o_fp", o.fp}, {"o_fn", o.fn}};
        for (const auto& [column, value] : recomputed) {
            auto it = sums.find(column);
            double listed = it == sums.end() ? 0.0 : it->second;
            ++checked;
            if (listed != static_cast<double>(value)) {
                mismatches.push_back({label, column, static_cast<double>(value), listed});
            }
        }
    }
    for (const auto& [label, c] : apps) {
        auto it = std::find_if(count_rows.begin(), count_rows.end(), [&](const CsvRow& r) { return r.label == label; });
        auto o = c.overall();
        for (const auto& [column, value] : std::map<std::string, std::size_t>{{"o_tp", o.tp}, {"o_fp", o.fp}, {"o_fn", o.fn}}) {
            auto cell = it->cells.find(column);
            double listed = cell == it->cells.end() ? 0.0 : cell->second;
            ++checked;
            if (listed != static_cast<double>(value)) mismatches.push_back({label, column, static_cast<double>(value), listed});
        }
    }

    for (const auto& row : metric_rows) {
        MetricsRow m;
        if (row.label.rfind("Avg. ", 0) == 0) {
            m = compute_metrics(groups.at(row.label.substr(5))).micro;
        } else {
            m = metrics_of(apps.at(row.label));
        }
        const std::pair<const char*, const Score*> columns[] = {
            {"s", &m.services}, {"e", &m.external_entities}, {"i", &m.information_flows},
            {"a", &m.annotations}, {"o", &m.overall}, {"c", &m.core}};
        for (const auto& [prefix, score] : columns) {
            for (auto [suffix, value] : {std::pair{"_p", score->precision}, std::pair{"_r", score->recall}}) {
                auto column = std::string(prefix) + suffix;
                auto cell = row.cells.find(column);
                std::optional<double> expected;
                if (cell != row.cells.end()) expected = cell->second;
                ++checked;
                if (!cell_matches(value, expected, tolerance)) mismatches.push_back({row.label, column, value, expected});
            }
        }
    }
    if (cells_checked != nullptr) *cells_checked = checked;
    return mismatches;
}

} // namespace dfdx::test
