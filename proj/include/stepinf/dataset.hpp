#ifndef STEPINF_DATASET_HPP
#define STEPINF_DATASET_HPP

#include <cstdlib>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "stepinf/linalg.hpp"

namespace stepinf {

/// A regression problem read from disk: outcome, grouped predictors, and
/// display names for reporting.
struct Dataset {
    std::string outcome_name;
    Vector y;
    GroupedDesign design;
    std::vector<std::string> predictor_names;  // per design column
    std::vector<std::string> group_names;      // per group index
    std::optional<double> sigma;
    int dropped_rows = 0;
};

struct LoadOptions {
    std::string outcome;    // empty: first CSV column absent from the group map
    bool standardize = false;  // center columns and scale to unit 2-norm
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, ',')) {
        while (!field.empty() && (field.back() == '\r' || field.back() == ' ')) field.pop_back();
        std::size_t b = field.find_first_not_of(' ');
        out.push_back(b == std::string::npos ? std::string() : field.substr(b));
    }
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

inline bool parse_double(const std::string& s, double& out) {
    if (s.empty()) return false;
    char* end = nullptr;
    out = std::strtod(s.c_str(), &end);
    return end && *end == '\0';
}

} // namespace detail

/// Reads a headered numeric CSV and a (column, group) map. Rows with any
/// missing or unparseable predictor/outcome cell are dropped and counted.
inline Dataset load_csv(const std::string& csv_path, const std::string& groups_path,
                        const LoadOptions& opts = {}) {
    std::ifstream csv(csv_path);
    if (!csv) throw InvalidInput("cannot open CSV file: " + csv_path);
    std::string line;
    if (!std::getline(csv, line)) throw InvalidInput("empty CSV file: " + csv_path);
    std::vector<std::string> header = detail::split_csv_line(line);
    if (header.empty()) throw InvalidInput("CSV header row is empty");

    std::vector<std::vector<double>> rows;
    int dropped = 0;
    std::size_t lineno = 1;
    while (std::getline(csv, line)) {
        ++lineno;
        if (line.empty()) continue;
        auto fields = detail::split_csv_line(line);
        if (fields.size() != header.size())
            throw InvalidInput("CSV row " + std::to_string(lineno) + " has " +
                               std::to_string(fields.size()) + " fields, expected " +
                               std::to_string(header.size()));
        std::vector<double> vals(fields.size());
        bool ok = true;
        for (std::size_t j = 0; j < fields.size(); ++j)
            if (!detail::parse_double(fields[j], vals[j])) { ok = false; break; }
        if (ok)
            rows.push_back(std::move(vals));
        else
            ++dropped;
    }
    if (rows.empty()) throw InvalidInput("no complete rows left after drops in " + csv_path);

    // Group map: optional "column,group" header, then one mapping per line.
    std::ifstream gm(groups_path);
    if (!gm) throw InvalidInput("cannot open group map: " + groups_path);
    std::vector<std::pair<std::string, std::string>> mapping;
    bool first = true;
    while (std::getline(gm, line)) {
        if (line.empty()) continue;
        auto fields = detail::split_csv_line(line);
        if (fields.size() != 2)
            throw InvalidInput("group map lines must be 'column,group'");
        if (first && (fields[0] == "column" || fields[1] == "group")) {
            first = false;
            continue;
        }
        first = false;
        mapping.emplace_back(fields[0], fields[1]);
    }
    if (mapping.empty()) throw InvalidInput("group map is empty");

    std::map<std::string, std::size_t> colIndex;
    for (std::size_t j = 0; j < header.size(); ++j) colIndex[header[j]] = j;

    Dataset ds;
    ds.dropped_rows = dropped;

    // Outcome column: explicit, or the first column not covered by the map.
    std::map<std::string, int> groupOf;
    for (const auto& [col, grp] : mapping) {
        if (!colIndex.count(col))
            throw InvalidInput("group map references unknown column: " + col);
        groupOf[col] = 0;  // placeholder, resolved below
    }
    std::string outcome = opts.outcome;
    if (outcome.empty()) {
        for (const auto& h : header)
            if (!groupOf.count(h)) { outcome = h; break; }
        if (outcome.empty())
            throw InvalidInput("no outcome column: every CSV column appears in the group map");
    } else if (!colIndex.count(outcome)) {
        throw InvalidInput("outcome column not found: " + outcome);
    }
    ds.outcome_name = outcome;

    // Group labels in first-appearance order.
    std::map<std::string, int> labelIndex;
    std::vector<std::vector<Eigen::Index>> groups;
    Eigen::Index ncols = 0;
    for (const auto& [col, grp] : mapping) {
        if (col == outcome) throw InvalidInput("outcome column cannot be a predictor: " + col);
        if (!labelIndex.count(grp)) {
            labelIndex[grp] = static_cast<int>(ds.group_names.size());
            ds.group_names.push_back(grp);
            groups.emplace_back();
        }
        groups[static_cast<std::size_t>(labelIndex[grp])].push_back(ncols++);
        ds.predictor_names.push_back(col);
    }

    const Eigen::Index n = static_cast<Eigen::Index>(rows.size());
    Matrix X(n, ncols);
    ds.y.resize(n);
    std::size_t yCol = colIndex[outcome];
    for (Eigen::Index i = 0; i < n; ++i) ds.y(i) = rows[static_cast<std::size_t>(i)][yCol];
    Eigen::Index at = 0;
    for (const auto& [col, grp] : mapping) {
        std::size_t src = colIndex[col];
        for (Eigen::Index i = 0; i < n; ++i) X(i, at) = rows[static_cast<std::size_t>(i)][src];
        ++at;
    }

    if (opts.standardize) {
        for (Eigen::Index j = 0; j < X.cols(); ++j) {
            X.col(j).array() -= X.col(j).mean();
            double nrm = X.col(j).norm();
            if (nrm > 0.0) X.col(j) /= nrm;
        }
    }

    ds.design = GroupedDesign(std::move(X), std::move(groups));
    return ds;
}

} // namespace stepinf

#endif
