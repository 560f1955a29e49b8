#ifndef STEPINF_REPORT_HPP
#define STEPINF_REPORT_HPP

#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "stepinf/dataset.hpp"
#include "stepinf/inference.hpp"
#include "stepinf/simulate.hpp"
#include "stepinf/special_functions.hpp"

namespace stepinf {

inline constexpr int kSchemaVersion = 1;

using ordered_json = nlohmann::ordered_json;

enum class ReportFormat { tsv, json };

inline ReportFormat parse_format(const std::string& s) {
    if (s == "tsv") return ReportFormat::tsv;
    if (s == "json") return ReportFormat::json;
    throw InvalidInput("unknown format: " + s + " (expected tsv or json)");
}

namespace detail {

/// Fixed-width float formatting so identical runs emit identical bytes.
inline std::string fmt_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

} // namespace detail

/// Per-group test table for a single fit, the Naive/Selective comparison.
struct FitReportRow {
    int step = 0;
    std::string group;
    int dof1 = 0;
    int dof2 = 0;
    std::string kind;  // "chi" or "F"
    double statistic = 0.0;
    double p_naive = 1.0;
    double p_selective = 1.0;
    std::string error;
};

struct FitReport {
    std::vector<FitReportRow> rows;
    bool stopped_early = false;
    int steps_run = 0;
};

/// Fits the dataset and tests every selected group.
inline FitReport run_analysis(const Dataset& ds, const StepwiseConfig& cfg) {
    StepwiseFit fit = forward_stepwise(ds.design, ds.y, cfg);
    auto results = test_all_active(fit, cfg.sigma);
    FitReport rep;
    rep.stopped_early = fit.event.stopped_early;
    rep.steps_run = static_cast<int>(fit.event.active.size());
    for (const auto& r : results) {
        FitReportRow row;
        row.step = r.step;
        row.group = static_cast<std::size_t>(r.group) < ds.group_names.size()
                        ? ds.group_names[static_cast<std::size_t>(r.group)]
                        : std::to_string(r.group + 1);
        row.dof1 = r.dof1;
        row.dof2 = r.dof2;
        row.kind = r.kind == TestKind::chi ? "chi" : "F";
        row.statistic = r.statistic;
        row.p_naive = r.p_naive;
        row.p_selective = r.p_selective;
        row.error = r.error;
        rep.rows.push_back(std::move(row));
    }
    return rep;
}

inline void emit_fit_report(const FitReport& rep, ReportFormat format, std::ostream& os) {
    if (format == ReportFormat::tsv) {
        os << "step\tgroup\ttest\tdf1\tdf2\tstatistic\tnaive_p\tselective_p\terror\n";
        for (const auto& r : rep.rows)
            os << r.step << '\t' << r.group << '\t' << r.kind << '\t' << r.dof1 << '\t' << r.dof2
               << '\t' << detail::fmt_double(r.statistic) << '\t'
               << detail::fmt_double(r.p_naive) << '\t' << detail::fmt_double(r.p_selective)
               << '\t' << r.error << '\n';
        return;
    }
    ordered_json j;
    j["schema_version"] = kSchemaVersion;
    j["kind"] = "fit";
    j["stopped_early"] = rep.stopped_early;
    j["steps"] = rep.steps_run;
    j["tests"] = ordered_json::array();
    for (const auto& r : rep.rows) {
        ordered_json row;
        row["step"] = r.step;
        row["group"] = r.group;
        row["test"] = r.kind;
        row["df1"] = r.dof1;
        row["df2"] = r.dof2;
        row["statistic"] = r.statistic;
        row["naive_p"] = r.p_naive;
        row["selective_p"] = r.p_selective;
        if (!r.error.empty()) row["error"] = r.error;
        j["tests"].push_back(std::move(row));
    }
    os << j.dump(2) << '\n';
}

inline ordered_json simulation_config_json(const SimulationConfig& cfg) {
    ordered_json j;
    j["schema_version"] = kSchemaVersion;
    j["n"] = cfg.n;
    j["group_sizes"] = cfg.group_sizes;
    j["design"] = cfg.law == DesignLaw::iid              ? "iid"
                  : cfg.law == DesignLaw::equicorrelated ? "equicorrelated"
                  : cfg.law == DesignLaw::ar1            ? "ar1"
                                                         : "orthogonal";
    j["rho"] = cfg.rho;
    j["normalize_columns"] = cfg.normalize_columns;
    j["sparsity"] = cfg.sparsity;
    j["amplitude"] = cfg.resolved_amplitude();
    j["signal_pattern"] = cfg.pattern == SignalPattern::first_column ? "first_column" : "all_columns";
    j["noise_sigma"] = cfg.noise_sigma;
    j["sigma_known"] = cfg.sigma_known;
    j["selection_uses_sigma"] = cfg.selection_uses_sigma;
    j["k"] = cfg.k;
    j["stop"] = cfg.stop == StopRule::fixed_steps ? "fixed" : "aic";
    j["stop_convention"] = cfg.keep_stop_step ? "keep_increase" : "drop_increase";
    j["max_steps"] = cfg.max_steps;
    j["s_plus"] = cfg.s_plus;
    j["reps"] = cfg.reps;
    j["seed"] = cfg.seed;
    return j;
}

inline SimulationConfig simulation_config_from_json(const ordered_json& j) {
    SimulationConfig cfg;
    if (j.contains("schema_version") && j["schema_version"].get<int>() != kSchemaVersion)
        throw InvalidInput("unsupported schema_version in simulation config");
    cfg.n = j.at("n").get<int>();
    if (j.contains("group_sizes")) {
        cfg.group_sizes = j["group_sizes"].get<std::vector<int>>();
    } else {
        int G = j.at("G").get<int>();
        int size = j.at("group_size").get<int>();
        cfg.group_sizes.assign(static_cast<std::size_t>(G), size);
    }
    if (j.contains("design")) {
        std::string d = j["design"].get<std::string>();
        if (d == "iid") cfg.law = DesignLaw::iid;
        else if (d == "equicorrelated") cfg.law = DesignLaw::equicorrelated;
        else if (d == "ar1") cfg.law = DesignLaw::ar1;
        else if (d == "orthogonal") cfg.law = DesignLaw::orthogonal;
        else throw InvalidInput("unknown design law: " + d);
    }
    if (j.contains("rho")) cfg.rho = j["rho"].get<double>();
    if (j.contains("normalize_columns")) cfg.normalize_columns = j["normalize_columns"].get<bool>();
    if (j.contains("sparsity")) cfg.sparsity = j["sparsity"].get<int>();
    if (j.contains("amplitude")) cfg.amplitude = j["amplitude"].get<double>();
    if (j.contains("signal_pattern")) {
        std::string p = j["signal_pattern"].get<std::string>();
        if (p == "first_column") cfg.pattern = SignalPattern::first_column;
        else if (p == "all_columns") cfg.pattern = SignalPattern::all_columns;
        else throw InvalidInput("unknown signal pattern: " + p);
    }
    if (j.contains("noise_sigma")) cfg.noise_sigma = j["noise_sigma"].get<double>();
    if (j.contains("sigma_known")) cfg.sigma_known = j["sigma_known"].get<bool>();
    cfg.selection_uses_sigma = cfg.sigma_known;
    if (j.contains("selection_uses_sigma"))
        cfg.selection_uses_sigma = j["selection_uses_sigma"].get<bool>();
    if (j.contains("k")) {
        if (j["k"].is_string()) {
            std::string ks = j["k"].get<std::string>();
            int p = cfg.p();
            if (ks == "aic") cfg.k = 2.0;
            else if (ks == "bic") cfg.k = std::log(static_cast<double>(cfg.n));
            else if (ks == "ric") cfg.k = 2.0 * std::log(static_cast<double>(p));
            else throw InvalidInput("unknown penalty: " + ks);
        } else {
            cfg.k = j["k"].get<double>();
        }
    }
    if (j.contains("stop")) {
        std::string s = j["stop"].get<std::string>();
        if (s == "fixed") cfg.stop = StopRule::fixed_steps;
        else if (s == "aic") cfg.stop = StopRule::aic_early_stop;
        else throw InvalidInput("unknown stop rule: " + s);
    }
    if (j.contains("stop_convention")) {
        std::string sc = j["stop_convention"].get<std::string>();
        if (sc == "keep_increase") cfg.keep_stop_step = true;
        else if (sc == "drop_increase") cfg.keep_stop_step = false;
        else throw InvalidInput("unknown stop_convention: " + sc);
    }
    if (j.contains("max_steps")) cfg.max_steps = j["max_steps"].get<int>();
    if (j.contains("s_plus")) cfg.s_plus = j["s_plus"].get<int>();
    if (j.contains("reps")) cfg.reps = j["reps"].get<int>();
    if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
    return cfg;
}

inline ordered_json report_json(const Report& report) {
    ordered_json j;
    j["schema_version"] = kSchemaVersion;
    j["kind"] = "simulation";
    j["config"] = simulation_config_json(report.config);
    j["rng"] = "philox4x32-10";

    auto& reps = j["records"]["reps"] = ordered_json::array();
    for (const auto& r : report.reps)
        reps.push_back({{"rep", r.rep},
                        {"model_size", r.model_size},
                        {"signals_captured", r.signals_captured},
                        {"stopped_early", r.stopped_early}});
    auto& groups = j["records"]["groups"] = ordered_json::array();
    for (const auto& g : report.groups) {
        ordered_json row;
        row["rep"] = g.rep;
        row["step"] = g.step;
        row["group"] = g.group;
        row["signal"] = g.signal;
        row["test"] = g.kind == TestKind::chi ? "chi" : "F";
        row["statistic"] = g.statistic;
        row["df1"] = g.dof1;
        row["df2"] = g.dof2;
        row["naive_p"] = g.p_naive;
        row["selective_p"] = g.p_selective;
        if (!g.error.empty()) row["error"] = g.error;
        groups.push_back(std::move(row));
    }

    ordered_json agg;
    agg["model_size_hist"] = ordered_json::array();
    for (const auto& [size, count] : report.aggregates.model_size_hist)
        agg["model_size_hist"].push_back({{"size", size}, {"count", count}});
    agg["captured_hist"] = ordered_json::array();
    for (const auto& [cap, count] : report.aggregates.captured_hist)
        agg["captured_hist"].push_back({{"captured", cap}, {"count", count}});
    agg["power_by_step"] = ordered_json::array();
    for (const auto& sp : report.aggregates.power_by_step)
        agg["power_by_step"].push_back({{"step", sp.step},
                                        {"n_nonnull", sp.n_nonnull},
                                        {"n_reject", sp.n_reject},
                                        {"power", sp.power},
                                        {"alpha", kPowerAlpha}});
    agg["ecdf"] = ordered_json::array();
    for (const auto& curve : report.aggregates.ecdf) {
        ordered_json c;
        c["step"] = curve.step;
        c["signal"] = curve.signal;
        c["points"] = ordered_json::array();
        for (const auto& [x, F] : curve.points) c["points"].push_back({x, F});
        agg["ecdf"].push_back(std::move(c));
    }
    j["aggregates"] = std::move(agg);
    return j;
}

/// Raw per-group records as TSV; every aggregate is recomputable from them.
inline void emit_report_tsv(const Report& report, std::ostream& os) {
    os << "rep\tstep\tgroup\tsignal\ttest\tstatistic\tdf1\tdf2\tnaive_p\tselective_p\terror\n";
    for (const auto& g : report.groups)
        os << g.rep << '\t' << g.step << '\t' << g.group << '\t' << (g.signal ? 1 : 0) << '\t'
           << (g.kind == TestKind::chi ? "chi" : "F") << '\t' << detail::fmt_double(g.statistic)
           << '\t' << g.dof1 << '\t' << g.dof2 << '\t' << detail::fmt_double(g.p_naive) << '\t'
           << detail::fmt_double(g.p_selective) << '\t' << g.error << '\n';
}

inline void emit_report(const Report& report, ReportFormat format, std::ostream& os) {
    if (format == ReportFormat::tsv)
        emit_report_tsv(report, os);
    else
        os << report_json(report).dump(2) << '\n';
}

inline void emit_report(const Report& report, ReportFormat format, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw InvalidInput("cannot open output file: " + path);
    emit_report(report, format, os);
}

/// Screening-bound panels: one block per eps, rows over G, columns over k,
/// entries rounded to two decimals.
inline std::string screen_bound_table(const std::vector<int>& Gs, const std::vector<int>& ks,
                                      const std::vector<double>& epss) {
    std::ostringstream os;
    char buf[64];
    for (double eps : epss) {
        std::snprintf(buf, sizeof buf, "%.10g", 100.0 * (1.0 - eps));
        os << "# bound panel: " << buf << "% (eps=" << eps << ")\n";
        os << "G";
        for (int k : ks) os << "\tk=" << k;
        os << '\n';
        for (int G : Gs) {
            os << G;
            for (int k : ks) {
                std::snprintf(buf, sizeof buf, "%.2f", screen_bound(G, k, eps));
                os << '\t' << buf;
            }
            os << '\n';
        }
    }
    return os.str();
}

} // namespace stepinf

#endif
