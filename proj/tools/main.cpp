// Command-line front end: fit a dataset, run a seeded simulation, or print
// the screening-bound table.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "stepinf/stepinf.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 1;
constexpr int kExitNumerical = 2;

double resolve_penalty(const std::string& k, Eigen::Index n, Eigen::Index p) {
    if (k == "aic") return 2.0;
    if (k == "bic") return std::log(static_cast<double>(n));
    if (k == "ric") return 2.0 * std::log(static_cast<double>(p));
    char* end = nullptr;
    double v = std::strtod(k.c_str(), &end);
    if (!end || *end != '\0' || v < 0.0)
        throw stepinf::InvalidInput("penalty must be aic, bic, ric, or a number >= 0");
    return v;
}

std::optional<double> resolve_sigma(const std::string& s) {
    if (s == "unknown") return std::nullopt;
    char* end = nullptr;
    double v = std::strtod(s.c_str(), &end);
    if (!end || *end != '\0' || !(v > 0.0))
        throw stepinf::InvalidInput("sigma must be a positive number or 'unknown'");
    return v;
}

void write_out(const std::string& path, const std::string& content) {
    if (path.empty() || path == "-") {
        std::cout << content;
        return;
    }
    std::ofstream os(path, std::ios::binary);
    if (!os) throw stepinf::InvalidInput("cannot open output file: " + path);
    os << content;
}

struct FitArgs {
    std::string csv, groups, out, outcome;
    std::string sigma = "unknown";
    std::string k = "bic";
    std::string format = "tsv";
    int steps = 0;
    int aic_stop = 0;
    bool standardize = false;
};

int run_fit(const FitArgs& a) {
    stepinf::LoadOptions opts;
    opts.outcome = a.outcome;
    opts.standardize = a.standardize;
    stepinf::Dataset ds = stepinf::load_csv(a.csv, a.groups, opts);
    if (ds.dropped_rows > 0)
        std::cerr << "warning: dropped " << ds.dropped_rows << " rows with missing values\n";

    stepinf::StepwiseConfig cfg;
    cfg.sigma = resolve_sigma(a.sigma);
    cfg.k = resolve_penalty(a.k, ds.design.n(), ds.design.p());
    if (a.steps > 0 && a.aic_stop > 0)
        throw stepinf::InvalidInput("--steps and --aic-stop are mutually exclusive");
    if (a.aic_stop > 0) {
        cfg.stop = stepinf::StopRule::aic_early_stop;
        cfg.s_plus = a.aic_stop;
        cfg.max_steps = ds.design.num_groups();
    } else {
        cfg.stop = stepinf::StopRule::fixed_steps;
        cfg.max_steps = a.steps > 0 ? a.steps : 1;
    }

    stepinf::FitReport rep = stepinf::run_analysis(ds, cfg);
    std::ostringstream os;
    stepinf::emit_fit_report(rep, stepinf::parse_format(a.format), os);
    write_out(a.out, os.str());
    return kExitOk;
}

struct SimArgs {
    std::string config, out;
    std::string format = "json";
    std::int64_t seed = -1;
    int reps = 0;
};

int run_simulate(const SimArgs& a) {
    std::ifstream is(a.config);
    if (!is) throw stepinf::InvalidInput("cannot open config file: " + a.config);
    stepinf::ordered_json j;
    try {
        is >> j;
    } catch (const std::exception& e) {
        throw stepinf::InvalidInput(std::string("config parse error: ") + e.what());
    }
    stepinf::SimulationConfig cfg = stepinf::simulation_config_from_json(j);
    if (a.seed >= 0) cfg.seed = static_cast<std::uint64_t>(a.seed);
    if (a.reps > 0) cfg.reps = a.reps;

    stepinf::Report report = stepinf::run_simulation(cfg);
    std::ostringstream os;
    stepinf::emit_report(report, stepinf::parse_format(a.format), os);
    write_out(a.out, os.str());
    return kExitOk;
}

struct BoundsArgs {
    std::vector<int> Gs{10, 20, 50, 100, 1000};
    std::vector<int> ks{2, 5, 10, 50};
    std::vector<double> epss{0.01, 0.10};
    std::string out;
};

int run_bounds(const BoundsArgs& a) {
    write_out(a.out, stepinf::screen_bound_table(a.Gs, a.ks, a.epss));
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Grouped forward stepwise regression with exact selective tests"};
    app.require_subcommand(1);

    FitArgs fitArgs;
    auto* fit = app.add_subcommand("fit", "Fit a CSV dataset and test the selected groups");
    fit->add_option("--csv", fitArgs.csv, "data CSV with header row")->required();
    fit->add_option("--groups", fitArgs.groups, "column,group map CSV")->required();
    fit->add_option("--outcome", fitArgs.outcome, "outcome column (default: first unmapped)");
    fit->add_option("--sigma", fitArgs.sigma, "noise scale or 'unknown' (default)");
    fit->add_option("--k", fitArgs.k, "penalty: aic, bic, ric, or a number (default bic)");
    fit->add_option("--steps", fitArgs.steps, "fixed number of steps");
    fit->add_option("--aic-stop", fitArgs.aic_stop, "early stop after S_PLUS criterion increases");
    fit->add_option("--out", fitArgs.out, "output path (default stdout)");
    fit->add_option("--format", fitArgs.format, "tsv (default) or json");
    fit->add_flag("--standardize", fitArgs.standardize, "center and scale predictor columns");

    SimArgs simArgs;
    auto* sim = app.add_subcommand("simulate", "Run a seeded Monte Carlo experiment");
    sim->add_option("--config", simArgs.config, "JSON simulation config")->required();
    sim->add_option("--seed", simArgs.seed, "override config seed");
    sim->add_option("--reps", simArgs.reps, "override replication count");
    sim->add_option("--out", simArgs.out, "output path (default stdout)");
    sim->add_option("--format", simArgs.format, "json (default) or tsv");

    BoundsArgs boundsArgs;
    auto* bounds = app.add_subcommand("bounds", "Print high-probability null screening bounds");
    bounds->add_option("--G", boundsArgs.Gs, "group counts")->delimiter(',');
    bounds->add_option("--k", boundsArgs.ks, "group sizes")->delimiter(',');
    bounds->add_option("--eps", boundsArgs.epss, "exceedance probabilities")->delimiter(',');
    bounds->add_option("--out", boundsArgs.out, "output path (default stdout)");

    try {
        app.parse(argc, argv);
        if (fit->parsed()) return run_fit(fitArgs);
        if (sim->parsed()) return run_simulate(simArgs);
        if (bounds->parsed()) return run_bounds(boundsArgs);
        return kExitInput;
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? kExitOk : kExitInput;
    } catch (const stepinf::InvalidInput& e) {
        std::cerr << "input error: " << e.what() << '\n';
        return kExitInput;
    } catch (const stepinf::NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitNumerical;
    }
}
