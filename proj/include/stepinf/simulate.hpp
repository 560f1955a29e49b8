#ifndef STEPINF_SIMULATE_HPP
#define STEPINF_SIMULATE_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "stepinf/inference.hpp"
#include "stepinf/rng.hpp"
#include "stepinf/stepwise.hpp"

namespace stepinf {

enum class DesignLaw { iid, equicorrelated, ar1, orthogonal };
enum class SignalPattern { first_column, all_columns };

/// Seeded Monte Carlo experiment: draws designs and outcomes, runs grouped
/// forward stepwise, and tests every selected group.
struct SimulationConfig {
    int n = 100;
    std::vector<int> group_sizes;  // one entry per group
    DesignLaw law = DesignLaw::equicorrelated;
    double rho = 0.3;              // pairwise column correlation (equicorrelated law)
    bool normalize_columns = false;

    int sparsity = 5;              // number of signal groups
    double amplitude = 0.0;        // 0 = default 2 sqrt(log G / n)
    SignalPattern pattern = SignalPattern::first_column;

    double noise_sigma = 1.0;
    bool sigma_known = true;       // chi tests with the true sigma, else F tests
    bool selection_uses_sigma = true;  // additive criterion with true sigma, else multiplicative

    double k = 2.0;                // resolved penalty
    StopRule stop = StopRule::fixed_steps;
    int max_steps = 1;
    int s_plus = 1;
    bool keep_stop_step = false;   // stop convention, see StepwiseConfig

    int reps = 1;
    std::uint64_t seed = 1;

    int num_groups() const { return static_cast<int>(group_sizes.size()); }
    int p() const {
        int s = 0;
        for (int g : group_sizes) s += g;
        return s;
    }
    double resolved_amplitude() const {
        if (amplitude != 0.0) return amplitude;
        return 2.0 * std::sqrt(std::log(static_cast<double>(num_groups())) / n);
    }
    void validate() const {
        if (n < 1) throw InvalidInput("SimulationConfig: n >= 1");
        if (group_sizes.empty()) throw InvalidInput("SimulationConfig: need groups");
        for (int s : group_sizes)
            if (s < 1) throw InvalidInput("SimulationConfig: group sizes >= 1");
        if (sparsity < 0 || sparsity > num_groups())
            throw InvalidInput("SimulationConfig: 0 <= sparsity <= G");
        if (!(noise_sigma > 0.0)) throw InvalidInput("SimulationConfig: noise_sigma > 0");
        if (reps < 1) throw InvalidInput("SimulationConfig: reps >= 1");
        if (law == DesignLaw::equicorrelated && !(rho > -1.0 && rho < 1.0))
            throw InvalidInput("SimulationConfig: rho in (-1, 1)");
        if (law == DesignLaw::orthogonal && p() > n)
            throw InvalidInput("SimulationConfig: orthogonal design needs p <= n");
    }
};

struct GroupRecord {
    int rep = 0;
    int step = 0;
    int group = -1;
    bool signal = false;
    TestKind kind = TestKind::chi;
    double statistic = 0.0;
    int dof1 = 0;
    int dof2 = 0;
    double p_naive = 1.0;
    double p_selective = 1.0;
    std::string error;
};

struct RepRecord {
    int rep = 0;
    int model_size = 0;
    int signals_captured = 0;
    bool stopped_early = false;
};

struct StepPower {
    int step = 0;
    int n_nonnull = 0;
    int n_reject = 0;
    double power = 0.0;
};

struct EcdfCurve {
    int step = 0;
    bool signal = false;
    std::vector<std::pair<double, double>> points;  // (p, fraction <= p)
};

struct ReportAggregates {
    std::map<int, int> model_size_hist;
    std::map<int, int> captured_hist;
    std::vector<StepPower> power_by_step;
    std::vector<EcdfCurve> ecdf;
};

struct Report {
    SimulationConfig config;
    std::vector<RepRecord> reps;
    std::vector<GroupRecord> groups;
    ReportAggregates aggregates;
};

inline constexpr double kPowerAlpha = 0.05;

/// Recomputes every aggregate from the raw records.
inline ReportAggregates aggregate_report(const std::vector<RepRecord>& reps,
                                         const std::vector<GroupRecord>& groups) {
    ReportAggregates agg;
    for (const auto& r : reps) {
        ++agg.model_size_hist[r.model_size];
        ++agg.captured_hist[r.signals_captured];
    }
    std::map<int, StepPower> power;
    std::map<std::pair<int, bool>, std::vector<double>> pvals;
    for (const auto& g : groups) {
        if (!g.error.empty()) continue;
        pvals[{g.step, g.signal}].push_back(g.p_selective);
        if (g.signal) {
            auto& sp = power[g.step];
            sp.step = g.step;
            ++sp.n_nonnull;
            if (g.p_selective <= kPowerAlpha) ++sp.n_reject;
        }
    }
    for (auto& [step, sp] : power) {
        sp.power = sp.n_nonnull > 0 ? static_cast<double>(sp.n_reject) / sp.n_nonnull : 0.0;
        agg.power_by_step.push_back(sp);
    }
    for (auto& [key, ps] : pvals) {
        EcdfCurve curve;
        curve.step = key.first;
        curve.signal = key.second;
        std::sort(ps.begin(), ps.end());
        curve.points.reserve(ps.size());
        for (std::size_t i = 0; i < ps.size(); ++i)
            curve.points.emplace_back(ps[i], static_cast<double>(i + 1) / ps.size());
        agg.ecdf.push_back(std::move(curve));
    }
    return agg;
}

/// Draws one design matrix under the configured law.
inline Matrix draw_design(const SimulationConfig& cfg, Philox& rng) {
    const Eigen::Index n = cfg.n;
    const Eigen::Index p = cfg.p();
    Matrix X(n, p);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < p; ++j) X(i, j) = rng.normal();
    if (cfg.law == DesignLaw::equicorrelated && cfg.rho != 0.0) {
        double a = std::sqrt(1.0 - cfg.rho), b = std::sqrt(cfg.rho);
        for (Eigen::Index i = 0; i < n; ++i) {
            double shared = rng.normal();
            for (Eigen::Index j = 0; j < p; ++j) X(i, j) = a * X(i, j) + b * shared;
        }
    } else if (cfg.law == DesignLaw::ar1 && cfg.rho != 0.0) {
        double a = std::sqrt(1.0 - cfg.rho * cfg.rho);
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = 1; j < p; ++j)
                X(i, j) = cfg.rho * X(i, j - 1) + a * X(i, j);
    } else if (cfg.law == DesignLaw::orthogonal) {
        Eigen::HouseholderQR<Matrix> qr(X);
        X = qr.householderQ() * Matrix::Identity(n, p);
    }
    if (cfg.normalize_columns && cfg.law != DesignLaw::orthogonal)
        for (Eigen::Index j = 0; j < p; ++j) X.col(j) /= X.col(j).norm();
    return X;
}

/// One replication's problem instance.
struct SimInstance {
    GroupedDesign design;
    Vector y;
    Vector mu;
    std::vector<int> signal_groups;
};

inline SimInstance draw_instance(const SimulationConfig& cfg, Philox& rng) {
    SimInstance inst;
    const int G = cfg.num_groups();
    std::vector<std::vector<Eigen::Index>> groups(static_cast<std::size_t>(G));
    Eigen::Index at = 0;
    for (int g = 0; g < G; ++g)
        for (int j = 0; j < cfg.group_sizes[static_cast<std::size_t>(g)]; ++j)
            groups[static_cast<std::size_t>(g)].push_back(at++);

    Matrix X = draw_design(cfg, rng);

    // Signal groups: partial Fisher-Yates over the labels.
    std::vector<int> labels(static_cast<std::size_t>(G));
    for (int g = 0; g < G; ++g) labels[static_cast<std::size_t>(g)] = g;
    for (int i = 0; i < cfg.sparsity; ++i) {
        std::size_t j = static_cast<std::size_t>(i) +
                        static_cast<std::size_t>(rng.below(static_cast<std::uint64_t>(G - i)));
        std::swap(labels[static_cast<std::size_t>(i)], labels[j]);
    }
    inst.signal_groups.assign(labels.begin(), labels.begin() + cfg.sparsity);
    std::sort(inst.signal_groups.begin(), inst.signal_groups.end());

    Vector beta = Vector::Zero(X.cols());
    const double amp = cfg.resolved_amplitude();
    for (int g : inst.signal_groups) {
        const auto& idx = groups[static_cast<std::size_t>(g)];
        if (cfg.pattern == SignalPattern::first_column) {
            beta(idx.front()) = rng.uniform() < 0.5 ? -amp : amp;
        } else {
            for (Eigen::Index j : idx) beta(j) = rng.uniform() < 0.5 ? -amp : amp;
        }
    }
    inst.mu = X * beta;
    inst.y = inst.mu;
    for (Eigen::Index i = 0; i < inst.y.size(); ++i) inst.y(i) += cfg.noise_sigma * rng.normal();
    inst.design = GroupedDesign(std::move(X), std::move(groups));
    return inst;
}

inline StepwiseConfig stepwise_config(const SimulationConfig& cfg) {
    StepwiseConfig sc;
    sc.k = cfg.k;
    if (cfg.selection_uses_sigma) sc.sigma = cfg.noise_sigma;
    sc.max_steps = cfg.max_steps;
    sc.stop = cfg.stop;
    sc.s_plus = cfg.s_plus;
    sc.keep_stop_step = cfg.keep_stop_step;
    return sc;
}

/// Runs the whole experiment. Replication r uses the Philox stream
/// (seed, r), so results are deterministic for a fixed seed regardless of
/// evaluation order.
inline Report run_simulation(const SimulationConfig& cfg) {
    cfg.validate();
    Report report;
    report.config = cfg;
    const StepwiseConfig sc = stepwise_config(cfg);

    for (int rep = 0; rep < cfg.reps; ++rep) {
        Philox rng(cfg.seed, static_cast<std::uint64_t>(rep));
        SimInstance inst = draw_instance(cfg, rng);
        StepwiseFit fit = forward_stepwise(inst.design, inst.y, sc);
        auto results = test_all_active(
            fit, cfg.sigma_known ? std::optional<double>(cfg.noise_sigma) : std::nullopt);

        RepRecord rr;
        rr.rep = rep;
        rr.model_size = static_cast<int>(fit.event.active.size());
        rr.stopped_early = fit.event.stopped_early;
        for (int g : fit.event.active)
            if (std::binary_search(inst.signal_groups.begin(), inst.signal_groups.end(), g))
                ++rr.signals_captured;
        report.reps.push_back(rr);

        for (const auto& res : results) {
            GroupRecord gr;
            gr.rep = rep;
            gr.step = res.step;
            gr.group = res.group;
            gr.signal = std::binary_search(inst.signal_groups.begin(), inst.signal_groups.end(),
                                           res.group);
            gr.kind = res.kind;
            gr.statistic = res.statistic;
            gr.dof1 = res.dof1;
            gr.dof2 = res.dof2;
            gr.p_naive = res.p_naive;
            gr.p_selective = res.p_selective;
            gr.error = res.error;
            report.groups.push_back(std::move(gr));
        }
    }
    report.aggregates = aggregate_report(report.reps, report.groups);
    return report;
}

} // namespace stepinf

#endif
