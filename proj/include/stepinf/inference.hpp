#ifndef STEPINF_INFERENCE_HPP
#define STEPINF_INFERENCE_HPP

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "stepinf/linalg.hpp"
#include "stepinf/slice_geometry.hpp"
#include "stepinf/special_functions.hpp"
#include "stepinf/stepwise.hpp"

namespace stepinf {

enum class TestKind { chi, f };

/// Outcome of one selective significance test.
struct SelectiveTestResult {
    int group = -1;
    int step = 0;  // 1-based step at which the group entered
    TestKind kind = TestKind::chi;
    double statistic = 0.0;
    int dof1 = 0;          // r for chi, d1 for F
    int dof2 = 0;          // d2 for F, unused for chi
    IntervalUnion region;
    double p_selective = 1.0;
    double p_naive = 1.0;
    bool widened = false;  // observed statistic was nudged into the region
    std::string error;     // nonempty marks a failed test in a batch
};

namespace detail {

inline int active_position(const StepwiseFit& fit, int g) {
    auto it = std::find(fit.event.active.begin(), fit.event.active.end(), g);
    if (it == fit.event.active.end())
        throw InvalidInput("group " + std::to_string(g) + " is not in the active set");
    return static_cast<int>(it - fit.event.active.begin());
}

} // namespace detail

/// Chi slice for testing group g: u spans the group's fitted projection of
/// y, z is the rest. Throws when the projection is exactly zero (the test
/// then short-circuits to p = 1).
inline ChiSlice make_chi_slice(const StepwiseFit& fit, int g, double sigma) {
    const int pos = detail::active_position(fit, g);
    const OrthoBasis& tilde = fit.fitted_bases[static_cast<std::size_t>(pos)];
    if (tilde.rank() == 0)
        throw NumericalError("chi slice: group fully collinear with the rest of the model");
    Vector proj = project(tilde, fit.y);
    double norm = proj.norm();
    if (norm == 0.0) throw NumericalError("chi slice: zero statistic");
    ChiSlice slice;
    slice.direction = proj / norm;
    slice.offset = fit.y - proj;
    slice.sigma = sigma;
    slice.observed = norm / sigma;
    return slice;
}

/// F slice for testing group g; also reports the two degree-of-freedom
/// counts d1 = Tr(P_full - P_sub) and d2 = Tr(I - P_full).
inline FSlice make_f_slice(const StepwiseFit& fit, int g, int* d1_out = nullptr,
                           int* d2_out = nullptr) {
    detail::active_position(fit, g);
    const Eigen::Index n = fit.design.n();

    OrthoBasis full = orthonormal_basis(fit.design.cols_of(fit.event.active));
    std::vector<int> others;
    for (int h : fit.event.active)
        if (h != g) others.push_back(h);

    Vector R2 = fit.y - project(full, fit.y);
    Vector R1;
    Eigen::Index rank_sub = 0;
    if (others.empty()) {
        R1 = fit.y;
    } else {
        OrthoBasis sub = orthonormal_basis(fit.design.cols_of(others));
        rank_sub = sub.rank();
        R1 = fit.y - project(sub, fit.y);
    }
    const int d1 = static_cast<int>(full.rank() - rank_sub);
    const int d2 = static_cast<int>(n - full.rank());
    if (d1 < 1)
        throw NumericalError("F slice: group fully collinear with the rest of the model");
    if (d2 < 1) throw NumericalError("F slice: no residual degrees of freedom");
    if (d1_out) *d1_out = d1;
    if (d2_out) *d2_out = d2;

    Vector delta = R1 - R2;
    double dnorm = delta.norm();
    double r2norm = R2.norm();
    if (r2norm == 0.0) throw NumericalError("F slice: perfect fit, statistic undefined");
    if (dnorm == 0.0) throw NumericalError("F slice: zero statistic");

    FSlice slice;
    slice.v_delta = delta / dnorm;
    slice.v2 = R2 / r2norm;
    slice.offset = fit.y - R1;  // P_sub y
    slice.r = R1.norm();
    slice.c = static_cast<double>(d1) / static_cast<double>(d2);
    slice.observed = dnorm * dnorm / (slice.c * r2norm * r2norm);
    return slice;
}

/// Truncated-chi test of H0: the group adds nothing over the rest of the
/// selected model, for known noise scale sigma.
inline SelectiveTestResult tchi_test(const StepwiseFit& fit, int g, double sigma) {
    if (!(sigma > 0.0)) throw InvalidInput("tchi_test: sigma > 0 required");
    const int pos = detail::active_position(fit, g);

    const OrthoBasis& tilde = fit.fitted_bases[static_cast<std::size_t>(pos)];
    if (tilde.rank() == 0)
        throw NumericalError("tchi_test: group fully collinear with the rest of the model");

    SelectiveTestResult res;
    res.group = g;
    res.step = pos + 1;
    res.kind = TestKind::chi;
    res.dof1 = static_cast<int>(tilde.rank());

    double norm = project(tilde, fit.y).norm();
    res.statistic = norm / sigma;
    if (norm == 0.0) {
        // Zero statistic: the survival ratio is 1 by convention.
        res.region = IntervalUnion::half_line();
        res.p_selective = 1.0;
        res.p_naive = 1.0;
        return res;
    }

    ChiSlice slice = make_chi_slice(fit, g, sigma);
    RegionDiagnostics diag;
    res.region = chi_slice_region(fit.event, slice, &diag);
    res.widened = diag.widened;
    res.p_selective = truncated_sf(TruncatedChiSpec{res.dof1, res.region, res.statistic});
    res.p_naive = chi_sf(res.dof1, res.statistic);
    return res;
}

/// Truncated-F test of the same hypothesis when sigma is unknown.
inline SelectiveTestResult tf_test(const StepwiseFit& fit, int g) {
    const int pos = detail::active_position(fit, g);

    SelectiveTestResult res;
    res.group = g;
    res.step = pos + 1;
    res.kind = TestKind::f;

    FSlice slice = make_f_slice(fit, g, &res.dof1, &res.dof2);
    res.statistic = slice.observed;

    RegionDiagnostics diag;
    res.region = f_slice_region(fit.event, slice, &diag);
    res.widened = diag.widened;
    res.p_selective = truncated_sf(TruncatedFSpec{res.dof1, res.dof2, res.region, res.statistic});
    res.p_naive = f_sf(res.dof1, res.dof2, res.statistic);
    return res;
}

/// Selective tests for every group in the final model, in entry order.
/// sigma given dispatches to the chi test, nullopt to the F test. Failures
/// are carried per group rather than aborting the batch.
inline std::vector<SelectiveTestResult> test_all_active(const StepwiseFit& fit,
                                                        std::optional<double> sigma) {
    std::vector<SelectiveTestResult> out;
    for (std::size_t i = 0; i < fit.event.active.size(); ++i) {
        int g = fit.event.active[i];
        try {
            out.push_back(sigma ? tchi_test(fit, g, *sigma) : tf_test(fit, g));
        } catch (const std::exception& e) {
            SelectiveTestResult bad;
            bad.group = g;
            bad.step = static_cast<int>(i) + 1;
            bad.kind = sigma ? TestKind::chi : TestKind::f;
            bad.error = e.what();
            out.push_back(std::move(bad));
        }
    }
    return out;
}

} // namespace stepinf

#endif
