#ifndef STEPINF_SLICE_GEOMETRY_HPP
#define STEPINF_SLICE_GEOMETRY_HPP

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <vector>

#include "stepinf/constraints.hpp"
#include "stepinf/intervals.hpp"
#include "stepinf/quartic.hpp"
#include "stepinf/stepwise.hpp"

namespace stepinf {

/// One-dimensional slice y(t) = z + t sigma u through the outcome space;
/// the chi statistic's truncation region lives on it.
struct ChiSlice {
    Vector direction;  // u, unit norm, spans the tested projection of y
    Vector offset;     // z = y - P y, orthogonal to u
    double sigma = 1.0;
    double observed = 0.0;  // T = ||P y|| / sigma
};

/// Curve y(t) = z + g1(t) v_delta + g2(t) v2 traced by the F statistic,
/// with g1 = r sqrt(ct/(1+ct)) and g2 = r / sqrt(1+ct).
struct FSlice {
    Vector v_delta;  // unit, spans (P_full - P_sub) y
    Vector v2;       // unit, spans (I - P_full) y
    Vector offset;   // z = P_sub y
    double r = 0.0;  // ||R1||
    double c = 1.0;  // Tr(P_full - P_sub) / Tr(I - P_full)
    double observed = 0.0;
};

struct RegionDiagnostics {
    bool widened = false;
    int violating_inequality = -1;
};

/// The outcome vector at position t along the slice.
inline Vector slice_point(const ChiSlice& slice, double t) {
    return slice.offset + (t * slice.sigma) * slice.direction;
}

inline Vector slice_point(const FSlice& slice, double t) {
    double g1, g2;
    if (std::isinf(t)) {
        g1 = slice.r;
        g2 = 0.0;
    } else {
        double ct = slice.c * t;
        g1 = slice.r * std::sqrt(ct / (1.0 + ct));
        g2 = slice.r / std::sqrt(1.0 + ct);
    }
    return slice.offset + g1 * slice.v_delta + g2 * slice.v2;
}

/// Exact solution of { t >= 0 : a2 t^2 + a1 t + a0 >= 0 }.
inline IntervalUnion solve_quadratic_nonneg(double a2, double a1, double a0) {
    const double inf = std::numeric_limits<double>::infinity();
    double m = std::max({std::fabs(a2), std::fabs(a1), std::fabs(a0)});
    if (m == 0.0) return IntervalUnion::half_line();
    const double eps = 1e-14 * m;

    if (std::fabs(a2) <= eps) {
        if (std::fabs(a1) <= eps)
            return a0 >= 0.0 ? IntervalUnion::half_line() : IntervalUnion::empty();
        double root = -a0 / a1;
        if (a1 > 0.0) return IntervalUnion::single(std::max(0.0, root), inf);
        return root >= 0.0 ? IntervalUnion::single(0.0, root) : IntervalUnion::empty();
    }

    double disc = a1 * a1 - 4.0 * a2 * a0;
    if (disc <= 0.0)
        return a2 > 0.0 ? IntervalUnion::half_line() : IntervalUnion::empty();

    double sq = std::sqrt(disc);
    double q = -0.5 * (a1 + std::copysign(sq, a1));
    double r1 = q / a2;
    double r2 = (q != 0.0) ? a0 / q : -a1 / a2 - r1;
    if (r1 > r2) std::swap(r1, r2);

    if (a2 > 0.0) {
        std::vector<Interval> pieces;
        if (r1 >= 0.0) pieces.push_back({0.0, r1});
        pieces.push_back({std::max(0.0, r2), inf});
        return IntervalUnion(std::move(pieces));
    }
    if (r2 < 0.0) return IntervalUnion::empty();
    return IntervalUnion::single(std::max(0.0, r1), r2);
}

namespace detail {

/// x^T Q w for the low-rank quadratic, via inner products only.
inline double lowrank_form(const QuadraticInequality& q, const Vector& x, const Vector& w) {
    double val = 0.0;
    if (q.identity != 0.0) val += q.identity * x.dot(w);
    if (q.pos.cols() > 0) val += (q.pos.transpose() * x).dot(q.pos.transpose() * w);
    if (q.neg.cols() > 0) val -= (q.neg.transpose() * x).dot(q.neg.transpose() * w);
    return val;
}

/// Enforces the conditioning requirement that the observed statistic lies in
/// the computed region, absorbing root-finder noise at the boundary.
inline void finalize_region(IntervalUnion& region, double observed, int violator,
                            RegionDiagnostics* diag, const char* what) {
    if (diag) *diag = RegionDiagnostics{};
    if (region.contains(observed)) return;
    if (!region.is_empty() &&
        region.endpoint_distance(observed) <= 1e-8 * std::max(1.0, std::fabs(observed))) {
        region.widen_to_include(observed);
        if (diag) diag->widened = true;
        return;
    }
    if (diag) diag->violating_inequality = violator;
    throw NumericalError(std::string(what) +
                         ": observed statistic excluded from truncation region (inequality " +
                         std::to_string(violator) + ")");
}

} // namespace detail

/// Coefficients of one inequality restricted to the chi slice:
/// a2 t^2 + a1 t + a0 with a2 = sigma^2 u'Qu, a1 = 2 sigma u'Qz + sigma a'u,
/// a0 = z'Qz + a'z + b.
struct ChiSliceCoeffs {
    double a2 = 0, a1 = 0, a0 = 0;
};

inline ChiSliceCoeffs chi_slice_coeffs(const QuadraticInequality& q, const ChiSlice& slice) {
    ChiSliceCoeffs c;
    const double s = slice.sigma;
    c.a2 = s * s * detail::lowrank_form(q, slice.direction, slice.direction);
    c.a1 = 2.0 * s * detail::lowrank_form(q, slice.direction, slice.offset);
    c.a0 = detail::lowrank_form(q, slice.offset, slice.offset) + q.constant;
    if (q.linear.size() > 0) {
        c.a1 += s * q.linear.dot(slice.direction);
        c.a0 += q.linear.dot(slice.offset);
    }
    return c;
}

/// Truncation region of the chi slice: every selection inequality restricted
/// to y(t) = z + t sigma u is a univariate quadratic in t, whose
/// coefficients need only inner products with the stored bases.
inline IntervalUnion chi_slice_region(const SelectionEvent& event, const ChiSlice& slice,
                                      RegionDiagnostics* diag = nullptr) {
    IntervalUnion region = IntervalUnion::half_line();
    int violator = -1;
    for (std::size_t i = 0; i < event.inequalities.size(); ++i) {
        ChiSliceCoeffs c = chi_slice_coeffs(event.inequalities[i], slice);
        IntervalUnion piece = solve_quadratic_nonneg(c.a2, c.a1, c.a0);
        if (violator < 0 && !piece.contains(slice.observed)) violator = static_cast<int>(i);
        region = intersect(region, piece);
        if (region.is_empty()) break;
    }
    detail::finalize_region(region, slice.observed, violator, diag, "chi_slice_region");
    return region;
}

/// The six scalars that pin one inequality down on the F slice.
struct FConstraintCoeffs {
    double x11 = 0, x12 = 0, x22 = 0, x1 = 0, x2 = 0, x0 = 0;
};

inline FConstraintCoeffs f_constraint_coeffs(const QuadraticInequality& q, const FSlice& slice) {
    FConstraintCoeffs c;
    c.x11 = detail::lowrank_form(q, slice.v_delta, slice.v_delta);
    c.x12 = 2.0 * detail::lowrank_form(q, slice.v_delta, slice.v2);
    c.x22 = detail::lowrank_form(q, slice.v2, slice.v2);
    c.x1 = 2.0 * detail::lowrank_form(q, slice.v_delta, slice.offset);
    c.x2 = 2.0 * detail::lowrank_form(q, slice.v2, slice.offset);
    c.x0 = detail::lowrank_form(q, slice.offset, slice.offset) + q.constant;
    if (q.linear.size() > 0) {
        c.x1 += q.linear.dot(slice.v_delta);
        c.x2 += q.linear.dot(slice.v2);
        c.x0 += q.linear.dot(slice.offset);
    }
    return c;
}

namespace detail {

/// Constraint value at angle theta, where ct = tan^2(theta): g1 = r sin,
/// g2 = r cos. theta = pi/2 is the t -> infinity limit.
inline double eval_f_theta(const FConstraintCoeffs& c, double r, double sinT, double cosT) {
    double g1 = r * sinT, g2 = r * cosT;
    return g1 * g1 * c.x11 + g1 * g2 * c.x12 + g2 * g2 * c.x22 + g1 * c.x1 + g2 * c.x2 + c.x0;
}

inline double theta_to_t(double theta, double cScale) {
    if (theta >= M_PI_2) return std::numeric_limits<double>::infinity();
    double tn = std::tan(theta);
    return tn * tn / cScale;
}

} // namespace detail

/// I_{Q,a,b}(t): the inequality's left side along the F slice.
inline double f_slice_constraint(const QuadraticInequality& q, const FSlice& slice, double t) {
    FConstraintCoeffs c = f_constraint_coeffs(q, slice);
    if (std::isinf(t)) return detail::eval_f_theta(c, slice.r, 1.0, 0.0);
    double ct = slice.c * t;
    double sinT = std::sqrt(ct / (1.0 + ct));
    double cosT = 1.0 / std::sqrt(1.0 + ct);
    return detail::eval_f_theta(c, slice.r, sinT, cosT);
}

namespace detail {

inline constexpr int kThetaGridPoints = 512;

/// { t >= 0 : I(t) >= 0 } for one inequality. Substituting ct = tan^2(theta)
/// turns the level set into the sign pattern of a trigonometric polynomial
/// on [0, pi/2]; its zeroes coincide with the unit-circle roots of a complex
/// quartic, which the companion matrix delivers. The quartic roots are only
/// used to seed brackets: a dense sign scan backstops missed roots, and each
/// bracketed crossing is re-solved by bisection in the original domain.
inline IntervalUnion f_constraint_region(const FConstraintCoeffs& c, double r, double cScale,
                                         const std::vector<double>& gridTheta) {
    const double inf = std::numeric_limits<double>::infinity();
    double variation =
        std::max({std::fabs(c.x11), std::fabs(c.x12), std::fabs(c.x22), std::fabs(c.x1),
                  std::fabs(c.x2)});
    double scale = std::max(variation, std::fabs(c.x0));
    if (scale == 0.0 || variation <= 1e-13 * scale)
        return c.x0 >= 0.0 ? IntervalUnion::half_line() : IntervalUnion::empty();

    // Complex quartic p~(z) = z^2 p(z), z = e^{i theta}; coefficients from
    // Euler-expanding sin/cos products.
    const double r2 = r * r;
    std::vector<std::complex<double>> poly{
        {0.25 * r2 * (c.x22 - c.x11), 0.25 * r2 * c.x12},
        {0.5 * r * c.x2, 0.5 * r * c.x1},
        {0.5 * r2 * (c.x11 + c.x22) + c.x0, 0.0},
        {0.5 * r * c.x2, -0.5 * r * c.x1},
        {0.25 * r2 * (c.x22 - c.x11), -0.25 * r2 * c.x12}};

    std::vector<double> points;
    points.reserve(gridTheta.size() + 8);
    points.insert(points.end(), gridTheta.begin(), gridTheta.end());
    for (const auto& zr : polynomial_roots(poly)) {
        if (std::fabs(std::abs(zr) - 1.0) > 1e-6) continue;
        double theta = std::atan2(zr.imag(), zr.real());
        if (theta < -1e-8 || theta > M_PI_2 + 1e-8) continue;
        points.push_back(std::clamp(theta, 0.0, M_PI_2));
    }
    std::sort(points.begin(), points.end());
    points.erase(std::unique(points.begin(), points.end(),
                             [](double a, double b) { return b - a < 1e-12; }),
                 points.end());

    auto value_at = [&](double theta) {
        if (theta >= M_PI_2) return eval_f_theta(c, r, 1.0, 0.0);
        return eval_f_theta(c, r, std::sin(theta), std::cos(theta));
    };

    // Segment signs at midpoints, then bisect every sign change.
    const std::size_t nSeg = points.size() - 1;
    std::vector<double> mids(nSeg);
    std::vector<bool> segPos(nSeg);
    for (std::size_t i = 0; i < nSeg; ++i) {
        mids[i] = 0.5 * (points[i] + points[i + 1]);
        segPos[i] = value_at(mids[i]) >= 0.0;
    }

    std::vector<double> crossings;
    for (std::size_t i = 0; i + 1 < nSeg; ++i) {
        if (segPos[i] == segPos[i + 1]) continue;
        double lo = mids[i], hi = mids[i + 1];
        bool loPos = segPos[i];
        for (int it = 0; it < 200; ++it) {
            double tl = theta_to_t(lo, cScale), th = theta_to_t(hi, cScale);
            if (hi - lo < 1e-15) break;
            if (std::isfinite(th) && th - tl <= 1e-12 * std::max(1.0, tl)) break;
            double mid = 0.5 * (lo + hi);
            if ((value_at(mid) >= 0.0) == loPos)
                lo = mid;
            else
                hi = mid;
        }
        crossings.push_back(0.5 * (lo + hi));
    }

    // Walk the alternating signs and emit the nonnegative stretches in t.
    std::vector<Interval> pieces;
    double left = 0.0;
    bool pos = segPos[0];
    for (double x : crossings) {
        if (pos) pieces.push_back({theta_to_t(left, cScale), theta_to_t(x, cScale)});
        left = x;
        pos = !pos;
    }
    if (pos) pieces.push_back({theta_to_t(left, cScale), inf});
    return IntervalUnion(std::move(pieces));
}

} // namespace detail

/// Truncation region of the F slice: intersection over all selection
/// inequalities of their positive level sets along y(t).
inline IntervalUnion f_slice_region(const SelectionEvent& event, const FSlice& slice,
                                    RegionDiagnostics* diag = nullptr) {
    std::vector<double> gridTheta(detail::kThetaGridPoints + 1);
    for (int i = 0; i <= detail::kThetaGridPoints; ++i)
        gridTheta[static_cast<std::size_t>(i)] =
            M_PI_2 * static_cast<double>(i) / detail::kThetaGridPoints;

    IntervalUnion region = IntervalUnion::half_line();
    int violator = -1;
    for (std::size_t i = 0; i < event.inequalities.size(); ++i) {
        FConstraintCoeffs c = f_constraint_coeffs(event.inequalities[i], slice);
        IntervalUnion piece = detail::f_constraint_region(c, slice.r, slice.c, gridTheta);
        if (violator < 0 && !piece.contains(slice.observed)) violator = static_cast<int>(i);
        region = intersect(region, piece);
        if (region.is_empty()) break;
    }
    detail::finalize_region(region, slice.observed, violator, diag, "f_slice_region");
    return region;
}

} // namespace stepinf

#endif
