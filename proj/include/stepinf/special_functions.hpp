#ifndef STEPINF_SPECIAL_FUNCTIONS_HPP
#define STEPINF_SPECIAL_FUNCTIONS_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "stepinf/errors.hpp"
#include "stepinf/intervals.hpp"

namespace stepinf {

namespace detail {

inline constexpr int kMaxIter = 1000;
inline constexpr double kEps = 1e-16;
inline constexpr double kTiny = 1e-300;

/// log(1 - exp(x)) for x <= 0, stable near both ends.
inline double log1mexp(double x) {
    if (x >= 0.0) return -std::numeric_limits<double>::infinity();
    if (x > -0.6931471805599453)  // -log 2
        return std::log(-std::expm1(x));
    return std::log1p(-std::exp(x));
}

/// Series for the regularized lower incomplete gamma P(a, x), x < a+1.
inline double gamma_p_series(double a, double x) {
    double ap = a;
    double sum = 1.0 / a;
    double del = sum;
    for (int i = 0; i < kMaxIter; ++i) {
        ap += 1.0;
        del *= x / ap;
        sum += del;
        if (std::fabs(del) < std::fabs(sum) * kEps)
            return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
    }
    throw NumericalError("gamma_p_series: no convergence");
}

/// Modified-Lentz continued fraction for Q(a, x) without the exponential
/// prefactor; valid for x >= a+1. Returns the CF value.
inline double gamma_q_cf(double a, double x) {
    double b = x + 1.0 - a;
    double c = 1.0 / kTiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i <= kMaxIter; ++i) {
        double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
        b += 2.0;
        d = an * d + b;
        if (std::fabs(d) < kTiny) d = kTiny;
        c = b + an / c;
        if (std::fabs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        double delta = d * c;
        h *= delta;
        if (std::fabs(delta - 1.0) < kEps) return h;
    }
    throw NumericalError("gamma_q_cf: no convergence");
}

/// Continued fraction for the regularized incomplete beta (Lentz).
inline double beta_cf(double a, double b, double x) {
    double qab = a + b, qap = a + 1.0, qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < kTiny) d = kTiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxIter; ++m) {
        double m2 = 2.0 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        double delta = d * c;
        h *= delta;
        if (std::fabs(delta - 1.0) < kEps) return h;
    }
    throw NumericalError("beta_cf: no convergence");
}

} // namespace detail

/// Regularized upper incomplete gamma Q(a, x) = Gamma(a, x) / Gamma(a).
inline double gamma_q(double a, double x) {
    if (!(a > 0.0) || x < 0.0) throw InvalidInput("gamma_q: need a > 0, x >= 0");
    if (x == 0.0) return 1.0;
    if (x < a + 1.0) return 1.0 - detail::gamma_p_series(a, x);
    return std::exp(-x + a * std::log(x) - std::lgamma(a)) * detail::gamma_q_cf(a, x);
}

inline double gamma_p(double a, double x) { return 1.0 - gamma_q(a, x); }

/// log Q(a, x), usable deep in the tail where Q underflows.
inline double log_gamma_q(double a, double x) {
    if (!(a > 0.0) || x < 0.0) throw InvalidInput("log_gamma_q: need a > 0, x >= 0");
    if (x == 0.0) return 0.0;
    if (x < a + 1.0) return std::log1p(-detail::gamma_p_series(a, x));
    return -x + a * std::log(x) - std::lgamma(a) + std::log(detail::gamma_q_cf(a, x));
}

/// Regularized incomplete beta I_x(a, b).
inline double incbeta(double a, double b, double x) {
    if (!(a > 0.0) || !(b > 0.0) || x < 0.0 || x > 1.0)
        throw InvalidInput("incbeta: domain");
    if (x == 0.0) return 0.0;
    if (x == 1.0) return 1.0;
    double logbt = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                   a * std::log(x) + b * std::log1p(-x);
    if (x < (a + 1.0) / (a + b + 2.0))
        return std::exp(logbt) * detail::beta_cf(a, b, x) / a;
    return 1.0 - std::exp(logbt) * detail::beta_cf(b, a, 1.0 - x) / b;
}

/// log I_x(a, b); accurate when the direct branch underflows.
inline double log_incbeta(double a, double b, double x) {
    if (!(a > 0.0) || !(b > 0.0) || x < 0.0 || x > 1.0)
        throw InvalidInput("log_incbeta: domain");
    if (x == 0.0) return -std::numeric_limits<double>::infinity();
    if (x == 1.0) return 0.0;
    double logbt = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                   a * std::log(x) + b * std::log1p(-x);
    if (x < (a + 1.0) / (a + b + 2.0))
        return logbt + std::log(detail::beta_cf(a, b, x)) - std::log(a);
    double logOther = logbt + std::log(detail::beta_cf(b, a, 1.0 - x)) - std::log(b);
    return detail::log1mexp(logOther);
}

/// Survival function of the central chi distribution with r degrees of
/// freedom: P(chi_r > t) = Q(r/2, t^2/2).
inline double chi_sf(int r, double t) {
    if (r < 1) throw InvalidInput("chi_sf: r >= 1");
    if (!(t >= 0.0)) throw InvalidInput("chi_sf: t >= 0");
    return gamma_q(0.5 * r, 0.5 * t * t);
}

inline double log_chi_sf(int r, double t) {
    if (r < 1) throw InvalidInput("log_chi_sf: r >= 1");
    if (!(t >= 0.0)) throw InvalidInput("log_chi_sf: t >= 0");
    return log_gamma_q(0.5 * r, 0.5 * t * t);
}

/// Survival function of the central F distribution:
/// P(F_{d1,d2} > t) = I_{d2/(d2 + d1 t)}(d2/2, d1/2).
inline double f_sf(int d1, int d2, double t) {
    if (d1 < 1 || d2 < 1) throw InvalidInput("f_sf: d1, d2 >= 1");
    if (!(t >= 0.0)) throw InvalidInput("f_sf: t >= 0");
    if (std::isinf(t)) return 0.0;
    double x = d2 / (d2 + d1 * t);
    return incbeta(0.5 * d2, 0.5 * d1, x);
}

inline double log_f_sf(int d1, int d2, double t) {
    if (d1 < 1 || d2 < 1) throw InvalidInput("log_f_sf: d1, d2 >= 1");
    if (!(t >= 0.0)) throw InvalidInput("log_f_sf: t >= 0");
    if (std::isinf(t)) return -std::numeric_limits<double>::infinity();
    double x = d2 / (d2 + d1 * t);
    return log_incbeta(0.5 * d2, 0.5 * d1, x);
}

/// A chi_r statistic truncated to `region`, with the observed value.
struct TruncatedChiSpec {
    int dof = 1;
    IntervalUnion region;
    double observed = 0.0;
};

/// An F_{d1,d2} statistic truncated to `region`, with the observed value.
struct TruncatedFSpec {
    int d1 = 1;
    int d2 = 1;
    IntervalUnion region;
    double observed = 0.0;
};

namespace detail {

template <typename Sf, typename LogSf>
double truncated_survival(const Sf& sf, const LogSf& log_sf,
                          const IntervalUnion& region, double observed) {
    if (region.is_empty()) throw NumericalError("truncated_survival: empty region");

    auto interval_mass = [&](double lo, double hi) {
        double slo = sf(lo);
        double shi = std::isinf(hi) ? 0.0 : sf(hi);
        return std::max(slo - shi, 0.0);
    };

    std::vector<double> denom, numer;
    for (const auto& iv : region.intervals()) {
        denom.push_back(interval_mass(iv.lo, iv.hi));
        if (iv.hi <= observed)
            numer.push_back(0.0);
        else
            numer.push_back(interval_mass(std::max(iv.lo, observed), iv.hi));
    }
    // Smallest masses first keeps the accumulation stable.
    auto accumulate_sorted = [](std::vector<double> v) {
        std::sort(v.begin(), v.end());
        double s = 0.0;
        for (double x : v) s += x;
        return s;
    };
    double den = accumulate_sorted(denom);
    double num = accumulate_sorted(numer);

    if (den < kTiny) {
        // Total mass underflowed; redo the interval differences in log space.
        auto log_mass = [&](double lo, double hi) {
            double llo = log_sf(lo);
            if (std::isinf(hi)) return llo;
            return llo + log1mexp(log_sf(hi) - llo);
        };
        double lden = -std::numeric_limits<double>::infinity();
        double lnum = -std::numeric_limits<double>::infinity();
        auto log_add = [](double a, double b) {
            if (std::isinf(a) && a < 0) return b;
            if (std::isinf(b) && b < 0) return a;
            double m = std::max(a, b);
            return m + std::log(std::exp(a - m) + std::exp(b - m));
        };
        for (const auto& iv : region.intervals()) {
            lden = log_add(lden, log_mass(iv.lo, iv.hi));
            if (iv.hi > observed)
                lnum = log_add(lnum, log_mass(std::max(iv.lo, observed), iv.hi));
        }
        if (std::isinf(lden))
            throw NumericalError("truncated_survival: zero-mass region");
        return std::clamp(std::exp(lnum - lden), 0.0, 1.0);
    }
    return std::clamp(num / den, 0.0, 1.0);
}

} // namespace detail

/// P(T > observed | T in region) for a truncated chi_r law.
inline double truncated_sf(const TruncatedChiSpec& spec) {
    if (spec.dof < 1) throw InvalidInput("truncated_sf: dof >= 1");
    return detail::truncated_survival(
        [&](double t) { return chi_sf(spec.dof, t); },
        [&](double t) { return log_chi_sf(spec.dof, t); }, spec.region, spec.observed);
}

/// P(T > observed | T in region) for a truncated F_{d1,d2} law.
inline double truncated_sf(const TruncatedFSpec& spec) {
    if (spec.d1 < 1 || spec.d2 < 1) throw InvalidInput("truncated_sf: d1, d2 >= 1");
    return detail::truncated_survival(
        [&](double t) { return f_sf(spec.d1, spec.d2, t); },
        [&](double t) { return log_f_sf(spec.d1, spec.d2, t); }, spec.region, spec.observed);
}

/// High-probability bound on the largest of G null chi^2_k statistics:
/// k + 2 sqrt(k x) + 2 x with x = -log(1 - (1 - eps)^(1/G)).
inline double screen_bound(int G, int k, double eps) {
    if (G < 1 || k < 1 || !(eps > 0.0) || !(eps < 1.0))
        throw InvalidInput("screen_bound: G >= 1, k >= 1, 0 < eps < 1");
    double x = -std::log(-std::expm1(std::log1p(-eps) / G));
    return k + 2.0 * std::sqrt(k * x) + 2.0 * x;
}

} // namespace stepinf

#endif
