#ifndef STEPINF_INTERVALS_HPP
#define STEPINF_INTERVALS_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <vector>

#include "stepinf/errors.hpp"

namespace stepinf {

inline constexpr double kEndpointMergeTol = 1e-9;
inline constexpr double kDegenerateWidthTol = 1e-12;

/// One closed interval [lo, hi] on the half-line, hi may be +inf.
struct Interval {
    double lo = 0.0;
    double hi = 0.0;
};

/// Finite disjoint union of closed intervals in [0, inf), sorted ascending.
/// Gaps narrower than kEndpointMergeTol are fused and intervals narrower
/// than kDegenerateWidthTol are dropped on construction; the intersection
/// of truncation-region pieces otherwise accumulates root-finder noise.
class IntervalUnion {
public:
    IntervalUnion() = default;

    /// Normalizes arbitrary pieces: clips to [0, inf), sorts, merges.
    explicit IntervalUnion(std::vector<Interval> pieces) {
        for (auto& iv : pieces) {
            if (std::isnan(iv.lo) || std::isnan(iv.hi))
                throw InvalidInput("IntervalUnion: NaN endpoint");
            iv.lo = std::max(iv.lo, 0.0);
        }
        std::erase_if(pieces, [](const Interval& iv) { return !(iv.lo <= iv.hi); });
        std::sort(pieces.begin(), pieces.end(),
                  [](const Interval& a, const Interval& b) { return a.lo < b.lo; });
        for (const auto& iv : pieces) {
            if (!intervals_.empty() && iv.lo <= intervals_.back().hi + kEndpointMergeTol)
                intervals_.back().hi = std::max(intervals_.back().hi, iv.hi);
            else
                intervals_.push_back(iv);
        }
        std::erase_if(intervals_, [](const Interval& iv) {
            return std::isfinite(iv.hi) && iv.hi - iv.lo <= kDegenerateWidthTol;
        });
    }

    static IntervalUnion empty() { return IntervalUnion(); }

    static IntervalUnion half_line() {
        return IntervalUnion({{0.0, std::numeric_limits<double>::infinity()}});
    }

    static IntervalUnion single(double lo, double hi) { return IntervalUnion({{lo, hi}}); }

    const std::vector<Interval>& intervals() const { return intervals_; }
    bool is_empty() const { return intervals_.empty(); }
    std::size_t size() const { return intervals_.size(); }

    bool contains(double t) const {
        for (const auto& iv : intervals_)
            if (t >= iv.lo && t <= iv.hi) return true;
        return false;
    }

    /// Distance from t to the nearest endpoint of any interval.
    double endpoint_distance(double t) const {
        double d = std::numeric_limits<double>::infinity();
        for (const auto& iv : intervals_) {
            d = std::min(d, std::fabs(t - iv.lo));
            if (std::isfinite(iv.hi)) d = std::min(d, std::fabs(t - iv.hi));
        }
        return d;
    }

    /// Stretches the nearest endpoint so that t becomes a member.
    /// Used to absorb root-refinement noise at the observed statistic.
    void widen_to_include(double t) {
        if (contains(t) || intervals_.empty()) return;
        std::size_t best = 0;
        double bestDist = std::numeric_limits<double>::infinity();
        bool bestLow = true;
        for (std::size_t i = 0; i < intervals_.size(); ++i) {
            double dl = std::fabs(t - intervals_[i].lo);
            if (dl < bestDist) { bestDist = dl; best = i; bestLow = true; }
            if (std::isfinite(intervals_[i].hi)) {
                double dh = std::fabs(t - intervals_[i].hi);
                if (dh < bestDist) { bestDist = dh; best = i; bestLow = false; }
            }
        }
        if (bestLow)
            intervals_[best].lo = std::min(intervals_[best].lo, std::max(t, 0.0));
        else
            intervals_[best].hi = std::max(intervals_[best].hi, t);
    }

    friend bool operator==(const IntervalUnion& a, const IntervalUnion& b) {
        if (a.intervals_.size() != b.intervals_.size()) return false;
        for (std::size_t i = 0; i < a.intervals_.size(); ++i)
            if (a.intervals_[i].lo != b.intervals_[i].lo || a.intervals_[i].hi != b.intervals_[i].hi)
                return false;
        return true;
    }

private:
    std::vector<Interval> intervals_;
};

/// Exact set intersection via a linear merge over the sorted endpoint lists.
inline IntervalUnion intersect(const IntervalUnion& a, const IntervalUnion& b) {
    std::vector<Interval> out;
    const auto& xs = a.intervals();
    const auto& ys = b.intervals();
    std::size_t i = 0, j = 0;
    while (i < xs.size() && j < ys.size()) {
        double lo = std::max(xs[i].lo, ys[j].lo);
        double hi = std::min(xs[i].hi, ys[j].hi);
        if (lo <= hi) out.push_back({lo, hi});
        if (xs[i].hi < ys[j].hi)
            ++i;
        else
            ++j;
    }
    return IntervalUnion(std::move(out));
}

inline std::ostream& operator<<(std::ostream& os, const IntervalUnion& u) {
    if (u.is_empty()) return os << "{}";
    for (std::size_t i = 0; i < u.intervals().size(); ++i) {
        if (i) os << " u ";
        os << "[" << u.intervals()[i].lo << ", " << u.intervals()[i].hi << "]";
    }
    return os;
}

} // namespace stepinf

#endif
