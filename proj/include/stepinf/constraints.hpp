#ifndef STEPINF_CONSTRAINTS_HPP
#define STEPINF_CONSTRAINTS_HPP

#include <vector>

#include "stepinf/linalg.hpp"

namespace stepinf {

/// One selection constraint y^T Q y + a^T y + b >= 0, with Q stored in
/// low-rank form:
///
///   Q = identity * I + Bpos Bpos^T - Bneg Bneg^T
///
/// Bpos/Bneg hold mutually orthogonal columns whose norms carry the
/// eigenvalue weights, so ||Bpos^T y||^2 evaluates the weighted part with a
/// few inner products. The identity coefficient appears only in the
/// multiplicative model-size comparisons, where the residual sum of squares
/// brings in a full-rank term; it is zero for all step comparisons.
struct QuadraticInequality {
    enum class Kind { step_compare, criterion_decrease, criterion_increase, stop_compare };

    double identity = 0.0;
    Matrix pos;      // n x r+, orthogonal (scaled) columns; may be 0 x 0
    Matrix neg;      // n x r-
    Vector linear;   // size 0 means zero linear term
    double constant = 0.0;

    Kind kind = Kind::step_compare;
    int step = 0;      // 1-based step the comparison belongs to
    int loser = -1;    // group compared against, where applicable
};

/// Evaluates the constraint function at v.
inline double evaluate_inequality(const QuadraticInequality& q, const Vector& v) {
    double val = q.constant;
    if (q.identity != 0.0) val += q.identity * v.squaredNorm();
    if (q.pos.cols() > 0) {
        if (q.pos.rows() != v.size()) throw InvalidInput("evaluate_inequality: dimension mismatch");
        val += (q.pos.transpose() * v).squaredNorm();
    }
    if (q.neg.cols() > 0) {
        if (q.neg.rows() != v.size()) throw InvalidInput("evaluate_inequality: dimension mismatch");
        val -= (q.neg.transpose() * v).squaredNorm();
    }
    if (q.linear.size() > 0) {
        if (q.linear.size() != v.size()) throw InvalidInput("evaluate_inequality: dimension mismatch");
        val += q.linear.dot(v);
    }
    return val;
}

} // namespace stepinf

#endif
