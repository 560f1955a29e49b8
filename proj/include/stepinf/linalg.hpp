#ifndef STEPINF_LINALG_HPP
#define STEPINF_LINALG_HPP

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <utility>
#include <vector>

#include "stepinf/errors.hpp"

namespace stepinf {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Relative singular-value cutoff for numerical rank decisions.
inline constexpr double kRankTol = 1e-10;

/// Orthonormal basis for a column space, kept instead of the n x n
/// projection it induces. `group` records which design group it came from
/// (-1 when not applicable).
struct OrthoBasis {
    Matrix vectors;  // n x r, orthonormal columns
    int group = -1;

    Eigen::Index rank() const { return vectors.cols(); }
    Eigen::Index rows() const { return vectors.rows(); }
};

/// Design matrix with an a-priori partition of columns into groups.
/// Group labels are the indices 0..G-1 of `groups`.
struct GroupedDesign {
    Matrix X;
    std::vector<std::vector<Eigen::Index>> groups;

    GroupedDesign() = default;
    GroupedDesign(Matrix X_, std::vector<std::vector<Eigen::Index>> groups_)
        : X(std::move(X_)), groups(std::move(groups_)) {
        validate();
    }

    Eigen::Index n() const { return X.rows(); }
    Eigen::Index p() const { return X.cols(); }
    int num_groups() const { return static_cast<int>(groups.size()); }

    Matrix group_cols(int g) const {
        const auto& idx = groups.at(static_cast<std::size_t>(g));
        Matrix out(X.rows(), static_cast<Eigen::Index>(idx.size()));
        for (std::size_t j = 0; j < idx.size(); ++j) out.col(static_cast<Eigen::Index>(j)) = X.col(idx[j]);
        return out;
    }

    /// Columns of several groups side by side, in the order given.
    Matrix cols_of(const std::vector<int>& gs) const {
        Eigen::Index total = 0;
        for (int g : gs) total += static_cast<Eigen::Index>(groups.at(static_cast<std::size_t>(g)).size());
        Matrix out(X.rows(), total);
        Eigen::Index at = 0;
        for (int g : gs)
            for (Eigen::Index j : groups[static_cast<std::size_t>(g)]) out.col(at++) = X.col(j);
        return out;
    }

    void validate() const {
        if (X.rows() < 1 || X.cols() < 1) throw InvalidInput("GroupedDesign: empty matrix");
        if (groups.empty()) throw InvalidInput("GroupedDesign: no groups");
        if (!X.allFinite()) throw InvalidInput("GroupedDesign: non-finite entries");
        std::vector<int> seen(static_cast<std::size_t>(X.cols()), 0);
        for (const auto& g : groups) {
            if (g.empty()) throw InvalidInput("GroupedDesign: empty group");
            for (Eigen::Index j : g) {
                if (j < 0 || j >= X.cols()) throw InvalidInput("GroupedDesign: column index out of range");
                ++seen[static_cast<std::size_t>(j)];
            }
        }
        for (int c : seen)
            if (c != 1) throw InvalidInput("GroupedDesign: groups must partition the columns");
    }
};

/// Orthonormal basis of the column space of `cols`, via SVD. Directions
/// with singular value <= tol * s_max are treated as numerically null.
/// An all-zero input gives a rank-0 basis. `sv_floor` is an absolute
/// cutoff on top of the relative one: a matrix that has been residualized
/// down to rounding noise is all "largest singular value" by the relative
/// test alone, so callers that orthogonalize repeatedly pass a floor tied
/// to the original column scale.
inline OrthoBasis orthonormal_basis(const Matrix& cols, double tol = kRankTol, int group = -1,
                                    double sv_floor = 0.0) {
    if (cols.cols() < 1) throw InvalidInput("orthonormal_basis: k >= 1 required");
    if (!(tol > 0.0)) throw InvalidInput("orthonormal_basis: tol > 0 required");
    if (!cols.allFinite()) throw InvalidInput("orthonormal_basis: non-finite entries");

    Eigen::JacobiSVD<Matrix> svd(cols, Eigen::ComputeThinU);
    const auto& sv = svd.singularValues();
    double smax = sv.size() > 0 ? sv(0) : 0.0;
    double cut = std::max(tol * smax, sv_floor);
    Eigen::Index r = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i)
        if (sv(i) > cut && sv(i) > 0.0) ++r;
    OrthoBasis basis;
    basis.vectors = svd.matrixU().leftCols(r);
    basis.group = group;
    return basis;
}

/// Applies the projection U U^T v without forming it.
inline Vector project(const OrthoBasis& basis, const Vector& v) {
    if (basis.rank() == 0) return Vector::Zero(v.size());
    if (basis.rows() != v.size()) throw InvalidInput("project: dimension mismatch");
    return basis.vectors * (basis.vectors.transpose() * v);
}

/// Removes the span of `basis` from every column: (I - U U^T) Xg.
inline Matrix residualize_group(const Matrix& Xg, const OrthoBasis& basis) {
    if (basis.rank() == 0) return Xg;
    if (basis.rows() != Xg.rows()) throw InvalidInput("residualize_group: dimension mismatch");
    return Xg - basis.vectors * (basis.vectors.transpose() * Xg);
}

} // namespace stepinf

#endif
