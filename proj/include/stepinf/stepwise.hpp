#ifndef STEPINF_STEPWISE_HPP
#define STEPINF_STEPWISE_HPP

#include <cmath>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "stepinf/constraints.hpp"
#include "stepinf/linalg.hpp"

namespace stepinf {

/// Stopping rule for forward stepwise.
enum class StopRule { fixed_steps, aic_early_stop };

struct StepwiseConfig {
    double k = 2.0;                  // complexity penalty: 2 AIC, log n BIC, 2 log p RIC
    std::optional<double> sigma;     // known noise scale; nullopt = unknown
    int max_steps = 1;
    StopRule stop = StopRule::fixed_steps;
    int s_plus = 1;                  // consecutive criterion increases that trigger the stop
    // Off-by-one convention at the stop: false returns the model from before
    // the increase run began; true keeps the examined increasing steps in
    // the model, which is how the published simulation counts model size.
    bool keep_stop_step = false;

    void validate(int G) const {
        if (max_steps < 1) throw InvalidInput("StepwiseConfig: max_steps >= 1");
        if (max_steps > G) throw InvalidInput("StepwiseConfig: max_steps exceeds group count");
        if (k < 0.0) throw InvalidInput("StepwiseConfig: k >= 0");
        if (sigma && !(*sigma > 0.0)) throw InvalidInput("StepwiseConfig: sigma > 0");
        if (stop == StopRule::aic_early_stop && s_plus < 1)
            throw InvalidInput("StepwiseConfig: s_plus >= 1");
    }
};

/// What the procedure conditioned on: the examined winners in order, the
/// observed criterion increase pattern, and whether the stop triggered.
/// Two outcomes are the same selection event iff their signatures match.
struct SelectionSignature {
    std::vector<int> winners;        // groups added, in order (includes rolled-back ones)
    std::vector<std::uint8_t> increases;  // per added step: criterion went up
    bool stopped = false;
    int active_count = 0;

    friend bool operator==(const SelectionSignature&, const SelectionSignature&) = default;
};

/// The selection event: ordered active set plus every quadratic inequality
/// whose intersection carves out { y : M(y) = A }.
struct SelectionEvent {
    std::vector<int> active;              // final model, ordered by entry
    std::vector<OrthoBasis> step_bases;   // winner's orthogonalized basis, per added step
    std::vector<int> step_ranks;          // rank of each added winner
    std::vector<QuadraticInequality> inequalities;
    std::vector<std::pair<int, int>> skipped;  // (step, group) dropped at rank 0
    std::vector<double> criterion;        // c_0 .. c_last examined
    SelectionSignature signature;
    bool stopped_early = false;
    Eigen::Index n = 0;
};

struct StepwiseFit {
    GroupedDesign design;
    Vector y;
    StepwiseConfig config;
    SelectionEvent event;
    std::vector<OrthoBasis> fitted_bases;  // basis of (I - P_{A\g}) X_g per active g
    std::vector<Eigen::Index> active_cols; // columns of X_A in model order
    Vector beta;                           // least-squares coefficients on active_cols
    Vector residual;                       // y - X_A beta
};

namespace detail {

struct Candidate {
    int group = -1;
    OrthoBasis basis;      // orthogonalized span at this step
    double improvement = 0.0;  // || U^T r ||^2
};

/// Winner at one step. Known sigma maximizes improvement - k sigma^2 rank;
/// unknown sigma minimizes (rss - improvement) * exp(k rank / n). Ties go to
/// the smallest group label, which the ascending scan gives for free.
inline int pick_winner(const std::vector<Candidate>& cands, const StepwiseConfig& cfg,
                       double rss, Eigen::Index n) {
    int best = -1;
    double bestScore = 0.0;
    for (std::size_t i = 0; i < cands.size(); ++i) {
        const auto& c = cands[i];
        double score;
        if (cfg.sigma) {
            double s2 = (*cfg.sigma) * (*cfg.sigma);
            score = c.improvement - cfg.k * s2 * static_cast<double>(c.basis.rank());
        } else {
            score = -(rss - c.improvement) *
                    std::exp(cfg.k * static_cast<double>(c.basis.rank()) / static_cast<double>(n));
        }
        if (best < 0 || score > bestScore) {
            best = static_cast<int>(i);
            bestScore = score;
        }
    }
    return best;
}

/// Horizontal concatenation of basis blocks, scaling each block's columns
/// by sqrt(weight). Blocks must be mutually orthogonal for the low-rank
/// quadratic semantics to hold; callers guarantee that.
inline Matrix weighted_concat(const std::vector<std::pair<const Matrix*, double>>& blocks,
                              Eigen::Index n) {
    Eigen::Index total = 0;
    for (const auto& [m, w] : blocks)
        if (w != 0.0) total += m->cols();
    Matrix out(n, total);
    Eigen::Index at = 0;
    for (const auto& [m, w] : blocks) {
        if (w == 0.0) continue;
        out.middleCols(at, m->cols()) = std::sqrt(w) * (*m);
        at += m->cols();
    }
    return out;
}

} // namespace detail

/// Index of the model picked by the early-stopping rule from a criterion
/// trace c_0, c_1, ..., and the given s_plus: the first s followed by s_plus
/// consecutive increases. Returns trace.size() - 1 (all steps kept) when the
/// rule never triggers.
inline int early_stop_index(const std::vector<double>& criterion, int s_plus) {
    int run = 0;
    for (std::size_t j = 1; j < criterion.size(); ++j) {
        run = criterion[j] > criterion[j - 1] ? run + 1 : 0;
        if (run == s_plus) return static_cast<int>(j) - s_plus;
    }
    return static_cast<int>(criterion.size()) - 1;
}

/// Grouped forward stepwise. Picks at each step the group with the best
/// penalized fit on the current residual, orthogonalizes everything that
/// remains against the winner, and records the losing comparisons (plus the
/// stopping comparisons when the AIC rule is active) as quadratic
/// inequalities in y.
///
/// `record_event` skips the inequality bookkeeping; the selection replay in
/// the membership tests only needs the signature.
inline StepwiseFit forward_stepwise(const GroupedDesign& design, const Vector& y,
                                    const StepwiseConfig& cfg, bool record_event = true) {
    const int G = design.num_groups();
    cfg.validate(G);
    const Eigen::Index n = design.n();
    if (y.size() != n) throw InvalidInput("forward_stepwise: y dimension mismatch");
    if (!y.allFinite()) throw InvalidInput("forward_stepwise: non-finite y");
    if (y.maxCoeff() == y.minCoeff()) throw InvalidInput("forward_stepwise: zero-variance y");

    StepwiseFit fit;
    fit.design = design;
    fit.y = y;
    fit.config = cfg;
    fit.event.n = n;

    const bool early = cfg.stop == StopRule::aic_early_stop;
    const double nd = static_cast<double>(n);
    const double sigma2 = cfg.sigma ? (*cfg.sigma) * (*cfg.sigma) : 0.0;

    // Working copies, orthogonalized in place as winners accumulate. Rank
    // decisions stay anchored to each group's original scale.
    std::vector<Matrix> work(static_cast<std::size_t>(G));
    std::vector<bool> alive(static_cast<std::size_t>(G), true);
    std::vector<double> scale(static_cast<std::size_t>(G));
    for (int g = 0; g < G; ++g) {
        work[static_cast<std::size_t>(g)] = design.group_cols(g);
        scale[static_cast<std::size_t>(g)] = work[static_cast<std::size_t>(g)].norm();
    }

    Vector r = y;
    double rss = y.squaredNorm();
    double edf = 0.0;

    auto criterion_value = [&](double rssVal, double edfVal) {
        if (cfg.sigma) return rssVal / sigma2 + cfg.k * edfVal;
        return nd * std::log(std::max(rssVal, 1e-300)) + cfg.k * (1.0 + edfVal);
    };
    fit.event.criterion.push_back(criterion_value(rss, edf));
    fit.event.step_bases.reserve(static_cast<std::size_t>(cfg.max_steps));

    // Winners' bases so far; needed for the full-rank part of the
    // multiplicative comparisons.
    std::vector<const Matrix*> prior;
    std::vector<int> prior_ranks;

    int run = 0;  // consecutive criterion increases seen among added steps

    for (int s = 1; s <= cfg.max_steps; ++s) {
        std::vector<detail::Candidate> cands;
        for (int g = 0; g < G; ++g) {
            if (!alive[static_cast<std::size_t>(g)]) continue;
            detail::Candidate c;
            c.group = g;
            c.basis = orthonormal_basis(work[static_cast<std::size_t>(g)], kRankTol, g,
                                        kRankTol * scale[static_cast<std::size_t>(g)]);
            if (c.basis.rank() == 0) {
                alive[static_cast<std::size_t>(g)] = false;
                fit.event.skipped.emplace_back(s, g);
                continue;
            }
            c.improvement = (c.basis.vectors.transpose() * r).squaredNorm();
            cands.push_back(std::move(c));
        }
        if (cands.empty()) break;

        const int wi = detail::pick_winner(cands, cfg, rss, n);
        const auto& winner = cands[static_cast<std::size_t>(wi)];
        const double dW = static_cast<double>(winner.basis.rank());
        const double rssAfter = rss - winner.improvement;
        const double edfAfter = edf + dW;
        const double cNew = criterion_value(rssAfter, edfAfter);
        const double cPrev = fit.event.criterion.back();
        const bool increases = cNew > cPrev;

        const bool stop_trigger = early && increases && run == cfg.s_plus - 1;
        if (stop_trigger && !cfg.keep_stop_step) {
            // The run of s_plus increases completes here; the model rolls
            // back to the step before the run began. The event keeps one
            // stop inequality per surviving candidate: every one of them
            // would have raised the criterion.
            fit.event.criterion.push_back(cNew);
            if (record_event) {
                for (const auto& c : cands) {
                    QuadraticInequality q;
                    q.kind = QuadraticInequality::Kind::stop_compare;
                    q.step = s;
                    q.loser = c.group;
                    double dC = static_cast<double>(c.basis.rank());
                    if (cfg.sigma) {
                        // k sigma^2 d_g - ||U_g^T y||^2 >= 0
                        q.neg = c.basis.vectors;
                        q.constant = cfg.k * sigma2 * dC;
                    } else {
                        // rss_g e^{k(edf+d_g)/n} - rss e^{k edf/n} >= 0, rss_g = rss - imp_g
                        double bNew = std::exp(cfg.k * (edf + dC) / nd);
                        double bOld = std::exp(cfg.k * edf / nd);
                        double alpha = bNew - bOld;  // > 0
                        q.identity = alpha;
                        std::vector<std::pair<const Matrix*, double>> negBlocks;
                        negBlocks.emplace_back(&c.basis.vectors, bNew);
                        for (const auto* pm : prior) negBlocks.emplace_back(pm, alpha);
                        q.neg = detail::weighted_concat(negBlocks, n);
                    }
                    fit.event.inequalities.push_back(std::move(q));
                }
            }
            fit.event.stopped_early = true;
            break;
        }

        // Winner enters; record the losing comparisons.
        if (record_event) {
            for (const auto& c : cands) {
                if (c.group == winner.group) continue;
                QuadraticInequality q;
                q.kind = QuadraticInequality::Kind::step_compare;
                q.step = s;
                q.loser = c.group;
                double dL = static_cast<double>(c.basis.rank());
                if (cfg.sigma) {
                    // ||U_w^T y||^2 - ||U_l^T y||^2 - k sigma^2 (d_w - d_l) >= 0
                    q.pos = winner.basis.vectors;
                    q.neg = c.basis.vectors;
                    q.constant = -cfg.k * sigma2 * (dW - dL);
                } else {
                    // rss_l e^{k d_l / n} - rss_w e^{k d_w / n} >= 0 over this
                    // step's residual space P_s
                    double bL = std::exp(cfg.k * dL / nd);
                    double bW = std::exp(cfg.k * dW / nd);
                    double alpha = bL - bW;
                    q.identity = alpha;
                    std::vector<std::pair<const Matrix*, double>> posBlocks, negBlocks;
                    posBlocks.emplace_back(&winner.basis.vectors, bW);
                    negBlocks.emplace_back(&c.basis.vectors, bL);
                    for (const auto* pm : prior)
                        (alpha > 0.0 ? negBlocks : posBlocks).emplace_back(pm, std::fabs(alpha));
                    q.pos = detail::weighted_concat(posBlocks, n);
                    q.neg = detail::weighted_concat(negBlocks, n);
                }
                fit.event.inequalities.push_back(std::move(q));
            }
            if (early) {
                QuadraticInequality q;
                q.kind = increases ? QuadraticInequality::Kind::criterion_increase
                                   : QuadraticInequality::Kind::criterion_decrease;
                q.step = s;
                if (cfg.sigma) {
                    // decrease: ||U_w^T y||^2 - k sigma^2 d_w >= 0; increase flips it
                    if (increases) {
                        q.neg = winner.basis.vectors;
                        q.constant = cfg.k * sigma2 * dW;
                    } else {
                        q.pos = winner.basis.vectors;
                        q.constant = -cfg.k * sigma2 * dW;
                    }
                } else {
                    double bNew = std::exp(cfg.k * edfAfter / nd);
                    double bOld = std::exp(cfg.k * edf / nd);
                    // increase: rss_after bNew - rss bOld >= 0 with
                    // rss_after = ||y||^2 - sum_{i<=s} ||U_i^T y||^2
                    double alpha = increases ? bNew - bOld : bOld - bNew;
                    q.identity = alpha;
                    std::vector<std::pair<const Matrix*, double>> blocksBig;
                    blocksBig.emplace_back(&winner.basis.vectors, bNew);
                    for (const auto* pm : prior) blocksBig.emplace_back(pm, std::fabs(alpha));
                    Matrix big = detail::weighted_concat(blocksBig, n);
                    if (increases)
                        q.neg = std::move(big);
                    else
                        q.pos = std::move(big);
                }
                fit.event.inequalities.push_back(std::move(q));
            }
        }

        // Orthogonalize the survivors and the residual against the winner.
        r -= winner.basis.vectors * (winner.basis.vectors.transpose() * r);
        for (int g = 0; g < G; ++g) {
            if (!alive[static_cast<std::size_t>(g)] || g == winner.group) continue;
            auto& W = work[static_cast<std::size_t>(g)];
            W -= winner.basis.vectors * (winner.basis.vectors.transpose() * W);
        }
        alive[static_cast<std::size_t>(winner.group)] = false;

        fit.event.signature.winners.push_back(winner.group);
        // The increase pattern is part of the event only when stopping is
        // data-driven; a fixed-steps run does not condition on it.
        if (early) fit.event.signature.increases.push_back(increases ? 1 : 0);
        fit.event.step_bases.push_back(winner.basis);
        fit.event.step_ranks.push_back(static_cast<int>(winner.basis.rank()));
        fit.event.criterion.push_back(cNew);
        prior.push_back(&fit.event.step_bases.back().vectors);
        prior_ranks.push_back(static_cast<int>(winner.basis.rank()));
        rss = rssAfter;
        edf = edfAfter;
        run = increases ? run + 1 : 0;

        if (stop_trigger) {
            // keep_stop_step: the examined increasing step stays in the
            // model, so the event conditions on its argmax comparisons and
            // its winner-specific criterion increase, recorded above.
            fit.event.stopped_early = true;
            break;
        }
    }

    // Final model: everything added, minus the tail of a completed increase
    // run when the stop fired under the rollback convention.
    int active_count = static_cast<int>(fit.event.signature.winners.size());
    if (fit.event.stopped_early && !cfg.keep_stop_step) active_count -= cfg.s_plus - 1;
    fit.event.signature.stopped = fit.event.stopped_early;
    fit.event.signature.active_count = active_count;
    fit.event.active.assign(fit.event.signature.winners.begin(),
                            fit.event.signature.winners.begin() + active_count);

    // Least-squares fit on the active columns and per-group fitted bases.
    for (int g : fit.event.active)
        for (Eigen::Index j : design.groups[static_cast<std::size_t>(g)])
            fit.active_cols.push_back(j);
    if (!fit.active_cols.empty()) {
        Matrix XA(n, static_cast<Eigen::Index>(fit.active_cols.size()));
        for (std::size_t j = 0; j < fit.active_cols.size(); ++j)
            XA.col(static_cast<Eigen::Index>(j)) = design.X.col(fit.active_cols[j]);
        fit.beta = XA.completeOrthogonalDecomposition().solve(y);
        fit.residual = y - XA * fit.beta;
        for (int g : fit.event.active) {
            std::vector<int> others;
            for (int h : fit.event.active)
                if (h != g) others.push_back(h);
            Matrix Xg = design.group_cols(g);
            double gscale = Xg.norm();
            if (!others.empty()) {
                OrthoBasis rest = orthonormal_basis(design.cols_of(others));
                Xg = residualize_group(Xg, rest);
            }
            fit.fitted_bases.push_back(orthonormal_basis(Xg, kRankTol, g, kRankTol * gscale));
        }
    } else {
        fit.beta = Vector::Zero(0);
        fit.residual = y;
    }
    return fit;
}

/// The stopping-relevant outcome of running the procedure on `y`, without
/// the event bookkeeping. Probing values along a slice and comparing
/// signatures is the membership oracle for truncation regions.
inline SelectionSignature selection_signature(const GroupedDesign& design, const Vector& y,
                                              const StepwiseConfig& cfg) {
    return forward_stepwise(design, y, cfg, /*record_event=*/false).event.signature;
}

/// Criterion trace c_0, c_1, ... as seen by the early-stopping rule; the
/// last entry is the examined value that completed the stop when it fired.
inline std::vector<double> aic_trace(const GroupedDesign& design, const Vector& y,
                                     const StepwiseConfig& cfg) {
    if (cfg.stop != StopRule::aic_early_stop)
        throw InvalidInput("aic_trace: config must use the early-stopping rule");
    return forward_stepwise(design, y, cfg, /*record_event=*/false).event.criterion;
}

} // namespace stepinf

#endif
