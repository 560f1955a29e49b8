#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "stepinf/rng.hpp"
#include "stepinf/stepwise.hpp"
#include "support/oracles.hpp"

using namespace stepinf;

namespace {

Matrix random_matrix(Philox& rng, Eigen::Index n, Eigen::Index k) {
    Matrix m(n, k);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < k; ++j) m(i, j) = rng.normal();
    return m;
}

Vector random_vector(Philox& rng, Eigen::Index n) { return random_matrix(rng, n, 1).col(0); }

/// Brute-force per-step argmax over the penalized criterion using dense
/// pseudo-inverse projections; the implementation path uses SVD bases.
std::vector<int> exhaustive_selection(const GroupedDesign& design, const Vector& y,
                                      const StepwiseConfig& cfg) {
    const Eigen::Index n = design.n();
    std::vector<Matrix> work;
    for (int g = 0; g < design.num_groups(); ++g) work.push_back(design.group_cols(g));
    std::vector<bool> used(work.size(), false);
    Vector r = y;
    std::vector<int> active;
    for (int s = 0; s < cfg.max_steps; ++s) {
        int best = -1;
        double bestScore = 0.0;
        Matrix bestP;
        for (int g = 0; g < design.num_groups(); ++g) {
            if (used[static_cast<std::size_t>(g)]) continue;
            const Matrix& W = work[static_cast<std::size_t>(g)];
            Matrix P = W * W.completeOrthogonalDecomposition().pseudoInverse();
            double tr = P.trace();
            if (tr < 0.5) continue;  // rank 0 after orthogonalization
            double fitted = r.dot(P * r);
            double score;
            if (cfg.sigma)
                score = fitted - cfg.k * (*cfg.sigma) * (*cfg.sigma) * tr;
            else
                score = -(r.squaredNorm() - fitted) *
                        std::exp(cfg.k * tr / static_cast<double>(n));
            if (best < 0 || score > bestScore) {
                best = g;
                bestScore = score;
                bestP = P;
            }
        }
        if (best < 0) break;
        active.push_back(best);
        used[static_cast<std::size_t>(best)] = true;
        Matrix M = Matrix::Identity(n, n) - bestP;
        r = M * r;
        for (int g = 0; g < design.num_groups(); ++g)
            if (!used[static_cast<std::size_t>(g)])
                work[static_cast<std::size_t>(g)] = M * work[static_cast<std::size_t>(g)];
    }
    return active;
}

GroupedDesign random_design(Philox& rng, Eigen::Index n, const std::vector<int>& sizes,
                            double correlate = 0.0) {
    Eigen::Index p = 0;
    for (int s : sizes) p += s;
    Matrix X = random_matrix(rng, n, p);
    if (correlate > 0.0) {
        Vector shared = random_vector(rng, n);
        for (Eigen::Index j = 0; j < p; ++j)
            X.col(j) = std::sqrt(1.0 - correlate) * X.col(j) + std::sqrt(correlate) * shared;
    }
    std::vector<std::vector<Eigen::Index>> groups;
    Eigen::Index at = 0;
    for (int s : sizes) {
        std::vector<Eigen::Index> g;
        for (int j = 0; j < s; ++j) g.push_back(at++);
        groups.push_back(std::move(g));
    }
    return GroupedDesign(std::move(X), std::move(groups));
}

} // namespace

TEST_CASE("dominant group enters first") {
    Matrix X(6, 2);
    X << 1, 0, 1, 0, 1, 0, 0, 1, 0, 1, 0, 1;
    GroupedDesign design(X, {{0}, {1}});
    Vector y = 5.0 * X.col(0);
    y(3) = 0.01;
    StepwiseConfig cfg;
    cfg.k = 0.0;
    cfg.sigma = 1.0;
    cfg.max_steps = 1;
    auto fit = forward_stepwise(design, y, cfg);
    REQUIRE(fit.event.active == std::vector<int>{0});
}

TEST_CASE("orthonormal singles enter in correlation order") {
    Matrix X = Matrix::Identity(5, 3);
    GroupedDesign design(X, {{0}, {1}, {2}});
    Vector y(5);
    y << 3.0, -2.0, 1.0, 0.2, 0.1;
    StepwiseConfig cfg;
    cfg.k = 0.0;
    cfg.sigma = 1.0;
    cfg.max_steps = 3;
    auto fit = forward_stepwise(design, y, cfg);
    REQUIRE(fit.event.active == std::vector<int>{0, 1, 2});
}

TEST_CASE("selection matches exhaustive enumeration") {
    Philox rng(21, 0);
    for (int trial = 0; trial < 25; ++trial) {
        auto design = random_design(rng, 12, {1, 2, 2, 1}, 0.4);
        Vector y = random_vector(rng, 12);

        StepwiseConfig cfg;
        cfg.k = 2.0;
        cfg.max_steps = 3;
        cfg.sigma = 1.0;
        auto known = forward_stepwise(design, y, cfg);
        CHECK(known.event.active == exhaustive_selection(design, y, cfg));

        cfg.sigma.reset();
        auto unknown = forward_stepwise(design, y, cfg);
        CHECK(unknown.event.active == exhaustive_selection(design, y, cfg));
    }
}

TEST_CASE("every recorded inequality holds at the observed outcome") {
    Philox rng(22, 0);
    for (int trial = 0; trial < 12; ++trial) {
        auto design = random_design(rng, 15, {2, 1, 3, 2}, 0.3);
        Vector y = random_vector(rng, 15);
        for (bool knownSigma : {true, false}) {
            for (bool early : {false, true}) {
                StepwiseConfig cfg;
                cfg.k = knownSigma ? 2.0 : 1.0;
                if (knownSigma) cfg.sigma = 1.0;
                cfg.max_steps = early ? 4 : 3;
                cfg.stop = early ? StopRule::aic_early_stop : StopRule::fixed_steps;
                auto fit = forward_stepwise(design, y, cfg);
                for (const auto& q : fit.event.inequalities)
                    CHECK(evaluate_inequality(q, y) >= -1e-8);
            }
        }
    }
}

TEST_CASE("step-comparison inequality count") {
    Philox rng(23, 0);
    auto design = random_design(rng, 14, {2, 2, 1, 3, 1});
    Vector y = random_vector(rng, 14);
    StepwiseConfig cfg;
    cfg.k = 1.0;
    cfg.sigma = 2.0;
    cfg.max_steps = 4;
    auto fit = forward_stepwise(design, y, cfg);
    // G=5 candidates: losers per step are 4, 3, 2, 1
    CHECK(fit.event.inequalities.size() == 4u + 3u + 2u + 1u);
}

TEST_CASE("unknown-sigma selection is scale invariant") {
    Philox rng(24, 0);
    auto design = random_design(rng, 16, {2, 2, 2, 1}, 0.2);
    Vector y = random_vector(rng, 16);
    StepwiseConfig cfg;
    cfg.k = 1.5;
    cfg.max_steps = 3;
    auto base = forward_stepwise(design, y, cfg);
    for (double c : {0.01, 0.5, 37.0}) {
        auto scaled = forward_stepwise(design, Vector(c * y), cfg);
        CHECK(scaled.event.active == base.event.active);
    }
}

TEST_CASE("known-sigma selection commutes with joint scaling") {
    Philox rng(25, 0);
    auto design = random_design(rng, 16, {1, 2, 2, 2}, 0.2);
    Vector y = random_vector(rng, 16);
    StepwiseConfig cfg;
    cfg.k = 2.0;
    cfg.sigma = 1.3;
    cfg.max_steps = 3;
    auto base = forward_stepwise(design, y, cfg);
    for (double c : {0.2, 5.0}) {
        StepwiseConfig scaled = cfg;
        scaled.sigma = c * (*cfg.sigma);
        auto fit = forward_stepwise(design, Vector(c * y), scaled);
        CHECK(fit.event.active == base.event.active);
    }
}

TEST_CASE("orthogonal groups: projections decrease along the path") {
    Philox rng(26, 0);
    for (int trial = 0; trial < 10; ++trial) {
        Matrix raw = random_matrix(rng, 20, 8);
        Eigen::HouseholderQR<Matrix> qr(raw);
        Matrix X = qr.householderQ() * Matrix::Identity(20, 8);
        GroupedDesign design(X, {{0, 1}, {2, 3}, {4, 5}, {6, 7}});
        Vector y = random_vector(rng, 20);
        StepwiseConfig cfg;
        cfg.k = 0.0;
        cfg.sigma = 1.0;
        cfg.max_steps = 4;
        auto fit = forward_stepwise(design, y, cfg);
        double prev = std::numeric_limits<double>::infinity();
        for (const auto& basis : fit.event.step_bases) {
            double norm = (basis.vectors.transpose() * y).norm();
            CHECK(norm < prev);
            prev = norm;
        }
    }
}

TEST_CASE("evaluate_inequality forms") {
    QuadraticInequality q;
    q.constant = 3.0;
    Vector v(2);
    v << 7.0, -1.0;
    CHECK(evaluate_inequality(q, v) == 3.0);

    QuadraticInequality e1;
    e1.pos = Matrix::Zero(2, 1);
    e1.pos(0, 0) = 1.0;
    Vector w(2);
    w << 2.0, 0.0;
    CHECK(evaluate_inequality(e1, w) == 4.0);
}

TEST_CASE("evaluate_inequality matches dense reconstruction") {
    Philox rng(27, 0);
    for (int trial = 0; trial < 20; ++trial) {
        QuadraticInequality q;
        q.identity = rng.normal();
        q.pos = random_matrix(rng, 6, 2);
        q.neg = random_matrix(rng, 6, 1);
        q.linear = random_vector(rng, 6);
        q.constant = rng.normal();
        Vector v = random_vector(rng, 6);
        Matrix Q = oracles::dense_quadratic(q, 6);
        double expect = v.dot(Q * v) + q.linear.dot(v) + q.constant;
        CHECK(evaluate_inequality(q, v) == Catch::Approx(expect).margin(1e-10));
    }
}

TEST_CASE("early_stop_index convention") {
    // criterion (10, 8, 9, 11): first increase begins at step 2, model = 1 step
    CHECK(early_stop_index({10, 8, 9, 11}, 1) == 1);
    // strictly decreasing criterion never stops
    CHECK(early_stop_index({10, 8, 6, 5}, 1) == 3);
    // s_plus = 2 tolerates a lone bump
    CHECK(early_stop_index({10, 8, 9, 7, 8, 9}, 2) == 3);
    CHECK(early_stop_index({10, 11, 12}, 2) == 0);
}

TEST_CASE("early stopping matches the trace convention") {
    Philox rng(28, 0);
    for (int trial = 0; trial < 20; ++trial) {
        auto design = random_design(rng, 18, {2, 1, 2, 2, 1}, 0.3);
        Vector y = random_vector(rng, 18) + 2.0 * design.X.col(0);
        for (bool knownSigma : {true, false}) {
            for (int splus : {1, 2}) {
                StepwiseConfig cfg;
                cfg.k = std::log(18.0);
                if (knownSigma) cfg.sigma = 1.0;
                cfg.stop = StopRule::aic_early_stop;
                cfg.s_plus = splus;
                cfg.max_steps = 5;
                auto fit = forward_stepwise(design, y, cfg);
                int expect = early_stop_index(fit.event.criterion, splus);
                CHECK(static_cast<int>(fit.event.active.size()) == expect);
                if (fit.event.stopped_early) {
                    // trace ends with exactly s_plus consecutive increases
                    auto& c = fit.event.criterion;
                    for (std::size_t j = c.size() - static_cast<std::size_t>(splus);
                         j < c.size(); ++j)
                        CHECK(c[j] > c[j - 1]);
                }

                // keep convention retains the examined increase run
                StepwiseConfig keep = cfg;
                keep.keep_stop_step = true;
                auto kfit = forward_stepwise(design, y, keep);
                CHECK(kfit.event.criterion == fit.event.criterion);
                int kexpect = kfit.event.stopped_early ? expect + splus : expect;
                CHECK(static_cast<int>(kfit.event.active.size()) == kexpect);
                for (const auto& q : kfit.event.inequalities)
                    CHECK(evaluate_inequality(q, y) >= -1e-8);
            }
        }
    }
}

TEST_CASE("aic_trace values for known and unknown sigma") {
    Philox rng(29, 0);
    auto design = random_design(rng, 12, {1, 2, 1});
    Vector y = random_vector(rng, 12);
    StepwiseConfig cfg;
    cfg.k = 2.0;
    cfg.sigma = 1.5;
    cfg.stop = StopRule::aic_early_stop;
    cfg.max_steps = 3;
    auto trace = aic_trace(design, y, cfg);
    CHECK(trace[0] == Catch::Approx(y.squaredNorm() / 2.25));

    auto fit = forward_stepwise(design, y, cfg);
    // each accepted step drops the criterion by improvement/sigma^2 - k*rank
    for (std::size_t s = 0; s + 1 < fit.event.criterion.size() &&
                            s < fit.event.step_bases.size();
         ++s) {
        double imp = (fit.event.step_bases[s].vectors.transpose() * y).squaredNorm();
        double drop = imp / 2.25 - cfg.k * fit.event.step_ranks[s];
        CHECK(fit.event.criterion[s] - fit.event.criterion[s + 1] ==
              Catch::Approx(drop).margin(1e-8));
    }

    cfg.sigma.reset();
    cfg.k = 1.0;
    auto utrace = aic_trace(design, y, cfg);
    CHECK(utrace[0] == Catch::Approx(12.0 * std::log(y.squaredNorm()) + 1.0));
}

TEST_CASE("duplicate group is skipped once collinear") {
    Philox rng(30, 0);
    Matrix base = random_matrix(rng, 10, 2);
    Matrix X(10, 4);
    X.leftCols(2) = base;
    X.rightCols(2) = base;  // group 1 duplicates group 0
    GroupedDesign design(X, {{0, 1}, {2, 3}});
    Vector y = random_vector(rng, 10);
    StepwiseConfig cfg;
    cfg.k = 0.0;
    cfg.sigma = 1.0;
    cfg.max_steps = 2;
    auto fit = forward_stepwise(design, y, cfg);
    REQUIRE(fit.event.active.size() == 1);
    REQUIRE(fit.event.skipped.size() == 1);
    CHECK(fit.event.skipped[0].first == 2);
}

TEST_CASE("input validation") {
    Matrix X = Matrix::Identity(4, 2);
    GroupedDesign design(X, {{0}, {1}});
    Vector y(4);
    y << 1, 2, 3, 4;
    StepwiseConfig cfg;
    cfg.max_steps = 3;  // S > G
    CHECK_THROWS_AS(forward_stepwise(design, y, cfg), InvalidInput);
    cfg.max_steps = 1;
    CHECK_THROWS_AS(forward_stepwise(design, Vector::Ones(4), cfg), InvalidInput);
    CHECK_THROWS_AS(forward_stepwise(design, Vector::Zero(3), cfg), InvalidInput);
}
