#include <doctest.h>

#include <algorithm>
#include <complex>
#include <vector>

#include <Eigen/Dense>

#include "consensus/fixtures.hpp"
#include "consensus/synthesis.hpp"
#include "support/test_helpers.hpp"

using namespace consensus;
using testsupport::Rng;
using testsupport::nearMatrix;

namespace {

AgentDynamics oscillator() {
    Eigen::MatrixXd A(2, 2), B(2, 1);
    A << 0, 1, -1, 0;
    B << 1, 1;
    return AgentDynamics::make(A, B);
}

Eigen::MatrixXd rowGain(double a, double b) {
    Eigen::MatrixXd K(1, 2);
    K << a, b;
    return K;
}

std::vector<std::complex<double>> pair(double re, double im) {
    return {{re, im}, {re, -im}};
}

struct Instance {
    Topology topo;
    SpanningTree tree;
    AgentDynamics dyn;
};

Instance exampleInstance(int which) {
    const Scenario s = which == 1 ? example1_scenario() : example2_scenario();
    SpanningTree tree = renumber(extract_dst(s.topology, s.root.value()));
    return Instance{s.topology, std::move(tree), s.dynamics};
}

Eigen::MatrixXd example2ClosedLoop() {
    const Instance fx = exampleInstance(2);
    GainSet gains;
    gains.mode = ProtocolMode::DstWithRootFeedback;
    gains.K = {rowGain(4.0, 0.0), rowGain(2.625, 0.375), rowGain(2.5, 0.5),
               rowGain(2.5, 0.5), rowGain(1.5, 0.5),     rowGain(1.0, 0.0)};
    set_root_path(gains, fx.topo, fx.tree, 1);
    return assemble_dst_closed_loop(fx.dyn, fx.topo, fx.tree, gains);
}

} // namespace

TEST_CASE("place_poles reproduces the classic oscillator gains") {
    const AgentDynamics dyn = oscillator();
    CHECK(nearMatrix(place_poles(dyn.A, dyn.B, pair(-1, 1)), rowGain(1.5, 0.5), 1e-9));
    CHECK(nearMatrix(place_poles(dyn.A, dyn.B, pair(-2, 1)), rowGain(4.0, 0.0), 1e-9));
    CHECK(nearMatrix(place_poles(dyn.A, dyn.B, pair(-1.5, 1)), rowGain(2.625, 0.375), 1e-9));
}

TEST_CASE("place_poles input validation") {
    const AgentDynamics dyn = oscillator();
    CHECK_THROWS_AS(place_poles(dyn.A, dyn.B, {{-1, 0}}), BadTargets);  // wrong count
    CHECK_THROWS_AS(place_poles(dyn.A, dyn.B, {{-1, 1}, {-2, -1}}), BadTargets);  // not conjugate
    CHECK_THROWS_AS(place_poles(dyn.A, dyn.B, {{0.5, 0}, {-3, 0}}), BadTargets);  // unstable
    CHECK_THROWS_AS(place_poles(dyn.A, Eigen::MatrixXd::Zero(2, 1), pair(-1, 1)),
                    Uncontrollable);
    // Uncontrollable pair: B aligned with an eigenvector of a diagonal A.
    Eigen::MatrixXd Ad = Eigen::MatrixXd::Zero(2, 2);
    Ad(0, 0) = 1.0;
    Ad(1, 1) = 2.0;
    Eigen::MatrixXd Bd(2, 1);
    Bd << 1, 0;
    CHECK_THROWS_AS(place_poles(Ad, Bd, {{-1, 0}, {-2, 0}}), Uncontrollable);
}

TEST_CASE("place_poles hits requested spectra on random controllable pairs") {
    Rng rng(404);
    int checked = 0;
    for (int trial = 0; trial < 500; ++trial) {
        const int n = testsupport::uniformInt(rng, 1, 4);
        const int m = testsupport::uniformInt(rng, 1, 2);
        const AgentDynamics dyn = testsupport::randomControllablePair(rng, n, m);
        const auto targets = default_targets(dyn.A, testsupport::uniform(rng, 0.5, 2.0));
        const Eigen::MatrixXd K = place_poles(dyn.A, dyn.B, targets,
                                              0x9e3779b97f4a7c15ull + trial);
        REQUIRE(K.rows() == m);
        REQUIRE(K.cols() == n);
        CHECK(testsupport::spectrumMatches(dyn.A - dyn.B * K, targets, 1e-6));
        ++checked;
    }
    CHECK(checked == 500);
}

TEST_CASE("place_poles with the open-loop spectrum returns a negligible gain") {
    Rng rng(7);
    for (int trial = 0; trial < 20; ++trial) {
        const int n = testsupport::uniformInt(rng, 2, 3);
        AgentDynamics dyn = testsupport::randomControllablePair(rng, n, 1);
        // Shift A to a comfortable stable abscissa so its own spectrum is a
        // valid target set.
        const Eigen::VectorXcd open =
            Eigen::EigenSolver<Eigen::MatrixXd>(dyn.A, false).eigenvalues();
        const double shift = open.real().maxCoeff() + 1.0;
        dyn.A -= shift * Eigen::MatrixXd::Identity(n, n);
        const Eigen::VectorXcd eigs =
            Eigen::EigenSolver<Eigen::MatrixXd>(dyn.A, false).eigenvalues();
        const std::vector<std::complex<double>> targets(eigs.data(), eigs.data() + eigs.size());
        const Eigen::MatrixXd K = place_poles(dyn.A, dyn.B, targets);
        CHECK(testsupport::maxAbs(K) <= 1e-6);
    }
}

TEST_CASE("default_targets") {
    const AgentDynamics dyn = oscillator();
    const auto t = default_targets(dyn.A, 1.0);
    REQUIRE(t.size() == 2);
    const auto near = [&](std::complex<double> v) {
        return std::any_of(t.begin(), t.end(),
                           [&](const auto& x) { return std::abs(x - v) <= 1e-12; });
    };
    CHECK(near({-1, 1}));
    CHECK(near({-1, -1}));

    // Oscillator pair plus a real mode: the pair keeps its frequency, the
    // real representative lands half a step deeper.
    Eigen::MatrixXd A3 = Eigen::MatrixXd::Zero(3, 3);
    A3.topLeftCorner(2, 2) = dyn.A;
    A3(2, 2) = 2.0;
    const auto t3 = default_targets(A3, 1.0);
    REQUIRE(t3.size() == 3);
    const auto near3 = [&](std::complex<double> v) {
        return std::any_of(t3.begin(), t3.end(),
                           [&](const auto& x) { return std::abs(x - v) <= 1e-12; });
    };
    CHECK(near3({-1, 1}));
    CHECK(near3({-1, -1}));
    CHECK(near3({-1.5, 0}));
}

TEST_CASE("design_theorem2") {
    SUBCASE("example1 reproduces the fixture gains") {
        const Instance fx = exampleInstance(1);
        PoleTargets targets;
        targets.perAgent[1] = pair(-1, 1);
        targets.perAgent[2] = pair(-2, 1);
        targets.perAgent[3] = pair(-1.5, 1);
        const GainSet gains = design_theorem2(fx.dyn, fx.topo, fx.tree, targets);
        CHECK(gains.mode == ProtocolMode::DstOnly);
        REQUIRE(gains.K.size() == 4);
        CHECK(nearMatrix(gains.K[0], rowGain(1.5, 0.5), 1e-9));
        CHECK(nearMatrix(gains.K[1], rowGain(4.0, 0.0), 1e-9));
        CHECK(nearMatrix(gains.K[2], rowGain(2.625, 0.375), 1e-9));
        CHECK(gains.K[3].cwiseAbs().maxCoeff() == 0.0);
    }

    SUBCASE("a listening root is rejected") {
        const Instance fx = exampleInstance(2);
        CHECK_THROWS_AS(design_theorem2(fx.dyn, fx.topo, fx.tree), RootHasNeighbors);
    }

    SUBCASE("tree weights scale the effective input") {
        // Same tree as example1 but with weight 2 on edge (3 -> 1): the gain
        // for agent 1 halves.
        Eigen::MatrixXd W = example1_scenario().topology.W();
        W(0, 2) = 2.0;
        const Topology topo = Topology::fromWeights(W);
        const SpanningTree tree = renumber(extract_dst(topo, 4));
        PoleTargets targets;
        targets.perAgent[1] = pair(-1, 1);
        const AgentDynamics dyn = oscillator();
        const GainSet gains = design_theorem2(dyn, topo, tree, targets);
        CHECK(nearMatrix(gains.K[0], rowGain(0.75, 0.25), 1e-9));
        // Closed-loop diagonal block still lands on the targets.
        CHECK(testsupport::spectrumMatches(dyn.A - 2.0 * dyn.B * gains.K[0], pair(-1, 1), 1e-8));
    }

    SUBCASE("random trees get a stable block triangular loop") {
        Rng rng(31337);
        for (int trial = 0; trial < 50; ++trial) {
            const int N = testsupport::uniformInt(rng, 2, 6);
            const int n = testsupport::uniformInt(rng, 1, 3);
            const int m = testsupport::uniformInt(rng, 1, 2);
            const auto spec = testsupport::randomTreeTopology(rng, N, 0);
            const Topology topo = Topology::fromWeights(spec.W);
            const SpanningTree tree = renumber(extract_dst(topo, spec.root));
            const AgentDynamics dyn = testsupport::randomControllablePair(rng, n, m);
            const GainSet gains = design_theorem2(dyn, topo, tree);
            const Eigen::MatrixXd M = assemble_dst_closed_loop(dyn, topo, tree, gains);
            const Eigen::VectorXcd eigs =
                Eigen::EigenSolver<Eigen::MatrixXd>(M, false).eigenvalues();
            CHECK(eigs.real().maxCoeff() < 0.0);
        }
    }
}

TEST_CASE("gershgorin_check on the example2 closed loop") {
    const Eigen::MatrixXd M = example2ClosedLoop();
    const GershgorinReport report = gershgorin_check(M, 2, CircleMode::Surrogate);

    REQUIRE(report.rows.size() == 5);
    const double radii[5] = {2.0, 2.0, 3.0, 2.0, 1.0};
    const double surrogates[5] = {5.0, 3.25, 3.0, 3.0, 3.0};
    const bool passes[5] = {true, true, false, true, true};
    for (int j = 0; j < 5; ++j) {
        const GershgorinRow& row = report.rows[static_cast<std::size_t>(j)];
        CHECK(row.row == j + 1);
        CHECK(row.radius == doctest::Approx(radii[j]).epsilon(1e-12));
        CHECK(row.surrogateMin == doctest::Approx(surrogates[j]).epsilon(1e-9));
        CHECK(row.surrogatePass == passes[j]);
        CHECK(row.diagonalHurwitz);
        CHECK(row.diagonalAbscissa < 0.0);
        // The rigorous reciprocal-resolvent bound is far smaller than these
        // radii, so it fails on every row of this design.
        CHECK_FALSE(row.resolventPass);
        CHECK(row.resolventMin > 0.0);
    }
    CHECK(report.rows[3].resolventMin == doctest::Approx(0.5).epsilon(1e-9));

    CHECK_FALSE(report.surrogateAll);  // row 3 sits exactly on its circle
    CHECK_FALSE(report.resolventAll);
    CHECK(report.selected == CircleMode::Surrogate);
    CHECK_FALSE(report.selectedPass);
    CHECK(report.gridPoints == 2001);

    // The eigenvalue certificate remains the final arbiter.
    CHECK(report.eigenvalueCertificate);
    CHECK(report.spectralAbscissa == doctest::Approx(-1.182259436090816).epsilon(1e-9));
}

TEST_CASE("gershgorin_check structural cases") {
    SUBCASE("non-square blocking is rejected") {
        CHECK_THROWS_AS(gershgorin_check(Eigen::MatrixXd::Zero(5, 5), 2, CircleMode::Surrogate),
                        NonSquareBlocks);
        CHECK_THROWS_AS(gershgorin_check(Eigen::MatrixXd::Zero(4, 6), 2, CircleMode::Surrogate),
                        NonSquareBlocks);
    }

    SUBCASE("block diagonal stable matrix clears every circle") {
        Eigen::MatrixXd M = Eigen::MatrixXd::Zero(4, 4);
        M.topLeftCorner(2, 2) << -1, 1, -1, -1;
        M.bottomRightCorner(2, 2) << -2, 0.5, 0, -3;
        const GershgorinReport report = gershgorin_check(M, 2, CircleMode::Resolvent);
        CHECK(report.surrogateAll);
        CHECK(report.resolventAll);
        CHECK(report.selectedPass);
        CHECK(report.eigenvalueCertificate);
        for (const auto& row : report.rows) {
            CHECK(row.radius == 0.0);
            CHECK(row.surrogatePass);
            CHECK(row.resolventPass);
        }
    }

    SUBCASE("an unstable diagonal block fails its row") {
        Eigen::MatrixXd M = Eigen::MatrixXd::Zero(4, 4);
        M.topLeftCorner(2, 2) << 1, 0, 0, -1;  // eigenvalue +1
        M.bottomRightCorner(2, 2) << -2, 0, 0, -2;
        const GershgorinReport report = gershgorin_check(M, 2, CircleMode::Surrogate);
        CHECK_FALSE(report.rows[0].diagonalHurwitz);
        CHECK_FALSE(report.rows[0].surrogatePass);
        CHECK_FALSE(report.rows[0].resolventPass);
        CHECK(report.rows[1].surrogatePass);
        CHECK_FALSE(report.eigenvalueCertificate);
        CHECK(report.spectralAbscissa == doctest::Approx(1.0).epsilon(1e-9));
    }

    SUBCASE("a passing resolvent test certifies stability") {
        Rng rng(2718);
        for (int trial = 0; trial < 200; ++trial) {
            const int blocks = testsupport::uniformInt(rng, 1, 3);
            const int n = testsupport::uniformInt(rng, 1, 3);
            const Eigen::Index dim = static_cast<Eigen::Index>(blocks) * n;
            Eigen::MatrixXd M = testsupport::randomMatrix(rng, dim, dim, 0.3);
            for (int b = 0; b < blocks; ++b) {
                Eigen::MatrixXd D = testsupport::randomMatrix(rng, n, n);
                // Mix clearly stable and occasionally unstable diagonals.
                D -= testsupport::uniform(rng, -0.5, 3.0) * Eigen::MatrixXd::Identity(n, n);
                M.block(static_cast<Eigen::Index>(b) * n, static_cast<Eigen::Index>(b) * n,
                        n, n) = D;
            }
            const GershgorinReport report = gershgorin_check(M, n, CircleMode::Resolvent, 801);
            if (report.resolventAll) CHECK(report.eigenvalueCertificate);
        }
    }
}

TEST_CASE("design_theorem3") {
    SUBCASE("example2 topology converges at the first stage") {
        const Instance fx = exampleInstance(2);
        const Theorem3Result result = design_theorem3(fx.dyn, fx.topo, fx.tree);
        CHECK(result.iterations == 0);
        CHECK(result.report.eigenvalueCertificate);
        CHECK(result.report.selectedPass);
        CHECK(result.report.selected == CircleMode::Surrogate);
        CHECK(result.gains.mode == ProtocolMode::DstWithRootFeedback);
        CHECK(result.gains.rootPath == std::vector<int>{5, 1});
        CHECK(result.gains.rootNeighborWeight == 1.0);
        REQUIRE(result.gains.K.size() == 6);
        CHECK(nearMatrix(result.gains.K[5], rowGain(0.625, 0.375), 1e-9));

        const Eigen::MatrixXd M =
            assemble_dst_closed_loop(fx.dyn, fx.topo, fx.tree, result.gains);
        const Eigen::VectorXcd eigs = Eigen::EigenSolver<Eigen::MatrixXd>(M, false).eigenvalues();
        CHECK(eigs.real().maxCoeff() == doctest::Approx(result.report.spectralAbscissa)
                                            .epsilon(1e-9));
        CHECK(eigs.real().maxCoeff() < 0.0);
    }

    SUBCASE("a passive root cannot use root feedback") {
        const Instance fx = exampleInstance(1);
        CHECK_THROWS_AS(design_theorem3(fx.dyn, fx.topo, fx.tree), MissingRootPath);
    }

    SUBCASE("the rigorous mode fails loudly when circles cannot clear") {
        const Instance fx = exampleInstance(2);
        Theorem3Params params;
        params.checkMode = CircleMode::Resolvent;
        params.maxIterations = 3;
        try {
            design_theorem3(fx.dyn, fx.topo, fx.tree, params);
            FAIL("expected SynthesisFailed");
        } catch (const SynthesisFailed& e) {
            CHECK(e.lastReport.rows.size() == 5);
            CHECK_FALSE(e.lastReport.resolventAll);
        }
    }

    SUBCASE("never returns gains without a true certificate") {
        Rng rng(606);
        int successes = 0;
        for (int trial = 0; trial < 30; ++trial) {
            const int N = testsupport::uniformInt(rng, 2, 5);
            auto spec = testsupport::randomTreeTopology(rng, N, 0);
            // Give the root something to listen to.
            Eigen::MatrixXd W = spec.W;
            for (int j = 1; j <= N; ++j) {
                if (j != spec.root && W(spec.root - 1, j - 1) == 0.0) {
                    W(spec.root - 1, j - 1) = testsupport::uniform(rng, 0.5, 1.5);
                    break;
                }
            }
            const Topology topo = Topology::fromWeights(W);
            const SpanningTree tree = renumber(extract_dst(topo, spec.root));
            const AgentDynamics dyn = oscillator();
            try {
                const Theorem3Result result = design_theorem3(dyn, topo, tree);
                CHECK(result.report.eigenvalueCertificate);
                const Eigen::MatrixXd M = assemble_dst_closed_loop(dyn, topo, tree, result.gains);
                CHECK(Eigen::EigenSolver<Eigen::MatrixXd>(M, false)
                          .eigenvalues().real().maxCoeff() < 0.0);
                ++successes;
            } catch (const SynthesisFailed&) {
                // A refused design is acceptable; a false certificate is not.
            }
        }
        CHECK(successes > 0);
    }

    SUBCASE("stable dynamics converge immediately") {
        Eigen::MatrixXd A(2, 2), B(2, 1);
        A << -1, 1, 0, -2;
        B << 0, 1;
        Eigen::MatrixXd W = Eigen::MatrixXd::Zero(2, 2);
        W(0, 1) = 1.0;  // 1 hears 2
        W(1, 0) = 0.8;  // root 2 hears 1
        const Topology topo = Topology::fromWeights(W);
        const SpanningTree tree = renumber(extract_dst(topo, 2));
        const Theorem3Result result =
            design_theorem3(AgentDynamics::make(A, B), topo, tree);
        CHECK(result.iterations == 0);
        CHECK(result.report.eigenvalueCertificate);
    }
}
