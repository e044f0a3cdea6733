#include <doctest.h>

#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "consensus/fixtures.hpp"
#include "consensus/scenario.hpp"
#include "consensus/simulate.hpp"
#include "support/test_helpers.hpp"

using namespace consensus;
using testsupport::Rng;

namespace {

Eigen::MatrixXd rowGain(double a, double b) {
    Eigen::MatrixXd K(1, 2);
    K << a, b;
    return K;
}

struct Prepared {
    Topology topo;
    SpanningTree tree;
    AgentDynamics dyn;
    GainSet gains;
    std::vector<Eigen::VectorXd> x0;
    SimConfig sim;
};

Prepared prepare(const Scenario& s) {
    SpanningTree tree = renumber(extract_dst(s.topology, s.root));
    GainSet gains = make_gain_set(s.gains.value(), s.topology, tree);
    std::vector<Eigen::VectorXd> x0 = initial_states(s);
    return Prepared{s.topology, std::move(tree), s.dynamics, std::move(gains), std::move(x0),
                    s.sim};
}

Prepared example1Prepared() {
    Scenario s = example1_scenario();
    // The fixture designs its gains; pin the classic values directly here.
    GainConfig config;
    config.mode = ProtocolMode::DstOnly;
    config.K = {rowGain(1.5, 0.5), rowGain(4.0, 0.0), rowGain(2.625, 0.375), rowGain(0.0, 0.0)};
    s.gains = config;
    return prepare(s);
}

} // namespace

TEST_CASE("integration bookkeeping") {
    const Prepared p = example1Prepared();
    const SimulationResult r =
        integrate_agents(p.dyn, p.topo, p.tree, p.gains, p.x0, 0.01, 15.0);
    CHECK(r.samples() == 1501);
    CHECK(r.times(0) == 0.0);
    CHECK(r.times(r.samples() - 1) == doctest::Approx(15.0).epsilon(1e-12));
    CHECK(r.agents.rows() == 1501);
    CHECK(r.agents.cols() == 8);
    CHECK(r.edges.cols() == 6);
    CHECK(r.controls.cols() == 4);
    CHECK(r.consensusError.size() == 1501);

    CHECK_THROWS_AS(integrate_agents(p.dyn, p.topo, p.tree, p.gains, p.x0, 0.0, 1.0),
                    DimensionMismatch);
    CHECK_THROWS_AS(integrate_agents(p.dyn, p.topo, p.tree, p.gains, p.x0, 0.5, 0.1),
                    DimensionMismatch);
    CHECK_THROWS_AS(integrate_edges(Eigen::MatrixXd::Zero(3, 3), Eigen::VectorXd::Zero(2),
                                    0.01, 1.0),
                    DimensionMismatch);
}

TEST_CASE("consensus initial state stays in consensus") {
    const Prepared p = example1Prepared();
    std::vector<Eigen::VectorXd> equal(4, Eigen::Vector2d(2.0, -3.0));
    const SimulationResult r = integrate_agents(p.dyn, p.topo, p.tree, p.gains, equal, 0.01, 2.0);
    CHECK(r.consensusError.maxCoeff() <= 1e-14);

    // Each agent follows the unforced rotation x' = A x.
    const Eigen::Index last = r.samples() - 1;
    const double t = r.times(last);
    const Eigen::Vector2d expected(2.0 * std::cos(t) - 3.0 * std::sin(t),
                                   -2.0 * std::sin(t) - 3.0 * std::cos(t));
    CHECK((r.agentState(last, 1) - expected).cwiseAbs().maxCoeff() <= 1e-9);
}

TEST_CASE("example1 trajectories reach consensus") {
    const Prepared p = example1Prepared();
    const SimulationResult r = integrate_agents(p.dyn, p.topo, p.tree, p.gains, p.x0,
                                                p.sim.dt, p.sim.T);
    const Eigen::VectorXd eps = consensus_error(r);
    CHECK(eps(0) == doctest::Approx(14.221463).epsilon(1e-6));
    CHECK(eps(eps.size() - 1) / eps(0) <= 1e-4);
    CHECK(consensus_verdict(r, p.sim.tol));
    // The stored error column matches the recomputed one.
    CHECK((eps - r.consensusError).cwiseAbs().maxCoeff() == 0.0);
    // Controls of the passive root stay identically zero.
    CHECK(r.controls.col(3).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("translation invariance of the error dynamics") {
    const Prepared p = example1Prepared();
    const SimulationResult base = integrate_agents(p.dyn, p.topo, p.tree, p.gains, p.x0,
                                                   0.01, 5.0);
    std::vector<Eigen::VectorXd> shifted = p.x0;
    const Eigen::Vector2d v(17.0, -9.0);
    for (auto& x : shifted) x += v;
    const SimulationResult moved = integrate_agents(p.dyn, p.topo, p.tree, p.gains, shifted,
                                                    0.01, 5.0);
    CHECK((base.consensusError - moved.consensusError).cwiseAbs().maxCoeff() <= 1e-9);
    CHECK((base.edges - moved.edges).cwiseAbs().maxCoeff() <= 1e-9);
}

TEST_CASE("rk4 converges at fourth order") {
    const Prepared p = example1Prepared();
    const auto finalState = [&](double dt) -> Eigen::VectorXd {
        const SimulationResult r =
            integrate_agents(p.dyn, p.topo, p.tree, p.gains, p.x0, dt, 1.0);
        return r.agents.row(r.samples() - 1).transpose();
    };
    const Eigen::VectorXd ref = finalState(0.0025);
    const double eCoarse = (finalState(0.02) - ref).cwiseAbs().maxCoeff();
    const double eFine = (finalState(0.01) - ref).cwiseAbs().maxCoeff();
    REQUIRE(eCoarse > 0.0);
    REQUIRE(eFine > 0.0);
    const double factor = eCoarse / eFine;
    CHECK(factor >= 8.0);
    CHECK(factor <= 40.0);
}

TEST_CASE("agent and edge integrations agree") {
    SUBCASE("example1") {
        const Prepared p = example1Prepared();
        const SimulationResult r = integrate_agents(p.dyn, p.topo, p.tree, p.gains, p.x0,
                                                    p.sim.dt, p.sim.T);
        const Eigen::MatrixXd M = assemble_dst_closed_loop(p.dyn, p.topo, p.tree, p.gains);
        const Eigen::VectorXd y0 = agent_to_edge(p.tree, p.x0);
        const Eigen::MatrixXd edges = integrate_edges(M, y0, p.sim.dt, p.sim.T);
        REQUIRE(edges.rows() == r.samples());
        CHECK((edges - r.edges).cwiseAbs().maxCoeff() <= 1e-8);
    }

    SUBCASE("random stable designs") {
        Rng rng(8080);
        double worst = 0.0;
        for (int trial = 0; trial < 100; ++trial) {
            const int N = testsupport::uniformInt(rng, 2, 5);
            const int m = testsupport::uniformInt(rng, 1, 2);
            const auto spec = testsupport::randomTreeTopology(rng, N, 0);
            const Topology topo = Topology::fromWeights(spec.W);
            const SpanningTree tree = renumber(extract_dst(topo, spec.root));
            const AgentDynamics dyn = testsupport::randomControllablePair(rng, 2, m);
            const GainSet gains = design_theorem2(dyn, topo, tree);
            std::vector<Eigen::VectorXd> x0;
            for (int i = 0; i < N; ++i) x0.push_back(testsupport::randomMatrix(rng, 2, 1, 5.0));

            const SimulationResult r = integrate_agents(dyn, topo, tree, gains, x0, 0.01, 2.0);
            const Eigen::MatrixXd M = assemble_dst_closed_loop(dyn, topo, tree, gains);
            const Eigen::MatrixXd edges =
                integrate_edges(M, agent_to_edge(tree, x0), 0.01, 2.0);
            worst = std::max(worst, (edges - r.edges).cwiseAbs().maxCoeff());
        }
        CHECK(worst <= 1e-8);
    }
}

TEST_CASE("integrate_edges basics") {
    Eigen::MatrixXd M(2, 2);
    M << -1, 1, 0, -2;
    const Eigen::MatrixXd still = integrate_edges(M, Eigen::VectorXd::Zero(2), 0.1, 1.0);
    CHECK(still.cwiseAbs().maxCoeff() == 0.0);

    Eigen::VectorXd y0(2);
    y0 << 3.0, -1.0;
    const Eigen::MatrixXd decay = integrate_edges(M, y0, 0.01, 5.0);
    CHECK(decay.row(decay.rows() - 1).cwiseAbs().maxCoeff() < 0.1);
}

TEST_CASE("divergence guard throws NonFiniteState") {
    Eigen::MatrixXd A(1, 1), B(1, 1);
    A << 5.0;
    B << 0.0;
    const AgentDynamics dyn = AgentDynamics::make(A, B);
    Eigen::MatrixXd W = Eigen::MatrixXd::Zero(2, 2);
    W(0, 1) = 1.0;
    const Topology topo = Topology::fromWeights(W);
    const SpanningTree tree = renumber(extract_dst(topo, 2));
    GainSet gains;
    gains.mode = ProtocolMode::DstOnly;
    gains.K.assign(2, Eigen::MatrixXd::Zero(1, 1));
    std::vector<Eigen::VectorXd> x0 = {Eigen::VectorXd::Constant(1, 1e3),
                                       Eigen::VectorXd::Constant(1, -1e3)};
    CHECK_THROWS_AS(integrate_agents(dyn, topo, tree, gains, x0, 0.01, 10.0), NonFiniteState);
}

TEST_CASE("consensus_error and verdict") {
    // Frozen dynamics: two agents a constant 3 apart.
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(1, 1);
    Eigen::MatrixXd B = Eigen::MatrixXd::Zero(1, 1);
    const AgentDynamics dyn = AgentDynamics::make(A, B);
    Eigen::MatrixXd W = Eigen::MatrixXd::Zero(2, 2);
    W(0, 1) = 1.0;
    const Topology topo = Topology::fromWeights(W);
    const SpanningTree tree = renumber(extract_dst(topo, 2));
    GainSet gains;
    gains.mode = ProtocolMode::DstOnly;
    gains.K.assign(2, Eigen::MatrixXd::Zero(1, 1));
    std::vector<Eigen::VectorXd> x0 = {Eigen::VectorXd::Constant(1, 3.0),
                                       Eigen::VectorXd::Zero(1)};
    const SimulationResult r = integrate_agents(dyn, topo, tree, gains, x0, 0.1, 2.0);
    CHECK(r.consensusError.minCoeff() == 3.0);
    CHECK(r.consensusError.maxCoeff() == 3.0);
    CHECK_FALSE(consensus_verdict(r, 1e-4));
    CHECK(consensus_verdict(r, 0.75));  // 3 <= 0.75 * (1 + 3)
}

TEST_CASE("root feedback simulation tracks the root's motion") {
    const Scenario s = example2_k6zero_scenario();
    const Prepared p = prepare(s);
    const SimulationResult r = integrate_agents(p.dyn, p.topo, p.tree, p.gains, p.x0,
                                                p.sim.dt, p.sim.T);
    CHECK(consensus_verdict(r, p.sim.tol));

    // With K_6 = 0 the root's control vanishes and it follows the rotation
    // generated by A from its own initial state.
    CHECK(r.controls.col(5).cwiseAbs().maxCoeff() == 0.0);
    const double a0 = p.x0[5](0), b0 = p.x0[5](1);
    double worst = 0.0;
    for (Eigen::Index k = 0; k < r.samples(); ++k) {
        const double t = r.times(k);
        const Eigen::Vector2d expected(a0 * std::cos(t) + b0 * std::sin(t),
                                       -a0 * std::sin(t) + b0 * std::cos(t));
        worst = std::max(worst, (r.agentState(k, 6) - expected).cwiseAbs().maxCoeff());
    }
    CHECK(worst <= 1e-6);
}
