#include "consensus/fixtures.hpp"

namespace consensus {

namespace {

AgentDynamics oscillator() {
    Eigen::MatrixXd A(2, 2);
    A << 0, 1, -1, 0;
    Eigen::MatrixXd B(2, 1);
    B << 1, 1;
    return AgentDynamics::make(std::move(A), std::move(B));
}

Eigen::RowVectorXd gain(double a, double b) {
    Eigen::RowVectorXd K(2);
    K << a, b;
    return K;
}

Topology example2Topology() {
    // Spanning tree edges (6,5),(6,4),(4,3),(5,2),(5,1) plus the information
    // edge 1 -> 6 that makes the root a listener; all weights 1.
    Eigen::MatrixXd W = Eigen::MatrixXd::Zero(6, 6);
    W(0, 4) = 1;  // w_15
    W(1, 4) = 1;  // w_25
    W(2, 3) = 1;  // w_34
    W(3, 5) = 1;  // w_46
    W(4, 5) = 1;  // w_56
    W(5, 0) = 1;  // w_61
    return Topology::fromWeights(std::move(W));
}

Scenario example2Base() {
    GainConfig gains;
    gains.mode = ProtocolMode::DstWithRootFeedback;
    gains.rootNeighbor = 1;
    gains.K = {gain(4, 0),     gain(2.625, 0.375), gain(2.5, 0.5),
               gain(2.5, 0.5), gain(1.5, 0.5),     gain(1, 0)};

    SimConfig sim;
    sim.dt = 0.01;
    sim.T = 20.0;
    sim.tol = 1e-3;

    return Scenario{"example2",         oscillator(), example2Topology(), 6,
                    std::move(gains), std::move(sim), std::nullopt};
}

} // namespace

Scenario example1_scenario() {
    Eigen::MatrixXd W = Eigen::MatrixXd::Zero(4, 4);
    W(0, 1) = 1;  // w_12
    W(0, 2) = 1;  // w_13
    W(1, 0) = 1;  // w_21
    W(1, 2) = 1;  // w_23
    W(2, 3) = 1;  // w_34

    DesignConfig design;
    design.method = "theorem2";
    design.targets.perAgent[1] = {{-1.0, 1.0}, {-1.0, -1.0}};
    design.targets.perAgent[2] = {{-2.0, 1.0}, {-2.0, -1.0}};
    design.targets.perAgent[3] = {{-1.5, 1.0}, {-1.5, -1.0}};

    SimConfig sim;
    sim.dt = 0.01;
    sim.T = 15.0;
    sim.tol = 1e-4;
    sim.x0 = {7.5, 13.8, 14, 9, 0, 6.5, 8, 5.4};

    return Scenario{"example1",
                    oscillator(),
                    Topology::fromWeights(std::move(W)),
                    4,
                    std::nullopt,
                    std::move(sim),
                    std::move(design)};
}

Scenario example2_scenario() {
    Scenario scenario = example2Base();
    scenario.sim.x0 = {7.8, 4, 10, 7, 19, 18, 1, 15, 5.5, 8.2, 11, 19};
    return scenario;
}

Scenario example2_k6zero_scenario() {
    Scenario scenario = example2Base();
    scenario.name = "example2-k6zero";
    scenario.gains->K[5] = gain(0, 0);
    scenario.sim.x0 = {13, 13.5, 12.8, 19, 4.2, 14, 4.8, 2, 12, 9, 9.1, 13};
    return scenario;
}

} // namespace consensus
