#include "consensus/simulate.hpp"

#include <cmath>
#include <string>

namespace consensus {

namespace {

constexpr double kDivergenceGuard = 1e12;

Eigen::Index sampleCount(double dt, double T) {
    if (!(dt > 0.0) || T < dt)
        throw DimensionMismatch("integration needs dt > 0 and T >= dt");
    // floor with a tiny forgiveness so T = k*dt lands on k steps exactly.
    return static_cast<Eigen::Index>(std::floor(T / dt + 1e-9)) + 1;
}

void guardFinite(const Eigen::VectorXd& state, double t) {
    if (!state.allFinite() || state.cwiseAbs().maxCoeff() > kDivergenceGuard)
        throw NonFiniteState("state diverged beyond 1e12 at t = " + std::to_string(t));
}

// One classical RK4 step of x' = f(x).
template <typename F>
Eigen::VectorXd rk4Step(const F& f, const Eigen::VectorXd& x, double dt) {
    const Eigen::VectorXd k1 = f(x);
    const Eigen::VectorXd k2 = f(x + 0.5 * dt * k1);
    const Eigen::VectorXd k3 = f(x + 0.5 * dt * k2);
    const Eigen::VectorXd k4 = f(x + dt * k3);
    return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

} // namespace

SimulationResult integrate_agents(const AgentDynamics& dyn, const Topology& topo,
                                  const SpanningTree& tree, const GainSet& gains,
                                  const std::vector<Eigen::VectorXd>& x0, double dt, double T) {
    const int N = tree.N, n = dyn.n(), m = dyn.m();
    if (topo.N() != N)
        throw DimensionMismatch("topology and tree sizes disagree");
    if (static_cast<int>(gains.K.size()) != N)
        throw DimensionMismatch("gain set size must equal the agent count");
    if (static_cast<int>(x0.size()) != N)
        throw DimensionMismatch("expected " + std::to_string(N) + " initial states");
    for (const auto& x : x0)
        if (x.size() != n) throw DimensionMismatch("each initial state must have length n");
    if (gains.mode == ProtocolMode::DstWithRootFeedback && gains.rootPath.empty())
        throw MissingRootPath("DstWithRootFeedback needs a root path");

    const int rootNeighborExt = gains.mode == ProtocolMode::DstWithRootFeedback
                                    ? tree.externalOf(gains.rootPath.back())
                                    : 0;

    // Control of external agent e given the stacked external-order state.
    const auto agentOf = [&](const Eigen::VectorXd& X, int e) {
        return X.segment(static_cast<Eigen::Index>(e - 1) * n, n);
    };
    const auto controlOf = [&](const Eigen::VectorXd& X, int e) -> Eigen::VectorXd {
        const Eigen::MatrixXd& K = gains.K[tree.internalOf(e) - 1];
        if (gains.mode == ProtocolMode::FullNeighbor) {
            Eigen::VectorXd z = Eigen::VectorXd::Zero(n);
            for (int j : topo.neighbors(e))
                z += topo.weight(e, j) * (agentOf(X, j) - agentOf(X, e));
            return K * z;
        }
        if (e != tree.root)
            return K * (tree.edgeWeightExt[e] * (agentOf(X, tree.parentExt[e]) - agentOf(X, e)));
        if (gains.mode == ProtocolMode::DstWithRootFeedback)
            return K * (gains.rootNeighborWeight *
                        (agentOf(X, rootNeighborExt) - agentOf(X, e)));
        return Eigen::VectorXd::Zero(m);
    };
    const auto f = [&](const Eigen::VectorXd& X) {
        Eigen::VectorXd dX(N * n);
        for (int e = 1; e <= N; ++e)
            dX.segment(static_cast<Eigen::Index>(e - 1) * n, n) =
                dyn.A * agentOf(X, e) + dyn.B * controlOf(X, e);
        return dX;
    };

    const Eigen::Index samples = sampleCount(dt, T);
    SimulationResult result;
    result.N = N;
    result.n = n;
    result.m = m;
    result.times.resize(samples);
    result.agents.resize(samples, static_cast<Eigen::Index>(N) * n);
    result.edges.resize(samples, static_cast<Eigen::Index>(N - 1) * n);
    result.controls.resize(samples, static_cast<Eigen::Index>(N) * m);
    result.consensusError.resize(samples);

    Eigen::VectorXd X(static_cast<Eigen::Index>(N) * n);
    for (int e = 1; e <= N; ++e) X.segment(static_cast<Eigen::Index>(e - 1) * n, n) = x0[e - 1];

    std::vector<Eigen::VectorXd> states(N);
    for (Eigen::Index k = 0; k < samples; ++k) {
        const double t = k * dt;
        guardFinite(X, t);
        result.times(k) = t;
        result.agents.row(k) = X.transpose();
        for (int e = 1; e <= N; ++e) {
            states[e - 1] = agentOf(X, e);
            result.controls.row(k).segment(static_cast<Eigen::Index>(e - 1) * m, m) =
                controlOf(X, e).transpose();
        }
        result.edges.row(k) = agent_to_edge(tree, states).transpose();

        double eps = 0.0;
        for (int a = 0; a < N; ++a)
            for (int b = a + 1; b < N; ++b)
                eps = std::max(eps, (states[a] - states[b]).norm());
        result.consensusError(k) = eps;

        if (k + 1 < samples) X = rk4Step(f, X, dt);
    }
    return result;
}

Eigen::MatrixXd integrate_edges(const Eigen::MatrixXd& M, const Eigen::VectorXd& y0, double dt,
                                double T) {
    if (M.rows() != M.cols() || M.rows() != y0.size())
        throw DimensionMismatch("edge matrix and initial state sizes disagree");
    const Eigen::Index samples = sampleCount(dt, T);
    Eigen::MatrixXd traj(samples, y0.size());
    Eigen::VectorXd y = y0;
    const auto f = [&](const Eigen::VectorXd& v) -> Eigen::VectorXd { return M * v; };
    for (Eigen::Index k = 0; k < samples; ++k) {
        guardFinite(y, k * dt);
        traj.row(k) = y.transpose();
        if (k + 1 < samples) y = rk4Step(f, y, dt);
    }
    return traj;
}

Eigen::VectorXd consensus_error(const SimulationResult& result) {
    Eigen::VectorXd eps(result.samples());
    for (Eigen::Index k = 0; k < result.samples(); ++k) {
        double value = 0.0;
        for (int a = 1; a <= result.N; ++a)
            for (int b = a + 1; b <= result.N; ++b)
                value = std::max(value,
                                 (result.agentState(k, a) - result.agentState(k, b)).norm());
        eps(k) = value;
    }
    return eps;
}

bool consensus_verdict(const SimulationResult& result, double tol) {
    if (result.samples() == 0) return false;
    const double eps0 = result.consensusError(0);
    const double epsT = result.consensusError(result.samples() - 1);
    return epsT <= tol * (1.0 + eps0);
}

} // namespace consensus
