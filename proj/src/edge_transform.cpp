#include "consensus/edge_transform.hpp"

#include <algorithm>
#include <string>

#include "consensus/kron.hpp"

namespace consensus {

AgentDynamics AgentDynamics::make(Eigen::MatrixXd A, Eigen::MatrixXd B) {
    if (A.rows() != A.cols() || A.rows() < 1)
        throw DimensionMismatch("A must be square and nonempty");
    if (B.rows() != A.rows() || B.cols() < 1)
        throw DimensionMismatch("B must have " + std::to_string(A.rows()) +
                                " rows and at least one column");
    if (!A.allFinite() || !B.allFinite())
        throw DimensionMismatch("dynamics matrices must be finite");
    return AgentDynamics{std::move(A), std::move(B)};
}

namespace {

void checkGainSet(const GainSet& gains, int N, int n, int m) {
    if (static_cast<int>(gains.K.size()) != N)
        throw DimensionMismatch("gain set holds " + std::to_string(gains.K.size()) +
                                " matrices, expected " + std::to_string(N));
    for (const auto& K : gains.K)
        if (K.rows() != m || K.cols() != n)
            throw DimensionMismatch("each gain must be " + std::to_string(m) + "x" +
                                    std::to_string(n));
}

} // namespace

TransformedSystem build_transformed_system(const AgentDynamics& dyn, const Topology& topo,
                                           const SpanningTree& tree, InfoMode mode) {
    if (topo.N() != tree.N)
        throw DimensionMismatch("topology has " + std::to_string(topo.N()) +
                                " vertices but tree has " + std::to_string(tree.N));
    const int N = tree.N, n = dyn.n(), m = dyn.m();

    TransformedSystem ts;
    ts.N = N;
    ts.n = n;
    ts.m = m;
    ts.mode = mode;
    ts.P0 = incidence_matrix(tree).P0;
    ts.Wint = internal_weights(topo, tree);
    ts.Astar = kron(Eigen::MatrixXd::Identity(N - 1, N - 1), dyn.A);
    ts.Bstar = kron(ts.P0.transpose().cast<double>().eval(), dyn.B);

    ts.Gammas.reserve(N);
    ts.Cblocks.reserve(N);
    const Eigen::MatrixXd In = Eigen::MatrixXd::Identity(n, n);
    for (int i = 1; i <= N; ++i) {
        InfoFlowMatrix flow = info_flow_matrix(topo, tree, tree.externalOf(i), mode);
        Eigen::RowVectorXd wGamma = ts.Wint.row(i - 1) * flow.Gamma.cast<double>();
        ts.Cblocks.push_back(kron(wGamma, In));
        ts.Gammas.push_back(std::move(flow.Gamma));
    }
    return ts;
}

Eigen::MatrixXd assemble_closed_loop(const TransformedSystem& ts, const GainSet& gains) {
    const int N = ts.N, n = ts.n, m = ts.m;
    checkGainSet(gains, N, n, m);

    // Kronecker sum route: A* + sum_i (p_i w_i Gamma_i) (x) (B K_i), where
    // B K_i lives in edge coordinates through B_i K_i C_i.
    Eigen::MatrixXd M = ts.Astar;
    for (int i = 1; i <= N; ++i)
        M += ts.Bblock(i) * gains.K[i - 1] * ts.Cblocks[i - 1];

    // Product route B* diag(K) C*; the two must agree to addition error.
    Eigen::MatrixXd KD = Eigen::MatrixXd::Zero(N * m, N * n);
    Eigen::MatrixXd Cstar(N * n, (N - 1) * n);
    for (int i = 0; i < N; ++i) {
        KD.block(i * m, i * n, m, n) = gains.K[i];
        Cstar.middleRows(i * n, n) = ts.Cblocks[i];
    }
    const Eigen::MatrixXd viaProduct = ts.Astar + ts.Bstar * KD * Cstar;
    const double gap = (M - viaProduct).cwiseAbs().maxCoeff();
    if (gap > 1e-12)
        throw DimensionMismatch("closed-loop assembly routes disagree by " +
                                std::to_string(gap));
    return M;
}

Eigen::MatrixXd assemble_dst_closed_loop(const AgentDynamics& dyn, const Topology& topo,
                                         const SpanningTree& tree, const GainSet& gains) {
    if (gains.mode == ProtocolMode::FullNeighbor)
        throw DimensionMismatch("row-wise assembly covers the DST protocols only");
    const int N = tree.N, n = dyn.n(), m = dyn.m();
    checkGainSet(gains, N, n, m);
    const bool rootFeedback = gains.mode == ProtocolMode::DstWithRootFeedback;
    if (rootFeedback && gains.rootPath.empty())
        throw MissingRootPath("DstWithRootFeedback needs a root path");

    const Eigen::MatrixXd Wint = internal_weights(topo, tree);
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero((N - 1) * n, (N - 1) * n);
    const auto block = [&](int r, int c) { return M.block((r - 1) * n, (c - 1) * n, n, n); };

    // Fixed accumulation order per row: diagonal, then parent, then root.
    for (int j = 1; j < N; ++j) {
        const int kj = tree.parentInternal(j);
        block(j, j) += dyn.A - tree.weightInternal(j) * dyn.B * gains.K[j - 1];
        if (kj != N) {
            // Parent's own control, routed through y_j' = x'_{k_j} - x'_j.
            block(j, kj) += tree.weightInternal(kj) * dyn.B * gains.K[kj - 1];
        } else if (rootFeedback) {
            const Eigen::MatrixXd rootTerm =
                gains.rootNeighborWeight * dyn.B * gains.K[N - 1];
            for (int col : gains.rootPath) block(j, col) -= rootTerm;
        }
    }
    return M;
}

Eigen::VectorXd agent_to_edge(const SpanningTree& tree, const std::vector<Eigen::VectorXd>& xAll) {
    const int N = tree.N;
    if (static_cast<int>(xAll.size()) != N)
        throw DimensionMismatch("expected " + std::to_string(N) + " agent states");
    const Eigen::Index n = xAll.front().size();
    Eigen::VectorXd y((N - 1) * n);
    for (int i = 1; i < N; ++i) {
        const int child = tree.externalOf(i);
        y.segment((i - 1) * n, n) = xAll[tree.parentExt[child] - 1] - xAll[child - 1];
    }
    return y;
}

void set_root_path(GainSet& gains, const Topology& topo, const SpanningTree& tree,
                   int rootNeighborExt) {
    if (!topo.hasEdge(rootNeighborExt, tree.root))
        throw MissingRootPath("vertex " + std::to_string(rootNeighborExt) +
                              " is not an in-neighbor of root " + std::to_string(tree.root));
    // Walk n_l up to the root, then flip so the path reads n_1 .. n_l.
    std::vector<int> path;
    for (int v = rootNeighborExt; v != tree.root; v = tree.parentExt[v])
        path.push_back(tree.internalOf(v));
    std::reverse(path.begin(), path.end());
    gains.rootPath = std::move(path);
    gains.rootNeighborWeight = topo.weight(tree.root, rootNeighborExt);
}

} // namespace consensus
