#pragma once

#include <vector>

#include <Eigen/Dense>

#include "consensus/graph.hpp"

namespace consensus {

// Identical linear agent dynamics x_i' = A x_i + B u_i.
struct AgentDynamics {
    Eigen::MatrixXd A;  // n x n
    Eigen::MatrixXd B;  // n x m

    int n() const { return static_cast<int>(A.rows()); }
    int m() const { return static_cast<int>(B.cols()); }

    // Validates squareness, consistency and finiteness.
    static AgentDynamics make(Eigen::MatrixXd A, Eigen::MatrixXd B);
};

enum class ProtocolMode { FullNeighbor, DstOnly, DstWithRootFeedback };

// A full set of per-agent feedback gains. K is indexed by internal agent id
// (K[i-1] drives internal agent i, root last); scenario-level external-id
// gain lists are converted by make_gain_set once a renumbered tree exists.
struct GainSet {
    std::vector<Eigen::MatrixXd> K;  // N matrices, each m x n
    ProtocolMode mode = ProtocolMode::DstOnly;

    // DstWithRootFeedback only: the tree path n_1, ..., n_l from just below
    // the root down to the root's chosen in-neighbor n_l, internal ids.
    std::vector<int> rootPath;
    // w_{N, n_l}: weight of the information edge the root listens on.
    double rootNeighborWeight = 0.0;
};

// The edge-coordinate system y' = A* y + B* u, z_i = C_i y: A* = I (x) A,
// B_i = p_i (x) B with p_i the i-th column of P0^T, C_i = (w_i Gamma_i) (x) I_n.
struct TransformedSystem {
    Eigen::MatrixXd Astar;                 // (N-1)n x (N-1)n
    Eigen::MatrixXd Bstar;                 // (N-1)n x Nm, agent column blocks
    std::vector<Eigen::MatrixXd> Cblocks;  // N blocks, each n x (N-1)n
    Eigen::MatrixXi P0;                    // provenance: incidence matrix
    std::vector<Eigen::MatrixXi> Gammas;   // provenance: per-agent info-flow
    Eigen::MatrixXd Wint;                  // weights permuted to internal ids
    int N = 0, n = 0, m = 0;
    InfoMode mode = InfoMode::FullNeighbor;

    // Agent i's input block B_i = p_i (x) B (internal id).
    Eigen::MatrixXd Bblock(int i) const { return Bstar.middleCols((i - 1) * m, m); }
};

// Builds (C*, A*, B*) for the given information mode. Throws
// DimensionMismatch when topology and tree sizes disagree.
TransformedSystem build_transformed_system(const AgentDynamics& dyn, const Topology& topo,
                                           const SpanningTree& tree, InfoMode mode);

// Closed-loop edge matrix A* + sum_i B_i K_i C_i. Computed via the Kronecker
// sum route sum_i (p_i w_i Gamma_i) (x) (B K_i); the product route
// B* diag(K_i) C* is checked against it to 1e-12 as a structural self-test.
Eigen::MatrixXd assemble_closed_loop(const TransformedSystem& ts, const GainSet& gains);

// Row-wise closed-loop assembly for the DST protocols: block row j carries
// A - w_{j,k_j} B K_j on the diagonal, the parent control +w_{k_j,kappa(k_j)}
// B K_{k_j} at column k_j (absent when k_j = N under DstOnly), and under
// DstWithRootFeedback the root control -w_{N,n_l} B K_N at every column
// n_1..n_l of the rows whose parent is the root.
Eigen::MatrixXd assemble_dst_closed_loop(const AgentDynamics& dyn, const Topology& topo,
                                         const SpanningTree& tree, const GainSet& gains);

// Stacks the fundamental edge states y_i = x_{k_i} - x_i (internal edge
// order) from the external-id-ordered list of agent states.
Eigen::VectorXd agent_to_edge(const SpanningTree& tree, const std::vector<Eigen::VectorXd>& xAll);

// Derives the root path n_1..n_l (internal ids, starting just below the root)
// for the given root in-neighbor, plus w_{N,n_l}, and stores both in `gains`.
// Throws MissingRootPath when the vertex is not an in-neighbor of the root.
void set_root_path(GainSet& gains, const Topology& topo, const SpanningTree& tree,
                   int rootNeighborExt);

} // namespace consensus
