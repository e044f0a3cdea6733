#pragma once

#include <optional>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "consensus/errors.hpp"

namespace consensus {

// Weighted directed communication topology on vertices 1..N. The edge set is
// implied by the weight matrix: (j -> i) is an edge exactly when w_ij > 0,
// meaning agent i receives agent j's state scaled by w_ij. Vertex ids in this
// type are always external (1-based, as the caller labeled them).
class Topology {
public:
    // Validates and adopts an N x N weight matrix: finite, nonnegative, zero
    // diagonal, N >= 2. Throws DimensionMismatch on violation.
    static Topology fromWeights(Eigen::MatrixXd W);

    int N() const { return static_cast<int>(W_.rows()); }
    const Eigen::MatrixXd& W() const { return W_; }

    // w_ij: the weight agent i applies to neighbor j's information.
    double weight(int i, int j) const { return W_(i - 1, j - 1); }

    // True when (j -> i) is an edge, i.e. j is a neighbor of i.
    bool hasEdge(int j, int i) const { return W_(i - 1, j - 1) > 0.0; }

    // Neighbor set N_i = { j : w_ij > 0 }, ascending.
    std::vector<int> neighbors(int i) const;

private:
    explicit Topology(Eigen::MatrixXd W) : W_(std::move(W)) {}
    Eigen::MatrixXd W_;
};

// A directed spanning tree of a topology, plus the vertex renumbering that
// matrix construction relies on. External ids are the caller's labels;
// internal ids are the renumbered labels under which every non-root vertex i
// satisfies parent(i) > i and the root is N. Fundamental edge e_i is the tree
// edge (k_i -> i) of internal child i, so edges and non-root internal ids
// coincide.
struct SpanningTree {
    int N = 0;
    int root = 0;                        // external id
    std::vector<int> parentExt;          // size N+1; parentExt[root] = 0
    std::vector<double> edgeWeightExt;   // size N+1; w_{i, k_i} by external child id
    std::vector<int> perm;               // size N+1; external id -> internal id
    std::vector<int> invPerm;            // size N+1; internal id -> external id

    int internalOf(int ext) const { return perm[ext]; }
    int externalOf(int internalId) const { return invPerm[internalId]; }

    // Parent of internal vertex i, as an internal id. Requires i != perm[root].
    int parentInternal(int i) const { return perm[parentExt[invPerm[i]]]; }

    // w_{i, k_i} of internal child i.
    double weightInternal(int i) const { return edgeWeightExt[invPerm[i]]; }

    // Number of tree hops from internal vertex i up to the root.
    int depthInternal(int i) const;

    // True when the current perm already satisfies parent(i) > i with the
    // root at internal id N.
    bool conforming() const;

    // Fundamental edges as external (parent, child) pairs, ordered by
    // internal edge index 1..N-1.
    std::vector<std::pair<int, int>> fundamentalEdges() const;
};

// All vertices from which every vertex is reachable along directed edges;
// empty when the topology has no directed spanning tree.
std::vector<int> find_roots(const Topology& topo);

// Breadth-first DST extraction (neighbor ties broken by ascending id). When
// root is omitted the lowest find_roots id is used. The returned tree carries
// the identity permutation; call renumber() before building matrices.
// Throws NoSpanningTree when no root exists or the given root does not reach
// every vertex.
SpanningTree extract_dst(const Topology& topo, std::optional<int> root = std::nullopt);

// Returns a tree whose permutation satisfies the k_i > i invariant with the
// root at internal id N, using the reverse of the breadth-first visit order
// (ascending-id ties). Idempotent: an already-conforming tree is returned
// unchanged.
SpanningTree renumber(const SpanningTree& tree);

// Incidence matrix of the DST over internal ids: N x (N-1), column j has -1
// at row j (child) and +1 at row k_j (parent). Lower triangular on its top
// (N-1) x (N-1) block for conforming trees.
struct IncidenceMatrix {
    Eigen::MatrixXi P0;
};
IncidenceMatrix incidence_matrix(const SpanningTree& tree);

// Lemma-1 gamma vector: the unique row g over {-1,0,1} with
// x_j - x_i = (g (x) I_n) y for the fundamental edge states y. Arguments j, i
// are external ids; entries are indexed by internal fundamental edge. The
// degenerate j = i case yields the zero row.
Eigen::RowVectorXi gamma_vector(const SpanningTree& tree, int j, int i);

// Information flow matrix of agent i (external id): rows indexed by internal
// neighbor id, row of internal neighbor j equal to gamma_vector(j, i) when j
// is a neighbor of i in the topology, zero otherwise. DstOnly mode keeps only
// the parent row as the i-th unit row vector (all rows zero for the root).
enum class InfoMode { FullNeighbor, DstOnly };

struct InfoFlowMatrix {
    Eigen::MatrixXi Gamma;  // N x (N-1), rows internal-indexed
    int agent = 0;          // external id of the agent this matrix belongs to
};
InfoFlowMatrix info_flow_matrix(const Topology& topo, const SpanningTree& tree, int i,
                                InfoMode mode);

// Weight matrix permuted to internal ids: Wint(a, b) = w_{ext(a+1), ext(b+1)}.
// Every matrix-level weight lookup goes through this single permutation.
Eigen::MatrixXd internal_weights(const Topology& topo, const SpanningTree& tree);

// Default root-feedback listening choice: the root's in-neighbor with the
// shortest DST path from the root, ties by ascending external id. Throws
// MissingRootPath when the root has no in-neighbors.
int default_root_neighbor(const Topology& topo, const SpanningTree& tree);

} // namespace consensus
