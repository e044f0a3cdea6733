#include "consensus/graph.hpp"

#include <algorithm>
#include <deque>
#include <string>

namespace consensus {

Topology Topology::fromWeights(Eigen::MatrixXd W) {
    if (W.rows() != W.cols())
        throw DimensionMismatch("topology weight matrix must be square, got " +
                                std::to_string(W.rows()) + "x" + std::to_string(W.cols()));
    if (W.rows() < 2)
        throw DimensionMismatch("topology needs at least 2 vertices");
    for (Eigen::Index i = 0; i < W.rows(); ++i) {
        for (Eigen::Index j = 0; j < W.cols(); ++j) {
            const double w = W(i, j);
            if (!std::isfinite(w) || w < 0.0)
                throw DimensionMismatch("weight w_" + std::to_string(i + 1) +
                                        std::to_string(j + 1) + " must be finite and >= 0");
        }
        if (W(i, i) != 0.0)
            throw DimensionMismatch("self-loop weight w_" + std::to_string(i + 1) +
                                    std::to_string(i + 1) + " must be zero");
    }
    return Topology(std::move(W));
}

std::vector<int> Topology::neighbors(int i) const {
    std::vector<int> out;
    for (int j = 1; j <= N(); ++j)
        if (W_(i - 1, j - 1) > 0.0) out.push_back(j);
    return out;
}

namespace {

// Breadth-first reachability from r along edges (j -> i) when w_ij > 0;
// returns the parent map (parent[r] = 0) or empty when not all reached.
// Queue order is FIFO with successors scanned in ascending id, which fixes
// both the parent choice and the visit order deterministically.
std::vector<int> bfsParents(const Topology& topo, int r, std::vector<int>* visitOrder) {
    const int N = topo.N();
    std::vector<int> parent(N + 1, -1);
    std::deque<int> queue{r};
    parent[r] = 0;
    int reached = 1;
    while (!queue.empty()) {
        const int v = queue.front();
        queue.pop_front();
        if (visitOrder) visitOrder->push_back(v);
        for (int i = 1; i <= N; ++i) {
            if (parent[i] == -1 && topo.hasEdge(v, i)) {
                parent[i] = v;
                queue.push_back(i);
                ++reached;
            }
        }
    }
    if (reached != N) return {};
    return parent;
}

} // namespace

std::vector<int> find_roots(const Topology& topo) {
    std::vector<int> roots;
    for (int r = 1; r <= topo.N(); ++r)
        if (!bfsParents(topo, r, nullptr).empty()) roots.push_back(r);
    return roots;
}

SpanningTree extract_dst(const Topology& topo, std::optional<int> root) {
    const int N = topo.N();
    int r = 0;
    if (root) {
        r = *root;
        if (r < 1 || r > N)
            throw NoSpanningTree("requested root " + std::to_string(r) + " is not a vertex");
    } else {
        const auto roots = find_roots(topo);
        if (roots.empty()) throw NoSpanningTree("topology has no directed spanning tree");
        r = roots.front();
    }
    const auto parent = bfsParents(topo, r, nullptr);
    if (parent.empty())
        throw NoSpanningTree("vertex " + std::to_string(r) + " does not reach every vertex");

    SpanningTree tree;
    tree.N = N;
    tree.root = r;
    tree.parentExt = parent;
    tree.edgeWeightExt.assign(N + 1, 0.0);
    tree.perm.resize(N + 1);
    tree.invPerm.resize(N + 1);
    tree.perm[0] = tree.invPerm[0] = 0;
    for (int i = 1; i <= N; ++i) {
        tree.perm[i] = tree.invPerm[i] = i;
        if (i != r) tree.edgeWeightExt[i] = topo.weight(i, parent[i]);
    }
    return tree;
}

int SpanningTree::depthInternal(int i) const {
    int ext = invPerm[i];
    int depth = 0;
    while (ext != root) {
        ext = parentExt[ext];
        ++depth;
    }
    return depth;
}

bool SpanningTree::conforming() const {
    if (perm[root] != N) return false;
    for (int ext = 1; ext <= N; ++ext) {
        if (ext == root) continue;
        if (perm[parentExt[ext]] <= perm[ext]) return false;
    }
    return true;
}

std::vector<std::pair<int, int>> SpanningTree::fundamentalEdges() const {
    std::vector<std::pair<int, int>> edges;
    edges.reserve(N - 1);
    for (int i = 1; i < N; ++i) {
        const int child = invPerm[i];
        edges.emplace_back(parentExt[child], child);
    }
    return edges;
}

SpanningTree renumber(const SpanningTree& tree) {
    if (tree.conforming()) return tree;

    // Breadth-first visit order from the root along tree edges, ascending-id
    // ties; the reverse of that order is the internal numbering, so the root
    // lands on N and every parent outranks its children.
    const int N = tree.N;
    std::vector<std::vector<int>> children(N + 1);
    for (int i = 1; i <= N; ++i)
        if (i != tree.root) children[tree.parentExt[i]].push_back(i);
    for (auto& c : children) std::sort(c.begin(), c.end());

    std::vector<int> order;
    order.reserve(N);
    std::deque<int> queue{tree.root};
    while (!queue.empty()) {
        const int v = queue.front();
        queue.pop_front();
        order.push_back(v);
        for (int c : children[v]) queue.push_back(c);
    }

    SpanningTree out = tree;
    for (int t = 0; t < N; ++t) {
        const int ext = order[t];
        out.perm[ext] = N - t;
        out.invPerm[N - t] = ext;
    }
    return out;
}

IncidenceMatrix incidence_matrix(const SpanningTree& tree) {
    const int N = tree.N;
    Eigen::MatrixXi P0 = Eigen::MatrixXi::Zero(N, N - 1);
    for (int j = 1; j < N; ++j) {
        P0(j - 1, j - 1) = -1;
        P0(tree.parentInternal(j) - 1, j - 1) = 1;
    }
    return IncidenceMatrix{std::move(P0)};
}

Eigen::RowVectorXi gamma_vector(const SpanningTree& tree, int j, int i) {
    const int N = tree.N;
    if (i < 1 || i > N || j < 1 || j > N)
        throw DimensionMismatch("gamma_vector needs vertices in 1..N");

    // Paths from each vertex up to the root, as external ids (vertex first).
    const auto pathUp = [&](int v) {
        std::vector<int> p{v};
        while (v != tree.root) {
            v = tree.parentExt[v];
            p.push_back(v);
        }
        return p;
    };
    std::vector<int> pi = pathUp(i);
    std::vector<int> pj = pathUp(j);

    // Strip the common tail; the last stripped vertex is the lowest common
    // ancestor, and what remains of each path is LCA -> vertex (exclusive).
    while (!pi.empty() && !pj.empty() && pi.back() == pj.back()) {
        pi.pop_back();
        pj.pop_back();
    }

    Eigen::RowVectorXi g = Eigen::RowVectorXi::Zero(N - 1);
    for (int v : pi) g(tree.internalOf(v) - 1) += 1;
    for (int v : pj) g(tree.internalOf(v) - 1) -= 1;
    return g;
}

InfoFlowMatrix info_flow_matrix(const Topology& topo, const SpanningTree& tree, int i,
                                InfoMode mode) {
    const int N = tree.N;
    Eigen::MatrixXi Gamma = Eigen::MatrixXi::Zero(N, N - 1);
    if (mode == InfoMode::FullNeighbor) {
        for (int j : topo.neighbors(i))
            Gamma.row(tree.internalOf(j) - 1) = gamma_vector(tree, j, i);
    } else if (i != tree.root) {
        const int iInt = tree.internalOf(i);
        Gamma(tree.parentInternal(iInt) - 1, iInt - 1) = 1;
    }
    return InfoFlowMatrix{std::move(Gamma), i};
}

Eigen::MatrixXd internal_weights(const Topology& topo, const SpanningTree& tree) {
    const int N = tree.N;
    Eigen::MatrixXd Wint(N, N);
    for (int a = 1; a <= N; ++a)
        for (int b = 1; b <= N; ++b)
            Wint(a - 1, b - 1) = topo.weight(tree.externalOf(a), tree.externalOf(b));
    return Wint;
}

int default_root_neighbor(const Topology& topo, const SpanningTree& tree) {
    int best = 0;
    int bestDepth = -1;
    for (int cand : topo.neighbors(tree.root)) {
        const int depth = tree.depthInternal(tree.internalOf(cand));
        if (bestDepth < 0 || depth < bestDepth) {
            bestDepth = depth;
            best = cand;
        }
    }
    if (best == 0)
        throw MissingRootPath("root " + std::to_string(tree.root) + " has no in-neighbors");
    return best;
}

} // namespace consensus
