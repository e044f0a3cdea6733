#include "consensus/synthesis.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <random>
#include <string>

namespace consensus {

namespace {

int numericalRank(const Eigen::MatrixXd& M) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(M);
    const Eigen::VectorXd sv = svd.singularValues();
    if (sv.size() == 0) return 0;
    const double threshold = static_cast<double>(std::max(M.rows(), M.cols())) *
                             std::numeric_limits<double>::epsilon() * sv(0);
    return static_cast<int>((sv.array() > threshold).count());
}

Eigen::MatrixXd controllabilityMatrix(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B) {
    const Eigen::Index n = A.rows(), m = B.cols();
    Eigen::MatrixXd C(n, n * m);
    Eigen::MatrixXd power = B;
    for (Eigen::Index k = 0; k < n; ++k) {
        C.middleCols(k * m, m) = power;
        power = A * power;
    }
    return C;
}

bool controllable(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B) {
    return numericalRank(controllabilityMatrix(A, B)) == A.rows();
}

void validateTargets(const std::vector<std::complex<double>>& targets, Eigen::Index n,
                     bool requireStable) {
    if (static_cast<Eigen::Index>(targets.size()) != n)
        throw BadTargets("expected " + std::to_string(n) + " target poles, got " +
                         std::to_string(targets.size()));
    std::vector<std::complex<double>> pool = targets;
    for (const auto& t : targets) {
        if (requireStable && t.real() >= 0.0)
            throw BadTargets("target poles must have negative real parts");
        if (std::abs(t.imag()) <= 1e-12) continue;
        const std::complex<double> want = std::conj(t);
        const auto it = std::find_if(pool.begin(), pool.end(), [&](const auto& p) {
            return std::abs(p - want) <= 1e-9;
        });
        if (it == pool.end())
            throw BadTargets("target poles are not closed under conjugation");
    }
}

// phi(A) = prod_t (A - t I), real for a conjugate-closed target set.
Eigen::MatrixXd characteristicShift(const Eigen::MatrixXd& A,
                                    const std::vector<std::complex<double>>& targets) {
    const Eigen::Index n = A.rows();
    Eigen::MatrixXcd M = Eigen::MatrixXcd::Identity(n, n);
    const Eigen::MatrixXcd Ac = A.cast<std::complex<double>>();
    for (const auto& t : targets)
        M = M * (Ac - t * Eigen::MatrixXcd::Identity(n, n));
    return M.real();
}

// Single-input eigenvalue assignment: K = e_n^T Ctrb^{-1} phi(A).
Eigen::RowVectorXd ackermann(const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                             const std::vector<std::complex<double>>& targets) {
    const Eigen::Index n = A.rows();
    const Eigen::MatrixXd C = controllabilityMatrix(A, b);
    if (numericalRank(C) != n)
        throw Uncontrollable("single-input pair is not controllable");
    Eigen::VectorXd en = Eigen::VectorXd::Zero(n);
    en(n - 1) = 1.0;
    const Eigen::VectorXd lastRow = C.transpose().fullPivLu().solve(en);
    return lastRow.transpose() * characteristicShift(A, targets);
}

bool spectrumMatches(const Eigen::MatrixXd& M, const std::vector<std::complex<double>>& targets,
                     double tol) {
    const Eigen::VectorXcd eigs = Eigen::EigenSolver<Eigen::MatrixXd>(M, false).eigenvalues();
    std::vector<bool> used(eigs.size(), false);
    for (const auto& t : targets) {
        double best = tol;
        Eigen::Index bestIdx = -1;
        for (Eigen::Index i = 0; i < eigs.size(); ++i) {
            if (used[i]) continue;
            const double d = std::abs(eigs(i) - t);
            if (d <= best) {
                best = d;
                bestIdx = i;
            }
        }
        if (bestIdx < 0) return false;
        used[bestIdx] = true;
    }
    return true;
}

} // namespace

Eigen::MatrixXd place_poles(const Eigen::MatrixXd& A, const Eigen::MatrixXd& Bs,
                            const std::vector<std::complex<double>>& targets,
                            std::uint64_t seed) {
    const Eigen::Index n = A.rows(), m = Bs.cols();
    if (A.rows() != A.cols() || Bs.rows() != n)
        throw DimensionMismatch("place_poles needs square A and conforming B");
    validateTargets(targets, n, /*requireStable=*/true);
    if (!controllable(A, Bs))
        throw Uncontrollable("(A, B) fails the controllability rank test");

    if (m == 1) return ackermann(A, Bs.col(0), targets);

    // Multi-input: reduce to a single synthetic input b = Bs q. When that
    // fails for every draw (non-cyclic A), wrap a preliminary random feedback
    // F0 so that A - Bs F0 is cyclic, place on the shifted pair, and undo.
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uniform(-1.0, 1.0);
    const auto draw = [&](Eigen::Index rows, Eigen::Index cols) {
        Eigen::MatrixXd M(rows, cols);
        for (Eigen::Index r = 0; r < rows; ++r)
            for (Eigen::Index c = 0; c < cols; ++c) M(r, c) = uniform(rng);
        return M;
    };

    for (int attempt = 0; attempt < 50; ++attempt) {
        const Eigen::VectorXd q = draw(m, 1);
        const Eigen::MatrixXd F0 = attempt < 10
                                       ? Eigen::MatrixXd::Zero(m, n).eval()
                                       : (0.1 * draw(m, n)).eval();
        const Eigen::MatrixXd Ashift = A - Bs * F0;
        const Eigen::VectorXd b = Bs * q;
        if (!controllable(Ashift, b)) continue;
        const Eigen::RowVectorXd k1 = ackermann(Ashift, b, targets);
        const Eigen::MatrixXd K = F0 + q * k1;
        if (spectrumMatches(A - Bs * K, targets, 1e-6)) return K;
    }
    throw Uncontrollable("no input combination yielded a controllable single-input pair");
}

std::vector<std::complex<double>> default_targets(const Eigen::MatrixXd& A, double depth) {
    const Eigen::Index n = A.rows();
    const Eigen::VectorXcd eigs = Eigen::EigenSolver<Eigen::MatrixXd>(A, false).eigenvalues();

    // One representative per conjugate pair; real eigenvalues count singly.
    std::vector<std::complex<double>> reps;
    for (Eigen::Index i = 0; i < eigs.size(); ++i)
        if (eigs(i).imag() >= -1e-9) reps.push_back(eigs(i));
    std::sort(reps.begin(), reps.end(), [](const auto& a, const auto& b) {
        return a.imag() != b.imag() ? a.imag() > b.imag() : a.real() < b.real();
    });

    std::vector<std::complex<double>> targets;
    int q = 0;
    for (const auto& rep : reps) {
        if (static_cast<Eigen::Index>(targets.size()) >= n) break;
        const double re = -(depth + 0.5 * q);
        if (rep.imag() > 1e-9 && n - static_cast<Eigen::Index>(targets.size()) >= 2) {
            targets.emplace_back(re, rep.imag());
            targets.emplace_back(re, -rep.imag());
        } else {
            targets.emplace_back(re, 0.0);
        }
        ++q;
    }
    while (static_cast<Eigen::Index>(targets.size()) < n)
        targets.emplace_back(-(depth + 0.5 * q++), 0.0);
    return targets;
}

namespace {

std::vector<std::complex<double>> targetsFor(const PoleTargets& targets,
                                             const Eigen::MatrixXd& A, int externalId) {
    const auto it = targets.perAgent.find(externalId);
    if (it != targets.perAgent.end()) return it->second;
    if (!targets.common.empty()) return targets.common;
    return default_targets(A);
}

} // namespace

GainSet design_theorem2(const AgentDynamics& dyn, const Topology& topo,
                        const SpanningTree& tree, const PoleTargets& targets,
                        std::uint64_t seed) {
    if (!topo.neighbors(tree.root).empty())
        throw RootHasNeighbors("root " + std::to_string(tree.root) +
                               " has in-neighbors; Theorem 2 needs a passive root "
                               "(use design_theorem3)");
    const int N = tree.N;
    GainSet gains;
    gains.mode = ProtocolMode::DstOnly;
    gains.K.resize(N);
    for (int i = 1; i < N; ++i) {
        const Eigen::MatrixXd Bw = tree.weightInternal(i) * dyn.B;
        gains.K[i - 1] = place_poles(dyn.A, Bw, targetsFor(targets, dyn.A, tree.externalOf(i)),
                                     seed);
    }
    gains.K[N - 1] = Eigen::MatrixXd::Zero(dyn.m(), dyn.n());
    return gains;
}

namespace {

double infNorm(const Eigen::MatrixXd& M) {
    return M.rows() == 0 ? 0.0 : M.cwiseAbs().rowwise().sum().maxCoeff();
}

double minAbsRowSum(const Eigen::MatrixXcd& M) {
    return M.cwiseAbs().rowwise().sum().minCoeff();
}

double reciprocalResolventNorm(const Eigen::MatrixXcd& shifted) {
    const Eigen::MatrixXcd inv =
        shifted.partialPivLu().solve(Eigen::MatrixXcd::Identity(shifted.rows(), shifted.cols()));
    if (!inv.allFinite()) return 0.0;
    const double norm = inv.cwiseAbs().rowwise().sum().maxCoeff();
    return norm > 0.0 ? 1.0 / norm : 0.0;
}

struct GridScan {
    double surrogateMin = std::numeric_limits<double>::infinity();
    double surrogateOmega = 0.0;
    double resolventMin = std::numeric_limits<double>::infinity();
    double resolventOmega = 0.0;
};

// Scans both circle quantities over [-omegaMax, omegaMax], then refines each
// minimizer with a 10x-denser pass over a +/- 2-step window.
GridScan scanFrequencies(const Eigen::MatrixXd& D, double omegaMax, int gridPoints) {
    const Eigen::MatrixXcd Dc = D.cast<std::complex<double>>();
    const Eigen::MatrixXcd I = Eigen::MatrixXcd::Identity(D.rows(), D.cols());
    GridScan scan;
    const auto probe = [&](double omega) {
        const Eigen::MatrixXcd shifted = Dc - std::complex<double>(0.0, omega) * I;
        const double s = minAbsRowSum(shifted);
        if (s < scan.surrogateMin) {
            scan.surrogateMin = s;
            scan.surrogateOmega = omega;
        }
        const double r = reciprocalResolventNorm(shifted);
        if (r < scan.resolventMin) {
            scan.resolventMin = r;
            scan.resolventOmega = omega;
        }
    };

    const int points = std::max(gridPoints, 3);
    const double step = 2.0 * omegaMax / (points - 1);
    for (int k = 0; k < points; ++k) probe(-omegaMax + k * step);

    for (const double center : {scan.surrogateOmega, scan.resolventOmega}) {
        const double fineStep = step / 10.0;
        for (int k = -20; k <= 20; ++k) probe(center + k * fineStep);
    }
    return scan;
}

double spectralAbscissa(const Eigen::MatrixXd& M) {
    return Eigen::EigenSolver<Eigen::MatrixXd>(M, false)
        .eigenvalues()
        .real()
        .maxCoeff();
}

} // namespace

GershgorinReport gershgorin_check(const Eigen::MatrixXd& M, int blockSize, CircleMode mode,
                                  int gridPoints) {
    if (M.rows() != M.cols() || blockSize < 1 || M.rows() % blockSize != 0)
        throw NonSquareBlocks("matrix of size " + std::to_string(M.rows()) + "x" +
                              std::to_string(M.cols()) + " is not square with block size " +
                              std::to_string(blockSize));
    const int blocks = static_cast<int>(M.rows()) / blockSize;

    GershgorinReport report;
    report.selected = mode;
    report.gridPoints = gridPoints;
    report.surrogateAll = true;
    report.resolventAll = true;
    for (int j = 0; j < blocks; ++j) {
        GershgorinRow row;
        row.row = j + 1;
        const Eigen::MatrixXd D = M.block(j * blockSize, j * blockSize, blockSize, blockSize);
        for (int k = 0; k < blocks; ++k)
            if (k != j)
                row.radius += infNorm(M.block(j * blockSize, k * blockSize, blockSize, blockSize));

        row.diagonalAbscissa = spectralAbscissa(D);
        row.diagonalHurwitz = row.diagonalAbscissa < 0.0;

        const GridScan scan = scanFrequencies(D, infNorm(D) + row.radius + 1.0, gridPoints);
        row.surrogateMin = scan.surrogateMin;
        row.surrogateOmega = scan.surrogateOmega;
        row.resolventMin = scan.resolventMin;
        row.resolventOmega = scan.resolventOmega;
        row.surrogatePass = row.diagonalHurwitz && row.surrogateMin > row.radius;
        row.resolventPass = row.diagonalHurwitz && row.resolventMin > row.radius;

        report.surrogateAll = report.surrogateAll && row.surrogatePass;
        report.resolventAll = report.resolventAll && row.resolventPass;
        report.rows.push_back(row);
    }

    report.spectralAbscissa = spectralAbscissa(M);
    report.eigenvalueCertificate = report.spectralAbscissa < 0.0;
    report.selectedPass =
        mode == CircleMode::Surrogate ? report.surrogateAll : report.resolventAll;
    return report;
}

namespace {

// Rows whose parent is the root receive the root coupling -w B K_N on every
// path column; everyone else hears only their parent's control.
double designRadius(const SpanningTree& tree, const GainSet& gains, const AgentDynamics& dyn,
                    int node) {
    const int N = tree.N;
    const int parent = tree.parentInternal(node);
    if (parent != N)
        return infNorm(tree.weightInternal(parent) * dyn.B * gains.K[parent - 1]);
    double radius = 0.0;
    const Eigen::MatrixXd rootTerm = gains.rootNeighborWeight * dyn.B * gains.K[N - 1];
    for (int col : gains.rootPath)
        if (col != node) radius += infNorm(rootTerm);
    return radius;
}

Eigen::MatrixXd designDiagonal(const SpanningTree& tree, const GainSet& gains,
                               const AgentDynamics& dyn, int node) {
    Eigen::MatrixXd D = dyn.A - tree.weightInternal(node) * dyn.B * gains.K[node - 1];
    // The first path node is its own root-coupling column.
    if (tree.parentInternal(node) == tree.N &&
        std::find(gains.rootPath.begin(), gains.rootPath.end(), node) != gains.rootPath.end())
        D -= gains.rootNeighborWeight * dyn.B * gains.K[tree.N - 1];
    return D;
}

bool clearsCircle(const Eigen::MatrixXd& D, double radius, const Theorem3Params& params) {
    if (spectralAbscissa(D) >= 0.0) return false;
    const GridScan scan = scanFrequencies(D, infNorm(D) + radius + 1.0, params.gridPoints);
    const double value =
        params.checkMode == CircleMode::Surrogate ? scan.surrogateMin : scan.resolventMin;
    return value > radius * (1.0 + params.clearanceMargin) + 1e-9;
}

} // namespace

Theorem3Result design_theorem3(const AgentDynamics& dyn, const Topology& topo,
                               const SpanningTree& tree, const Theorem3Params& params) {
    const int N = tree.N;
    const int neighbor =
        params.rootNeighbor ? *params.rootNeighbor : default_root_neighbor(topo, tree);

    // Non-root design order: breadth-first from the root, children ascending,
    // so every parent gain exists before its children need the radius.
    std::vector<std::vector<int>> children(N + 1);
    for (int i = 1; i < N; ++i) children[tree.parentInternal(i)].push_back(i);
    for (auto& c : children) std::sort(c.begin(), c.end());
    std::vector<int> order;
    std::deque<int> queue{N};
    while (!queue.empty()) {
        const int v = queue.front();
        queue.pop_front();
        if (v != N) order.push_back(v);
        for (int c : children[v]) queue.push_back(c);
    }

    GainSet gains;
    gains.mode = ProtocolMode::DstWithRootFeedback;
    gains.K.assign(N, Eigen::MatrixXd::Zero(dyn.m(), dyn.n()));
    set_root_path(gains, topo, tree, neighbor);

    // Stage 1: shallow root gain, fixed across retries.
    gains.K[N - 1] = place_poles(dyn.A, gains.rootNeighborWeight * dyn.B,
                                 default_targets(dyn.A, params.rootDepth), params.seed);

    GershgorinReport lastReport;
    for (int iteration = 0; iteration < params.maxIterations; ++iteration) {
        const double baseDepth =
            params.initialDepth * std::pow(params.growthFactor, iteration);

        // Stages 2-3: clear each non-root circle locally, deepening as needed.
        for (int node : order) {
            double depth = baseDepth;
            for (int attempt = 0; attempt < params.maxIterations; ++attempt) {
                gains.K[node - 1] =
                    place_poles(dyn.A, tree.weightInternal(node) * dyn.B,
                                default_targets(dyn.A, depth), params.seed);
                if (clearsCircle(designDiagonal(tree, gains, dyn, node),
                                 designRadius(tree, gains, dyn, node), params))
                    break;
                depth *= params.growthFactor;
            }
        }

        const Eigen::MatrixXd M = assemble_dst_closed_loop(dyn, topo, tree, gains);
        lastReport = gershgorin_check(M, dyn.n(), params.checkMode, params.gridPoints);
        if (lastReport.selectedPass && lastReport.eigenvalueCertificate)
            return Theorem3Result{std::move(gains), std::move(lastReport), iteration};
    }
    throw SynthesisFailed("staged Gershgorin synthesis did not converge in " +
                              std::to_string(params.maxIterations) + " iterations",
                          std::move(lastReport));
}

} // namespace consensus
