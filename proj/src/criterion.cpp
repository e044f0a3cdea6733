#include "consensus/criterion.hpp"

#include <algorithm>
#include <cstdlib>
#include <limits>
#include <optional>
#include <random>
#include <thread>

#include "consensus/kron.hpp"

namespace consensus {

std::vector<std::complex<double>> unstable_modes(const Eigen::MatrixXd& A, double tol) {
    const Eigen::VectorXcd eigs = Eigen::EigenSolver<Eigen::MatrixXd>(A, false).eigenvalues();
    std::vector<std::complex<double>> modes;
    for (Eigen::Index i = 0; i < eigs.size(); ++i) {
        const std::complex<double> l = eigs(i);
        if (l.real() < -tol) continue;
        const bool dup = std::any_of(modes.begin(), modes.end(),
                                     [&](const auto& m) { return std::abs(m - l) <= 1e-8; });
        if (!dup) modes.push_back(l);
    }
    std::sort(modes.begin(), modes.end(), [](const auto& a, const auto& b) {
        return a.real() != b.real() ? a.real() < b.real() : a.imag() < b.imag();
    });
    return modes;
}

RankTestResult rank_test(const AgentDynamics& dyn, const Eigen::MatrixXi& P0,
                         const std::vector<Eigen::MatrixXi>& GammaList,
                         const Eigen::MatrixXd& W, std::complex<double> lambda0,
                         const std::vector<int>& alpha) {
    const int N = static_cast<int>(P0.rows());
    const int n = dyn.n(), m = dyn.m();

    std::vector<bool> inAlpha(N + 1, false);
    for (int i : alpha) inAlpha[i] = true;

    Eigen::MatrixXd Palpha(N - 1, static_cast<Eigen::Index>(alpha.size()));
    Eigen::Index col = 0;
    for (int i = 1; i <= N; ++i)
        if (inAlpha[i]) Palpha.col(col++) = P0.row(i - 1).transpose().cast<double>();

    const Eigen::Index betaCount = N - static_cast<Eigen::Index>(alpha.size());
    Eigen::MatrixXd PhiBeta(betaCount, N - 1);
    Eigen::Index row = 0;
    for (int i = 1; i <= N; ++i)
        if (!inAlpha[i]) PhiBeta.row(row++) = W.row(i - 1) * GammaList[i - 1].cast<double>();

    const Eigen::Index topRows = static_cast<Eigen::Index>(N - 1) * n;
    const Eigen::Index cols = topRows + static_cast<Eigen::Index>(alpha.size()) * m;
    const Eigen::Index rows = topRows + betaCount * n;
    Eigen::MatrixXcd block = Eigen::MatrixXcd::Zero(rows, cols);

    const Eigen::MatrixXcd shifted =
        lambda0 * Eigen::MatrixXcd::Identity(n, n) - dyn.A.cast<std::complex<double>>();
    for (int i = 0; i < N - 1; ++i) block.block(i * n, i * n, n, n) = shifted;
    block.block(0, topRows, topRows, cols - topRows) =
        kron(Palpha, dyn.B).cast<std::complex<double>>();
    block.block(topRows, 0, rows - topRows, topRows) =
        kron(PhiBeta, Eigen::MatrixXd::Identity(n, n)).cast<std::complex<double>>();

    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(block);
    const Eigen::VectorXd sv = svd.singularValues();
    const double eps = std::numeric_limits<double>::epsilon();
    const double threshold =
        static_cast<double>(std::max(rows, cols)) * eps * (sv.size() ? sv(0) : 0.0);
    const int rank = static_cast<int>((sv.array() > threshold).count());
    return RankTestResult{rank, rank >= (N - 1) * n};
}

namespace {

int sweepThreads(int requested) {
    int threads = requested;
    if (threads <= 0) {
        threads = static_cast<int>(std::thread::hardware_concurrency());
        if (const char* cap = std::getenv("CONSENSUS_FORGE_THREADS")) {
            const int parsed = std::atoi(cap);
            if (parsed > 0) threads = std::min(threads, parsed);
        }
    }
    return std::max(threads, 1);
}

std::vector<int> maskToInternal(unsigned long mask, int N) {
    std::vector<int> ids;
    for (int i = 1; i <= N; ++i)
        if (mask & (1ul << (i - 1))) ids.push_back(i);
    return ids;
}

std::vector<int> toExternalSorted(const std::vector<int>& internalIds, const SpanningTree& tree) {
    std::vector<int> ext;
    ext.reserve(internalIds.size());
    for (int i : internalIds) ext.push_back(tree.externalOf(i));
    std::sort(ext.begin(), ext.end());
    return ext;
}

} // namespace

CriterionVerdict criterion(const AgentDynamics& dyn, const Topology& topo,
                           const SpanningTree& tree, const CriterionOptions& options) {
    const int N = tree.N;
    const Eigen::MatrixXi P0 = incidence_matrix(tree).P0;
    const Eigen::MatrixXd Wint = internal_weights(topo, tree);
    std::vector<Eigen::MatrixXi> GammaList;
    GammaList.reserve(N);
    for (int i = 1; i <= N; ++i)
        GammaList.push_back(
            info_flow_matrix(topo, tree, tree.externalOf(i), InfoMode::FullNeighbor).Gamma);

    CriterionVerdict verdict;
    // One representative per conjugate pair: rank_test(conj l0) equals
    // rank_test(l0) for real data, so only Im >= 0 modes are swept.
    for (const auto& mode : unstable_modes(dyn.A, options.modeTol))
        if (mode.imag() >= 0.0) verdict.testedModes.push_back(mode);

    const unsigned long total = 1ul << N;
    const auto runMask = [&](const std::complex<double>& l0, unsigned long mask)
        -> std::optional<CriterionFailure> {
        const std::vector<int> alpha = maskToInternal(mask, N);
        const RankTestResult r = rank_test(dyn, P0, GammaList, Wint, l0, alpha);
        if (r.passes) return std::nullopt;
        std::vector<int> betaInt;
        for (int i = 1; i <= N; ++i)
            if (!(mask & (1ul << (i - 1)))) betaInt.push_back(i);
        return CriterionFailure{l0, toExternalSorted(alpha, tree),
                                toExternalSorted(betaInt, tree), r.rank};
    };

    for (const auto& l0 : verdict.testedModes) {
        if (!options.exhaustive) {
            bool failed = false;
            for (unsigned long mask = 0; mask < total; ++mask) {
                ++verdict.bipartitionsChecked;
                if (auto f = runMask(l0, mask)) {
                    verdict.failures.push_back(std::move(*f));
                    failed = true;
                    break;
                }
            }
            if (failed) break;
            continue;
        }

        // Exhaustive: parallel chunks merged in subset-mask order.
        const int threads = std::min<int>(sweepThreads(options.maxThreads),
                                          static_cast<int>(total));
        std::vector<std::vector<CriterionFailure>> perThread(threads);
        std::vector<std::thread> pool;
        pool.reserve(threads);
        for (int t = 0; t < threads; ++t) {
            pool.emplace_back([&, t] {
                for (unsigned long mask = t; mask < total; mask += threads)
                    if (auto f = runMask(l0, mask)) perThread[t].push_back(std::move(*f));
            });
        }
        for (auto& th : pool) th.join();
        verdict.bipartitionsChecked += static_cast<long>(total);

        std::vector<CriterionFailure> merged;
        for (auto& chunk : perThread)
            for (auto& f : chunk) merged.push_back(std::move(f));
        std::sort(merged.begin(), merged.end(), [](const auto& a, const auto& b) {
            return std::lexicographical_compare(a.alpha.begin(), a.alpha.end(),
                                                b.alpha.begin(), b.alpha.end());
        });
        for (auto& f : merged) verdict.failures.push_back(std::move(f));
    }

    verdict.consensusAchievable = verdict.failures.empty();
    return verdict;
}

namespace {

// Greedy nearest-neighbor persistence: keep the candidates that find an
// unclaimed partner within tol in the perturbed spectrum.
std::vector<std::complex<double>> persistent(const std::vector<std::complex<double>>& candidates,
                                             const Eigen::VectorXcd& spectrum, double tol) {
    std::vector<bool> used(spectrum.size(), false);
    std::vector<std::complex<double>> kept;
    for (const auto& c : candidates) {
        double best = tol;
        Eigen::Index bestIdx = -1;
        for (Eigen::Index i = 0; i < spectrum.size(); ++i) {
            if (used[i]) continue;
            const double d = std::abs(spectrum(i) - c);
            if (d <= best) {
                best = d;
                bestIdx = i;
            }
        }
        if (bestIdx >= 0) {
            used[bestIdx] = true;
            kept.push_back(c);
        }
    }
    return kept;
}

} // namespace

std::vector<std::complex<double>> dfm_sample(const TransformedSystem& ts, int trials,
                                             std::uint64_t seed, double tol) {
    const Eigen::VectorXcd base =
        Eigen::EigenSolver<Eigen::MatrixXd>(ts.Astar, false).eigenvalues();
    std::vector<std::complex<double>> candidates(base.data(), base.data() + base.size());

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uniform(-1.0, 1.0);
    for (int trial = 0; trial <= trials && !candidates.empty(); ++trial) {
        Eigen::MatrixXd M = ts.Astar;
        for (int i = 1; i <= ts.N; ++i) {
            Eigen::MatrixXd K = Eigen::MatrixXd::Zero(ts.m, ts.n);
            if (trial > 0)
                for (Eigen::Index r = 0; r < K.rows(); ++r)
                    for (Eigen::Index c = 0; c < K.cols(); ++c) K(r, c) = uniform(rng);
            M += ts.Bblock(i) * K * ts.Cblocks[i - 1];
        }
        const Eigen::VectorXcd spectrum =
            Eigen::EigenSolver<Eigen::MatrixXd>(M, false).eigenvalues();
        candidates = persistent(candidates, spectrum, tol);
    }
    return candidates;
}

} // namespace consensus
