#pragma once

#include <complex>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "consensus/edge_transform.hpp"

namespace consensus {

// Eigenvalues of A in the closed right half plane (Re >= -tol), deduplicated
// within 1e-8. These are the only modes that can obstruct consensus.
std::vector<std::complex<double>> unstable_modes(const Eigen::MatrixXd& A, double tol = 1e-9);

struct RankTestResult {
    int rank = 0;
    bool passes = false;
};

// Theorem-1 rank test for one mode and one bipartition:
//   rank [ I (x) (l0 I - A),  P_alpha (x) B ;  Phi_beta (x) I_n,  0 ] >= (N-1)n
// P_alpha collects the incidence columns p_i for i in alpha; Phi_beta stacks
// the weighted info-flow rows w_i Gamma_i for i in beta = V \ alpha. All
// inputs use internal ids (GammaList[i-1] and W permuted like the incidence
// matrix). Numerical rank via singular values with threshold
// max(dims) * eps * sigma_max.
RankTestResult rank_test(const AgentDynamics& dyn, const Eigen::MatrixXi& P0,
                         const std::vector<Eigen::MatrixXi>& GammaList,
                         const Eigen::MatrixXd& W, std::complex<double> lambda0,
                         const std::vector<int>& alpha);

// One failing witness of the criterion sweep; vertex sets in external ids.
struct CriterionFailure {
    std::complex<double> lambda0;
    std::vector<int> alpha;
    std::vector<int> beta;
    int rank = 0;
};

struct CriterionVerdict {
    bool consensusAchievable = false;
    std::vector<std::complex<double>> testedModes;  // conjugate-deduplicated
    std::vector<CriterionFailure> failures;
    long bipartitionsChecked = 0;  // rank_test invocations (2^N per mode when exhaustive)
};

struct CriterionOptions {
    // Exhaustive sweeps collect every failing witness; fast mode stops at the
    // first failure (the sweep is serial there so the witness is
    // deterministic).
    bool exhaustive = true;
    double modeTol = 1e-9;
    // 0 = hardware concurrency capped by CONSENSUS_FORGE_THREADS.
    int maxThreads = 0;
};

// Theorem-1 sweep: every conjugate-deduplicated unstable mode of A against
// all 2^N bipartitions (alpha, beta) in subset-mask order. Hurwitz A passes
// vacuously with no tested modes.
CriterionVerdict criterion(const AgentDynamics& dyn, const Topology& topo,
                           const SpanningTree& tree, const CriterionOptions& options = {});

// Monte-Carlo decentralized-fixed-mode estimate: eigenvalues of A* that
// persist (greedy nearest-neighbor matching within tol) in the spectrum of
// A* + B* K C* for K = 0 and `trials` random block-diagonal K with entries
// uniform in [-1, 1], deterministic in the seed.
std::vector<std::complex<double>> dfm_sample(const TransformedSystem& ts, int trials,
                                             std::uint64_t seed, double tol = 1e-6);

} // namespace consensus
