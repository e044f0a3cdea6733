#pragma once

#include <complex>
#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "consensus/edge_transform.hpp"

namespace consensus {

// Per-block-row result of the block-Gershgorin circle analysis.
struct GershgorinRow {
    int row = 0;  // block row index, 1-based
    double radius = 0.0;
    bool diagonalHurwitz = false;
    double diagonalAbscissa = 0.0;
    // Scalar row-sum surrogate: min over the frequency grid of the smallest
    // absolute row sum of (D - i omega I).
    double surrogateMin = 0.0;
    double surrogateOmega = 0.0;
    bool surrogatePass = false;
    // Rigorous reciprocal resolvent norm: min over the grid of
    // 1 / ||(D - i omega I)^{-1}||_inf.
    double resolventMin = 0.0;
    double resolventOmega = 0.0;
    bool resolventPass = false;
};

enum class CircleMode { Surrogate, Resolvent };

struct GershgorinReport {
    std::vector<GershgorinRow> rows;
    bool surrogateAll = false;
    bool resolventAll = false;
    // Direct stability check of the whole matrix: the final arbiter.
    bool eigenvalueCertificate = false;
    double spectralAbscissa = 0.0;
    CircleMode selected = CircleMode::Surrogate;
    bool selectedPass = false;
    int gridPoints = 0;
};

// Raised when the staged synthesis exhausts its iteration budget; carries the
// last circle report so callers can see how close the attempt came.
class SynthesisFailed : public Error {
public:
    SynthesisFailed(const std::string& what, GershgorinReport report)
        : Error(what), lastReport(std::move(report)) {}
    GershgorinReport lastReport;
};

// Eigenvalue assignment: K with sigma(A - Bs K) = targets (conjugate-closed,
// strictly stable, exactly n values). Single input uses the
// characteristic-polynomial matching formula; multiple inputs reduce through
// a seeded random input-combination vector (with a preliminary-feedback
// retry for non-cyclic A). Throws Uncontrollable or BadTargets.
Eigen::MatrixXd place_poles(const Eigen::MatrixXd& A, const Eigen::MatrixXd& Bs,
                            const std::vector<std::complex<double>>& targets,
                            std::uint64_t seed = 0x9e3779b97f4a7c15ull);

// Default pole targets at the given depth: one representative per
// conjugate pair of sigma(A) (sorted by descending imaginary part), the q-th
// becoming the pair -(depth + 0.5 q) +/- i Im, or the single real pole
// -(depth + 0.5 q) when the representative is real.
std::vector<std::complex<double>> default_targets(const Eigen::MatrixXd& A, double depth = 1.0);

// Per-agent pole targets keyed by external agent id; agents without an entry
// fall back to `common`, and an empty `common` means default_targets(A).
struct PoleTargets {
    std::map<int, std::vector<std::complex<double>>> perAgent;
    std::vector<std::complex<double>> common;
};

// Theorem-2 synthesis for a passive root (no in-neighbors): K_N = 0 and
// K_i = place_poles(A, w_{i,k_i} B, targets_i) for every non-root agent.
// Throws RootHasNeighbors when the root hears someone (use design_theorem3).
GainSet design_theorem2(const AgentDynamics& dyn, const Topology& topo,
                        const SpanningTree& tree, const PoleTargets& targets = {},
                        std::uint64_t seed = 0x9e3779b97f4a7c15ull);

// Block-Gershgorin analysis of a square matrix built from blockSize x
// blockSize blocks. radius_j sums the infinity norms of the off-diagonal
// blocks in block row j; both circle modes are always evaluated on a
// symmetric frequency grid |omega| <= ||D_j||_inf + r_j + 1 (gridPoints
// samples plus a 10x refinement pass around the coarse minimizer), along
// with the direct eigenvalue certificate. `mode` only chooses which circle
// rule is authoritative in selectedPass. Throws NonSquareBlocks.
GershgorinReport gershgorin_check(const Eigen::MatrixXd& M, int blockSize, CircleMode mode,
                                  int gridPoints = 2001);

struct Theorem3Params {
    // Root in-neighbor n_l; default picks the in-neighbor with the shortest
    // DST path from the root (ties by ascending external id).
    std::optional<int> rootNeighbor;
    // Depth of the root gain's pole targets; kept fixed across retries so the
    // coupling radius it induces stays small.
    double rootDepth = 0.5;
    double initialDepth = 1.0;
    double growthFactor = 1.5;
    int maxIterations = 8;
    // Non-root rows must clear their radius by this relative margin during
    // the staged design; the final report applies the strict rule.
    double clearanceMargin = 0.05;
    CircleMode checkMode = CircleMode::Surrogate;
    int gridPoints = 2001;
    std::uint64_t seed = 0x9e3779b97f4a7c15ull;
};

struct Theorem3Result {
    GainSet gains;
    GershgorinReport report;
    int iterations = 0;
};

// Theorem-3 staged synthesis for a listening root: (1) a shallow root gain
// K_N on (A, w_{N,n_l} B); (2)-(3) non-root gains in breadth-first order,
// each deepened until its Gershgorin circle clears the radius induced by its
// parent and the root coupling; then a full gershgorin_check on the
// assembled matrix. While the selected circle mode or the eigenvalue
// certificate fails, all non-root depths grow by growthFactor and the stage
// repeats, up to maxIterations. Never returns gains whose eigenvalue
// certificate is false; throws SynthesisFailed (with the last report) when
// the budget runs out, MissingRootPath when the root has no in-neighbor.
Theorem3Result design_theorem3(const AgentDynamics& dyn, const Topology& topo,
                               const SpanningTree& tree, const Theorem3Params& params = {});

} // namespace consensus
