#pragma once

#include <complex>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "consensus/criterion.hpp"
#include "consensus/synthesis.hpp"

namespace consensus {

struct DstSummary {
    int root = 0;                                  // external id
    std::vector<std::pair<int, int>> edges;        // (parent, child), external
    std::vector<int> perm;                         // external id -> internal id
};

struct GainsSummary {
    std::string provenance;            // "designed" | "injected"
    ProtocolMode mode = ProtocolMode::DstOnly;
    std::vector<Eigen::MatrixXd> K;    // external agent order
    std::vector<int> rootPath;         // external ids, root-feedback only
    double rootNeighborWeight = 0.0;
    bool rootTracking = false;         // zero root gain: agents track the root
    int designIterations = -1;         // theorem3 outer iterations, -1 if n/a
};

struct ClosedLoopSummary {
    std::vector<std::complex<double>> spectrum;
    double spectralAbscissa = 0.0;
    bool blockUpperTriangular = false;
};

struct SimSummary {
    double dt = 0.0, T = 0.0, tol = 0.0;
    double eps0 = 0.0, epsT = 0.0;
    bool verdict = false;
    // Decimated (t, eps) samples for the report body.
    std::vector<std::pair<double, double>> epsSamples;
    std::vector<std::string> files;  // CSV/SVG paths written
};

// Everything a CLI run reports; sections are present when the subcommand
// produced them. Field order in the JSON rendering is fixed, so identical
// runs serialize byte-identically.
struct Report {
    std::string scenario;
    std::string status = "ok";  // "ok" or the error type name
    std::string message;        // error detail when status != ok
    std::optional<DstSummary> dst;
    std::optional<CriterionVerdict> criterion;
    std::optional<GainsSummary> gains;
    std::optional<ClosedLoopSummary> closedLoop;
    std::optional<GershgorinReport> gershgorin;
    std::optional<SimSummary> sim;
    int exitCode = 0;
};

nlohmann::ordered_json report_to_json(const Report& report);
std::string report_to_text(const Report& report);

} // namespace consensus
