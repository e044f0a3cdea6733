#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "consensus/synthesis.hpp"

namespace consensus {

// Injected gain block of a scenario file. Unlike GainSet, K is in external
// agent order (the order the file lists agents in).
struct GainConfig {
    ProtocolMode mode = ProtocolMode::DstOnly;
    std::vector<Eigen::MatrixXd> K;   // size N, each m x n
    std::optional<int> rootNeighbor;  // external id, DstWithRootFeedback only
};

struct SimConfig {
    double dt = 0.01;
    double T = 15.0;
    double tol = 1e-4;
    std::vector<double> x0;  // flat, agent-major, length N*n (empty = zeros)
};

struct DesignConfig {
    std::string method;  // "theorem2" | "theorem3"
    PoleTargets targets;
    Theorem3Params params;
};

struct Scenario {
    std::string name;
    AgentDynamics dynamics;
    Topology topology;
    std::optional<int> root;
    std::optional<GainConfig> gains;
    SimConfig sim;
    std::optional<DesignConfig> design;
};

// Parses a scenario JSON document; throws InvalidScenario with the offending
// field path in the message.
Scenario parse_scenario(const nlohmann::json& doc);
Scenario load_scenario_file(const std::filesystem::path& path);

// Serialization inverse of parse_scenario (round-trips all fields).
nlohmann::ordered_json scenario_to_json(const Scenario& scenario);

// Splits the flat x0 into per-agent states (zeros when x0 is empty). Throws
// InvalidScenario when the length is not N*n.
std::vector<Eigen::VectorXd> initial_states(const Scenario& scenario);

// Converts an external-order GainConfig into the internal-order GainSet the
// matrix layer uses, deriving the root path for DstWithRootFeedback (the
// configured rootNeighbor, else the shortest-DST-path in-neighbor).
GainSet make_gain_set(const GainConfig& config, const Topology& topo, const SpanningTree& tree);

} // namespace consensus
