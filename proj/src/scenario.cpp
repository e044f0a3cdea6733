#include "consensus/scenario.hpp"

#include <fstream>

namespace consensus {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

[[noreturn]] void fail(const std::string& path, const std::string& why) {
    throw InvalidScenario(path + ": " + why);
}

const json& require(const json& obj, const std::string& key, const std::string& path) {
    if (!obj.is_object()) fail(path, "expected an object");
    const auto it = obj.find(key);
    if (it == obj.end()) fail(path + "." + key, "missing required field");
    return *it;
}

double asNumber(const json& v, const std::string& path) {
    if (!v.is_number()) fail(path, "expected a number");
    return v.get<double>();
}

int asInteger(const json& v, const std::string& path) {
    if (!v.is_number_integer()) fail(path, "expected an integer");
    return v.get<int>();
}

Eigen::MatrixXd asMatrix(const json& v, Eigen::Index rows, Eigen::Index cols,
                         const std::string& path) {
    if (!v.is_array() || static_cast<Eigen::Index>(v.size()) != rows * cols)
        fail(path, "expected a flat row-major array of " + std::to_string(rows * cols) +
                       " numbers");
    Eigen::MatrixXd M(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r)
        for (Eigen::Index c = 0; c < cols; ++c)
            M(r, c) = asNumber(v[static_cast<std::size_t>(r * cols + c)],
                               path + "[" + std::to_string(r * cols + c) + "]");
    return M;
}

std::vector<std::complex<double>> asPoles(const json& v, const std::string& path) {
    if (!v.is_array()) fail(path, "expected an array of [re, im] pairs");
    std::vector<std::complex<double>> poles;
    for (std::size_t i = 0; i < v.size(); ++i) {
        const json& p = v[i];
        const std::string ppath = path + "[" + std::to_string(i) + "]";
        if (!p.is_array() || p.size() != 2) fail(ppath, "expected a [re, im] pair");
        poles.emplace_back(asNumber(p[0], ppath + "[0]"), asNumber(p[1], ppath + "[1]"));
    }
    return poles;
}

ProtocolMode asProtocolMode(const json& v, const std::string& path) {
    const std::string s = v.is_string() ? v.get<std::string>() : "";
    if (s == "FullNeighbor") return ProtocolMode::FullNeighbor;
    if (s == "DstOnly") return ProtocolMode::DstOnly;
    if (s == "DstWithRootFeedback") return ProtocolMode::DstWithRootFeedback;
    fail(path, "expected FullNeighbor | DstOnly | DstWithRootFeedback");
}

const char* protocolModeName(ProtocolMode mode) {
    switch (mode) {
        case ProtocolMode::FullNeighbor: return "FullNeighbor";
        case ProtocolMode::DstOnly: return "DstOnly";
        case ProtocolMode::DstWithRootFeedback: return "DstWithRootFeedback";
    }
    return "DstOnly";
}

CircleMode asCircleMode(const json& v, const std::string& path) {
    const std::string s = v.is_string() ? v.get<std::string>() : "";
    if (s == "Surrogate") return CircleMode::Surrogate;
    if (s == "Resolvent") return CircleMode::Resolvent;
    fail(path, "expected Surrogate | Resolvent");
}

json flat(const Eigen::MatrixXd& M) {
    json arr = json::array();
    for (Eigen::Index r = 0; r < M.rows(); ++r)
        for (Eigen::Index c = 0; c < M.cols(); ++c) arr.push_back(M(r, c));
    return arr;
}

json polesJson(const std::vector<std::complex<double>>& poles) {
    json arr = json::array();
    for (const auto& p : poles) arr.push_back(json::array({p.real(), p.imag()}));
    return arr;
}

} // namespace

Scenario parse_scenario(const json& doc) {
    if (!doc.is_object()) fail("scenario", "top level must be a JSON object");

    std::string name = "scenario";
    if (doc.contains("name")) {
        if (!doc["name"].is_string()) fail("name", "expected a string");
        name = doc["name"].get<std::string>();
    }

    const json& dynJson = require(doc, "dynamics", "scenario");
    const int n = asInteger(require(dynJson, "n", "dynamics"), "dynamics.n");
    const int m = asInteger(require(dynJson, "m", "dynamics"), "dynamics.m");
    if (n < 1 || m < 1) fail("dynamics", "n and m must be positive");
    AgentDynamics dynamics = [&] {
        try {
            return AgentDynamics::make(asMatrix(require(dynJson, "A", "dynamics"), n, n,
                                                "dynamics.A"),
                                       asMatrix(require(dynJson, "B", "dynamics"), n, m,
                                                "dynamics.B"));
        } catch (const InvalidScenario&) {
            throw;
        } catch (const Error& e) {
            fail("dynamics", e.what());
        }
    }();

    const json& topoJson = require(doc, "topology", "scenario");
    const int N = asInteger(require(topoJson, "N", "topology"), "topology.N");
    if (N < 2) fail("topology.N", "need at least 2 agents");
    Topology topology = [&] {
        try {
            return Topology::fromWeights(
                asMatrix(require(topoJson, "W", "topology"), N, N, "topology.W"));
        } catch (const InvalidScenario&) {
            throw;
        } catch (const Error& e) {
            fail("topology.W", e.what());
        }
    }();

    std::optional<int> root;
    if (doc.contains("root")) {
        root = asInteger(doc["root"], "root");
        if (*root < 1 || *root > N) fail("root", "must be a vertex id in 1..N");
    }

    std::optional<GainConfig> gains;
    if (doc.contains("gains")) {
        const json& g = doc["gains"];
        GainConfig config;
        config.mode = asProtocolMode(require(g, "mode", "gains"), "gains.mode");
        config.K.assign(N, Eigen::MatrixXd::Zero(m, n));
        const json& table = require(g, "K", "gains");
        if (!table.is_object()) fail("gains.K", "expected an object keyed by agent id");
        for (const auto& [key, value] : table.items()) {
            int id = 0;
            try {
                id = std::stoi(key);
            } catch (...) {
                fail("gains.K." + key, "key must be an agent id");
            }
            if (id < 1 || id > N) fail("gains.K." + key, "agent id out of range");
            config.K[id - 1] = asMatrix(value, m, n, "gains.K." + key);
        }
        if (g.contains("rootNeighbor")) {
            config.rootNeighbor = asInteger(g["rootNeighbor"], "gains.rootNeighbor");
            if (*config.rootNeighbor < 1 || *config.rootNeighbor > N)
                fail("gains.rootNeighbor", "must be a vertex id in 1..N");
        }
        gains = std::move(config);
    }

    SimConfig sim;
    if (doc.contains("sim")) {
        const json& s = doc["sim"];
        if (!s.is_object()) fail("sim", "expected an object");
        if (s.contains("dt")) sim.dt = asNumber(s["dt"], "sim.dt");
        if (s.contains("T")) sim.T = asNumber(s["T"], "sim.T");
        if (s.contains("tol")) sim.tol = asNumber(s["tol"], "sim.tol");
        if (sim.dt <= 0.0 || sim.T < sim.dt) fail("sim", "need dt > 0 and T >= dt");
        if (sim.tol <= 0.0) fail("sim.tol", "must be positive");
        if (s.contains("x0")) {
            const json& x0 = s["x0"];
            if (!x0.is_array() ||
                static_cast<Eigen::Index>(x0.size()) != static_cast<Eigen::Index>(N) * n)
                fail("sim.x0", "expected " + std::to_string(static_cast<long>(N) * n) +
                                   " numbers (agent-major)");
            for (std::size_t i = 0; i < x0.size(); ++i)
                sim.x0.push_back(asNumber(x0[i], "sim.x0[" + std::to_string(i) + "]"));
        }
    }

    std::optional<DesignConfig> design;
    if (doc.contains("design")) {
        const json& d = doc["design"];
        DesignConfig config;
        const json& method = require(d, "method", "design");
        if (!method.is_string() ||
            (method.get<std::string>() != "theorem2" && method.get<std::string>() != "theorem3"))
            fail("design.method", "expected theorem2 | theorem3");
        config.method = method.get<std::string>();
        if (d.contains("targets")) {
            const json& t = d["targets"];
            if (!t.is_object()) fail("design.targets", "expected an object keyed by agent id");
            for (const auto& [key, value] : t.items()) {
                int id = 0;
                try {
                    id = std::stoi(key);
                } catch (...) {
                    fail("design.targets." + key, "key must be an agent id");
                }
                if (id < 1 || id > N) fail("design.targets." + key, "agent id out of range");
                config.targets.perAgent[id] = asPoles(value, "design.targets." + key);
            }
        }
        if (d.contains("common"))
            config.targets.common = asPoles(d["common"], "design.common");
        if (d.contains("params")) {
            const json& p = d["params"];
            if (!p.is_object()) fail("design.params", "expected an object");
            if (p.contains("rootNeighbor")) {
                const int id = asInteger(p["rootNeighbor"], "design.params.rootNeighbor");
                if (id < 1 || id > N) fail("design.params.rootNeighbor", "agent id out of range");
                config.params.rootNeighbor = id;
            }
            if (p.contains("rootDepth"))
                config.params.rootDepth = asNumber(p["rootDepth"], "design.params.rootDepth");
            if (p.contains("initialDepth"))
                config.params.initialDepth =
                    asNumber(p["initialDepth"], "design.params.initialDepth");
            if (p.contains("growthFactor"))
                config.params.growthFactor =
                    asNumber(p["growthFactor"], "design.params.growthFactor");
            if (p.contains("maxIterations"))
                config.params.maxIterations =
                    asInteger(p["maxIterations"], "design.params.maxIterations");
            if (p.contains("clearanceMargin"))
                config.params.clearanceMargin =
                    asNumber(p["clearanceMargin"], "design.params.clearanceMargin");
            if (p.contains("checkMode"))
                config.params.checkMode =
                    asCircleMode(p["checkMode"], "design.params.checkMode");
            if (p.contains("gridPoints"))
                config.params.gridPoints =
                    asInteger(p["gridPoints"], "design.params.gridPoints");
        }
        design = std::move(config);
    }

    return Scenario{std::move(name), std::move(dynamics), std::move(topology),
                    root,            std::move(gains),    std::move(sim),
                    std::move(design)};
}

Scenario load_scenario_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InvalidScenario("cannot open scenario file " + path.string());
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw InvalidScenario("scenario file " + path.string() + ": " + e.what());
    }
    return parse_scenario(doc);
}

nlohmann::ordered_json scenario_to_json(const Scenario& scenario) {
    ordered_json doc;
    doc["name"] = scenario.name;
    doc["dynamics"] = {{"n", scenario.dynamics.n()},
                       {"m", scenario.dynamics.m()},
                       {"A", flat(scenario.dynamics.A)},
                       {"B", flat(scenario.dynamics.B)}};
    doc["topology"] = {{"N", scenario.topology.N()}, {"W", flat(scenario.topology.W())}};
    if (scenario.root) doc["root"] = *scenario.root;
    if (scenario.gains) {
        ordered_json g;
        g["mode"] = protocolModeName(scenario.gains->mode);
        ordered_json table;
        for (std::size_t i = 0; i < scenario.gains->K.size(); ++i)
            table[std::to_string(i + 1)] = flat(scenario.gains->K[i]);
        g["K"] = std::move(table);
        if (scenario.gains->rootNeighbor) g["rootNeighbor"] = *scenario.gains->rootNeighbor;
        doc["gains"] = std::move(g);
    }
    {
        ordered_json s;
        s["dt"] = scenario.sim.dt;
        s["T"] = scenario.sim.T;
        s["tol"] = scenario.sim.tol;
        if (!scenario.sim.x0.empty()) s["x0"] = scenario.sim.x0;
        doc["sim"] = std::move(s);
    }
    if (scenario.design) {
        ordered_json d;
        d["method"] = scenario.design->method;
        if (!scenario.design->targets.perAgent.empty()) {
            ordered_json t;
            for (const auto& [id, poles] : scenario.design->targets.perAgent)
                t[std::to_string(id)] = polesJson(poles);
            d["targets"] = std::move(t);
        }
        if (!scenario.design->targets.common.empty())
            d["common"] = polesJson(scenario.design->targets.common);
        const Theorem3Params& p = scenario.design->params;
        ordered_json params;
        if (p.rootNeighbor) params["rootNeighbor"] = *p.rootNeighbor;
        params["rootDepth"] = p.rootDepth;
        params["initialDepth"] = p.initialDepth;
        params["growthFactor"] = p.growthFactor;
        params["maxIterations"] = p.maxIterations;
        params["clearanceMargin"] = p.clearanceMargin;
        params["checkMode"] = p.checkMode == CircleMode::Surrogate ? "Surrogate" : "Resolvent";
        params["gridPoints"] = p.gridPoints;
        d["params"] = std::move(params);
        doc["design"] = std::move(d);
    }
    return doc;
}

std::vector<Eigen::VectorXd> initial_states(const Scenario& scenario) {
    const int N = scenario.topology.N();
    const int n = scenario.dynamics.n();
    std::vector<Eigen::VectorXd> states(N, Eigen::VectorXd::Zero(n));
    if (scenario.sim.x0.empty()) return states;
    if (static_cast<Eigen::Index>(scenario.sim.x0.size()) !=
        static_cast<Eigen::Index>(N) * n)
        throw InvalidScenario("sim.x0: expected " + std::to_string(static_cast<long>(N) * n) +
                              " numbers");
    for (int i = 0; i < N; ++i)
        for (int k = 0; k < n; ++k) states[i](k) = scenario.sim.x0[i * n + k];
    return states;
}

GainSet make_gain_set(const GainConfig& config, const Topology& topo,
                      const SpanningTree& tree) {
    const int N = tree.N;
    if (static_cast<int>(config.K.size()) != N)
        throw DimensionMismatch("gain table must list all " + std::to_string(N) + " agents");
    GainSet gains;
    gains.mode = config.mode;
    gains.K.resize(N);
    for (int ext = 1; ext <= N; ++ext) gains.K[tree.internalOf(ext) - 1] = config.K[ext - 1];
    if (config.mode == ProtocolMode::DstWithRootFeedback) {
        const int neighbor =
            config.rootNeighbor ? *config.rootNeighbor : default_root_neighbor(topo, tree);
        set_root_path(gains, topo, tree, neighbor);
    }
    return gains;
}

} // namespace consensus
