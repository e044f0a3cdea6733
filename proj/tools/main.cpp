#include <algorithm>
#include <complex>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>

#include "consensus/criterion.hpp"
#include "consensus/fixtures.hpp"
#include "consensus/report.hpp"
#include "consensus/scenario.hpp"
#include "consensus/simulate.hpp"
#include "consensus/synthesis.hpp"
#include "consensus/trajectory_io.hpp"

namespace {

using namespace consensus;

struct Flags {
    std::string out = ".";
    std::string format = "json";
    bool svg = false;
    bool exhaustive = false;
    std::optional<std::uint64_t> seed;
    std::optional<double> dt, T, tol;
};

std::vector<std::complex<double>> sortedSpectrum(const Eigen::MatrixXd& M) {
    const Eigen::VectorXcd eigs = Eigen::EigenSolver<Eigen::MatrixXd>(M, false).eigenvalues();
    std::vector<std::complex<double>> spectrum(eigs.data(), eigs.data() + eigs.size());
    std::sort(spectrum.begin(), spectrum.end(), [](const auto& a, const auto& b) {
        return a.real() != b.real() ? a.real() < b.real() : a.imag() < b.imag();
    });
    return spectrum;
}

bool blockUpperTriangular(const Eigen::MatrixXd& M, int blockSize) {
    const int blocks = static_cast<int>(M.rows()) / blockSize;
    for (int r = 1; r < blocks; ++r)
        for (int c = 0; c < r; ++c)
            if (M.block(r * blockSize, c * blockSize, blockSize, blockSize)
                    .cwiseAbs()
                    .maxCoeff() > 1e-12)
                return false;
    return true;
}

// The work a subcommand accumulates while walking the pipeline.
struct Run {
    Scenario scenario;
    Flags flags;
    Report report;
    std::optional<SpanningTree> tree;
    std::optional<GainSet> gains;
    std::string gainProvenance;
    int designIterations = -1;
    std::optional<GershgorinReport> designReport;

    Run(Scenario s, Flags f) : scenario(std::move(s)), flags(std::move(f)) {
        report.scenario = scenario.name;
    }
};

void applyOverrides(Run& run) {
    if (run.flags.dt) run.scenario.sim.dt = *run.flags.dt;
    if (run.flags.T) run.scenario.sim.T = *run.flags.T;
    if (run.flags.tol) run.scenario.sim.tol = *run.flags.tol;
}

void prepareTree(Run& run) {
    const SpanningTree tree = renumber(extract_dst(run.scenario.topology, run.scenario.root));
    DstSummary summary;
    summary.root = tree.root;
    summary.edges = tree.fundamentalEdges();
    summary.perm.assign(tree.perm.begin() + 1, tree.perm.end());
    run.report.dst = std::move(summary);
    run.tree = tree;
}

void runCriterion(Run& run) {
    CriterionOptions options;
    options.exhaustive = run.flags.exhaustive;
    run.report.criterion = criterion(run.scenario.dynamics, run.scenario.topology,
                                     *run.tree, options);
}

std::uint64_t seedOf(const Run& run) {
    return run.flags.seed ? *run.flags.seed : 0x9e3779b97f4a7c15ull;
}

void runDesign(Run& run) {
    if (!run.scenario.design)
        throw InvalidScenario("design: scenario has no design section");
    const DesignConfig& config = *run.scenario.design;
    if (config.method == "theorem2") {
        run.gains = design_theorem2(run.scenario.dynamics, run.scenario.topology, *run.tree,
                                    config.targets, seedOf(run));
    } else {
        Theorem3Params params = config.params;
        params.seed = seedOf(run);
        Theorem3Result result =
            design_theorem3(run.scenario.dynamics, run.scenario.topology, *run.tree, params);
        run.gains = std::move(result.gains);
        run.designIterations = result.iterations;
        run.designReport = std::move(result.report);
    }
    run.gainProvenance = "designed";
}

void adoptInjectedGains(Run& run) {
    if (!run.scenario.gains)
        throw InvalidScenario("gains: scenario has no gains section");
    run.gains = make_gain_set(*run.scenario.gains, run.scenario.topology, *run.tree);
    run.gainProvenance = "injected";
}

void summarizeGains(Run& run) {
    const SpanningTree& tree = *run.tree;
    GainsSummary summary;
    summary.provenance = run.gainProvenance;
    summary.mode = run.gains->mode;
    summary.K.resize(tree.N);
    for (int ext = 1; ext <= tree.N; ++ext)
        summary.K[ext - 1] = run.gains->K[tree.internalOf(ext) - 1];
    for (int internal : run.gains->rootPath)
        summary.rootPath.push_back(tree.externalOf(internal));
    summary.rootNeighborWeight = run.gains->rootNeighborWeight;
    summary.rootTracking = run.gains->mode != ProtocolMode::FullNeighbor &&
                           run.gains->K[tree.N - 1].cwiseAbs().maxCoeff() == 0.0;
    summary.designIterations = run.designIterations;
    run.report.gains = std::move(summary);
}

Eigen::MatrixXd assembleClosedLoop(Run& run) {
    if (run.gains->mode == ProtocolMode::FullNeighbor) {
        const TransformedSystem ts =
            build_transformed_system(run.scenario.dynamics, run.scenario.topology, *run.tree,
                                     InfoMode::FullNeighbor);
        return assemble_closed_loop(ts, *run.gains);
    }
    return assemble_dst_closed_loop(run.scenario.dynamics, run.scenario.topology, *run.tree,
                                    *run.gains);
}

void summarizeClosedLoop(Run& run, const Eigen::MatrixXd& M) {
    ClosedLoopSummary summary;
    summary.spectrum = sortedSpectrum(M);
    double abscissa = -std::numeric_limits<double>::infinity();
    for (const auto& z : summary.spectrum) abscissa = std::max(abscissa, z.real());
    summary.spectralAbscissa = abscissa;
    summary.blockUpperTriangular = blockUpperTriangular(M, run.scenario.dynamics.n());
    run.report.closedLoop = std::move(summary);
}

void runGershgorin(Run& run, const Eigen::MatrixXd& M) {
    if (run.designReport) {
        run.report.gershgorin = run.designReport;
        return;
    }
    run.report.gershgorin = gershgorin_check(M, run.scenario.dynamics.n(),
                                             CircleMode::Surrogate);
}

void runSimulation(Run& run) {
    const SimConfig& sim = run.scenario.sim;
    const SimulationResult result =
        integrate_agents(run.scenario.dynamics, run.scenario.topology, *run.tree, *run.gains,
                         initial_states(run.scenario), sim.dt, sim.T);

    SimSummary summary;
    summary.dt = sim.dt;
    summary.T = sim.T;
    summary.tol = sim.tol;
    summary.eps0 = result.consensusError(0);
    summary.epsT = result.consensusError(result.samples() - 1);
    summary.verdict = consensus_verdict(result, sim.tol);
    const Eigen::Index stride = std::max<Eigen::Index>(1, result.samples() / 100);
    for (Eigen::Index k = 0; k < result.samples(); k += stride)
        summary.epsSamples.emplace_back(result.times(k), result.consensusError(k));
    if ((result.samples() - 1) % stride != 0)
        summary.epsSamples.emplace_back(result.times(result.samples() - 1),
                                        result.consensusError(result.samples() - 1));

    std::filesystem::create_directories(run.flags.out);
    const std::filesystem::path outDir(run.flags.out);
    const std::filesystem::path csv = outDir / (run.scenario.name + "_trajectory.csv");
    write_trajectory_csv(csv, result, *run.tree);
    summary.files.push_back(csv.string());
    if (run.flags.svg)
        for (auto& file : write_svg_plots(outDir, run.scenario.name, result))
            summary.files.push_back(std::move(file));

    run.report.sim = std::move(summary);
}

// Maps a thrown domain error onto report status + exit code. `designing`
// widens MissingRootPath to a synthesis failure instead of an input error.
void recordError(Run& run, const Error& e, const std::string& type, bool designing) {
    run.report.status = type;
    run.report.message = e.what();
    if (type == "NoSpanningTree" || type == "NonFiniteState")
        run.report.exitCode = 2;
    else if (type == "Uncontrollable" || type == "BadTargets" ||
             type == "RootHasNeighbors" || type == "SynthesisFailed" ||
             (type == "MissingRootPath" && designing))
        run.report.exitCode = 4;
    else
        run.report.exitCode = 3;
}

template <typename F>
void guarded(Run& run, bool designing, F body) {
    try {
        body();
    } catch (const SynthesisFailed& e) {
        run.report.gershgorin = e.lastReport;
        recordError(run, e, "SynthesisFailed", designing);
    } catch (const NoSpanningTree& e) {
        recordError(run, e, "NoSpanningTree", designing);
    } catch (const NonFiniteState& e) {
        recordError(run, e, "NonFiniteState", designing);
    } catch (const Uncontrollable& e) {
        recordError(run, e, "Uncontrollable", designing);
    } catch (const BadTargets& e) {
        recordError(run, e, "BadTargets", designing);
    } catch (const RootHasNeighbors& e) {
        recordError(run, e, "RootHasNeighbors", designing);
    } catch (const MissingRootPath& e) {
        recordError(run, e, "MissingRootPath", designing);
    } catch (const InvalidScenario& e) {
        recordError(run, e, "InvalidScenario", designing);
    } catch (const NonSquareBlocks& e) {
        recordError(run, e, "NonSquareBlocks", designing);
    } catch (const DimensionMismatch& e) {
        recordError(run, e, "DimensionMismatch", designing);
    } catch (const Error& e) {
        recordError(run, e, "Error", designing);
    }
}

int emitReport(Run& run, bool writeReportFile) {
    if (writeReportFile) {
        std::filesystem::create_directories(run.flags.out);
        const std::filesystem::path file =
            std::filesystem::path(run.flags.out) / (run.scenario.name + "_report.json");
        std::ofstream out(file);
        if (out) out << report_to_json(run.report).dump(2) << "\n";
    }
    if (run.flags.format == "text")
        std::cout << report_to_text(run.report);
    else
        std::cout << report_to_json(run.report).dump(2) << "\n";
    return run.report.exitCode;
}

int commandAnalyze(Run& run, bool writeReportFile) {
    guarded(run, false, [&] {
        applyOverrides(run);
        prepareTree(run);
        runCriterion(run);
        if (!run.report.criterion->consensusAchievable) run.report.exitCode = 2;
    });
    return emitReport(run, writeReportFile);
}

int commandDesign(Run& run, bool writeReportFile) {
    guarded(run, true, [&] {
        applyOverrides(run);
        prepareTree(run);
        runDesign(run);
        summarizeGains(run);
        const Eigen::MatrixXd M = assembleClosedLoop(run);
        summarizeClosedLoop(run, M);
        runGershgorin(run, M);
    });
    return emitReport(run, writeReportFile);
}

int commandCheck(Run& run, bool writeReportFile) {
    guarded(run, false, [&] {
        applyOverrides(run);
        prepareTree(run);
        adoptInjectedGains(run);
        summarizeGains(run);
        const Eigen::MatrixXd M = assembleClosedLoop(run);
        summarizeClosedLoop(run, M);
        runGershgorin(run, M);
        if (!run.report.gershgorin->eigenvalueCertificate) run.report.exitCode = 2;
    });
    return emitReport(run, writeReportFile);
}

int commandSimulate(Run& run, bool writeReportFile) {
    guarded(run, !run.scenario.gains && run.scenario.design.has_value(), [&] {
        applyOverrides(run);
        prepareTree(run);
        if (run.scenario.gains)
            adoptInjectedGains(run);
        else
            runDesign(run);
        summarizeGains(run);
        runSimulation(run);
        if (!run.report.sim->verdict) run.report.exitCode = 2;
    });
    return emitReport(run, writeReportFile);
}

int commandDemo(Run& run, bool writeReportFile) {
    guarded(run, !run.scenario.gains, [&] {
        applyOverrides(run);
        prepareTree(run);
        runCriterion(run);
        if (run.scenario.gains)
            adoptInjectedGains(run);
        else
            runDesign(run);
        summarizeGains(run);
        const Eigen::MatrixXd M = assembleClosedLoop(run);
        summarizeClosedLoop(run, M);
        runGershgorin(run, M);
        runSimulation(run);
        const bool ok = run.report.criterion->consensusAchievable &&
                        run.report.closedLoop->spectralAbscissa < 0.0 &&
                        run.report.sim->verdict;
        if (!ok) run.report.exitCode = 2;
    });
    return emitReport(run, writeReportFile);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"consensus-forge: DST edge-state consensus analysis, synthesis and simulation"};
    app.require_subcommand(1);

    Flags flags;
    std::string scenarioPath;
    std::string demoName;
    bool outGiven = false;

    const auto addCommon = [&](CLI::App* cmd) {
        cmd->add_option_function<std::string>(
            "--out",
            [&](const std::string& value) {
                flags.out = value;
                outGiven = true;
            },
            "Output directory for reports and trajectories");
        cmd->add_option("--format", flags.format, "Report format")
            ->check(CLI::IsMember({"json", "text"}));
        cmd->add_flag("--svg", flags.svg, "Also emit SVG trajectory plots");
        cmd->add_option("--seed", flags.seed, "Seed for randomized synthesis steps");
        cmd->add_option("--dt", flags.dt, "Override integration step");
        cmd->add_option("--T", flags.T, "Override simulation horizon");
        cmd->add_option("--tol", flags.tol, "Override consensus tolerance");
        cmd->add_flag("--exhaustive", flags.exhaustive,
                      "Collect every criterion failure instead of stopping at the first");
    };

    CLI::App* analyze = app.add_subcommand("analyze", "DST extraction + Theorem-1 criterion");
    analyze->add_option("scenario", scenarioPath, "Scenario JSON file")->required();
    addCommon(analyze);

    CLI::App* design = app.add_subcommand("design", "Theorem-2/3 gain synthesis");
    design->add_option("scenario", scenarioPath, "Scenario JSON file")->required();
    addCommon(design);

    CLI::App* check =
        app.add_subcommand("check", "Closed-loop spectrum + Gershgorin report for injected gains");
    check->add_option("scenario", scenarioPath, "Scenario JSON file")->required();
    addCommon(check);

    CLI::App* simulate = app.add_subcommand("simulate", "Integrate the closed loop, write CSV");
    simulate->add_option("scenario", scenarioPath, "Scenario JSON file")->required();
    addCommon(simulate);

    CLI::App* demo = app.add_subcommand("demo", "Run a built-in fixture end to end");
    demo->add_option("fixture", demoName, "example1 | example2 | example2-k6zero")
        ->required()
        ->check(CLI::IsMember({"example1", "example2", "example2-k6zero"}));
    addCommon(demo);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 3;
    }

    try {
        if (demo->parsed()) {
            Scenario scenario = demoName == "example1"    ? example1_scenario()
                                : demoName == "example2" ? example2_scenario()
                                                         : example2_k6zero_scenario();
            Run run(std::move(scenario), flags);
            return commandDemo(run, outGiven);
        }

        Run run(load_scenario_file(scenarioPath), flags);
        if (analyze->parsed()) return commandAnalyze(run, outGiven);
        if (design->parsed()) return commandDesign(run, outGiven);
        if (check->parsed()) return commandCheck(run, outGiven);
        return commandSimulate(run, outGiven);
    } catch (const InvalidScenario& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}
