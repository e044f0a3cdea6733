#include "consensus/report.hpp"

#include <algorithm>
#include <sstream>

namespace consensus {

namespace {

using nlohmann::ordered_json;

const char* protocolModeName(ProtocolMode mode) {
    switch (mode) {
        case ProtocolMode::FullNeighbor: return "FullNeighbor";
        case ProtocolMode::DstOnly: return "DstOnly";
        case ProtocolMode::DstWithRootFeedback: return "DstWithRootFeedback";
    }
    return "DstOnly";
}

ordered_json complexJson(const std::complex<double>& z) {
    return ordered_json::array({z.real(), z.imag()});
}

ordered_json complexListJson(const std::vector<std::complex<double>>& zs) {
    ordered_json arr = ordered_json::array();
    for (const auto& z : zs) arr.push_back(complexJson(z));
    return arr;
}

ordered_json matrixJson(const Eigen::MatrixXd& M) {
    ordered_json arr = ordered_json::array();
    for (Eigen::Index r = 0; r < M.rows(); ++r)
        for (Eigen::Index c = 0; c < M.cols(); ++c) arr.push_back(M(r, c));
    return arr;
}

std::string complexText(const std::complex<double>& z) {
    std::ostringstream out;
    out << z.real();
    if (z.imag() >= 0.0)
        out << " + " << z.imag() << "i";
    else
        out << " - " << -z.imag() << "i";
    return out.str();
}

} // namespace

ordered_json report_to_json(const Report& report) {
    ordered_json doc;
    doc["scenario"] = report.scenario;
    doc["status"] = report.status;
    if (!report.message.empty()) doc["message"] = report.message;

    if (report.dst) {
        ordered_json d;
        d["root"] = report.dst->root;
        ordered_json edges = ordered_json::array();
        for (const auto& [parent, child] : report.dst->edges)
            edges.push_back(ordered_json::array({parent, child}));
        d["fundamentalEdges"] = std::move(edges);
        d["perm"] = report.dst->perm;
        doc["dst"] = std::move(d);
    }

    if (report.criterion) {
        ordered_json c;
        c["consensusAchievable"] = report.criterion->consensusAchievable;
        c["testedModes"] = complexListJson(report.criterion->testedModes);
        c["bipartitionsChecked"] = report.criterion->bipartitionsChecked;
        ordered_json failures = ordered_json::array();
        for (const auto& f : report.criterion->failures) {
            ordered_json entry;
            entry["lambda0"] = complexJson(f.lambda0);
            entry["alpha"] = f.alpha;
            entry["beta"] = f.beta;
            entry["rank"] = f.rank;
            failures.push_back(std::move(entry));
        }
        c["failures"] = std::move(failures);
        doc["criterion"] = std::move(c);
    }

    if (report.gains) {
        ordered_json g;
        g["provenance"] = report.gains->provenance;
        g["mode"] = protocolModeName(report.gains->mode);
        ordered_json table;
        for (std::size_t i = 0; i < report.gains->K.size(); ++i)
            table[std::to_string(i + 1)] = matrixJson(report.gains->K[i]);
        g["K"] = std::move(table);
        if (!report.gains->rootPath.empty()) {
            g["rootPath"] = report.gains->rootPath;
            g["rootNeighborWeight"] = report.gains->rootNeighborWeight;
        }
        g["rootTracking"] = report.gains->rootTracking;
        if (report.gains->designIterations >= 0)
            g["designIterations"] = report.gains->designIterations;
        doc["gains"] = std::move(g);
    }

    if (report.closedLoop) {
        ordered_json c;
        c["spectrum"] = complexListJson(report.closedLoop->spectrum);
        c["spectralAbscissa"] = report.closedLoop->spectralAbscissa;
        c["blockUpperTriangular"] = report.closedLoop->blockUpperTriangular;
        doc["closedLoop"] = std::move(c);
    }

    if (report.gershgorin) {
        const GershgorinReport& gr = *report.gershgorin;
        ordered_json g;
        g["selectedMode"] = gr.selected == CircleMode::Surrogate ? "Surrogate" : "Resolvent";
        g["selectedPass"] = gr.selectedPass;
        g["surrogateAll"] = gr.surrogateAll;
        g["resolventAll"] = gr.resolventAll;
        g["eigenvalueCertificate"] = gr.eigenvalueCertificate;
        g["spectralAbscissa"] = gr.spectralAbscissa;
        g["gridPoints"] = gr.gridPoints;
        ordered_json rows = ordered_json::array();
        for (const auto& row : gr.rows) {
            ordered_json r;
            r["row"] = row.row;
            r["radius"] = row.radius;
            r["diagonalHurwitz"] = row.diagonalHurwitz;
            r["diagonalAbscissa"] = row.diagonalAbscissa;
            r["surrogateMin"] = row.surrogateMin;
            r["surrogateOmega"] = row.surrogateOmega;
            r["surrogatePass"] = row.surrogatePass;
            r["resolventMin"] = row.resolventMin;
            r["resolventOmega"] = row.resolventOmega;
            r["resolventPass"] = row.resolventPass;
            rows.push_back(std::move(r));
        }
        g["rows"] = std::move(rows);
        doc["gershgorin"] = std::move(g);
    }

    if (report.sim) {
        ordered_json s;
        s["dt"] = report.sim->dt;
        s["T"] = report.sim->T;
        s["tol"] = report.sim->tol;
        s["eps0"] = report.sim->eps0;
        s["epsT"] = report.sim->epsT;
        s["verdict"] = report.sim->verdict;
        ordered_json samples = ordered_json::array();
        for (const auto& [t, eps] : report.sim->epsSamples)
            samples.push_back(ordered_json::array({t, eps}));
        s["epsSamples"] = std::move(samples);
        s["files"] = report.sim->files;
        doc["sim"] = std::move(s);
    }

    doc["exitCode"] = report.exitCode;
    return doc;
}

std::string report_to_text(const Report& report) {
    std::ostringstream out;
    out << "scenario: " << report.scenario << "\n";
    out << "status: " << report.status << "\n";
    if (!report.message.empty()) out << "message: " << report.message << "\n";

    if (report.dst) {
        out << "dst: root " << report.dst->root << ", fundamental edges";
        for (const auto& [parent, child] : report.dst->edges)
            out << " (" << parent << "," << child << ")";
        out << "\n";
    }

    if (report.criterion) {
        out << "criterion: "
            << (report.criterion->consensusAchievable ? "consensus achievable"
                                                      : "consensus NOT achievable")
            << ", modes tested";
        if (report.criterion->testedModes.empty()) out << " none";
        for (const auto& z : report.criterion->testedModes) out << " " << complexText(z);
        out << ", rank tests " << report.criterion->bipartitionsChecked << "\n";
        for (const auto& f : report.criterion->failures) {
            out << "  failure at lambda0 = " << complexText(f.lambda0) << ", alpha = {";
            for (std::size_t i = 0; i < f.alpha.size(); ++i)
                out << (i ? "," : "") << f.alpha[i];
            out << "}, rank " << f.rank << "\n";
        }
    }

    if (report.gains) {
        out << "gains (" << report.gains->provenance << ", "
            << protocolModeName(report.gains->mode) << "):\n";
        for (std::size_t i = 0; i < report.gains->K.size(); ++i) {
            out << "  K_" << (i + 1) << " = [";
            const Eigen::MatrixXd& K = report.gains->K[i];
            for (Eigen::Index r = 0; r < K.rows(); ++r) {
                if (r) out << "; ";
                for (Eigen::Index c = 0; c < K.cols(); ++c)
                    out << (c ? " " : "") << K(r, c);
            }
            out << "]\n";
        }
        if (!report.gains->rootPath.empty()) {
            out << "  root path:";
            for (int v : report.gains->rootPath) out << " " << v;
            out << " (weight " << report.gains->rootNeighborWeight << ")\n";
        }
        if (report.gains->rootTracking) out << "  root tracking: zero root gain\n";
        if (report.gains->designIterations >= 0)
            out << "  design iterations: " << report.gains->designIterations << "\n";
    }

    if (report.closedLoop) {
        out << "closed loop: spectral abscissa " << report.closedLoop->spectralAbscissa;
        if (report.closedLoop->blockUpperTriangular) out << ", block upper triangular";
        out << "\n  spectrum:";
        for (const auto& z : report.closedLoop->spectrum) out << " " << complexText(z);
        out << "\n";
    }

    if (report.gershgorin) {
        const GershgorinReport& gr = *report.gershgorin;
        out << "gershgorin (" << (gr.selected == CircleMode::Surrogate ? "Surrogate" : "Resolvent")
            << " selected): " << (gr.selectedPass ? "pass" : "fail")
            << ", certificate " << (gr.eigenvalueCertificate ? "true" : "false")
            << ", abscissa " << gr.spectralAbscissa << "\n";
        for (const auto& row : gr.rows) {
            out << "  row " << row.row << ": radius " << row.radius << ", surrogate "
                << row.surrogateMin << (row.surrogatePass ? " (pass)" : " (fail)")
                << ", resolvent " << row.resolventMin
                << (row.resolventPass ? " (pass)" : " (fail)") << "\n";
        }
    }

    if (report.sim) {
        out << "simulation: eps(0) = " << report.sim->eps0 << ", eps(" << report.sim->T
            << ") = " << report.sim->epsT << ", verdict "
            << (report.sim->verdict ? "pass" : "fail") << " at tol " << report.sim->tol << "\n";
        for (const auto& file : report.sim->files) out << "  wrote " << file << "\n";
    }

    out << "exit code: " << report.exitCode << "\n";
    return out.str();
}

} // namespace consensus
