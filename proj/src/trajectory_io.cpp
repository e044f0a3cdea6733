#include "consensus/trajectory_io.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "consensus/errors.hpp"

namespace consensus {

namespace {

std::string fullPrecision(double value) {
    char buffer[32];
    std::snprintf(buffer, sizeof(buffer), "%.17g", value);
    return buffer;
}

std::string fixed2(double value) {
    char buffer[32];
    std::snprintf(buffer, sizeof(buffer), "%.2f", value);
    return buffer;
}

} // namespace

void write_trajectory_csv(const std::filesystem::path& path, const SimulationResult& result,
                          const SpanningTree& tree) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open " + path.string() + " for writing");

    out << "t";
    for (int i = 1; i <= result.N; ++i)
        for (int k = 1; k <= result.n; ++k) out << ",x" << i << "_" << k;
    for (int e = 1; e < result.N; ++e)
        for (int k = 1; k <= result.n; ++k) out << ",y" << tree.externalOf(e) << "_" << k;
    out << "\n";

    for (Eigen::Index row = 0; row < result.samples(); ++row) {
        out << fullPrecision(result.times(row));
        for (Eigen::Index c = 0; c < result.agents.cols(); ++c)
            out << "," << fullPrecision(result.agents(row, c));
        for (Eigen::Index c = 0; c < result.edges.cols(); ++c)
            out << "," << fullPrecision(result.edges(row, c));
        out << "\n";
    }
}

CsvTable read_trajectory_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path.string());

    CsvTable table;
    std::string line;
    if (!std::getline(in, line)) throw Error(path.string() + ": empty file");
    {
        std::stringstream header(line);
        std::string cell;
        while (std::getline(header, cell, ',')) table.header.push_back(cell);
    }

    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<double> row;
        std::stringstream cells(line);
        std::string cell;
        while (std::getline(cells, cell, ',')) row.push_back(std::strtod(cell.c_str(), nullptr));
        if (row.size() != table.header.size())
            throw Error(path.string() + ": ragged row with " + std::to_string(row.size()) +
                        " cells");
        rows.push_back(std::move(row));
    }

    table.values.resize(static_cast<Eigen::Index>(rows.size()),
                        static_cast<Eigen::Index>(table.header.size()));
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::size_t c = 0; c < rows[r].size(); ++c)
            table.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
    return table;
}

std::vector<std::string> write_svg_plots(const std::filesystem::path& directory,
                                         const std::string& stem,
                                         const SimulationResult& result) {
    static const std::array<const char*, 10> palette = {
        "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
        "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

    constexpr double width = 800.0, height = 500.0;
    constexpr double left = 60.0, right = 20.0, top = 40.0, bottom = 50.0;
    const double plotW = width - left - right;
    const double plotH = height - top - bottom;

    std::vector<std::string> files;
    for (int k = 1; k <= result.n; ++k) {
        double lo = 0.0, hi = 0.0;
        for (int i = 0; i < result.N; ++i) {
            const auto col = result.agents.col(static_cast<Eigen::Index>(i) * result.n + k - 1);
            lo = std::min(lo, col.minCoeff());
            hi = std::max(hi, col.maxCoeff());
        }
        if (hi - lo < 1e-12) hi = lo + 1.0;
        const double t0 = result.times(0);
        const double t1 = result.times(result.samples() - 1);
        const double tSpan = t1 - t0 > 0.0 ? t1 - t0 : 1.0;

        const auto mapX = [&](double t) { return left + (t - t0) / tSpan * plotW; };
        const auto mapY = [&](double v) { return top + (hi - v) / (hi - lo) * plotH; };

        const std::filesystem::path file =
            directory / (stem + "_state" + std::to_string(k) + ".svg");
        std::ofstream out(file);
        if (!out) throw Error("cannot open " + file.string() + " for writing");

        out << "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 800 500\">\n";
        out << "<rect width=\"800\" height=\"500\" fill=\"white\"/>\n";
        out << "<text x=\"400\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" "
               "font-size=\"16\">"
            << stem << ": state component " << k << "</text>\n";
        out << "<line x1=\"" << fixed2(left) << "\" y1=\"" << fixed2(top + plotH) << "\" x2=\""
            << fixed2(left + plotW) << "\" y2=\"" << fixed2(top + plotH)
            << "\" stroke=\"black\"/>\n";
        out << "<line x1=\"" << fixed2(left) << "\" y1=\"" << fixed2(top) << "\" x2=\""
            << fixed2(left) << "\" y2=\"" << fixed2(top + plotH) << "\" stroke=\"black\"/>\n";
        out << "<text x=\"" << fixed2(left) << "\" y=\"" << fixed2(top + plotH + 20)
            << "\" font-family=\"sans-serif\" font-size=\"12\">t=" << fixed2(t0)
            << "</text>\n";
        out << "<text x=\"" << fixed2(left + plotW) << "\" y=\"" << fixed2(top + plotH + 20)
            << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"12\">t="
            << fixed2(t1) << "</text>\n";
        out << "<text x=\"" << fixed2(left - 6) << "\" y=\"" << fixed2(top + 4)
            << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"12\">"
            << fixed2(hi) << "</text>\n";
        out << "<text x=\"" << fixed2(left - 6) << "\" y=\"" << fixed2(top + plotH)
            << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"12\">"
            << fixed2(lo) << "</text>\n";

        // Cap each polyline at ~400 vertices; the plots are qualitative.
        const Eigen::Index stride =
            std::max<Eigen::Index>(1, result.samples() / 400);
        for (int i = 0; i < result.N; ++i) {
            out << "<polyline fill=\"none\" stroke=\"" << palette[i % palette.size()]
                << "\" stroke-width=\"1.5\" points=\"";
            for (Eigen::Index s = 0; s < result.samples(); s += stride) {
                const double v = result.agents(s, static_cast<Eigen::Index>(i) * result.n + k - 1);
                out << fixed2(mapX(result.times(s))) << "," << fixed2(mapY(v)) << " ";
            }
            const double vLast = result.agents(result.samples() - 1,
                                               static_cast<Eigen::Index>(i) * result.n + k - 1);
            out << fixed2(mapX(t1)) << "," << fixed2(mapY(vLast));
            out << "\"/>\n";
            out << "<text x=\"" << fixed2(left + plotW - 90) << "\" y=\""
                << fixed2(top + 16.0 * (i + 1)) << "\" font-family=\"sans-serif\" "
                << "font-size=\"12\" fill=\"" << palette[i % palette.size()] << "\">agent "
                << (i + 1) << "</text>\n";
        }
        out << "</svg>\n";
        files.push_back(file.string());
    }
    return files;
}

} // namespace consensus
