#include "dnr/io.hpp"

#include "dnr/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

namespace dnr {

std::string format_double(double value, const char* fmt) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), fmt, value);
    return buf;
}

void write_trajectory_csv(const Trajectory& traj, std::ostream& out) {
    out << "t,delta_f";
    for (int id : traj.node_ids)
        out << ",dvmag_" << id;
    out << "\n";
    const int n = static_cast<int>(traj.node_ids.size());
    for (int k = 0; k < traj.samples(); ++k) {
        out << format_double(traj.times[k]) << ',' << format_double(traj.delta_f[k]);
        for (int i = 0; i < n; ++i) {
            out << ',';
            if (traj.valid(i, k))
                out << format_double(traj.delta_vmag(i, k));
        }
        out << "\n";
    }
}

void write_trajectory_csv(const Trajectory& traj, const std::string& path) {
    std::ofstream out(path);
    if (!out)
        throw SimulationError("cannot write " + path);
    write_trajectory_csv(traj, out);
}

void write_matrix(const std::string& name, const Eigen::MatrixXd& m, std::ostream& out) {
    out << "# " << name << ' ' << m.rows() << ' ' << m.cols() << "\n";
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c)
            out << (c ? " " : "") << format_double(m(r, c), "%.17g");
        out << "\n";
    }
}

void write_vector(const std::string& name, const Eigen::VectorXd& v, std::ostream& out) {
    write_matrix(name, v, out);
}

void write_rmse_report(const RmseReport& report, std::ostream& out) {
    out << "node,rmse,samples\n";
    for (const auto& nr : report.per_node)
        out << nr.node_id << ',' << format_double(nr.rmse) << ',' << nr.samples << "\n";
    out << "average," << format_double(report.average) << ",\n";
    out << "maximum," << format_double(report.maximum) << ",\n";
    out << "freq_rmse," << format_double(report.freq_rmse) << ",\n";
}

void write_rmse_report(const RmseReport& report, const std::string& path) {
    std::ofstream out(path);
    if (!out)
        throw SimulationError("cannot write " + path);
    write_rmse_report(report, out);
}

void write_svg_chart(const std::string& title, const std::vector<double>& x,
                     const std::vector<SvgSeries>& series, const std::string& path) {
    const int width = 960, height = 480;
    const int ml = 70, mr = 20, mt = 40, mb = 45;
    const double pw = width - ml - mr, ph = height - mt - mb;

    double xmin = 0.0, xmax = 1.0;
    if (!x.empty()) {
        xmin = *std::min_element(x.begin(), x.end());
        xmax = *std::max_element(x.begin(), x.end());
    }
    double ymin = std::numeric_limits<double>::infinity(), ymax = -ymin;
    for (const auto& s : series)
        for (double v : s.y)
            if (std::isfinite(v)) {
                ymin = std::min(ymin, v);
                ymax = std::max(ymax, v);
            }
    if (!std::isfinite(ymin)) {
        ymin = -1.0;
        ymax = 1.0;
    }
    if (ymax - ymin < 1e-12) {
        ymin -= 1.0;
        ymax += 1.0;
    }
    const double xpad = xmax > xmin ? 0.0 : 0.5;
    xmin -= xpad;
    xmax += xpad;
    const double yspan = ymax - ymin;
    ymin -= 0.05 * yspan;
    ymax += 0.05 * yspan;

    auto px = [&](double v) { return ml + (v - xmin) / (xmax - xmin) * pw; };
    auto py = [&](double v) { return mt + (ymax - v) / (ymax - ymin) * ph; };

    std::ofstream out(path);
    if (!out)
        throw SimulationError("cannot write " + path);
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
        << height << "\" viewBox=\"0 0 " << width << ' ' << height << "\">\n";
    out << "<rect width=\"" << width << "\" height=\"" << height << "\" fill=\"white\"/>\n";
    out << "<text x=\"" << width / 2 << "\" y=\"24\" text-anchor=\"middle\" "
        << "font-family=\"sans-serif\" font-size=\"16\">" << title << "</text>\n";

    for (int g = 0; g <= 5; ++g) {
        const double xv = xmin + g * (xmax - xmin) / 5.0;
        const double yv = ymin + g * (ymax - ymin) / 5.0;
        out << "<line x1=\"" << px(xv) << "\" y1=\"" << mt << "\" x2=\"" << px(xv) << "\" y2=\""
            << mt + ph << "\" stroke=\"#ddd\"/>\n";
        out << "<line x1=\"" << ml << "\" y1=\"" << py(yv) << "\" x2=\"" << ml + pw
            << "\" y2=\"" << py(yv) << "\" stroke=\"#ddd\"/>\n";
        out << "<text x=\"" << px(xv) << "\" y=\"" << height - 18
            << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">"
            << format_double(xv, "%.4g") << "</text>\n";
        out << "<text x=\"" << ml - 6 << "\" y=\"" << py(yv) + 4
            << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">"
            << format_double(yv, "%.4g") << "</text>\n";
    }
    out << "<rect x=\"" << ml << "\" y=\"" << mt << "\" width=\"" << pw << "\" height=\"" << ph
        << "\" fill=\"none\" stroke=\"#444\"/>\n";

    int legend_y = mt + 14;
    for (const auto& s : series) {
        out << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.2\" points=\"";
        bool pen_down = false;
        std::string gap;
        for (std::size_t k = 0; k < s.y.size() && k < x.size(); ++k) {
            if (!std::isfinite(s.y[k])) {
                if (pen_down)
                    gap = "\"/>\n<polyline fill=\"none\" stroke=\"" + s.color +
                          "\" stroke-width=\"1.2\" points=\"";
                pen_down = false;
                continue;
            }
            if (!pen_down && !gap.empty()) {
                out << gap;
                gap.clear();
            }
            out << format_double(px(x[k]), "%.2f") << ',' << format_double(py(s.y[k]), "%.2f")
                << ' ';
            pen_down = true;
        }
        out << "\"/>\n";
        if (!s.label.empty()) {
            out << "<line x1=\"" << ml + pw - 150 << "\" y1=\"" << legend_y << "\" x2=\""
                << ml + pw - 130 << "\" y2=\"" << legend_y << "\" stroke=\"" << s.color
                << "\" stroke-width=\"2\"/>\n";
            out << "<text x=\"" << ml + pw - 125 << "\" y=\"" << legend_y + 4
                << "\" font-family=\"sans-serif\" font-size=\"11\">" << s.label << "</text>\n";
            legend_y += 16;
        }
    }
    out << "</svg>\n";
}

} // namespace dnr
