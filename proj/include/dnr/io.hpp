#pragma once

#include "dnr/trajectory.hpp"

#include <Eigen/Dense>
#include <ostream>
#include <string>
#include <vector>

namespace dnr {

// CSV with header "t,delta_f,dvmag_<id>,..."; de-energized samples are empty
// cells.  %.12g formatting keeps repeated runs byte-identical.
void write_trajectory_csv(const Trajectory& traj, std::ostream& out);
void write_trajectory_csv(const Trajectory& traj, const std::string& path);

// Plain text: "# <name> <rows> <cols>" then one row per line, %.17g.
void write_matrix(const std::string& name, const Eigen::MatrixXd& m, std::ostream& out);
void write_vector(const std::string& name, const Eigen::VectorXd& v, std::ostream& out);

void write_rmse_report(const RmseReport& report, std::ostream& out);
void write_rmse_report(const RmseReport& report, const std::string& path);

// Minimal line chart.  Each series is one polyline over the shared x grid;
// NaN samples break the line.
struct SvgSeries {
    std::string label;
    std::string color;
    std::vector<double> y;
};
void write_svg_chart(const std::string& title, const std::vector<double>& x,
                     const std::vector<SvgSeries>& series, const std::string& path);

[[nodiscard]] std::string format_double(double value, const char* fmt = "%.12g");

} // namespace dnr
