#include "dnr/errors.hpp"
#include "dnr/io.hpp"
#include "dnr/linear_sim.hpp"
#include "dnr/nonlinear_sim.hpp"
#include "dnr/scenario.hpp"
#include "dnr/statespace.hpp"

#include <CLI11.hpp>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <thread>

namespace fs = std::filesystem;

namespace {

// One exit code per error class so scripts can branch on failures.
constexpr int kExitScenario = 2;
constexpr int kExitStructural = 3;
constexpr int kExitPowerFlow = 4;
constexpr int kExitSingular = 5;
constexpr int kExitSimulation = 6;

struct RunConfig {
    std::string command;
    std::vector<std::string> scenario_paths;
    double dt_override = -1.0;
    double t_end_override = -1.0;
    std::string mode_override;
    std::string output_dir = ".";
    bool dump_matrices = false;
    int jobs = 1;
};

std::string stem_of(const std::string& path) {
    return fs::path(path).stem().string();
}

dnr::SimMode effective_mode(const dnr::Scenario& sc, const RunConfig& cfg) {
    if (cfg.mode_override.empty())
        return sc.solver.mode;
    if (cfg.mode_override == "sequential")
        return dnr::SimMode::Sequential;
    if (cfg.mode_override == "single-anchor")
        return dnr::SimMode::SingleAnchor;
    throw dnr::ScenarioError("unknown mode: " + cfg.mode_override);
}

void dump_system(const dnr::LinearSystem& sys, const Eigen::VectorXd& u, std::ostream& out) {
    dnr::write_matrix("A", sys.a, out);
    dnr::write_matrix("B", sys.b, out);
    dnr::write_matrix("C_F", sys.c_f, out);
    dnr::write_matrix("C_V", sys.c_v, out);
    dnr::write_matrix("D_V", sys.d_v, out);
    dnr::write_matrix("Z", sys.z, out);
    Eigen::MatrixXd eig(sys.eigenvalues.size(), 2);
    eig.col(0) = sys.eigenvalues.real();
    eig.col(1) = sys.eigenvalues.imag();
    dnr::write_matrix("eigenvalues", eig, out);
    dnr::write_vector("delta_it", u, out);
    out << "# max_re_eigenvalue " << dnr::format_double(sys.max_re_eigenvalue, "%.17g") << "\n";
    out << "# max_re_eigenvalue_deflated "
        << dnr::format_double(sys.max_re_eigenvalue_deflated, "%.17g") << "\n";
}

std::vector<std::string> kPalette = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                     "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};

void write_freq_overlay(const dnr::Trajectory& lin, const dnr::Trajectory* oracle,
                        const std::string& path) {
    std::vector<dnr::SvgSeries> series;
    series.push_back({"analytical", kPalette[0], lin.delta_f});
    if (oracle)
        series.push_back({"reference", kPalette[1], oracle->delta_f});
    dnr::write_svg_chart("COI frequency deviation (pu)", lin.times, series, path);
}

void write_vmag_overlay(const dnr::Trajectory& lin, const dnr::Trajectory* oracle, int node_pos,
                        const std::string& path) {
    auto row = [](const dnr::Trajectory& t, int i) {
        std::vector<double> y(t.samples());
        for (int k = 0; k < t.samples(); ++k)
            y[k] = t.valid(i, k) ? t.vmag_abs(i, k) : std::nan("");
        return y;
    };
    std::vector<dnr::SvgSeries> series;
    series.push_back({"analytical", kPalette[0], row(lin, node_pos)});
    if (oracle)
        series.push_back({"reference", kPalette[1], row(*oracle, node_pos)});
    dnr::write_svg_chart("|V| at node " + std::to_string(lin.node_ids[node_pos]) + " (pu)",
                         lin.times, series, path);
}

int run_one(const RunConfig& cfg, const std::string& path) {
    dnr::Scenario sc = dnr::load_scenario(path);
    const double dt = cfg.dt_override > 0 ? cfg.dt_override : sc.solver.dt;
    if (cfg.t_end_override > 0)
        sc.schedule.t_end = cfg.t_end_override;
    const dnr::SimMode mode = effective_mode(sc, cfg);
    const std::string stem = stem_of(path);
    const fs::path out_dir(cfg.output_dir);
    fs::create_directories(out_dir);
    auto out_path = [&](const std::string& suffix) {
        return (out_dir / (stem + suffix)).string();
    };

    std::ofstream matrix_out;
    dnr::LinearSimOptions lin_opts;
    if (cfg.dump_matrices || cfg.command == "linearize") {
        matrix_out.open(out_path("_matrices.txt"));
        lin_opts.observer = [&](int event_index, const dnr::SwitchEvent& ev,
                                const dnr::LinearSystem& sys, const Eigen::VectorXd& u) {
            matrix_out << "## event " << event_index << " t="
                       << dnr::format_double(ev.time) << "\n";
            dump_system(sys, u, matrix_out);
        };
    }

    if (cfg.command == "linearize") {
        // Assemble every per-event system without integrating: run the linear
        // simulator over a zero-length grid per event via a full pass at the
        // scenario dt but without keeping trajectories.
        const dnr::Trajectory traj = dnr::simulate_linear(sc.feeder, sc.schedule, dt, mode,
                                                          lin_opts);
        std::cout << stem << ": " << traj.samples() << " samples, "
                  << sc.schedule.events.size() << " events, matrices in "
                  << out_path("_matrices.txt") << "\n";
        return 0;
    }

    if (cfg.command == "simulate") {
        const dnr::Trajectory traj = dnr::simulate_linear(sc.feeder, sc.schedule, dt, mode,
                                                          lin_opts);
        dnr::write_trajectory_csv(traj, out_path("_linear.csv"));
        write_freq_overlay(traj, nullptr, out_path("_freq.svg"));
        std::cout << stem << ": wrote " << out_path("_linear.csv")
                  << (traj.flagged_unstable ? " (flagged unstable)" : "") << "\n";
        return 0;
    }

    if (cfg.command == "oracle") {
        const dnr::Trajectory traj = dnr::simulate_nonlinear(sc.feeder, sc.schedule, dt);
        dnr::write_trajectory_csv(traj, out_path("_oracle.csv"));
        write_freq_overlay(traj, nullptr, out_path("_oracle_freq.svg"));
        std::cout << stem << ": wrote " << out_path("_oracle.csv") << "\n";
        return 0;
    }

    // compare
    const dnr::Trajectory lin = dnr::simulate_linear(sc.feeder, sc.schedule, dt, mode, lin_opts);
    const dnr::Trajectory oracle = dnr::simulate_nonlinear(sc.feeder, sc.schedule, dt);
    dnr::write_trajectory_csv(lin, out_path("_linear.csv"));
    dnr::write_trajectory_csv(oracle, out_path("_oracle.csv"));
    const dnr::RmseReport report = dnr::compare_rmse(lin, oracle);
    dnr::write_rmse_report(report, out_path("_rmse.csv"));
    write_freq_overlay(lin, &oracle, out_path("_freq_overlay.svg"));
    // Overlay the node with the worst voltage RMSE.
    int worst_pos = -1;
    double worst = -1.0;
    for (const auto& nr : report.per_node)
        if (nr.rmse > worst) {
            worst = nr.rmse;
            for (std::size_t i = 0; i < lin.node_ids.size(); ++i)
                if (lin.node_ids[i] == nr.node_id)
                    worst_pos = static_cast<int>(i);
        }
    if (worst_pos >= 0)
        write_vmag_overlay(lin, &oracle, worst_pos, out_path("_vmag_overlay.svg"));
    std::cout << stem << ": voltage RMSE avg " << dnr::format_double(report.average, "%.6g")
              << " max " << dnr::format_double(report.maximum, "%.6g") << " freq RMSE "
              << dnr::format_double(report.freq_rmse, "%.6g") << "\n";
    return 0;
}

int classify(const std::exception& e) {
    if (dynamic_cast<const dnr::ScenarioError*>(&e))
        return kExitScenario;
    if (dynamic_cast<const dnr::SingularNetworkError*>(&e))
        return kExitSingular;
    if (dynamic_cast<const dnr::PowerFlowError*>(&e))
        return kExitPowerFlow;
    if (dynamic_cast<const dnr::SimulationError*>(&e))
        return kExitSimulation;
    if (dynamic_cast<const dnr::StructuralError*>(&e))
        return kExitStructural;
    return 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Analytical frequency/voltage transient prediction for feeder reconfiguration"};
    app.require_subcommand(1);

    RunConfig cfg;
    for (const char* name : {"linearize", "simulate", "oracle", "compare"}) {
        CLI::App* sub = app.add_subcommand(name);
        sub->add_option("--scenario", cfg.scenario_paths, "scenario JSON file(s)")
            ->required()
            ->check(CLI::ExistingFile);
        sub->add_option("--dt", cfg.dt_override, "time step in seconds (overrides scenario)");
        sub->add_option("--t-end", cfg.t_end_override, "horizon in seconds (overrides scenario)");
        sub->add_option("--mode", cfg.mode_override, "single-anchor|sequential")
            ->check(CLI::IsMember({"single-anchor", "sequential"}));
        sub->add_option("--output", cfg.output_dir, "output directory");
        sub->add_flag("--dump-matrices", cfg.dump_matrices, "write per-event matrix dumps");
        sub->add_option("--jobs", cfg.jobs, "parallel scenarios")->check(CLI::PositiveNumber);
    }

    CLI11_PARSE(app, argc, argv);
    cfg.command = app.get_subcommands().front()->get_name();

    std::atomic<int> status{0};
    std::mutex log_mutex;
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < cfg.scenario_paths.size(); i = next++) {
            try {
                run_one(cfg, cfg.scenario_paths[i]);
            } catch (const std::exception& e) {
                std::scoped_lock lock(log_mutex);
                std::cerr << "error [" << cfg.scenario_paths[i] << "]: " << e.what() << "\n";
                status = classify(e);
            }
        }
    };
    const int threads = std::min<int>(cfg.jobs, static_cast<int>(cfg.scenario_paths.size()));
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int i = 0; i < threads; ++i)
            pool.emplace_back(worker);
        for (auto& t : pool)
            t.join();
    }
    return status;
}
