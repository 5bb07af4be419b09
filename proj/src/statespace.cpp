#include "dnr/statespace.hpp"

#include "dnr/errors.hpp"
#include "dnr/zip_load.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <limits>

namespace dnr {

Eigen::VectorXd LinearSystem::angle_reference_direction() const {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(state_dim());
    for (std::size_t g = 0; g < state_layout.size(); ++g)
        v(8 * static_cast<int>(g) + kSgDelta) = 1.0;
    return v.normalized();
}

Eigen::MatrixXd reduce_to_active(const Eigen::MatrixXd& full, const std::vector<int>& active) {
    const int m = static_cast<int>(active.size());
    Eigen::MatrixXd out(2 * m, 2 * m);
    for (int a = 0; a < m; ++a)
        for (int b = 0; b < m; ++b)
            out.block<2, 2>(2 * a, 2 * b) = full.block<2, 2>(2 * active[a], 2 * active[b]);
    return out;
}

Eigen::VectorXd reduce_vector_to_active(const Eigen::VectorXd& full,
                                        const std::vector<int>& active) {
    Eigen::VectorXd out(2 * active.size());
    for (std::size_t a = 0; a < active.size(); ++a)
        out.segment<2>(2 * static_cast<int>(a)) = full.segment<2>(2 * active[a]);
    return out;
}

AggregatedDevices aggregate_devices(const Feeder& feeder, const OperatingPoint& op,
                                    const std::vector<int>& active) {
    const int m = static_cast<int>(active.size());
    std::vector<int> pos_of_index(feeder.node_count(), -1);
    for (int a = 0; a < m; ++a)
        pos_of_index[active[a]] = a;

    AggregatedDevices agg;
    const int ng = static_cast<int>(op.sg.size());
    agg.a_sg = Eigen::MatrixXd::Zero(8 * ng, 8 * ng);
    agg.b_sg = Eigen::MatrixXd::Zero(8 * ng, 2 * m);
    agg.c_sg = Eigen::MatrixXd::Zero(2 * m, 8 * ng);
    agg.y_sg = Eigen::MatrixXd::Zero(2 * m, 2 * m);
    agg.y_l = Eigen::MatrixXd::Zero(2 * m, 2 * m);

    int g = 0;
    for (const auto& [node_id, ss] : op.sg) {
        const int idx = feeder.node_index(node_id);
        const int pos = pos_of_index[idx];
        if (pos < 0)
            throw StructuralError("generator at node " + std::to_string(node_id) +
                                  " is outside the active network");
        const auto& params = feeder.generators.at(node_id);
        SgModel model(params, feeder.s_base_mva);
        const auto lin = model.linearize(SgModel::state_vector(ss), op.node_voltage(idx),
                                         ss.p_ref, ss.v_ref, feeder.f_nom_hz);
        agg.a_sg.block<8, 8>(8 * g, 8 * g) = lin.a;
        agg.b_sg.block<8, 2>(8 * g, 2 * pos) = lin.b;
        agg.c_sg.block<2, 8>(2 * pos, 8 * g) = lin.c;
        agg.y_sg.block<2, 2>(2 * pos, 2 * pos) = lin.y;
        agg.sg_nodes.push_back(node_id);
        agg.h_sys.push_back(params.h * params.rating_mva / feeder.s_base_mva);
        ++g;
    }

    for (const auto& [node_id, load] : feeder.loads) {
        const int pos = pos_of_index[feeder.node_index(node_id)];
        if (pos < 0)
            continue; // de-energized: contributes nothing until re-energized
        const Eigen::Vector2d v0 = op.node_voltage(feeder.node_index(node_id));
        agg.y_l.block<2, 2>(2 * pos, 2 * pos) = -linearize_zip(load, v0);
    }
    return agg;
}

Eigen::MatrixXd build_z(const Eigen::MatrixXd& y_l, const Eigen::MatrixXd& y_a,
                        const Eigen::MatrixXd& y_sg) {
    if (y_l.rows() != y_a.rows() || y_a.rows() != y_sg.rows())
        throw StructuralError("build_z: dimension mismatch");
    const Eigen::MatrixXd k = y_l - y_a - y_sg;
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(k);
    const double rcond = lu.rcond();
    if (!(rcond > 1e-12))
        throw SingularNetworkError(
            "network sensitivity matrix is singular or badly conditioned (rcond estimate " +
            std::to_string(rcond) + "); a passive network with no loads and no generator "
            "feedthrough is the classic trigger");
    Eigen::MatrixXd z = lu.solve(Eigen::MatrixXd::Identity(k.rows(), k.cols()));
    const double resid = (z * k - Eigen::MatrixXd::Identity(k.rows(), k.cols()))
                             .cwiseAbs()
                             .maxCoeff();
    // NaN-safe form: an exactly singular matrix can slip past the rcond
    // estimate and produce a NaN inverse, which > cannot catch.
    if (!(resid <= 1e-10))
        throw SingularNetworkError("network sensitivity inverse residual " +
                                   std::to_string(resid) + " exceeds 1e-10");
    return z;
}

CoiWeights coi_weights(const std::vector<double>& inertias) {
    if (inertias.empty())
        throw StructuralError("coi_weights: no inertias");
    double sum = 0.0;
    for (double h : inertias) {
        if (h <= 0.0)
            throw StructuralError("coi_weights: non-positive inertia");
        sum += h;
    }
    CoiWeights w;
    w.h.resize(static_cast<Eigen::Index>(inertias.size()));
    for (std::size_t i = 0; i < inertias.size(); ++i)
        w.h(static_cast<Eigen::Index>(i)) = inertias[i] / sum;
    return w;
}

MagnitudeMap magnitude_map(const Eigen::VectorXd& v0_active) {
    const int m = static_cast<int>(v0_active.size() / 2);
    MagnitudeMap mag;
    mag.m = Eigen::MatrixXd::Zero(m, 2 * m);
    for (int i = 0; i < m; ++i) {
        const Eigen::Vector2d v = v0_active.segment<2>(2 * i);
        const double vm = v.norm();
        if (vm <= 0.0)
            throw StructuralError("magnitude_map: zero anchor voltage at active node " +
                                  std::to_string(i));
        mag.m.block<1, 2>(i, 2 * i) = v.transpose() / vm;
    }
    return mag;
}

LinearSystem build_system(const AggregatedDevices& agg, const Eigen::MatrixXd& z,
                          const MagnitudeMap& mag, const CoiWeights& coi,
                          const std::vector<int>& active) {
    if (agg.b_sg.cols() != z.rows() || mag.m.cols() != z.rows())
        throw StructuralError("build_system: dimension mismatch");
    LinearSystem sys;
    sys.state_layout = agg.sg_nodes;
    sys.active_nodes = active;
    sys.a = agg.a_sg + agg.b_sg * z * agg.c_sg;
    sys.b = agg.b_sg * z;
    const int ng = static_cast<int>(agg.sg_nodes.size());
    sys.c_f = Eigen::RowVectorXd::Zero(8 * ng);
    for (int g = 0; g < ng; ++g)
        sys.c_f(8 * g + kSgFreq) = coi.h(g); // selector S applied structurally
    sys.c_v = mag.m * z * agg.c_sg;
    sys.d_v = mag.m * z;
    sys.z = z;
    sys.c_sg = agg.c_sg;

    Eigen::EigenSolver<Eigen::MatrixXd> es(sys.a);
    sys.eigenvalues = es.eigenvalues();
    sys.max_re_eigenvalue = sys.eigenvalues.real().maxCoeff();

    // An islanded grid is invariant under a common rotation of all rotor
    // angles and node voltages, which puts one exact zero eigenvalue on A
    // along the uniform-angle direction.  The mode is unobservable in both
    // outputs; the stability verdict is taken over the rest of the spectrum.
    const Eigen::VectorXd ref_dir = sys.angle_reference_direction();
    int ref_mode = -1;
    double best = 0.7; // minimum alignment to accept
    for (int k = 0; k < sys.eigenvalues.size(); ++k) {
        if (std::abs(sys.eigenvalues(k)) > 1e-6)
            continue;
        const Eigen::VectorXcd vec = es.eigenvectors().col(k);
        const double align = std::abs((ref_dir.cast<std::complex<double>>().adjoint() * vec)(0)) /
                             vec.norm();
        if (align > best) {
            best = align;
            ref_mode = k;
        }
    }
    sys.reference_mode_found = ref_mode >= 0;
    double worst = -std::numeric_limits<double>::infinity();
    for (int k = 0; k < sys.eigenvalues.size(); ++k)
        if (k != ref_mode)
            worst = std::max(worst, sys.eigenvalues(k).real());
    sys.max_re_eigenvalue_deflated = worst;
    return sys;
}

LinearSystem assemble_linear_system(const Feeder& feeder, const SwitchStates& states,
                                    const OperatingPoint& op,
                                    const BlockAdmittanceMatrix* y_override) {
    const auto energ = connectivity_check(feeder, states);
    std::vector<int> active;
    for (int i = 0; i < feeder.node_count(); ++i)
        if (energ.energized[i])
            active.push_back(i);

    const auto y_full = y_override ? *y_override : assemble_admittance(feeder, states);
    const auto agg = aggregate_devices(feeder, op, active);
    const auto z = build_z(agg.y_l, reduce_to_active(y_full.matrix(), active), agg.y_sg);
    const auto mag = magnitude_map(reduce_vector_to_active(op.v0, active));
    const auto coi = coi_weights(agg.h_sys);
    return build_system(agg, z, mag, coi, active);
}

SteadyState steady_state_response(const LinearSystem& sys, const Eigen::VectorXd& u) {
    if (u.size() != sys.b.cols())
        throw StructuralError("steady_state_response: input dimension mismatch");
    SteadyState ss;
    // Minimum-norm least-squares: A is rank deficient by the angle-reference
    // mode, which neither outputs nor dynamics observe.
    ss.dx = sys.a.completeOrthogonalDecomposition().solve((-sys.b * u).eval());
    ss.df = sys.c_f * ss.dx;
    ss.dvmag = sys.c_v * ss.dx + sys.d_v * u;
    return ss;
}

} // namespace dnr
