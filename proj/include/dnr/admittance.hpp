#pragma once

#include <Eigen/Dense>
#include <complex>

namespace dnr {

// Complex admittance y = g + jb acting on dq vectors as the 2x2 real matrix
// [[g, -b], [b, g]].  The expansion is a ring homomorphism: sums and products
// of blocks mirror complex arithmetic.
struct AdmittanceBlock {
    double g = 0.0;
    double b = 0.0;

    AdmittanceBlock() = default;
    AdmittanceBlock(double g_, double b_) : g(g_), b(b_) {}
    explicit AdmittanceBlock(std::complex<double> y) : g(y.real()), b(y.imag()) {}

    [[nodiscard]] std::complex<double> as_complex() const { return {g, b}; }

    [[nodiscard]] Eigen::Matrix2d expand() const {
        Eigen::Matrix2d m;
        m << g, -b, b, g;
        return m;
    }

    AdmittanceBlock operator+(const AdmittanceBlock& o) const { return {g + o.g, b + o.b}; }
    AdmittanceBlock operator-(const AdmittanceBlock& o) const { return {g - o.g, b - o.b}; }
    AdmittanceBlock operator-() const { return {-g, -b}; }
    AdmittanceBlock operator*(const AdmittanceBlock& o) const {
        return AdmittanceBlock(as_complex() * o.as_complex());
    }
};

// Dense 2N x 2N real matrix addressable by 2x2 node-pair blocks.
class BlockAdmittanceMatrix {
public:
    BlockAdmittanceMatrix() = default;
    explicit BlockAdmittanceMatrix(int n_nodes)
        : n_(n_nodes), data_(Eigen::MatrixXd::Zero(2 * n_nodes, 2 * n_nodes)) {}

    [[nodiscard]] int nodes() const { return n_; }
    [[nodiscard]] const Eigen::MatrixXd& matrix() const { return data_; }
    [[nodiscard]] Eigen::MatrixXd& matrix() { return data_; }

    [[nodiscard]] Eigen::Matrix2d block(int i, int j) const {
        return data_.block<2, 2>(2 * i, 2 * j);
    }

    void add_block(int i, int j, const AdmittanceBlock& y) {
        data_.block<2, 2>(2 * i, 2 * j) += y.expand();
    }

    BlockAdmittanceMatrix operator-(const BlockAdmittanceMatrix& o) const;

private:
    int n_ = 0;
    Eigen::MatrixXd data_;
};

} // namespace dnr
