#pragma once

// Reference computations that share no code path with the library.

#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include <Eigen/Dense>

namespace spillover::testing {

/// Psi_h = J C^h J' through explicit powers of the companion matrix.
inline std::vector<Eigen::MatrixXd> ma_by_companion_powers(const std::vector<Eigen::MatrixXd>& phi, int horizon) {
    const Eigen::Index n = phi.front().rows();
    const auto p = static_cast<Eigen::Index>(phi.size());
    Eigen::MatrixXd c = Eigen::MatrixXd::Zero(n * p, n * p);
    for (Eigen::Index l = 0; l < p; ++l) c.block(0, l * n, n, n) = phi[static_cast<std::size_t>(l)];
    for (Eigen::Index i = n; i < n * p; ++i) c(i, i - n) = 1.0;
    std::vector<Eigen::MatrixXd> out;
    Eigen::MatrixXd power = Eigen::MatrixXd::Identity(n * p, n * p);
    for (int h = 0; h < horizon; ++h) {
        out.push_back(power.topLeftCorner(n, n));
        power = power * c;
    }
    return out;
}

/// Generalized FEVD by literal accumulation: impulse of response j to a
/// one-standard-deviation shock in k, squared and summed over h, divided by
/// the j-th forecast error variance; every product written as scalar loops.
inline Eigen::MatrixXd brute_force_gfevd(const std::vector<Eigen::MatrixXd>& psi, const Eigen::MatrixXd& sigma) {
    const Eigen::Index n = sigma.rows();
    Eigen::MatrixXd theta(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        double fev = 0.0;
        for (const auto& ps : psi) {
            for (Eigen::Index a = 0; a < n; ++a) {
                for (Eigen::Index b = 0; b < n; ++b) fev += ps(j, a) * sigma(a, b) * ps(j, b);
            }
        }
        for (Eigen::Index k = 0; k < n; ++k) {
            double num = 0.0;
            for (const auto& ps : psi) {
                double impulse = 0.0;
                for (Eigen::Index a = 0; a < n; ++a) impulse += ps(j, a) * sigma(a, k);
                impulse /= std::sqrt(sigma(k, k));
                num += impulse * impulse;
            }
            theta(j, k) = num / fev;
        }
    }
    return theta;
}

/// Stationary covariance of a VAR(1): vec(G) = (I - Phi (x) Phi)^-1 vec(Sigma).
inline Eigen::MatrixXd lyapunov_covariance(const Eigen::MatrixXd& phi, const Eigen::MatrixXd& sigma) {
    const Eigen::Index n = phi.rows();
    Eigen::MatrixXd kron(n * n, n * n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) kron.block(i * n, j * n, n, n) = phi(i, j) * phi;
    }
    Eigen::VectorXd vec_sigma(n * n);
    for (Eigen::Index c = 0; c < n; ++c) vec_sigma.segment(c * n, n) = sigma.col(c);
    const Eigen::VectorXd v = (Eigen::MatrixXd::Identity(n * n, n * n) - kron).fullPivLu().solve(vec_sigma);
    Eigen::MatrixXd g(n, n);
    for (Eigen::Index c = 0; c < n; ++c) g.col(c) = v.segment(c * n, n);
    return g;
}

/// sum_h Psi_h exp(-2 pi i m h / H_s) entry by entry.
inline Eigen::MatrixXcd direct_dft(const std::vector<Eigen::MatrixXd>& psi, std::size_t resolution, std::size_t m) {
    const Eigen::Index n = psi.front().rows();
    Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(n, n);
    for (std::size_t h = 0; h < psi.size() && h < resolution; ++h) {
        const double angle = -2.0 * std::numbers::pi * static_cast<double>(m * h % resolution) /
                             static_cast<double>(resolution);
        const std::complex<double> w(std::cos(angle), std::sin(angle));
        for (Eigen::Index a = 0; a < n; ++a) {
            for (Eigen::Index b = 0; b < n; ++b) out(a, b) += psi[h](a, b) * w;
        }
    }
    return out;
}

/// Off-diagonal normalized share for two variables with unit variances and
/// correlation rho, no dynamics, one-step horizon.
inline double static_pair_share(double rho) { return rho * rho / (1.0 + rho * rho); }

}  // namespace spillover::testing
