#include "spillover/synth.hpp"

#include <random>

#include "spillover/error.hpp"
#include "spillover/varmodel.hpp"

namespace spillover {

void DgpSpec::validate() const {
    const Eigen::Index n = sigma.rows();
    if (n < 1 || sigma.cols() != n) throw ConfigError("DGP sigma must be square and non-empty");
    if (!sigma.isApprox(sigma.transpose(), 1e-12)) throw ConfigError("DGP sigma must be symmetric");
    if (Eigen::LLT<Eigen::MatrixXd>(sigma).info() != Eigen::Success) {
        throw ConfigError("DGP sigma must be positive definite");
    }
    for (const auto& m : phi) {
        if (m.rows() != n || m.cols() != n) throw ConfigError("DGP coefficient matrices must be N x N");
    }
    if (intercept.size() != 0 && intercept.size() != n) throw ConfigError("DGP intercept must have N entries");
    if (!phi.empty() && !(companion_spectral_radius(phi) < 1.0)) {
        throw ConfigError("DGP is not stable (companion spectral radius >= 1)");
    }
    if (length == 0) throw ConfigError("DGP length must be positive");
}

Eigen::MatrixXd simulate_var(const DgpSpec& spec) {
    spec.validate();
    const Eigen::Index n = spec.dim();
    const Eigen::MatrixXd chol = Eigen::LLT<Eigen::MatrixXd>(spec.sigma).matrixL();
    const Eigen::VectorXd mu = spec.intercept.size() ? spec.intercept : Eigen::VectorXd::Zero(n);
    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> normal(0.0, 1.0);

    const std::size_t total = spec.length + spec.burn_in;
    const std::size_t p = spec.phi.size();
    Eigen::MatrixXd path = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(total + p), n);
    Eigen::VectorXd z(n);
    for (std::size_t t = p; t < total + p; ++t) {
        for (Eigen::Index i = 0; i < n; ++i) z(i) = normal(rng);
        Eigen::VectorXd y = mu + chol * z;
        for (std::size_t l = 1; l <= p; ++l) {
            y.noalias() += spec.phi[l - 1] * path.row(static_cast<Eigen::Index>(t - l)).transpose();
        }
        path.row(static_cast<Eigen::Index>(t)) = y.transpose();
    }
    return path.bottomRows(static_cast<Eigen::Index>(spec.length));
}

RealizedPanel simulate_panel(const DgpSpec& spec, std::vector<std::string> assets, Date first_date) {
    RealizedPanel panel;
    panel.values = simulate_var(spec);
    if (assets.empty()) {
        for (Eigen::Index i = 0; i < spec.dim(); ++i) assets.push_back("V" + std::to_string(i + 1));
    }
    if (static_cast<Eigen::Index>(assets.size()) != spec.dim()) throw ConfigError("asset name count must equal N");
    panel.assets = std::move(assets);
    panel.dates = business_days(first_date, spec.length);
    return panel;
}

ConnectednessTable population_connectedness(std::span<const Eigen::MatrixXd> phi, const Eigen::MatrixXd& sigma,
                                            std::size_t horizon, std::vector<std::string> labels) {
    const Eigen::Index n = sigma.rows();
    std::vector<Eigen::MatrixXd> coeffs(phi.begin(), phi.end());
    if (coeffs.empty()) coeffs.push_back(Eigen::MatrixXd::Zero(n, n));
    if (!(companion_spectral_radius(coeffs) < 1.0)) throw ConfigError("population_connectedness needs a stable VAR");
    const auto ma = ma_coefficients(coeffs, horizon);
    return connectedness_table(gfevd(ma, sigma, std::move(labels)));
}

}  // namespace spillover
