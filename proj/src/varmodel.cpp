#include "spillover/varmodel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Eigenvalues>

#include "json.hpp"

namespace spillover {

namespace {

std::string regressor_label(Eigen::Index col, Eigen::Index n) {
    if (col == 0) return "intercept";
    const auto lag = (col - 1) / n + 1;
    const auto var = (col - 1) % n + 1;
    return "lag " + std::to_string(lag) + " of variable " + std::to_string(var);
}

struct LsFit {
    Eigen::MatrixXd coef;  // regressors x N
    Eigen::MatrixXd resid;
};

LsFit least_squares(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, Eigen::Index n_vars) {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
    if (qr.rank() < x.cols()) {
        // Columns past the rank in pivot order are the dependent ones.
        const auto perm = qr.colsPermutation().indices();
        Eigen::Index worst = perm(qr.rank());
        for (Eigen::Index k = qr.rank() + 1; k < x.cols(); ++k) worst = std::min<Eigen::Index>(worst, perm(k));
        throw RankDeficientError(worst, regressor_label(worst, n_vars));
    }
    LsFit fit;
    fit.coef = qr.solve(y);
    fit.resid = y - x * fit.coef;
    return fit;
}

}  // namespace

Eigen::MatrixXd lagged_design(const Eigen::MatrixXd& y, int p, Eigen::Index first_row) {
    const Eigen::Index n = y.cols();
    const Eigen::Index rows = y.rows() - first_row;
    Eigen::MatrixXd x(rows, n * p + 1);
    x.col(0).setOnes();
    for (int l = 1; l <= p; ++l) {
        x.block(0, 1 + (l - 1) * n, rows, n) = y.middleRows(first_row - l, rows);
    }
    return x;
}

Eigen::MatrixXd companion_matrix(std::span<const Eigen::MatrixXd> phi) {
    if (phi.empty()) return Eigen::MatrixXd();
    const Eigen::Index n = phi.front().rows();
    const auto p = static_cast<Eigen::Index>(phi.size());
    Eigen::MatrixXd c = Eigen::MatrixXd::Zero(n * p, n * p);
    for (Eigen::Index l = 0; l < p; ++l) c.block(0, l * n, n, n) = phi[static_cast<std::size_t>(l)];
    if (p > 1) c.block(n, 0, n * (p - 1), n * (p - 1)).setIdentity();
    return c;
}

double companion_spectral_radius(std::span<const Eigen::MatrixXd> phi) {
    if (phi.empty()) return 0.0;
    const Eigen::MatrixXd c = companion_matrix(phi);
    Eigen::EigenSolver<Eigen::MatrixXd> es(c, false);
    if (es.info() != Eigen::Success) return std::numeric_limits<double>::infinity();
    return es.eigenvalues().cwiseAbs().maxCoeff();
}

VarModel fit_var_design(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, int p) {
    if (p < 1) throw ConfigError("VAR lag order must be at least 1");
    const Eigen::Index n = y.cols();
    const Eigen::Index t_eff = y.rows();
    const int z = static_cast<int>(n) * p + 1;
    if (x.rows() != t_eff || x.cols() != z) throw ConfigError("design matrix does not match the VAR order");
    if (n < 1 || t_eff <= z) {
        throw NumericError("sample too short for VAR(" + std::to_string(p) + "): " + std::to_string(t_eff + p) +
                           " rows, " + std::to_string(n) + " variables");
    }
    if (!x.allFinite() || !y.allFinite()) throw NumericError("VAR input contains non-finite values");
    LsFit fit = least_squares(x, y, n);

    VarModel m;
    m.p = p;
    m.z = z;
    m.intercept = fit.coef.row(0).transpose();
    for (int l = 0; l < p; ++l) m.phi.push_back(fit.coef.middleRows(1 + l * n, n).transpose());
    m.residuals = std::move(fit.resid);
    m.sigma = (m.residuals.transpose() * m.residuals) / static_cast<double>(t_eff - z);
    m.sigma = 0.5 * (m.sigma + m.sigma.transpose());
    m.spectral_radius = companion_spectral_radius(m.phi);
    m.stable = m.spectral_radius < 1.0;
    return m;
}

VarModel fit_var(const Eigen::MatrixXd& window, int p) {
    if (p < 1) throw ConfigError("VAR lag order must be at least 1");
    const Eigen::Index n = window.cols();
    const Eigen::Index t_eff = window.rows() - p;
    if (n < 1 || t_eff <= n * p + 1) {
        throw NumericError("sample too short for VAR(" + std::to_string(p) + "): " + std::to_string(window.rows()) +
                           " rows, " + std::to_string(n) + " variables");
    }
    return fit_var_design(lagged_design(window, p, p), window.bottomRows(t_eff), p);
}

std::vector<double> aic_profile(const Eigen::MatrixXd& window, int p_max) {
    if (p_max < 1) throw ConfigError("p_max must be at least 1");
    const Eigen::Index n = window.cols();
    const Eigen::Index t_eff = window.rows() - p_max;
    if (t_eff <= n * p_max + 1) throw NumericError("sample too short for AIC search up to lag " + std::to_string(p_max));
    const Eigen::MatrixXd y = window.bottomRows(t_eff);
    std::vector<double> aic;
    for (int p = 1; p <= p_max; ++p) {
        // Rows p_max .. T-1 for every candidate so the criteria share one sample.
        const Eigen::MatrixXd x = lagged_design(window, p, p_max);
        const LsFit fit = least_squares(x, y, n);
        const Eigen::MatrixXd ml = (fit.resid.transpose() * fit.resid) / static_cast<double>(t_eff);
        const Eigen::LDLT<Eigen::MatrixXd> ldlt(ml);
        double logdet = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) logdet += std::log(ldlt.vectorD()(i));
        aic.push_back(logdet + 2.0 * p * static_cast<double>(n * n) / static_cast<double>(t_eff));
    }
    return aic;
}

int select_lag_aic(const Eigen::MatrixXd& window, int p_max) {
    if (p_max == 1) return 1;
    const auto aic = aic_profile(window, p_max);
    // min_element returns the first minimum, i.e. the smaller lag on ties.
    return static_cast<int>(std::min_element(aic.begin(), aic.end()) - aic.begin()) + 1;
}

MaCoefficients ma_coefficients(std::span<const Eigen::MatrixXd> phi, std::size_t horizon) {
    if (horizon < 1) throw ConfigError("MA horizon must be at least 1");
    if (phi.empty()) throw ConfigError("MA recursion needs at least one coefficient matrix");
    const Eigen::Index n = phi.front().rows();
    MaCoefficients ma;
    ma.psi.reserve(horizon);
    ma.psi.push_back(Eigen::MatrixXd::Identity(n, n));
    for (std::size_t h = 1; h < horizon; ++h) {
        Eigen::MatrixXd next = Eigen::MatrixXd::Zero(n, n);
        for (std::size_t j = 1; j <= std::min(h, phi.size()); ++j) next.noalias() += phi[j - 1] * ma.psi[h - j];
        ma.psi.push_back(std::move(next));
    }
    return ma;
}

std::string var_model_json(const VarModel& model, std::span<const std::string> labels) {
    auto mat = [](const Eigen::MatrixXd& m) {
        nlohmann::json rows = nlohmann::json::array();
        for (Eigen::Index i = 0; i < m.rows(); ++i) {
            nlohmann::json row = nlohmann::json::array();
            for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
            rows.push_back(std::move(row));
        }
        return rows;
    };
    nlohmann::json j;
    j["labels"] = std::vector<std::string>(labels.begin(), labels.end());
    j["p"] = model.p;
    j["z"] = model.z;
    j["intercept"] = std::vector<double>(model.intercept.data(), model.intercept.data() + model.intercept.size());
    j["phi"] = nlohmann::json::array();
    for (const auto& m : model.phi) j["phi"].push_back(mat(m));
    j["sigma"] = mat(model.sigma);
    j["residual_rows"] = model.residuals.rows();
    j["spectral_radius"] = model.spectral_radius;
    j["stable"] = model.stable;
    return j.dump(2);
}

}  // namespace spillover
