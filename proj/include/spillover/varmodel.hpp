#pragma once

#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "spillover/error.hpp"

namespace spillover {

// Raised when a regressor column is a linear combination of the others.
class RankDeficientError : public NumericError {
public:
    RankDeficientError(Eigen::Index column, const std::string& label)
        : NumericError("rank-deficient regressor matrix: column " + std::to_string(column) + " (" + label + ")"),
          column_(column) {}
    Eigen::Index column() const noexcept { return column_; }

private:
    Eigen::Index column_;
};

// VAR(p) with intercept fitted by per-equation least squares.
struct VarModel {
    int p = 0;
    std::vector<Eigen::MatrixXd> phi;  // Phi_1 .. Phi_p, each N x N
    Eigen::VectorXd intercept;
    Eigen::MatrixXd residuals;  // (T - p) x N
    Eigen::MatrixXd sigma;      // residuals' residuals / (T - p - z)
    int z = 0;                  // regressors per equation: N p + 1
    double spectral_radius = 0.0;
    bool stable = false;

    Eigen::Index dim() const noexcept { return intercept.size(); }
};

/// Regressor matrix [1, y_{t-1}, ..., y_{t-p}] for rows t = first_row .. T-1.
Eigen::MatrixXd lagged_design(const Eigen::MatrixXd& y, int p, Eigen::Index first_row);

/// Throws RankDeficientError or NumericError (sample too short).
VarModel fit_var(const Eigen::MatrixXd& window, int p);
/// Same fit from a prepared design (rows of lagged_design) and matching targets.
VarModel fit_var_design(const Eigen::MatrixXd& design, const Eigen::MatrixXd& targets, int p);

Eigen::MatrixXd companion_matrix(std::span<const Eigen::MatrixXd> phi);
double companion_spectral_radius(std::span<const Eigen::MatrixXd> phi);

/// AIC(p) = ln det(ML residual covariance) + 2 p N^2 / T_eff on the common
/// sample t = p_max .. T-1. Returns the criterion for p = 1 .. p_max.
std::vector<double> aic_profile(const Eigen::MatrixXd& window, int p_max);
/// Smallest p attaining the minimum AIC.
int select_lag_aic(const Eigen::MatrixXd& window, int p_max);

// Psi_0 .. Psi_{H-1} of the moving-average representation.
struct MaCoefficients {
    std::vector<Eigen::MatrixXd> psi;
    std::size_t horizon() const noexcept { return psi.size(); }
};

MaCoefficients ma_coefficients(std::span<const Eigen::MatrixXd> phi, std::size_t horizon);
inline MaCoefficients ma_coefficients(const VarModel& model, std::size_t horizon) {
    return ma_coefficients(model.phi, horizon);
}

/// Debug dump: matrices as row-major nested arrays.
std::string var_model_json(const VarModel& model, std::span<const std::string> labels);

}  // namespace spillover
