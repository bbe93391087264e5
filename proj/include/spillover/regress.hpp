#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

namespace spillover {

struct OlsResult {
    std::vector<std::string> names;  // "(Intercept)" followed by the regressors
    Eigen::VectorXd coefficients;
    Eigen::VectorXd std_errors;  // classical, s^2 (X'X)^-1
    Eigen::VectorXd t_values;
    Eigen::VectorXd p_values;    // two-sided Student t
    double r_squared = 0.0;
    double adj_r_squared = 0.0;
    std::size_t observations = 0;
};

/// Least squares of y on [1, X]. With `standardize` each column of X is
/// centered and scaled to unit sample variance first, which makes the
/// intercept the mean of y. Collinear columns raise RankDeficientError.
OlsResult ols_regress(const Eigen::VectorXd& y, const Eigen::MatrixXd& x, std::vector<std::string> names = {},
                      bool standardize = false);

std::string format_ols(const OlsResult& r);
std::string ols_json(const OlsResult& r);

}  // namespace spillover
