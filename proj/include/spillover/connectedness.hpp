#pragma once

#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "spillover/varmodel.hpp"

namespace spillover {

// Generalized forecast error variance decomposition at horizon H.
struct FevdMatrix {
    Eigen::MatrixXd theta;       // raw shares, rows do not sum to one
    Eigen::MatrixXd normalized;  // theta divided by its row sums
    std::size_t horizon = 0;
    std::vector<std::string> labels;
};

/// theta_jk = sigma_kk^-1 sum_h (Psi_h Sigma)_jk^2 / sum_h (Psi_h Sigma Psi_h')_jj
/// over h = 0 .. H-1, shocks not orthogonalized.
FevdMatrix gfevd(const MaCoefficients& psi, const Eigen::MatrixXd& sigma, std::vector<std::string> labels = {});

/// Row-normalizes an arbitrary non-negative share matrix.
Eigen::MatrixXd row_normalize(const Eigen::MatrixXd& theta);

// Spillover table in percent. Margins carry the 1/N factor so that
// sum(from) == sum(to) == total.
struct ConnectednessTable {
    std::vector<std::string> labels;
    Eigen::MatrixXd pairwise;  // 100 * normalized shares; row = receiver, column = source
    Eigen::VectorXd from;      // received by asset j from all others
    Eigen::VectorXd to;        // transmitted by asset j to all others
    double total = 0.0;
};

ConnectednessTable connectedness_table(const Eigen::MatrixXd& normalized, std::vector<std::string> labels = {});
inline ConnectednessTable connectedness_table(const FevdMatrix& fevd) {
    return connectedness_table(fevd.normalized, fevd.labels);
}

/// Pairwise block with a trailing FROM column, then a TO row whose last
/// cell holds the total. `band` adds a leading band column when non-empty.
std::string format_table(const ConnectednessTable& table, const std::string& band = {});
std::string table_json(const ConnectednessTable& table);

}  // namespace spillover
