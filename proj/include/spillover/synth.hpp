#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "spillover/calendar.hpp"
#include "spillover/connectedness.hpp"
#include "spillover/realized.hpp"

namespace spillover {

// Gaussian VAR data-generating process with known parameters.
struct DgpSpec {
    std::vector<Eigen::MatrixXd> phi;
    Eigen::MatrixXd sigma;
    Eigen::VectorXd intercept;  // empty means zero
    std::size_t length = 1000;
    std::size_t burn_in = 500;
    std::uint64_t seed = 0;

    Eigen::Index dim() const noexcept { return sigma.rows(); }
    /// Throws ConfigError when the process is unstable or sigma is not positive definite.
    void validate() const;
};

/// length x N sample started from zero, burn-in discarded.
Eigen::MatrixXd simulate_var(const DgpSpec& spec);

/// The simulated sample wrapped as a panel on consecutive business days.
RealizedPanel simulate_panel(const DgpSpec& spec, std::vector<std::string> assets, Date first_date);

/// Connectedness implied by the true parameters at horizon H.
ConnectednessTable population_connectedness(std::span<const Eigen::MatrixXd> phi, const Eigen::MatrixXd& sigma,
                                            std::size_t horizon, std::vector<std::string> labels = {});

}  // namespace spillover
