#include <cmath>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "spillover/error.hpp"
#include "spillover/synth.hpp"

using namespace spillover;
using namespace spillover::testing;

namespace {

Eigen::MatrixXd sample_cov(const Eigen::MatrixXd& x, int lag = 0) {
    const Eigen::RowVectorXd mu = x.colwise().mean();
    const Eigen::MatrixXd c = x.rowwise() - mu;
    const Eigen::Index n = c.rows() - lag;
    return c.bottomRows(n).transpose() * c.topRows(n) / static_cast<double>(n);
}

DgpSpec spec(std::vector<Eigen::MatrixXd> phi, Eigen::MatrixXd sigma, std::size_t length, std::uint64_t seed) {
    DgpSpec s;
    s.phi = std::move(phi);
    s.sigma = std::move(sigma);
    s.length = length;
    s.seed = seed;
    return s;
}

}  // namespace

TEST(Simulate, WhiteNoiseCovariance) {
    Eigen::MatrixXd sigma(3, 3);
    sigma << 1.0, 0.5, 0.0, 0.5, 1.0, -0.3, 0.0, -0.3, 1.0;
    const auto x = simulate_var(spec({Eigen::MatrixXd::Zero(3, 3)}, sigma, 10000, 7));
    ASSERT_EQ(x.rows(), 10000);
    ASSERT_EQ(x.cols(), 3);
    EXPECT_LT((sample_cov(x) - sigma).cwiseAbs().maxCoeff(), 0.05);
    EXPECT_LT(x.colwise().mean().cwiseAbs().maxCoeff(), 0.05);
}

TEST(Simulate, SeedDeterminism) {
    const auto s = spec({Eigen::MatrixXd::Identity(2, 2) * 0.3}, Eigen::MatrixXd::Identity(2, 2), 300, 11);
    EXPECT_EQ(simulate_var(s), simulate_var(s));
    auto t = s;
    t.seed = 12;
    EXPECT_NE(simulate_var(s), simulate_var(t));
}

TEST(Simulate, AutocovarianceMatchesLyapunov) {
    Eigen::MatrixXd phi(2, 2);
    phi << 0.5, 0.2, 0.0, 0.5;
    Eigen::MatrixXd sigma(2, 2);
    sigma << 1.0, 0.3, 0.3, 1.0;
    const auto x = simulate_var(spec({phi}, sigma, 20000, 3));
    const Eigen::MatrixXd g0 = lyapunov_covariance(phi, sigma);
    const Eigen::MatrixXd g1 = phi * g0;
    EXPECT_LT((sample_cov(x) - g0).cwiseAbs().maxCoeff(), 0.05);
    EXPECT_LT((sample_cov(x, 1) - g1).cwiseAbs().maxCoeff(), 0.05);
}

TEST(Simulate, InterceptShiftsMean) {
    auto s = spec({Eigen::MatrixXd::Identity(1, 1) * 0.5}, Eigen::MatrixXd::Identity(1, 1), 20000, 5);
    s.intercept = Eigen::VectorXd::Constant(1, 1.0);
    EXPECT_NEAR(simulate_var(s).mean(), 2.0, 0.05);
}

TEST(Simulate, RejectsInvalidSpecs) {
    EXPECT_THROW(simulate_var(spec({Eigen::MatrixXd::Identity(2, 2) * 1.01}, Eigen::MatrixXd::Identity(2, 2), 10, 0)),
                 ConfigError);
    Eigen::MatrixXd bad(2, 2);
    bad << 1.0, 2.0, 2.0, 1.0;
    EXPECT_THROW(simulate_var(spec({Eigen::MatrixXd::Zero(2, 2)}, bad, 10, 0)), ConfigError);
    EXPECT_THROW(simulate_var(spec({Eigen::MatrixXd::Zero(3, 3)}, Eigen::MatrixXd::Identity(2, 2), 10, 0)),
                 ConfigError);
}

TEST(SimulatePanel, BusinessDayDates) {
    const auto s = spec({Eigen::MatrixXd::Zero(2, 2)}, Eigen::MatrixXd::Identity(2, 2), 10, 1);
    const auto p = simulate_panel(s, {"A", "B"}, parse_iso_date("2004-01-02"));
    ASSERT_EQ(p.rows(), 10u);
    EXPECT_EQ(format_iso_date(p.dates[0]), "2004-01-02");
    EXPECT_EQ(format_iso_date(p.dates[1]), "2004-01-05");
    EXPECT_EQ(p.assets, (std::vector<std::string>{"A", "B"}));
    EXPECT_THROW(simulate_panel(s, {"A"}, p.dates[0]), ConfigError);
}

TEST(Population, KnownValues) {
    const std::vector<Eigen::MatrixXd> zero{Eigen::MatrixXd::Zero(2, 2)};
    EXPECT_NEAR(population_connectedness(zero, Eigen::MatrixXd::Identity(2, 2), 10).total, 0.0, 1e-12);
    Eigen::MatrixXd sigma(2, 2);
    sigma << 1, 0.5, 0.5, 1;
    EXPECT_NEAR(population_connectedness(zero, sigma, 10).total, 20.0, 1e-10);
    EXPECT_NEAR(population_connectedness(zero, sigma, 10).total, 100.0 * static_pair_share(0.5), 1e-10);
    sigma << 1, 0.999999, 0.999999, 1;
    EXPECT_NEAR(population_connectedness(zero, sigma, 10).total, 50.0, 1e-4);
}
