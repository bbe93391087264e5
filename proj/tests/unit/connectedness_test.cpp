#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "generators.hpp"
#include "json.hpp"
#include "oracles.hpp"
#include "spillover/connectedness.hpp"
#include "spillover/csv.hpp"
#include "spillover/error.hpp"

using namespace spillover;
using namespace spillover::testing;

namespace {

MaCoefficients identity_psi(Eigen::Index n) { return MaCoefficients{{Eigen::MatrixXd::Identity(n, n)}}; }

Eigen::MatrixXd corr2(double rho) {
    Eigen::MatrixXd s(2, 2);
    s << 1, rho, rho, 1;
    return s;
}

}  // namespace

TEST(Gfevd, IdentityCase) {
    const auto f = gfevd(identity_psi(3), Eigen::MatrixXd::Identity(3, 3));
    EXPECT_EQ(f.theta, Eigen::MatrixXd::Identity(3, 3));
    EXPECT_EQ(f.normalized, Eigen::MatrixXd::Identity(3, 3));
    EXPECT_EQ(f.horizon, 1u);
}

TEST(Gfevd, StaticCorrelatedPair) {
    for (double rho : {0.1, 0.5, 0.9, -0.5}) {
        const auto f = gfevd(identity_psi(2), corr2(rho));
        const double share = static_pair_share(rho);
        EXPECT_NEAR(f.normalized(0, 1), share, 1e-15);
        EXPECT_NEAR(f.normalized(1, 0), share, 1e-15);
        EXPECT_NEAR(f.theta(0, 1), rho * rho, 1e-15);
    }
    EXPECT_NEAR(gfevd(identity_psi(2), corr2(0.5)).normalized(0, 1), 0.2, 1e-15);
}

TEST(Gfevd, MatchesBruteForceOracle) {
    std::mt19937_64 rng(21);
    for (int trial = 0; trial < 300; ++trial) {
        const auto n = std::uniform_int_distribution<int>(1, 3)(rng);
        const int h = std::uniform_int_distribution<int>(1, 5)(rng);
        const auto phi = random_stable_phi(n, 1, rng, 0.9);
        const Eigen::MatrixXd sigma = random_covariance(n, rng);
        const auto psi = ma_by_companion_powers(phi, h);
        const auto f = gfevd(ma_coefficients(phi, static_cast<std::size_t>(h)), sigma);
        EXPECT_LT((f.theta - brute_force_gfevd(psi, sigma)).cwiseAbs().maxCoeff(), 1e-10);
    }
}

TEST(Gfevd, NormalizationProperty) {
    std::mt19937_64 rng(22);
    for (int trial = 0; trial < 300; ++trial) {
        const auto sys = random_system(rng);
        const auto h = static_cast<std::size_t>(std::uniform_int_distribution<int>(1, 20)(rng));
        const auto f = gfevd(ma_coefficients(sys.phi, h), sys.sigma);
        const auto n = static_cast<double>(sys.sigma.rows());
        EXPECT_LT((f.normalized.rowwise().sum().array() - 1.0).abs().maxCoeff(), 1e-12);
        EXPECT_NEAR(f.normalized.sum(), n, 1e-12);
        EXPECT_GE(f.theta.minCoeff(), 0.0);
    }
}

TEST(Gfevd, PermutationEquivariance) {
    std::mt19937_64 rng(23);
    for (int trial = 0; trial < 100; ++trial) {
        const auto sys = random_system(rng);
        const auto n = static_cast<int>(sys.sigma.rows());
        const Eigen::MatrixXd p = permutation_matrix(random_permutation(n, rng));
        std::vector<Eigen::MatrixXd> phi_p;
        for (const auto& m : sys.phi) phi_p.push_back(p * m * p.transpose());
        const auto a = gfevd(ma_coefficients(sys.phi, 10), sys.sigma);
        const auto b = gfevd(ma_coefficients(phi_p, 10), p * sys.sigma * p.transpose());
        EXPECT_LT((p * a.normalized * p.transpose() - b.normalized).cwiseAbs().maxCoeff(), 1e-12);
        EXPECT_NEAR(connectedness_table(a).total, connectedness_table(b).total, 1e-10);
    }
}

TEST(Gfevd, DiagonalSystemHasNoSpillover) {
    Eigen::MatrixXd phi = Eigen::MatrixXd::Zero(3, 3);
    phi.diagonal() << 0.5, -0.3, 0.9;
    Eigen::MatrixXd sigma = Eigen::MatrixXd::Zero(3, 3);
    sigma.diagonal() << 1.0, 2.0, 0.5;
    const auto t = connectedness_table(gfevd(ma_coefficients(std::vector<Eigen::MatrixXd>{phi}, 10), sigma));
    EXPECT_EQ(t.total, 0.0);
    EXPECT_EQ(t.from.cwiseAbs().maxCoeff(), 0.0);
}

TEST(Gfevd, LongHorizon) {
    std::mt19937_64 rng(24);
    const auto sys = random_system(rng, 4, 2);
    const auto f = gfevd(ma_coefficients(sys.phi, 1000), sys.sigma);
    EXPECT_LT((f.normalized.rowwise().sum().array() - 1.0).abs().maxCoeff(), 1e-12);
}

TEST(Gfevd, Errors) {
    Eigen::MatrixXd s = Eigen::MatrixXd::Identity(2, 2);
    s(1, 1) = 0.0;
    EXPECT_THROW(gfevd(identity_psi(2), s), NumericError);
    s(1, 1) = -1.0;
    EXPECT_THROW(gfevd(identity_psi(2), s), NumericError);
    EXPECT_THROW(row_normalize(Eigen::MatrixXd::Zero(2, 2)), NumericError);
    EXPECT_THROW(gfevd(identity_psi(3), Eigen::MatrixXd::Identity(2, 2)), ConfigError);
}

TEST(ConnectednessTable, NoSpillovers) {
    const auto t = connectedness_table(Eigen::MatrixXd::Identity(4, 4));
    EXPECT_EQ(t.total, 0.0);
    EXPECT_EQ(t.from, Eigen::VectorXd::Zero(4));
    EXPECT_EQ(t.to, Eigen::VectorXd::Zero(4));
    EXPECT_EQ(t.pairwise(2, 2), 100.0);
}

TEST(ConnectednessTable, StaticPairTotal) {
    const auto t = connectedness_table(gfevd(identity_psi(2), corr2(0.5)));
    EXPECT_NEAR(t.total, 20.0, 1e-10);
    EXPECT_NEAR(t.from(0), 10.0, 1e-10);
    EXPECT_NEAR(t.to(1), 10.0, 1e-10);
}

TEST(ConnectednessTable, PerfectDependenceBound) {
    const auto t = connectedness_table(gfevd(identity_psi(2), corr2(1.0 - 1e-9)));
    EXPECT_NEAR(t.total, 50.0, 1e-6);
}

TEST(ConnectednessTable, MarginIdentityAndBounds) {
    std::mt19937_64 rng(25);
    for (int trial = 0; trial < 300; ++trial) {
        const auto sys = random_system(rng);
        const auto t = connectedness_table(gfevd(ma_coefficients(sys.phi, 10), sys.sigma));
        const auto n = static_cast<double>(sys.sigma.rows());
        EXPECT_NEAR(t.from.sum(), t.total, 1e-10);
        EXPECT_NEAR(t.to.sum(), t.total, 1e-10);
        EXPECT_GE(t.total, 0.0);
        EXPECT_LE(t.total, 100.0 * (n - 1.0) / n);
    }
}

// Printed six-currency shares: the margins follow the 1/N convention.
TEST(ConnectednessTable, SixCurrencyConvention) {
    Eigen::MatrixXd pw(6, 6);
    pw << 32.24, 15.18, 16.92, 13.98, 10.21, 11.47,  //
        15.92, 33.13, 13.66, 15.86, 9.94, 11.48,     //
        20.81, 15.88, 30.91, 12.38, 8.70, 11.33,     //
        16.22, 16.22, 11.25, 28.12, 8.41, 19.79,     //
        15.72, 15.47, 10.54, 12.63, 33.18, 12.46,    //
        15.18, 13.08, 11.63, 22.19, 9.62, 28.29;
    const auto t = connectedness_table(row_normalize(pw / 100.0));
    const Eigen::VectorXd from{{11.29, 11.14, 11.52, 11.98, 11.14, 11.95}};
    const Eigen::VectorXd to{{13.98, 12.64, 10.66, 12.84, 7.81, 11.09}};
    EXPECT_LT((t.from - from).cwiseAbs().maxCoeff(), 0.011);
    EXPECT_LT((t.to - to).cwiseAbs().maxCoeff(), 0.011);
    EXPECT_NEAR(t.total, 69.02, 0.011);
    EXPECT_NEAR(t.pairwise(0, 0), 32.24, 0.011);
}

TEST(TableFormat, Layout) {
    const auto t = connectedness_table(gfevd(identity_psi(2), corr2(0.5)).normalized, {"CL", "GC"});
    std::istringstream plain(format_table(t));
    const auto table = read_delimited(plain);
    EXPECT_EQ(table.header, (std::vector<std::string>{"asset", "CL", "GC", "FROM"}));
    ASSERT_EQ(table.rows.size(), 3u);
    EXPECT_EQ(table.rows[0][0], "CL");
    EXPECT_EQ(table.rows[2][0], "TO");
    EXPECT_NEAR(std::stod(table.rows[0][1]), 80.0, 1e-10);
    EXPECT_NEAR(std::stod(table.rows[0][3]), 10.0, 1e-10);
    EXPECT_NEAR(std::stod(table.rows[2][3]), 20.0, 1e-10);

    std::istringstream banded(format_table(t, "1-5"));
    const auto b = read_delimited(banded);
    EXPECT_EQ(b.header.front(), "band");
    EXPECT_EQ(b.rows[2][0], "1-5");
    EXPECT_EQ(b.rows[2][1], "TO");
}

TEST(TableFormat, Json) {
    const auto t = connectedness_table(gfevd(identity_psi(2), corr2(0.5)).normalized, {"CL", "GC"});
    const auto j = nlohmann::json::parse(table_json(t));
    EXPECT_EQ(j["labels"][0], "CL");
    EXPECT_NEAR(j["total"].template get<double>(), 20.0, 1e-10);
    EXPECT_NEAR(j["pairwise"][1][0].template get<double>(), 20.0, 1e-10);
    EXPECT_EQ(j["from"].size(), 2u);
}
