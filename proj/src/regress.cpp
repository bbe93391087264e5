#include "spillover/regress.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include <boost/math/distributions/students_t.hpp>

#include "json.hpp"
#include "spillover/error.hpp"
#include "spillover/numeric.hpp"
#include "spillover/varmodel.hpp"

namespace spillover {

OlsResult ols_regress(const Eigen::VectorXd& y, const Eigen::MatrixXd& x, std::vector<std::string> names,
                      bool standardize) {
    const Eigen::Index t = y.size();
    const Eigen::Index k = x.cols();
    if (x.rows() != t) throw InputError("regressand and regressors differ in length");
    if (t <= k + 1) throw NumericError("too few observations for " + std::to_string(k) + " regressors");
    if (!y.allFinite() || !x.allFinite()) throw InputError("regression data contain missing or non-finite values");
    if (names.empty()) {
        for (Eigen::Index i = 0; i < k; ++i) names.push_back("x" + std::to_string(i + 1));
    }
    if (static_cast<Eigen::Index>(names.size()) != k) throw ConfigError("regressor name count mismatch");

    Eigen::MatrixXd design(t, k + 1);
    design.col(0).setOnes();
    design.rightCols(k) = x;
    if (standardize) {
        for (Eigen::Index j = 1; j <= k; ++j) {
            const double mean = design.col(j).mean();
            design.col(j).array() -= mean;
            const double sd = std::sqrt(design.col(j).squaredNorm() / static_cast<double>(t - 1));
            if (!(sd > 0.0)) throw RankDeficientError(j, names[static_cast<std::size_t>(j - 1)] + " is constant");
            design.col(j) /= sd;
        }
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
    if (qr.rank() < design.cols()) {
        const auto perm = qr.colsPermutation().indices();
        Eigen::Index worst = perm(qr.rank());
        for (Eigen::Index i = qr.rank() + 1; i < design.cols(); ++i) worst = std::min<Eigen::Index>(worst, perm(i));
        throw RankDeficientError(worst, worst == 0 ? "(Intercept)" : names[static_cast<std::size_t>(worst - 1)]);
    }
    OlsResult r;
    r.names.push_back("(Intercept)");
    r.names.insert(r.names.end(), names.begin(), names.end());
    r.coefficients = qr.solve(y);
    const Eigen::VectorXd resid = y - design * r.coefficients;
    const double rss = resid.squaredNorm();
    const double tss = (y.array() - y.mean()).matrix().squaredNorm();
    const auto dof = static_cast<double>(t - k - 1);
    const double s2 = rss / dof;

    // (X'X)^-1 = P R^-1 R^-T P' from the pivoted QR.
    const auto p = design.cols();
    const Eigen::MatrixXd r_upper = qr.matrixR().topLeftCorner(p, p).triangularView<Eigen::Upper>();
    const Eigen::MatrixXd r_inv = r_upper.triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(p, p));
    const Eigen::MatrixXd cov_perm = r_inv * r_inv.transpose();
    const Eigen::MatrixXd cov = qr.colsPermutation() * cov_perm * qr.colsPermutation().transpose();
    r.std_errors = (s2 * cov.diagonal()).cwiseSqrt();
    r.t_values = r.coefficients.cwiseQuotient(r.std_errors);
    r.p_values.resize(p);
    const boost::math::students_t dist(dof);
    for (Eigen::Index i = 0; i < p; ++i) {
        const double tv = r.t_values(i);
        if (std::isnan(tv)) {
            r.p_values(i) = std::numeric_limits<double>::quiet_NaN();
        } else if (std::isinf(tv)) {
            r.p_values(i) = 0.0;
        } else {
            r.p_values(i) = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(tv)));
        }
    }
    r.r_squared = tss > 0.0 ? 1.0 - rss / tss : 1.0;
    r.adj_r_squared = 1.0 - (1.0 - r.r_squared) * static_cast<double>(t - 1) / dof;
    r.observations = static_cast<std::size_t>(t);
    return r;
}

std::string format_ols(const OlsResult& r) {
    std::ostringstream os;
    os << "term,estimate,std_error,t_value,p_value\n";
    for (std::size_t i = 0; i < r.names.size(); ++i) {
        const auto e = static_cast<Eigen::Index>(i);
        os << r.names[i] << ',' << format_double(r.coefficients(e)) << ',' << format_double(r.std_errors(e)) << ','
           << format_double(r.t_values(e)) << ',' << format_double(r.p_values(e)) << '\n';
    }
    os << "R2," << format_double(r.r_squared) << ",,,\n";
    os << "adj_R2," << format_double(r.adj_r_squared) << ",,,\n";
    os << "n," << r.observations << ",,,\n";
    return os.str();
}

std::string ols_json(const OlsResult& r) {
    nlohmann::json j;
    for (std::size_t i = 0; i < r.names.size(); ++i) {
        const auto e = static_cast<Eigen::Index>(i);
        j["terms"].push_back({{"name", r.names[i]},
                              {"estimate", r.coefficients(e)},
                              {"std_error", r.std_errors(e)},
                              {"t_value", r.t_values(e)},
                              {"p_value", r.p_values(e)}});
    }
    j["r_squared"] = r.r_squared;
    j["adj_r_squared"] = r.adj_r_squared;
    j["observations"] = r.observations;
    return j.dump(2);
}

}  // namespace spillover
