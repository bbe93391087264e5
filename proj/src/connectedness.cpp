#include "spillover/connectedness.hpp"

#include <sstream>

#include "json.hpp"
#include "spillover/error.hpp"
#include "spillover/numeric.hpp"

namespace spillover {

namespace {

std::vector<std::string> default_labels(Eigen::Index n) {
    std::vector<std::string> out;
    for (Eigen::Index i = 0; i < n; ++i) out.push_back("V" + std::to_string(i + 1));
    return out;
}

}  // namespace

Eigen::MatrixXd row_normalize(const Eigen::MatrixXd& theta) {
    Eigen::MatrixXd out(theta.rows(), theta.cols());
    for (Eigen::Index j = 0; j < theta.rows(); ++j) {
        CompensatedSum s;
        for (Eigen::Index k = 0; k < theta.cols(); ++k) s.add(theta(j, k));
        const double rs = s.value();
        if (!(rs > 0.0) || !std::isfinite(rs)) {
            throw NumericError("zero or non-finite variance share row for variable " + std::to_string(j + 1));
        }
        out.row(j) = theta.row(j) / rs;
    }
    return out;
}

FevdMatrix gfevd(const MaCoefficients& psi, const Eigen::MatrixXd& sigma, std::vector<std::string> labels) {
    const Eigen::Index n = sigma.rows();
    if (sigma.cols() != n || psi.psi.empty()) throw ConfigError("gfevd: inconsistent dimensions");
    for (const auto& p : psi.psi) {
        if (p.rows() != n || p.cols() != n) throw ConfigError("gfevd: MA coefficients do not match sigma");
    }
    for (Eigen::Index k = 0; k < n; ++k) {
        if (!(sigma(k, k) > 0.0)) {
            throw NumericError("gfevd: non-positive innovation variance for variable " + std::to_string(k + 1));
        }
    }
    if (labels.empty()) labels = default_labels(n);
    if (static_cast<Eigen::Index>(labels.size()) != n) throw ConfigError("gfevd: label count mismatch");

    std::vector<CompensatedSum> num(static_cast<std::size_t>(n * n));
    std::vector<CompensatedSum> den(static_cast<std::size_t>(n));
    Eigen::MatrixXd ps(n, n);
    for (const auto& p : psi.psi) {
        ps.noalias() = p * sigma;
        for (Eigen::Index j = 0; j < n; ++j) {
            for (Eigen::Index k = 0; k < n; ++k) num[static_cast<std::size_t>(j * n + k)].add(ps(j, k) * ps(j, k));
            den[static_cast<std::size_t>(j)].add(ps.row(j).dot(p.row(j)));
        }
    }
    FevdMatrix out;
    out.theta.resize(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        const double d = den[static_cast<std::size_t>(j)].value();
        if (!(d > 0.0)) throw NumericError("gfevd: zero forecast error variance for variable " + std::to_string(j + 1));
        for (Eigen::Index k = 0; k < n; ++k) {
            out.theta(j, k) = num[static_cast<std::size_t>(j * n + k)].value() / (sigma(k, k) * d);
        }
    }
    out.normalized = row_normalize(out.theta);
    out.horizon = psi.horizon();
    out.labels = std::move(labels);
    return out;
}

ConnectednessTable connectedness_table(const Eigen::MatrixXd& normalized, std::vector<std::string> labels) {
    const Eigen::Index n = normalized.rows();
    if (normalized.cols() != n || n == 0) throw ConfigError("connectedness_table: matrix must be square");
    if (labels.empty()) labels = default_labels(n);
    ConnectednessTable t;
    t.labels = std::move(labels);
    t.pairwise = 100.0 * normalized;
    t.from = Eigen::VectorXd::Zero(n);
    t.to = Eigen::VectorXd::Zero(n);
    const double scale = 100.0 / static_cast<double>(n);
    CompensatedSum total;
    for (Eigen::Index j = 0; j < n; ++j) {
        CompensatedSum from;
        CompensatedSum to;
        for (Eigen::Index k = 0; k < n; ++k) {
            if (k == j) continue;
            from.add(normalized(j, k));
            to.add(normalized(k, j));
            total.add(normalized(j, k));
        }
        t.from(j) = scale * from.value();
        t.to(j) = scale * to.value();
    }
    t.total = scale * total.value();
    return t;
}

std::string format_table(const ConnectednessTable& table, const std::string& band) {
    std::ostringstream os;
    const auto n = table.pairwise.rows();
    const std::string lead = band.empty() ? "" : band + ",";
    if (!band.empty()) os << "band,";
    os << "asset";
    for (const auto& l : table.labels) os << ',' << l;
    os << ",FROM\n";
    for (Eigen::Index j = 0; j < n; ++j) {
        os << lead << table.labels[static_cast<std::size_t>(j)];
        for (Eigen::Index k = 0; k < n; ++k) os << ',' << format_double(table.pairwise(j, k));
        os << ',' << format_double(table.from(j)) << '\n';
    }
    os << lead << "TO";
    for (Eigen::Index k = 0; k < n; ++k) os << ',' << format_double(table.to(k));
    os << ',' << format_double(table.total) << '\n';
    return os.str();
}

std::string table_json(const ConnectednessTable& table) {
    nlohmann::json j;
    j["labels"] = table.labels;
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index r = 0; r < table.pairwise.rows(); ++r) {
        std::vector<double> row(static_cast<std::size_t>(table.pairwise.cols()));
        for (Eigen::Index c = 0; c < table.pairwise.cols(); ++c) row[static_cast<std::size_t>(c)] = table.pairwise(r, c);
        rows.push_back(row);
    }
    j["pairwise"] = rows;
    j["from"] = std::vector<double>(table.from.data(), table.from.data() + table.from.size());
    j["to"] = std::vector<double>(table.to.data(), table.to.data() + table.to.size());
    j["total"] = table.total;
    return j.dump(2);
}

}  // namespace spillover
