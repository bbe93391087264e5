#include "spillover/spectral.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <numbers>

#include "spillover/error.hpp"
#include "spillover/numeric.hpp"

namespace spillover {

namespace {

constexpr double kPi = std::numbers::pi;

struct Twiddles {
    Eigen::MatrixXd cos;  // (H_s/2 + 1) x H_s
    Eigen::MatrixXd sin;
};

const Twiddles& twiddles(std::size_t resolution) {
    thread_local std::map<std::size_t, Twiddles> cache;
    auto it = cache.find(resolution);
    if (it != cache.end()) return it->second;
    const auto half = static_cast<Eigen::Index>(resolution / 2 + 1);
    const auto hs = static_cast<Eigen::Index>(resolution);
    Twiddles t{Eigen::MatrixXd(half, hs), Eigen::MatrixXd(half, hs)};
    for (Eigen::Index m = 0; m < half; ++m) {
        for (Eigen::Index h = 0; h < hs; ++h) {
            // Reduce m h modulo H_s before scaling to keep the angle exact.
            const double angle = 2.0 * kPi * static_cast<double>((m * h) % hs) / static_cast<double>(hs);
            t.cos(m, h) = std::cos(angle);
            t.sin(m, h) = std::sin(angle);
        }
    }
    return cache.emplace(resolution, std::move(t)).first->second;
}

double parse_days(std::string_view s) {
    double v = 0.0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
        throw ConfigError("malformed band bound '" + std::string(s) + "'");
    }
    return v;
}

}  // namespace

Eigen::MatrixXcd FrequencyGrid::power_spectrum(std::size_t m, const Eigen::MatrixXd& sigma) const {
    const Eigen::MatrixXcd& ph = psi_hat.at(m);
    return ph * sigma.cast<std::complex<double>>() * ph.adjoint();
}

FrequencyGrid frequency_response(const MaCoefficients& psi, std::size_t resolution) {
    if (resolution < 4) throw ConfigError("spectral resolution must be at least 4");
    if (psi.psi.empty()) throw ConfigError("frequency_response needs MA coefficients");
    const Eigen::Index n = psi.psi.front().rows();
    const auto hs = static_cast<Eigen::Index>(resolution);
    const Eigen::Index terms = std::min<Eigen::Index>(hs, static_cast<Eigen::Index>(psi.psi.size()));

    // Row h holds Psi_h flattened column-major.
    Eigen::MatrixXd stacked = Eigen::MatrixXd::Zero(hs, n * n);
    for (Eigen::Index h = 0; h < terms; ++h) {
        stacked.row(h) = Eigen::Map<const Eigen::RowVectorXd>(psi.psi[static_cast<std::size_t>(h)].data(), n * n);
    }
    const Twiddles& tw = twiddles(resolution);
    const Eigen::MatrixXd re = tw.cos * stacked;
    const Eigen::MatrixXd im = -(tw.sin * stacked);

    FrequencyGrid grid;
    grid.resolution = resolution;
    grid.omegas.resize(resolution);
    grid.psi_hat.resize(resolution);
    for (std::size_t m = 0; m < resolution; ++m) {
        grid.omegas[m] = 2.0 * kPi * static_cast<double>(m) / static_cast<double>(resolution);
    }
    for (Eigen::Index m = 0; m < re.rows(); ++m) {
        Eigen::MatrixXcd val(n, n);
        val.real() = Eigen::Map<const Eigen::MatrixXd>(re.row(m).eval().data(), n, n);
        val.imag() = Eigen::Map<const Eigen::MatrixXd>(im.row(m).eval().data(), n, n);
        const auto mu = static_cast<std::size_t>(m);
        const std::size_t mirror = (resolution - mu) % resolution;
        if (mirror != mu) grid.psi_hat[mirror] = val.conjugate();
        grid.psi_hat[mu] = std::move(val);
    }
    return grid;
}

std::vector<DayRange> parse_day_ranges(std::string_view text) {
    std::vector<DayRange> out;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        auto comma = text.find(',', pos);
        if (comma == std::string_view::npos) comma = text.size();
        auto item = text.substr(pos, comma - pos);
        while (!item.empty() && item.front() == ' ') item.remove_prefix(1);
        while (!item.empty() && item.back() == ' ') item.remove_suffix(1);
        const auto dash = item.find('-');
        if (dash == std::string_view::npos || dash == 0) {
            throw ConfigError("band '" + std::string(item) + "' is not of the form lower-upper");
        }
        out.push_back(DayRange{parse_days(item.substr(0, dash)), parse_days(item.substr(dash + 1))});
        pos = comma + 1;
    }
    return out;
}

std::string format_day_ranges(std::span<const DayRange> ranges) {
    std::string out;
    for (const auto& r : ranges) {
        if (!out.empty()) out += ',';
        out += format_double(r.lower) + "-" + format_double(r.upper);
    }
    return out;
}

std::vector<BandSpec> make_bands(std::span<const DayRange> ranges, std::size_t resolution) {
    if (ranges.empty()) throw ConfigError("at least one band is required");
    if (resolution < 4) throw ConfigError("spectral resolution must be at least 4");
    if (ranges.front().lower != 1.0) throw ConfigError("band partition must start at 1 day");
    for (std::size_t i = 0; i < ranges.size(); ++i) {
        if (!(ranges[i].upper > ranges[i].lower)) throw ConfigError("band upper bound must exceed its lower bound");
        if (i > 0 && ranges[i].lower != ranges[i - 1].upper) {
            throw ConfigError(ranges[i].lower < ranges[i - 1].upper ? "bands overlap" : "bands leave a gap");
        }
    }
    std::vector<BandSpec> bands;
    for (const auto& r : ranges) {
        BandSpec b;
        b.name = format_double(r.lower) + "-" + format_double(r.upper);
        b.days = r;
        b.a = kPi / r.upper;
        b.b = std::min(kPi / r.lower, kPi);
        bands.push_back(std::move(b));
    }
    const std::size_t half = resolution / 2;
    BandSpec& lowest = bands.back();
    for (std::size_t m = 1; m <= half; ++m) {
        const double w = 2.0 * kPi * static_cast<double>(m) / static_cast<double>(resolution);
        BandSpec* owner = &lowest;
        for (auto& b : bands) {
            if (w > b.a && w <= b.b) {
                owner = &b;
                break;
            }
        }
        owner->index_set.push_back(m);
    }
    for (auto& b : bands) {
        if (&b == &lowest) b.grid_indices.push_back(0);
        for (std::size_t m : b.index_set) {
            b.grid_indices.push_back(m);
            if (resolution - m != m) b.grid_indices.push_back(resolution - m);
        }
        std::sort(b.grid_indices.begin(), b.grid_indices.end());
    }
    return bands;
}

SpectralFevd band_fevd(const FrequencyGrid& grid, const Eigen::MatrixXd& sigma, std::span<const BandSpec> bands) {
    const Eigen::Index n = sigma.rows();
    const std::size_t hs = grid.resolution;
    if (grid.psi_hat.size() != hs || hs == 0) throw ConfigError("band_fevd: empty frequency grid");
    for (Eigen::Index k = 0; k < n; ++k) {
        if (!(sigma(k, k) > 0.0)) throw NumericError("band_fevd: non-positive innovation variance for variable " + std::to_string(k + 1));
    }
    std::vector<int> owner(hs, -1);
    for (std::size_t b = 0; b < bands.size(); ++b) {
        for (std::size_t m : bands[b].grid_indices) {
            if (m >= hs) throw ConfigError("band '" + bands[b].name + "' built for a different resolution");
            if (owner[m] != -1) throw ConfigError("bands share frequency index " + std::to_string(m));
            owner[m] = static_cast<int>(b);
        }
    }

    const Eigen::MatrixXcd sigma_c = sigma.cast<std::complex<double>>();
    // |(Psi_hat Sigma)_jk|^2 per grid point, and the diagonal spectral power.
    std::vector<Eigen::MatrixXd> cross(hs);
    Eigen::MatrixXd power(n, static_cast<Eigen::Index>(hs));
    SpectralFevd out;
    out.omega = Eigen::MatrixXcd::Zero(n, n);
    for (std::size_t m = 0; m < hs; ++m) {
        const Eigen::MatrixXcd a = grid.psi_hat[m] * sigma_c;
        cross[m] = a.cwiseAbs2();
        const Eigen::MatrixXcd s = a * grid.psi_hat[m].adjoint();
        out.omega += s;
        for (Eigen::Index j = 0; j < n; ++j) {
            out.max_imaginary = std::max(out.max_imaginary, std::abs(s(j, j).imag()));
            power(j, static_cast<Eigen::Index>(m)) = s(j, j).real();
        }
    }
    Eigen::VectorXd omega_diag(n);
    for (Eigen::Index j = 0; j < n; ++j) {
        CompensatedSum s;
        for (std::size_t m = 0; m < hs; ++m) s.add(power(j, static_cast<Eigen::Index>(m)));
        omega_diag(j) = s.value();
        if (!(omega_diag(j) > 0.0)) {
            throw NumericError("band_fevd: zero spectral power for variable " + std::to_string(j + 1));
        }
    }
    out.weights = power.array().colwise() / omega_diag.array();
    // The weighting function divides by the power at each grid point.
    for (const auto& band : bands) {
        for (Eigen::Index j = 0; j < n; ++j) {
            for (std::size_t m : band.grid_indices) {
                if (!(power(j, static_cast<Eigen::Index>(m)) > 1e-24 * omega_diag(j))) {
                    throw NumericError("band_fevd: zero spectral power for variable " + std::to_string(j + 1) +
                                       " in band '" + band.name + "'");
                }
            }
        }
    }

    // Gamma_j(w) * |.|^2 / (sigma_kk * power_j(w)) reduces to |.|^2 / (sigma_kk * Omega_jj).
    out.aggregate = Eigen::MatrixXd::Zero(n, n);
    for (const auto& band : bands) {
        BandFevd bf;
        bf.name = band.name;
        bf.raw.resize(n, n);
        for (Eigen::Index j = 0; j < n; ++j) {
            for (Eigen::Index k = 0; k < n; ++k) {
                CompensatedSum s;
                for (std::size_t m : band.grid_indices) s.add(cross[m](j, k));
                bf.raw(j, k) = s.value() / (sigma(k, k) * omega_diag(j));
            }
        }
        out.aggregate += bf.raw;
        out.bands.push_back(std::move(bf));
    }
    Eigen::VectorXd row_sums(n);
    for (Eigen::Index j = 0; j < n; ++j) {
        CompensatedSum s;
        for (Eigen::Index k = 0; k < n; ++k) s.add(out.aggregate(j, k));
        row_sums(j) = s.value();
        if (!(row_sums(j) > 0.0)) throw NumericError("band_fevd: zero aggregate share row for variable " + std::to_string(j + 1));
    }
    for (auto& bf : out.bands) bf.theta = bf.raw.array().colwise() / row_sums.array();
    return out;
}

std::vector<ConnectednessTable> band_connectedness(const SpectralFevd& fevd, const std::vector<std::string>& labels) {
    std::vector<ConnectednessTable> out;
    out.reserve(fevd.bands.size());
    for (const auto& b : fevd.bands) out.push_back(connectedness_table(b.theta, labels));
    return out;
}

}  // namespace spillover
