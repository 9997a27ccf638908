#include "qns/transmon.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>

namespace qns {

namespace {

constexpr double kPi = 3.14159265358979323846;

Eigen::MatrixXd charge_hamiltonian(const TransmonSpec& spec, double phi) {
    const int n_cut = spec.charge_cutoff;
    const int dim = 2 * n_cut + 1;
    const double ej = spec.ej_at(phi);
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(dim, dim);
    for (int i = 0; i < dim; ++i) {
        const double n = static_cast<double>(i - n_cut);
        h(i, i) = 4.0 * spec.ec_mhz * n * n;
        if (i + 1 < dim) {
            h(i, i + 1) = -0.5 * ej;
            h(i + 1, i) = -0.5 * ej;
        }
    }
    return h;
}

struct ChargeSolution {
    Eigen::VectorXd freqs;    // relative to ground, MHz
    Eigen::MatrixXd vectors;  // columns = lowest num_levels eigenvectors
};

ChargeSolution solve_charge_basis(const TransmonSpec& spec, double phi) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(charge_hamiltonian(spec, phi));
    if (es.info() != Eigen::Success) {
        throw std::runtime_error("transmon eigensolver failed to converge");
    }
    ChargeSolution sol;
    sol.freqs = es.eigenvalues().head(spec.num_levels).array() - es.eigenvalues()(0);
    sol.vectors = es.eigenvectors().leftCols(spec.num_levels);
    // Gauge: largest-magnitude component real-positive, lowest index on ties.
    for (int c = 0; c < sol.vectors.cols(); ++c) {
        int imax = 0;
        double amax = 0.0;
        for (int i = 0; i < sol.vectors.rows(); ++i) {
            if (std::abs(sol.vectors(i, c)) > amax + 1e-15) {
                amax = std::abs(sol.vectors(i, c));
                imax = i;
            }
        }
        if (sol.vectors(imax, c) < 0.0) sol.vectors.col(c) *= -1.0;
    }
    return sol;
}

}  // namespace

double TransmonSpec::ej_at(double phi) const {
    const double c = std::cos(kPi * phi);
    const double s = std::sin(kPi * phi);
    return ej_sum_mhz * std::sqrt(c * c + asymmetry * asymmetry * s * s);
}

void TransmonSpec::validate() const {
    if (!(ej_sum_mhz > 0.0)) throw std::invalid_argument("ej_sum must be positive");
    if (!(ec_mhz > 0.0)) throw std::invalid_argument("ec must be positive");
    if (asymmetry < 0.0 || asymmetry >= 1.0)
        throw std::invalid_argument("asymmetry must satisfy 0 <= d < 1");
    if (num_levels < 3) throw std::invalid_argument("num_levels must be >= 3");
    if (charge_cutoff < 3 * num_levels)
        throw std::invalid_argument("charge_cutoff must be >= 3*num_levels");
    if (ej_at(flux_bias) <= 1e-12 * ej_sum_mhz)
        throw std::invalid_argument("E_J(flux_bias) vanishes (half-flux, symmetric SQUID)");
}

std::vector<double> charge_basis_frequencies(const TransmonSpec& spec, double phi) {
    const ChargeSolution sol = solve_charge_basis(spec, phi);
    return {sol.freqs.data(), sol.freqs.data() + sol.freqs.size()};
}

LevelStructure solve_levels(const TransmonSpec& spec) {
    spec.validate();
    const ChargeSolution sol = solve_charge_basis(spec, spec.flux_bias);

    LevelStructure out;
    out.level_freqs_mhz.assign(sol.freqs.data(), sol.freqs.data() + sol.freqs.size());
    for (int j = 1; j < spec.num_levels; ++j) {
        if (!(out.level_freqs_mhz[j] > out.level_freqs_mhz[j - 1])) {
            throw std::runtime_error("spectrum not strictly increasing");
        }
    }

    // lambda^(j-1,j) = |<j|n|j-1>| / |<1|n|0>| from charge matrix elements.
    const int dim = 2 * spec.charge_cutoff + 1;
    Eigen::VectorXd nvals(dim);
    for (int i = 0; i < dim; ++i) nvals(i) = static_cast<double>(i - spec.charge_cutoff);
    auto matel = [&](int a, int b) {
        return std::abs(sol.vectors.col(a).dot(nvals.cwiseProduct(sol.vectors.col(b)).eval()));
    };
    const double ref = matel(1, 0);
    if (!(ref > 0.0)) throw std::runtime_error("vanishing 0-1 charge matrix element");
    out.drive_ratios.resize(spec.num_levels - 1);
    for (int j = 1; j < spec.num_levels; ++j) out.drive_ratios[j - 1] = matel(j, j - 1) / ref;
    out.drive_ratios[0] = 1.0;

    out.flux_sens_mhz_per_phi0.resize(spec.num_levels - 1);
    for (int k = 1; k < spec.num_levels; ++k) {
        out.flux_sens_mhz_per_phi0[k - 1] = flux_sensitivity(spec, k);
    }

    out.dispersive_shifts_mhz = spec.dispersive_shifts_mhz;
    out.regime_warning = spec.ej_at(spec.flux_bias) <= spec.ec_mhz;
    return out;
}

double flux_sensitivity(const TransmonSpec& spec, int level, double step) {
    if (level < 1 || level >= spec.num_levels) {
        throw std::invalid_argument("flux_sensitivity: level out of range");
    }
    if (!(step > 0.0)) throw std::invalid_argument("flux_sensitivity: step must be positive");
    // Half flux with a symmetric SQUID: E_J -> 0, the derivative is singular.
    double frac = std::fmod(std::abs(spec.flux_bias), 1.0);
    if (spec.asymmetry == 0.0 && std::abs(frac - 0.5) < 10.0 * step) {
        throw std::domain_error("flux_sensitivity singular at half flux for d = 0");
    }
    const std::vector<double> up = charge_basis_frequencies(spec, spec.flux_bias + step);
    const std::vector<double> dn = charge_basis_frequencies(spec, spec.flux_bias - step);
    return (up[level] - dn[level]) / (2.0 * step);
}

}  // namespace qns
