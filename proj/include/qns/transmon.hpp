#pragma once

#include <string>
#include <vector>

namespace qns {

/// Circuit parameters of the flux-tunable multi-level transmon sensor.
/// Frequencies are ordinary frequencies in MHz throughout (values quoted
/// as X/2pi); angular factors of 2pi appear explicitly where needed.
struct TransmonSpec {
    double ej_sum_mhz = 0.0;     ///< total Josephson energy of the two junctions
    double ec_mhz = 0.0;         ///< capacitive energy
    double asymmetry = 0.0;      ///< junction asymmetry d, 0 <= d < 1
    double flux_bias = 0.0;      ///< external flux in units of Phi_0
    int num_levels = 5;          ///< sensor truncation (levels kept)
    int charge_cutoff = 30;      ///< charge basis spans -N..N

    /// Dispersive shifts chi^(j-1,j) in MHz, one per transition. Supplied
    /// from configuration (measured quantities), never derived here.
    std::vector<double> dispersive_shifts_mhz;

    /// Effective Josephson energy at external flux phi (units of Phi_0).
    double ej_at(double phi) const;

    /// Throws std::invalid_argument when a structural invariant is violated.
    void validate() const;
};

/// Level structure of the undriven sensor, relative to the ground level.
struct LevelStructure {
    /// omega_s^(j) for j = 0..d-1 in MHz, omega_s^(0) == 0.
    std::vector<double> level_freqs_mhz;
    /// lambda^(j-1,j) for j = 1..d-1, lambda^(0,1) == 1.
    std::vector<double> drive_ratios;
    /// d omega_s^(k) / d Phi_ext for k = 1..d-1, MHz per Phi_0.
    std::vector<double> flux_sens_mhz_per_phi0;
    /// chi^(j-1,j) in MHz, copied from the spec (may be empty).
    std::vector<double> dispersive_shifts_mhz;
    /// Set when E_J(Phi_ext) <= E_c, outside the transmon regime.
    bool regime_warning = false;

    int num_levels() const { return static_cast<int>(level_freqs_mhz.size()); }

    /// omega_s^(j-1,j) in MHz.
    double transition_freq_mhz(int j) const {
        return level_freqs_mhz.at(j) - level_freqs_mhz.at(j - 1);
    }
    /// omega_s^(1,2) - omega_s^(0,1) in MHz (negative for a transmon).
    double anharmonicity_mhz() const {
        return transition_freq_mhz(2) - transition_freq_mhz(1);
    }
};

/// Diagonalizes the charge-basis circuit Hamiltonian
///   H = 4 E_c n^2 - E_J(Phi)/2 (|n><n+1| + h.c.)
/// and returns the lowest num_levels eigenfrequencies together with the
/// relative drive strengths (charge matrix elements) and flux sensitivities.
LevelStructure solve_levels(const TransmonSpec& spec);

/// Central finite difference of omega_s^(k)(Phi); step in units of Phi_0.
/// Throws std::domain_error at the half-flux singularity of a symmetric SQUID.
double flux_sensitivity(const TransmonSpec& spec, int level, double step = 1e-6);

/// Lowest num_levels eigenfrequencies (MHz, relative to ground) of the charge
/// basis Hamiltonian at flux phi. Building block for solve_levels and for the
/// finite-difference sensitivities.
std::vector<double> charge_basis_frequencies(const TransmonSpec& spec, double phi);

}  // namespace qns
