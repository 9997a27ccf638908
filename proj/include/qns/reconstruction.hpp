#pragma once

#include <string>
#include <vector>

#include "qns/dressing.hpp"
#include "qns/dynamics.hpp"
#include "qns/transmon.hpp"

namespace qns {

/// Result of the weighted exponential fit
///   polarization(tau) = amplitude * exp(-gamma_1rho tau) + offset,
/// with sz_eq identified with the offset.
struct RelaxationFit {
    double gamma_1rho = 0.0;  ///< 1/us
    double sz_eq = 0.0;       ///< equilibrium polarization
    double amplitude = 0.0;   ///< nuisance, ideally 1 - sz_eq
    double offset = 0.0;      ///< == sz_eq
    double gamma_err = 0.0;
    double sz_eq_err = 0.0;
    double amplitude_err = 0.0;
    double chi2_reduced = 0.0;
    bool converged = false;
    bool rate_unresolved = false;  ///< decay slower than 1/(10 max tau)
    std::vector<double> residuals;
};

/// Weighted Levenberg-Marquardt fit of a DecayTrace. Throws
/// std::invalid_argument with fewer than 6 tau points; non-convergence after
/// 200 iterations throws std::runtime_error carrying the residual norm.
RelaxationFit fit_decay(const DecayTrace& trace);

/// Same fit on raw arrays (used for synthetic-data tests and coverage runs).
RelaxationFit fit_exponential(const std::vector<double>& tau, const std::vector<double>& y,
                              const std::vector<double>& sigma);

/// Transverse PSD value with propagated uncertainty.
struct TransverseEstimate {
    double value = 0.0;  ///< S_perp(Omega), 1/us
    double sigma = 0.0;
    bool negative_warning = false;  ///< presence rate below absence by > 2 sigma
};

/// Presence/absence differencing:
///   S_perp(Omega) = (1 + sz_pres)/2 * (Gamma_pres - Gamma_abs).
TransverseEstimate extract_transverse_psd(const RelaxationFit& fit_pres,
                                          const RelaxationFit& fit_abs);

/// One reconstructed spectrum point; naive (two-level) and corrected
/// (multi-level) frequency/amplitude values are both retained.
struct PsdPoint {
    double a_drive_mhz = 0.0;
    double omega_naive_mhz = 0.0;      ///< lambda^(j-1,j) A_drive
    double omega_corrected_mhz = 0.0;  ///< Omega^(j-1,j)
    double s_transverse = 0.0;         ///< S_perp, 1/us
    double s_lab = 0.0;                ///< lab-frame PSD (corrected transduction)
    double s_lab_naive = 0.0;          ///< lab-frame PSD (two-level transduction)
    double sigma = 0.0;                ///< 1-sigma on s_lab
    double sigma_transverse = 0.0;     ///< 1-sigma on s_transverse
    bool ill_conditioned = false;      ///< transduction collapsed below 1e-3 of small-A value
    bool negative_warning = false;
    bool rate_unresolved = false;
};

struct PsdEstimate {
    int target = 1;
    bool freq_shift_applied = false;
    bool amplitude_applied = false;
    std::vector<PsdPoint> points;
};

/// Raw ingredients for one spectrum point before correction.
struct RawRatePoint {
    double a_drive_mhz = 0.0;
    TransverseEstimate transverse;
    bool rate_unresolved = false;
};

/// Assembles an uncorrected estimate: abscissa at lambda A, lab amplitude via
/// the small-drive two-level transduction.
PsdEstimate make_raw_estimate(int target, const std::vector<RawRatePoint>& points,
                              const LevelStructure& levels);

/// Applies the two multi-level corrections: (1) abscissa moved to
/// Omega^(j-1,j); (2) lab-frame PSD from the alpha-weighted flux transduction
///   S_lab = S_perp / (2 pi sum_k alpha^(k) domega^(k)/dPhi)^2.
/// Flags make a second application a no-op.
PsdEstimate correct_estimate(const PsdEstimate& raw, const std::vector<DressedFrame>& frames,
                             const LevelStructure& levels);

/// Discriminated source components on a shared frequency grid.
struct SourceComponent {
    std::vector<double> freq_mhz;
    std::vector<double> value;   ///< transverse-PSD units, 1/us
    std::vector<double> sigma;
    std::vector<bool> clipped;   ///< negative solution clipped to zero
};

/// Solves S01 = S_flux + S_photon, S12 = S_flux + r S_photon per frequency,
/// with r = (chi^(1,2)/chi^(0,1))^2. Grids are aligned by linear
/// interpolation onto the coarser grid. Throws when |r - 1| < 0.05.
std::pair<SourceComponent, SourceComponent> discriminate_sources(
    const PsdEstimate& s01, const PsdEstimate& s12, double chi_ratio_sq);

}  // namespace qns
