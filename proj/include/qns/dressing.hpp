#pragma once

#include <Eigen/Dense>

#include <vector>

#include "qns/transmon.hpp"

namespace qns {

/// Continuous drive applied to one transition of the sensor. The phase is
/// folded out (phi = 0 convention); amplitude is the effective strength on
/// the 0-1 transition in MHz.
struct DriveSpec {
    double amplitude_mhz = 0.0;
    double frequency_mhz = 0.0;
    double phase = 0.0;
    int target = 1;  ///< j of the SL^(j-1,j) pair being driven

    void validate(int num_levels) const;
};

/// Resonant drive on the (target-1, target) transition.
DriveSpec resonant_drive(const LevelStructure& levels, int target, double amplitude_mhz);

/// Eigensystem of the driven RWA Hamiltonian in the spin-locking frame.
/// Dressed labels follow adiabatic continuation from A_drive -> 0.
struct DressedFrame {
    std::vector<double> energies_mhz;  ///< E^(j), adiabatically labeled
    Eigen::MatrixXd basis_change;      ///< V, columns = dressed states in the bare basis
    double rabi_mhz = 0.0;             ///< Omega^(j-1,j) = E^(j) - E^(j-1)
    int target = 1;
    double amplitude_mhz = 0.0;

    /// alpha^(k)_(j-1,j) for k = 1..d-1 (index 0 <-> k = 1).
    std::vector<double> alpha;
    /// beta^(k)_(j-1,j) for k = 1..d-1.
    std::vector<double> beta;
    /// Ground-level overlap term V_{0,j-1} V_{0,j}. Not part of the noise
    /// projection (the ground level carries no dephasing operator) but it
    /// completes the small-drive participation sum rule.
    double alpha_ground = 0.0;
};

/// Tridiagonal RWA Hamiltonian in MHz: diagonal omega_s^(j) - j*omega_drive,
/// off-diagonal lambda^(j-1,j) * A/2.
Eigen::MatrixXd build_rwa_hamiltonian(const LevelStructure& levels, const DriveSpec& drive);

/// Diagonalizes the RWA Hamiltonian and assigns adiabatic labels.
/// Throws std::runtime_error on a target-pair near-degeneracy (< 1e-6 MHz).
DressedFrame dress(const LevelStructure& levels, const DriveSpec& drive);

/// Omega(A) over an amplitude list, plus the monotone inverse map A(Omega).
struct RabiCurve {
    int target = 1;
    std::vector<double> amplitudes_mhz;
    std::vector<double> rabi_mhz;
    std::vector<DressedFrame> frames;

    /// Inverts Omega -> A by monotone piecewise-linear interpolation.
    double amplitude_for(double omega_mhz) const;
};

RabiCurve rabi_curve(const LevelStructure& levels, int target,
                     const std::vector<double>& amplitudes_mhz);

/// Amplitude that realizes the requested Rabi frequency, refined on dress()
/// to |Omega(A) - omega| < tol. Uses a rabi curve bracket as the seed.
double invert_rabi(const LevelStructure& levels, int target, double omega_mhz,
                   double tol_mhz = 1e-9);

struct NoisePsdSpec;  // noise.hpp

/// Fermi-golden-rule leakage rate out of the locked pair, max over the two
/// neighboring dressed levels: Gamma = A^2 S(2 pi gap) with
/// A = sum_k V_{k,out} V_{k,edge}.
double leakage_rate(const DressedFrame& frame, const NoisePsdSpec& psd,
                    const LevelStructure& levels);

/// Effective T1 rate of the locked pair from per-transition relaxation rates
/// gamma1[k-1] = Gamma_1^(k-1,k) (1/us, zero-temperature approximation).
/// The locked-frame decay contribution is half the returned value.
double effective_t1_rate(const DressedFrame& frame, const std::vector<double>& gamma1);

/// One pump-probe transition branch at a given drive amplitude.
struct PumpProbeBranch {
    double amplitude_mhz = 0.0;
    int dressed_level = 1;     ///< upper dressed label of the transition
    int photons = 1;           ///< 1 = single-photon, 2 = two-photon
    double probe_freq_mhz = 0.0;
};

/// Single- and two-photon transition frequencies from the dressed ground
/// state as a function of drive amplitude (drive resonant on 0-1).
std::vector<PumpProbeBranch> pump_probe_spectrum(const LevelStructure& levels,
                                                 const std::vector<double>& amplitudes_mhz);

}  // namespace qns
