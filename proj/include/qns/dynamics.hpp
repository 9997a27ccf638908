#pragma once

#include <complex>
#include <functional>
#include <vector>

#include "qns/dressing.hpp"
#include "qns/noise.hpp"
#include "qns/transmon.hpp"

namespace qns {

/// Integrator settings. The interaction picture removes the static detunings
/// from the generator (they reappear as phase factors on the drive
/// couplings), which lets the controller take much larger steps; the plain
/// frame is retained as an independent cross-check path.
struct PropagatorOptions {
    double rtol = 1e-9;
    double atol = 1e-12;
    bool interaction_picture = true;
    double max_step_us = 0.05;
};

/// One spin-locking relaxometry sequence: ideal pi ladder to |j-1>, ideal
/// pi/2 about y onto |+(j-1,j)>, Gaussian-edged resonant lock for each
/// duration tau, inverse pi/2, projective readout of level populations.
///
/// BarePulses is the hardware protocol. With it the prepared state is the
/// small-drive dressed state, so at strong drive a small coherent |-> (and
/// peripheral) admixture survives the ramp; the exponential fit's amplitude
/// nuisance absorbs it. DressedState prepares the exact locked eigenstate at
/// full amplitude with no edges and reads out in the dressed basis; use it
/// when an ideal spectrometer is wanted.
struct SequenceSpec {
    enum class PrepMode { BarePulses, DressedState };

    int target = 1;
    DriveSpec lock;                   ///< resonant lock drive
    double edge_sigma_ns = 12.0;      ///< Gaussian ramp parameter
    std::vector<double> durations_us; ///< flat lock durations, ascending
    int ensemble = 1;                 ///< noise realizations to average
    std::vector<double> t1_rates;     ///< Gamma_1^(k-1,k) in 1/us, k = 1..d-1
    int workers = 1;                  ///< realization-level parallelism
    PrepMode prep = PrepMode::BarePulses;
    PropagatorOptions integrator;

    void validate(int num_levels) const;
};

/// Ensemble-averaged populations of the locked pair vs lock duration.
struct DecayTrace {
    std::vector<double> tau_us;
    std::vector<double> pop_lower;     ///< rho^(j-1,j-1)
    std::vector<double> pop_upper;     ///< rho^(j,j)
    std::vector<double> pop_leak;      ///< 1 - (lower + upper)
    std::vector<double> polarization;  ///< (lower - upper)/(lower + upper)
    std::vector<double> stderr_pol;    ///< standard error over the ensemble
    int target = 1;
    int ensemble = 1;
};

/// Supplies the per-level dephasing channels for one noise realization.
using NoiseProvider = std::function<std::vector<LevelNoiseChannel>(int realization)>;

DecayTrace simulate_sequence(const LevelStructure& levels, const SequenceSpec& seq,
                             const NoiseProvider& noise);

/// Fixed noise for every realization (deterministic runs use ensemble = 1).
DecayTrace simulate_sequence(const LevelStructure& levels, const SequenceSpec& seq,
                             const std::vector<LevelNoiseChannel>& noise = {});

/// Populations vs time under a Gaussian-edged resonant drive from |j-1>,
/// with no noise and no T1, and the dominant oscillation frequency from an
/// FFT peak with local parabolic refinement.
struct RabiTrace {
    std::vector<double> t_us;
    std::vector<std::vector<double>> populations;  ///< [sample][level]
    double dominant_freq_mhz = 0.0;
};

RabiTrace simulate_rabi(const LevelStructure& levels, const DriveSpec& drive,
                        double duration_us, double sample_rate = 1024.0,
                        double edge_sigma_ns = 12.0,
                        const PropagatorOptions& opts = {});

/// Gaussian-edged flat-top envelope, edges truncated at +-3 sigma and
/// rescaled to reach zero/full amplitude exactly.
struct DriveEnvelope {
    double sigma_us = 0.0;
    double up_end_us = 0.0;      ///< ramp ends (flat starts)
    double down_start_us = 0.0;  ///< flat ends (ramp down starts)

    double value(double t_us) const;
};

/// Low-level entry point used by the sequence/Rabi drivers and by tests:
/// propagates rho (bare rotating frame at time t0) to time t1 under the RWA
/// Hamiltonian with enveloped drive, per-level classical dephasing series
/// and ladder T1 collapse operators. Returns rho in the bare rotating frame.
struct LindbladProblem {
    std::vector<double> detunings_mhz;  ///< omega_s^(j) - j omega_drive
    std::vector<double> couplings_mhz;  ///< lambda^(j-1,j) A/2, j = 1..d-1
    DriveEnvelope envelope;
    std::vector<LevelNoiseChannel> noise;
    std::vector<double> decay_rates;  ///< Gamma^(k-1,k) 1/us, k = 1..d-1
};

std::vector<std::complex<double>> propagate_density_matrix(
    const LindbladProblem& prob, std::vector<std::complex<double>> rho, int dim,
    double t0_us, double t1_us, const PropagatorOptions& opts = {});

}  // namespace qns
