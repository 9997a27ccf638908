#pragma once

#include <cstdint>
#include <memory>
#include <utility>
#include <vector>

#include "qns/transmon.hpp"

namespace qns {

/// Target power spectral density of a classical noise process.
///
/// Conventions: S is two-sided and evaluated at angular frequency omega in
/// rad/us; shape parameters are quoted as ordinary frequencies in MHz. The
/// spectral value carries the units of (coupled quantity)^2 * us, e.g.
/// Phi_0^2 us for flux noise and 1/us for transverse noise. The waveform
/// variance of a spec equals integral S domega / (2 pi).
struct NoisePsdSpec {
    enum class Shape { Zero, Lorentzian, BoxCar, Tabulated };

    Shape shape = Shape::Zero;
    bool symmetric = true;

    // Lorentzian (both +-f0 lobes):
    //   S(w) = total_power / (2 pi wc) * [L((w-w0)/wc) + L((w+w0)/wc)],
    // with L(x) = 1/(1+x^2), w0 = 2 pi f0, wc = 2 pi hwhm.
    double total_power = 0.0;  ///< integral of S over omega
    double center_mhz = 0.0;
    double hwhm_mhz = 0.0;

    // BoxCar: S(w) = level for f_lo <= |w|/2pi <= f_hi, else 0.
    double level = 0.0;
    double f_lo_mhz = 0.0;
    double f_hi_mhz = 0.0;

    // Tabulated: (f in MHz, S) pairs sorted in f, interpolated linearly,
    // zero outside the tabulated span. Evaluated at |f| when symmetric.
    std::vector<std::pair<double, double>> table;

    static NoisePsdSpec zero();
    static NoisePsdSpec lorentzian(double total_power, double center_mhz, double hwhm_mhz);
    static NoisePsdSpec boxcar(double level, double f_lo_mhz, double f_hi_mhz);
    static NoisePsdSpec tabulated(std::vector<std::pair<double, double>> table);

    /// S at angular frequency omega (rad/us).
    double value(double omega_rad_per_us) const;

    bool is_zero() const { return shape == Shape::Zero; }

    /// Default synthesis window [f_lo, f_hi] in MHz: center +- 50 MHz floored
    /// at zero for a Lorentzian, the band itself for a box-car, the tabulated
    /// span otherwise.
    std::pair<double, double> default_window_mhz() const;

    void validate() const;
};

/// A sampled classical realization with the spectral content of a target PSD.
struct NoiseWaveform {
    double sample_rate = 0.0;  ///< samples per us
    double duration_us = 0.0;
    std::vector<double> samples;  ///< units of the coupled quantity
    std::uint64_t seed = 0;

    struct Harmonic {
        double freq_mhz;
        double amplitude;
        double phase;
    };
    std::vector<Harmonic> harmonics;

    /// Linear interpolation at time t (us); zero outside the record.
    double at(double t_us) const;
};

/// Harmonic-superposition synthesis: cosines at multiples of `fundamental`
/// within the window, deterministic amplitudes a_m = 2 sqrt(S(w_m) df) and
/// i.i.d. uniform phases. Window defaults to the spec's default window.
/// The sample rate is at least sample_rate_factor times the highest harmonic.
NoiseWaveform synthesize(const NoisePsdSpec& psd, double duration_us,
                         double fundamental_mhz = 4e-3,
                         std::pair<double, double> window_mhz = {-1.0, -1.0},
                         std::uint64_t seed = 0, int sample_rate_factor = 8);

/// Photon-shot-noise surrogate: a coherent tone detuned by `detuning` from
/// the readout resonator produces photon-number fluctuations with a
/// Lorentzian PSD centered at the detuning with half-width kappa/2. The
/// absolute scale is a calibration constant (`weight`); lineshape and the
/// chi^2 cross-transition ratio are the physical content.
struct PhotonNoiseSpec {
    std::vector<double> chi_mhz;  ///< chi^(j-1,j) per transition
    double nbar = 0.0;            ///< mean residual photon number
    double kappa_mhz = 0.0;       ///< resonator linewidth
    double detuning_mhz = 0.0;    ///< (omega_r - omega_n)/2pi
    double weight = 1.0;          ///< calibration constant

    void validate() const;

    /// PSD of the photon-number fluctuation delta-n(t); total power
    /// 2 pi nbar weight so that var(delta-n) = nbar * weight.
    NoisePsdSpec number_psd() const;
};

/// PSD of the (j-1,j) transition angular-frequency fluctuation
/// 2 pi * 2 chi^(j-1,j) * delta-n(t); ratio between transitions is exactly
/// (chi^(j)/chi^(j'))^2.
NoisePsdSpec photon_psd(const PhotonNoiseSpec& spec, int transition);

/// Per-level dephasing series B^(k)(t) = level_coeff[k] * w(t) in rad/us.
/// One shared waveform, one coefficient per level (ground coefficient 0).
struct LevelNoiseChannel {
    std::shared_ptr<const std::vector<double>> samples;
    double sample_rate = 0.0;
    std::vector<double> level_coeff;  ///< rad/us per waveform unit, size d

    double waveform_at(double t_us) const;
};

struct FluxCoupling {
    std::vector<double> sens_mhz_per_phi0;  ///< d omega^(k)/d Phi, k = 1..d-1
};
struct PhotonCoupling {
    std::vector<double> chi_mhz;  ///< chi^(m-1,m), m = 1..d-1
};

/// Flux: B^(k) = 2 pi (d omega^(k)/d Phi) dPhi(t).
LevelNoiseChannel level_noise_series(const NoiseWaveform& w, const FluxCoupling& c,
                                     int num_levels);
/// Photon: B^(k) = 2 pi 2 n(t) sum_{m<=k} chi^(m-1,m).
LevelNoiseChannel level_noise_series(const NoiseWaveform& w, const PhotonCoupling& c,
                                     int num_levels);

/// Hann-windowed periodogram, two-sided normalization: the expectation at
/// bin f equals S(2 pi f) for spectra smooth over the bin width. Returns
/// (f in MHz, S) for f in [0, rate/2).
std::vector<std::pair<double, double>> welch_psd(const std::vector<double>& x,
                                                 double sample_rate);

}  // namespace qns
