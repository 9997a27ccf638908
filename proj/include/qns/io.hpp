#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qns/dressing.hpp"
#include "qns/dynamics.hpp"
#include "qns/noise.hpp"
#include "qns/reconstruction.hpp"
#include "qns/transmon.hpp"

namespace qns {

/// FNV-1a 64-bit content hash (manifest integrity, not cryptographic).
std::uint64_t fnv1a64(const void* data, std::size_t size);
std::uint64_t fnv1a64_file(const std::string& path);

/// Fixed "%.12g" formatting so identical configs yield byte-identical files.
std::string format_double(double v);

/// Minimal deterministic CSV builder.
class CsvTable {
  public:
    explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}
    void add_row(const std::vector<double>& values);
    void add_row_raw(const std::vector<std::string>& cells);
    std::string to_string() const;
    void write(const std::string& path) const;

  private:
    std::vector<std::string> header_;
    std::vector<std::vector<std::string>> rows_;
};

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

/// Flux-PSD display units for exported estimates.
enum class FluxPsdUnits { NativePhi0SqUs, MicroPhi0SqPerHz };

/// A_drive_MHz, Omega_MHz, alpha_1..alpha_{d-1}, beta_1..beta_{d-1}.
CsvTable rabi_curve_table(const RabiCurve& curve);
/// tau_us, pop_lower, pop_upper, pop_leak, polarization, stderr.
CsvTable decay_trace_table(const DecayTrace& trace);
/// omega_naive_MHz, omega_corrected_MHz, S_transverse_per_us, S_lab,
/// S_lab_naive, sigma, flags.
CsvTable psd_estimate_table(const PsdEstimate& est,
                            FluxPsdUnits units = FluxPsdUnits::NativePhi0SqUs);
/// A_drive_MHz, dressed_level, photons, probe_freq_MHz.
CsvTable pump_probe_table(const std::vector<PumpProbeBranch>& branches);
/// f_MHz, S_flux, sigma_flux, flux_clipped, S_photon, sigma_photon, photon_clipped.
CsvTable source_component_table(const SourceComponent& flux, const SourceComponent& photon);
/// Two-column PSD export: f_MHz, S.
CsvTable psd_table(const NoisePsdSpec& psd, double f_lo_mhz, double f_hi_mhz, int npoints);

std::string level_structure_json(const LevelStructure& levels);
std::string dressed_frame_json(const DressedFrame& frame);

/// Binary f64 sample array plus a JSON sidecar (psd spec, seed, sample rate).
void save_waveform(const std::string& path_base, const NoiseWaveform& w,
                   const NoisePsdSpec& psd);
NoiseWaveform load_waveform(const std::string& path_base);

}  // namespace qns
