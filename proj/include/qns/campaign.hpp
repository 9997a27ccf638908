#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "qns/noise.hpp"
#include "qns/reconstruction.hpp"
#include "qns/transmon.hpp"

namespace qns {

/// One engineered or background noise source with its coupling model.
struct NoiseSourceConfig {
    enum class Kind { Flux, Photon };
    Kind kind = Kind::Flux;
    NoisePsdSpec psd;        ///< flux: PSD of dPhi(t); photon: number PSD
    PhotonNoiseSpec photon;  ///< populated when kind == Photon
};

struct SynthesisConfig {
    double fundamental_mhz = 4e-3;  ///< harmonic spacing (4 kHz)
    int sample_rate_factor = 8;     ///< sample rate / highest harmonic
};

/// A relaxometry campaign: which spectrometers to run, where to sample them,
/// what noise to engineer, and how to average.
struct CampaignConfig {
    TransmonSpec sensor;
    std::vector<int> targets;                 ///< transition indices j
    std::vector<double> amplitude_grid_mhz;   ///< exactly one grid may be set
    std::vector<double> frequency_grid_mhz;   ///< inverted through rabi_curve
    std::vector<NoiseSourceConfig> noise_sources;       ///< engineered (presence runs)
    std::vector<NoiseSourceConfig> background_sources;  ///< present in both runs
    int ensemble = 1;
    std::vector<double> durations_us;
    std::uint64_t seed = 1;
    std::vector<double> t1_rates;  ///< per transition; harmonic-extrapolated
    double edge_sigma_ns = 12.0;
    SynthesisConfig synthesis;
    std::string output_dir = "out";
    int workers = 1;

    void validate() const;
    static CampaignConfig from_file(const std::string& path);
    static CampaignConfig from_json_text(const std::string& text);

    /// T1 rates extended to d-1 transitions with the harmonic default
    /// Gamma^(k-1,k) = k Gamma^(0,1) for unmeasured transitions.
    std::vector<double> t1_rates_extended(int num_levels) const;
};

struct PointRecord {
    int target = 1;
    std::size_t index = 0;
    double a_drive_mhz = 0.0;
    double omega_mhz = 0.0;
    std::string status = "ok";  ///< "ok" or the error message
};

struct CampaignResult {
    LevelStructure levels;
    std::map<int, PsdEstimate> raw;        ///< per target, uncorrected
    std::map<int, PsdEstimate> corrected;  ///< per target, corrections applied
    std::optional<std::pair<SourceComponent, SourceComponent>> discrimination;
    std::vector<PointRecord> points;
    std::vector<std::string> files;  ///< paths written, relative to output dir
    std::string output_dir;
};

/// Runs every (target, frequency point): synthesize noise, simulate presence
/// and absence sequences, fit, extract, correct; writes estimate CSVs, decay
/// traces, a summary and a manifest with content hashes. Per-point failures
/// are recorded in the manifest and the campaign continues.
CampaignResult run_campaign(const CampaignConfig& config,
                            const std::string& output_dir_override = "",
                            std::uint64_t seed_offset = 0);

/// Static-curve reproductions: "rabi", "participation" or "pumpprobe".
std::vector<std::string> tabulate(const std::string& subcommand, const CampaignConfig& config,
                                  const std::string& output_dir_override = "");

}  // namespace qns
