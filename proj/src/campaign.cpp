#include "qns/campaign.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <sstream>
#include <stdexcept>

#include "qns/dynamics.hpp"
#include "qns/io.hpp"
#include "qns/json_support.hpp"
#include "qns/rng.hpp"

namespace qns {

namespace {

namespace fs = std::filesystem;

NoiseSourceConfig source_from_json(const nlohmann::json& j) {
    NoiseSourceConfig s;
    const std::string type = j.at("type").get<std::string>();
    if (type == "flux") {
        s.kind = NoiseSourceConfig::Kind::Flux;
        s.psd = psd_from_json(j.at("psd"));
    } else if (type == "photon") {
        s.kind = NoiseSourceConfig::Kind::Photon;
        s.photon.nbar = j.at("nbar").get<double>();
        s.photon.kappa_mhz = j.at("kappa_mhz").get<double>();
        s.photon.detuning_mhz = j.at("detuning_mhz").get<double>();
        s.photon.weight = j.value("weight", 1.0);
        if (j.contains("chi_mhz")) {
            s.photon.chi_mhz = j.at("chi_mhz").get<std::vector<double>>();
        }
        s.photon.validate();
        s.psd = s.photon.number_psd();
    } else {
        throw std::invalid_argument("unknown noise source type: " + type);
    }
    return s;
}

nlohmann::json source_to_json(const NoiseSourceConfig& s) {
    nlohmann::json j;
    if (s.kind == NoiseSourceConfig::Kind::Flux) {
        j["type"] = "flux";
        j["psd"] = psd_to_json(s.psd);
    } else {
        j["type"] = "photon";
        j["nbar"] = s.photon.nbar;
        j["kappa_mhz"] = s.photon.kappa_mhz;
        j["detuning_mhz"] = s.photon.detuning_mhz;
        j["weight"] = s.photon.weight;
        j["chi_mhz"] = s.photon.chi_mhz;
    }
    return j;
}

std::string sl_tag(int target) {
    return "sl" + std::to_string(target - 1) + std::to_string(target);
}

// Engineered sources enter only the presence run and draw fresh seeds per
// realization; background sources share seeds between presence and absence
// so the differencing stays maximally correlated.
std::uint64_t source_stream(int target, std::size_t point, std::size_t source,
                            bool engineered) {
    return static_cast<std::uint64_t>(target) * 1000003ull +
           static_cast<std::uint64_t>(point) * 1009ull +
           static_cast<std::uint64_t>(source) * 31ull + (engineered ? 7ull : 13ull);
}

struct PreparedSource {
    NoisePsdSpec psd;
    bool is_photon = false;
    std::vector<double> chi_mhz;
};

std::vector<PreparedSource> prepare_sources(const std::vector<NoiseSourceConfig>& list,
                                            const LevelStructure& levels) {
    std::vector<PreparedSource> out;
    for (const auto& src : list) {
        PreparedSource p;
        if (src.kind == NoiseSourceConfig::Kind::Photon) {
            p.is_photon = true;
            p.chi_mhz = src.photon.chi_mhz.empty() ? levels.dispersive_shifts_mhz
                                                   : src.photon.chi_mhz;
            if (static_cast<int>(p.chi_mhz.size()) < levels.num_levels() - 1) {
                // Transitions without a measured chi get none of this source.
                throw std::invalid_argument(
                    "photon source needs chi for every transition (config or sensor)");
            }
            p.psd = src.photon.number_psd();
        } else {
            p.psd = src.psd;
        }
        out.push_back(std::move(p));
    }
    return out;
}

}  // namespace

void CampaignConfig::validate() const {
    sensor.validate();
    if (targets.empty()) throw std::invalid_argument("config: targets must be non-empty");
    for (int t : targets) {
        if (t < 1 || t >= sensor.num_levels)
            throw std::invalid_argument("config: target out of range");
    }
    if (amplitude_grid_mhz.empty() == frequency_grid_mhz.empty()) {
        throw std::invalid_argument(
            "config: exactly one of amplitude_grid/frequency_grid must be given");
    }
    if (durations_us.size() < 6)
        throw std::invalid_argument("config: need at least 6 durations for the fit");
    if (!std::is_sorted(durations_us.begin(), durations_us.end()))
        throw std::invalid_argument("config: durations must be ascending");
    if (ensemble < 1) throw std::invalid_argument("config: ensemble must be >= 1");
    if (seed == 0) throw std::invalid_argument("config: explicit nonzero seed required");
    if (!(edge_sigma_ns > 0.0)) throw std::invalid_argument("config: edge_sigma must be > 0");
    if (!(synthesis.fundamental_mhz > 0.0))
        throw std::invalid_argument("config: synthesis fundamental must be > 0");
    if (synthesis.sample_rate_factor < 8)
        throw std::invalid_argument("config: sample_rate_factor must be >= 8");
}

std::vector<double> CampaignConfig::t1_rates_extended(int num_levels) const {
    if (t1_rates.empty()) return {};
    std::vector<double> out(static_cast<std::size_t>(num_levels - 1));
    for (int k = 1; k < num_levels; ++k) {
        if (k <= static_cast<int>(t1_rates.size())) {
            out[static_cast<std::size_t>(k - 1)] = t1_rates[static_cast<std::size_t>(k - 1)];
        } else {
            out[static_cast<std::size_t>(k - 1)] = k * t1_rates[0];
        }
    }
    return out;
}

CampaignConfig CampaignConfig::from_json_text(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const std::exception& e) {
        throw std::invalid_argument(std::string("config parse error: ") + e.what());
    }
    CampaignConfig c;
    c.sensor = transmon_from_json(j.at("sensor"));
    c.targets = j.at("targets").get<std::vector<int>>();
    if (j.contains("amplitude_grid_mhz"))
        c.amplitude_grid_mhz = j.at("amplitude_grid_mhz").get<std::vector<double>>();
    if (j.contains("frequency_grid_mhz"))
        c.frequency_grid_mhz = j.at("frequency_grid_mhz").get<std::vector<double>>();
    if (j.contains("noise_sources")) {
        for (const auto& s : j.at("noise_sources")) c.noise_sources.push_back(source_from_json(s));
    }
    if (j.contains("background_sources")) {
        for (const auto& s : j.at("background_sources"))
            c.background_sources.push_back(source_from_json(s));
    }
    c.ensemble = j.value("ensemble", 1);
    c.durations_us = j.at("durations_us").get<std::vector<double>>();
    c.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("t1_rates_per_us")) {
        c.t1_rates = j.at("t1_rates_per_us").get<std::vector<double>>();
    } else if (j.contains("t1_times_us")) {
        for (double t : j.at("t1_times_us").get<std::vector<double>>()) {
            if (!(t > 0.0)) throw std::invalid_argument("config: t1 times must be positive");
            c.t1_rates.push_back(1.0 / t);
        }
    }
    c.edge_sigma_ns = j.value("edge_sigma_ns", 12.0);
    if (j.contains("synthesis")) {
        const auto& s = j.at("synthesis");
        c.synthesis.fundamental_mhz = s.value("fundamental_mhz", 4e-3);
        c.synthesis.sample_rate_factor = s.value("sample_rate_factor", 8);
    }
    c.output_dir = j.value("output_dir", std::string("out"));
    c.workers = j.value("workers", 1);
    c.validate();
    return c;
}

CampaignConfig CampaignConfig::from_file(const std::string& path) {
    return from_json_text(read_text_file(path));
}

CampaignResult run_campaign(const CampaignConfig& config_in,
                            const std::string& output_dir_override,
                            std::uint64_t seed_offset) {
    CampaignConfig config = config_in;
    config.validate();
    const std::uint64_t base_seed = config.seed + seed_offset;
    const std::string out_dir =
        output_dir_override.empty() ? config.output_dir : output_dir_override;
    fs::create_directories(out_dir);

    CampaignResult result;
    result.output_dir = out_dir;
    result.levels = solve_levels(config.sensor);
    const LevelStructure& levels = result.levels;
    const int d = levels.num_levels();
    const std::vector<double> t1 = config.t1_rates_extended(d);

    const double sigma_us = config.edge_sigma_ns * 1e-3;
    const double tau_max = config.durations_us.back();
    const double synth_duration = tau_max + 6.0 * sigma_us + 0.5;

    const std::vector<PreparedSource> engineered =
        prepare_sources(config.noise_sources, levels);
    const std::vector<PreparedSource> background =
        prepare_sources(config.background_sources, levels);

    auto channel_for = [&](const PreparedSource& src, const NoiseWaveform& w) {
        if (src.is_photon) return level_noise_series(w, PhotonCoupling{src.chi_mhz}, d);
        return level_noise_series(w, FluxCoupling{levels.flux_sens_mhz_per_phi0}, d);
    };

    nlohmann::json manifest_points = nlohmann::json::array();

    for (int target : config.targets) {
        std::vector<double> amplitudes;
        std::vector<std::string> point_errors;
        if (!config.amplitude_grid_mhz.empty()) {
            amplitudes = config.amplitude_grid_mhz;
            point_errors.assign(amplitudes.size(), "");
        } else {
            for (double f : config.frequency_grid_mhz) {
                try {
                    amplitudes.push_back(invert_rabi(levels, target, f, 1e-6));
                    point_errors.push_back("");
                } catch (const std::exception& e) {
                    amplitudes.push_back(0.0);
                    point_errors.push_back(e.what());
                }
            }
        }

        std::vector<RawRatePoint> raw_points;
        std::vector<DressedFrame> frames;
        for (std::size_t ip = 0; ip < amplitudes.size(); ++ip) {
            PointRecord rec;
            rec.target = target;
            rec.index = ip;
            rec.a_drive_mhz = amplitudes[ip];
            if (!point_errors[ip].empty()) {
                rec.status = "error: " + point_errors[ip];
                result.points.push_back(rec);
                continue;
            }
            try {
                const DressedFrame frame =
                    dress(levels, resonant_drive(levels, target, amplitudes[ip]));
                rec.omega_mhz = frame.rabi_mhz;

                SequenceSpec seq;
                seq.target = target;
                seq.lock = resonant_drive(levels, target, amplitudes[ip]);
                seq.edge_sigma_ns = config.edge_sigma_ns;
                seq.durations_us = config.durations_us;
                seq.t1_rates = t1;
                seq.workers = config.workers;

                auto make_provider = [&](bool presence) {
                    return [&, presence, target, ip](int realization) {
                        std::vector<LevelNoiseChannel> chans;
                        if (presence) {
                            for (std::size_t s = 0; s < engineered.size(); ++s) {
                                if (engineered[s].psd.is_zero()) continue;
                                const auto seed = derive_seed(
                                    base_seed, source_stream(target, ip, s, true),
                                    static_cast<std::uint64_t>(realization));
                                const NoiseWaveform w = synthesize(
                                    engineered[s].psd, synth_duration,
                                    config.synthesis.fundamental_mhz, {-1.0, -1.0}, seed,
                                    config.synthesis.sample_rate_factor);
                                chans.push_back(channel_for(engineered[s], w));
                            }
                        }
                        for (std::size_t s = 0; s < background.size(); ++s) {
                            if (background[s].psd.is_zero()) continue;
                            const auto seed =
                                derive_seed(base_seed, source_stream(target, ip, s, false),
                                            static_cast<std::uint64_t>(realization));
                            const NoiseWaveform w = synthesize(
                                background[s].psd, synth_duration,
                                config.synthesis.fundamental_mhz, {-1.0, -1.0}, seed,
                                config.synthesis.sample_rate_factor);
                            chans.push_back(channel_for(background[s], w));
                        }
                        return chans;
                    };
                };

                const bool pres_stochastic = !engineered.empty() || !background.empty();
                const bool abs_stochastic = !background.empty();
                seq.ensemble = pres_stochastic ? config.ensemble : 1;
                const DecayTrace trace_pres =
                    simulate_sequence(levels, seq, make_provider(true));
                seq.ensemble = abs_stochastic ? config.ensemble : 1;
                const DecayTrace trace_abs =
                    simulate_sequence(levels, seq, make_provider(false));

                const std::string tag =
                    sl_tag(target) + "_p" + std::to_string(ip);
                decay_trace_table(trace_pres).write(out_dir + "/trace_" + tag + "_pres.csv");
                decay_trace_table(trace_abs).write(out_dir + "/trace_" + tag + "_abs.csv");
                result.files.push_back("trace_" + tag + "_pres.csv");
                result.files.push_back("trace_" + tag + "_abs.csv");

                const RelaxationFit fit_pres = fit_decay(trace_pres);
                const RelaxationFit fit_abs = fit_decay(trace_abs);
                RawRatePoint rp;
                rp.a_drive_mhz = amplitudes[ip];
                rp.transverse = extract_transverse_psd(fit_pres, fit_abs);
                rp.rate_unresolved = fit_pres.rate_unresolved;
                raw_points.push_back(rp);
                frames.push_back(frame);
            } catch (const std::exception& e) {
                rec.status = std::string("error: ") + e.what();
            }
            result.points.push_back(rec);
        }

        PsdEstimate raw = make_raw_estimate(target, raw_points, levels);
        PsdEstimate corrected = correct_estimate(raw, frames, levels);
        const std::string est_name = "estimate_" + sl_tag(target);
        psd_estimate_table(corrected).write(out_dir + "/" + est_name + ".csv");
        result.files.push_back(est_name + ".csv");

        nlohmann::json jpoints = nlohmann::json::array();
        for (const auto& p : corrected.points) {
            jpoints.push_back({{"a_drive_mhz", p.a_drive_mhz},
                               {"omega_naive_mhz", p.omega_naive_mhz},
                               {"omega_corrected_mhz", p.omega_corrected_mhz},
                               {"s_transverse_per_us", p.s_transverse},
                               {"sigma_transverse", p.sigma_transverse},
                               {"s_lab", p.s_lab},
                               {"s_lab_naive", p.s_lab_naive},
                               {"sigma", p.sigma},
                               {"negative_warning", p.negative_warning},
                               {"rate_unresolved", p.rate_unresolved},
                               {"ill_conditioned", p.ill_conditioned}});
        }
        nlohmann::json jest{{"target", target},
                            {"freq_shift_applied", corrected.freq_shift_applied},
                            {"amplitude_applied", corrected.amplitude_applied},
                            {"points", jpoints}};
        write_text_file(out_dir + "/" + est_name + ".json", jest.dump(2) + "\n");
        result.files.push_back(est_name + ".json");

        result.raw[target] = std::move(raw);
        result.corrected[target] = std::move(corrected);
    }

    // Two-spectrometer source discrimination when both SL01 and SL12 ran and
    // the sensor carries measured dispersive shifts.
    if (result.corrected.count(1) && result.corrected.count(2) &&
        levels.dispersive_shifts_mhz.size() >= 2 &&
        !result.corrected[1].points.empty() && !result.corrected[2].points.empty()) {
        const double ratio = levels.dispersive_shifts_mhz[1] / levels.dispersive_shifts_mhz[0];
        const double r = ratio * ratio;
        if (std::abs(r - 1.0) >= 0.05) {
            auto comp = discriminate_sources(result.corrected[1], result.corrected[2], r);
            source_component_table(comp.first, comp.second)
                .write(out_dir + "/discrimination.csv");
            result.files.push_back("discrimination.csv");
            result.discrimination = std::move(comp);
        }
    }

    // Summary table: one line per point.
    {
        CsvTable summary({"target", "point", "A_drive_MHz", "Omega_MHz", "status"});
        for (const auto& rec : result.points) {
            summary.add_row_raw({std::to_string(rec.target), std::to_string(rec.index),
                                 format_double(rec.a_drive_mhz), format_double(rec.omega_mhz),
                                 rec.status});
        }
        summary.write(out_dir + "/summary.csv");
        result.files.push_back("summary.csv");
    }

    // Manifest with content hashes for every output file.
    {
        nlohmann::json jconf{{"sensor", transmon_to_json(config.sensor)},
                             {"targets", config.targets},
                             {"amplitude_grid_mhz", config.amplitude_grid_mhz},
                             {"frequency_grid_mhz", config.frequency_grid_mhz},
                             {"ensemble", config.ensemble},
                             {"durations_us", config.durations_us},
                             {"seed", config.seed},
                             {"seed_offset", seed_offset},
                             {"t1_rates_per_us", config.t1_rates},
                             {"edge_sigma_ns", config.edge_sigma_ns},
                             {"fundamental_mhz", config.synthesis.fundamental_mhz},
                             {"sample_rate_factor", config.synthesis.sample_rate_factor}};
        nlohmann::json jsources = nlohmann::json::array();
        for (const auto& s : config.noise_sources) jsources.push_back(source_to_json(s));
        jconf["noise_sources"] = jsources;
        nlohmann::json jbg = nlohmann::json::array();
        for (const auto& s : config.background_sources) jbg.push_back(source_to_json(s));
        jconf["background_sources"] = jbg;

        for (const auto& rec : result.points) {
            manifest_points.push_back({{"target", rec.target},
                                       {"point", rec.index},
                                       {"a_drive_mhz", rec.a_drive_mhz},
                                       {"omega_mhz", rec.omega_mhz},
                                       {"status", rec.status}});
        }
        nlohmann::json jfiles = nlohmann::json::array();
        std::vector<std::string> sorted_files = result.files;
        std::sort(sorted_files.begin(), sorted_files.end());
        for (const auto& f : sorted_files) {
            const std::string full = out_dir + "/" + f;
            char hex[32];
            std::snprintf(hex, sizeof(hex), "%016llx",
                          static_cast<unsigned long long>(fnv1a64_file(full)));
            jfiles.push_back({{"path", f},
                              {"fnv1a64", std::string(hex)},
                              {"bytes", fs::file_size(full)}});
        }
        nlohmann::json manifest{{"config", jconf},
                                {"base_seed", base_seed},
                                {"points", manifest_points},
                                {"files", jfiles}};
        write_text_file(out_dir + "/manifest.json", manifest.dump(2) + "\n");
        result.files.push_back("manifest.json");
    }
    return result;
}

std::vector<std::string> tabulate(const std::string& subcommand, const CampaignConfig& config,
                                  const std::string& output_dir_override) {
    config.sensor.validate();
    const std::string out_dir =
        output_dir_override.empty() ? config.output_dir : output_dir_override;
    fs::create_directories(out_dir);
    const LevelStructure levels = solve_levels(config.sensor);

    std::vector<double> grid = config.amplitude_grid_mhz;
    if (grid.empty()) {
        const double step = subcommand == "participation" ? 4.0 : 8.0;
        for (double a = 0.0; a <= 320.0 + 1e-9; a += step) grid.push_back(a);
    }

    std::vector<std::string> written;
    if (subcommand == "rabi" || subcommand == "participation") {
        for (int target : config.targets) {
            const RabiCurve curve = rabi_curve(levels, target, grid);
            const std::string name = subcommand + "_" + sl_tag(target) + ".csv";
            rabi_curve_table(curve).write(out_dir + "/" + name);
            written.push_back(name);
        }
    } else if (subcommand == "pumpprobe") {
        const auto branches = pump_probe_spectrum(levels, grid);
        pump_probe_table(branches).write(out_dir + "/pumpprobe.csv");
        written.push_back("pumpprobe.csv");
    } else {
        throw std::invalid_argument("unknown tabulate subcommand: " + subcommand);
    }
    return written;
}

}  // namespace qns
