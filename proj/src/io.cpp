#include "qns/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "qns/json_support.hpp"

namespace qns {

std::uint64_t fnv1a64(const void* data, std::size_t size) {
    const auto* p = static_cast<const unsigned char*>(data);
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (std::size_t i = 0; i < size; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ull;
    }
    return h;
}

std::uint64_t fnv1a64_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open file for hashing: " + path);
    std::uint64_t h = 0xcbf29ce484222325ull;
    char buf[65536];
    while (f) {
        f.read(buf, sizeof(buf));
        const auto got = static_cast<std::size_t>(f.gcount());
        for (std::size_t i = 0; i < got; ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 0x100000001b3ull;
        }
    }
    return h;
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

void CsvTable::add_row(const std::vector<double>& values) {
    std::vector<std::string> cells;
    cells.reserve(values.size());
    for (double v : values) cells.push_back(format_double(v));
    rows_.push_back(std::move(cells));
}

void CsvTable::add_row_raw(const std::vector<std::string>& cells) { rows_.push_back(cells); }

std::string CsvTable::to_string() const {
    std::ostringstream os;
    for (std::size_t i = 0; i < header_.size(); ++i) {
        if (i) os << ',';
        os << header_[i];
    }
    os << '\n';
    for (const auto& row : rows_) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) os << ',';
            os << row[i];
        }
        os << '\n';
    }
    return os.str();
}

void CsvTable::write(const std::string& path) const { write_text_file(path, to_string()); }

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open for writing: " + path);
    f.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!f) throw std::runtime_error("write failed: " + path);
}

std::string read_text_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open for reading: " + path);
    std::ostringstream os;
    os << f.rdbuf();
    return os.str();
}

CsvTable rabi_curve_table(const RabiCurve& curve) {
    const int d = curve.frames.empty() ? 2
                                       : static_cast<int>(curve.frames.front().energies_mhz.size());
    std::vector<std::string> header = {"A_drive_MHz", "Omega_MHz"};
    for (int k = 1; k < d; ++k) header.push_back("alpha_" + std::to_string(k));
    for (int k = 1; k < d; ++k) header.push_back("beta_" + std::to_string(k));
    CsvTable t(header);
    for (std::size_t i = 0; i < curve.amplitudes_mhz.size(); ++i) {
        std::vector<double> row = {curve.amplitudes_mhz[i], curve.rabi_mhz[i]};
        for (double a : curve.frames[i].alpha) row.push_back(a);
        for (double b : curve.frames[i].beta) row.push_back(b);
        t.add_row(row);
    }
    return t;
}

CsvTable decay_trace_table(const DecayTrace& trace) {
    CsvTable t({"tau_us", "pop_lower", "pop_upper", "pop_leak", "polarization", "stderr"});
    for (std::size_t i = 0; i < trace.tau_us.size(); ++i) {
        t.add_row({trace.tau_us[i], trace.pop_lower[i], trace.pop_upper[i], trace.pop_leak[i],
                   trace.polarization[i], trace.stderr_pol[i]});
    }
    return t;
}

CsvTable psd_estimate_table(const PsdEstimate& est, FluxPsdUnits units) {
    const double scale = units == FluxPsdUnits::MicroPhi0SqPerHz ? 1e6 : 1.0;
    CsvTable t({"omega_naive_MHz", "omega_corrected_MHz", "S_transverse_per_us", "S_lab",
                "S_lab_naive", "sigma", "flags"});
    for (const auto& p : est.points) {
        std::vector<std::string> row = {
            format_double(p.omega_naive_mhz),  format_double(p.omega_corrected_mhz),
            format_double(p.s_transverse),     format_double(p.s_lab * scale),
            format_double(p.s_lab_naive * scale), format_double(p.sigma * scale)};
        std::string flags;
        if (p.negative_warning) flags += "negative;";
        if (p.rate_unresolved) flags += "unresolved;";
        if (p.ill_conditioned) flags += "ill-conditioned;";
        row.push_back(flags);
        t.add_row_raw(row);
    }
    return t;
}

CsvTable pump_probe_table(const std::vector<PumpProbeBranch>& branches) {
    CsvTable t({"A_drive_MHz", "dressed_level", "photons", "probe_freq_MHz"});
    for (const auto& b : branches) {
        t.add_row({b.amplitude_mhz, static_cast<double>(b.dressed_level),
                   static_cast<double>(b.photons), b.probe_freq_mhz});
    }
    return t;
}

CsvTable source_component_table(const SourceComponent& flux, const SourceComponent& photon) {
    CsvTable t({"f_MHz", "S_flux", "sigma_flux", "flux_clipped", "S_photon", "sigma_photon",
                "photon_clipped"});
    for (std::size_t i = 0; i < flux.freq_mhz.size(); ++i) {
        t.add_row({flux.freq_mhz[i], flux.value[i], flux.sigma[i],
                   flux.clipped[i] ? 1.0 : 0.0, photon.value[i], photon.sigma[i],
                   photon.clipped[i] ? 1.0 : 0.0});
    }
    return t;
}

CsvTable psd_table(const NoisePsdSpec& psd, double f_lo_mhz, double f_hi_mhz, int npoints) {
    if (npoints < 2 || !(f_hi_mhz > f_lo_mhz))
        throw std::invalid_argument("psd_table: bad sampling range");
    CsvTable t({"f_MHz", "S"});
    constexpr double kTwoPi = 6.28318530717958647692;
    for (int i = 0; i < npoints; ++i) {
        const double f = f_lo_mhz + (f_hi_mhz - f_lo_mhz) * i / (npoints - 1);
        t.add_row({f, psd.value(kTwoPi * f)});
    }
    return t;
}

nlohmann::json psd_to_json(const NoisePsdSpec& psd) {
    nlohmann::json j;
    switch (psd.shape) {
        case NoisePsdSpec::Shape::Zero:
            j["shape"] = "zero";
            break;
        case NoisePsdSpec::Shape::Lorentzian:
            j["shape"] = "lorentzian";
            j["total_power"] = psd.total_power;
            j["center_mhz"] = psd.center_mhz;
            j["hwhm_mhz"] = psd.hwhm_mhz;
            break;
        case NoisePsdSpec::Shape::BoxCar:
            j["shape"] = "boxcar";
            j["level"] = psd.level;
            j["f_lo_mhz"] = psd.f_lo_mhz;
            j["f_hi_mhz"] = psd.f_hi_mhz;
            break;
        case NoisePsdSpec::Shape::Tabulated: {
            j["shape"] = "tabulated";
            nlohmann::json pts = nlohmann::json::array();
            for (const auto& p : psd.table) pts.push_back({p.first, p.second});
            j["points"] = pts;
            break;
        }
    }
    j["symmetric"] = psd.symmetric;
    return j;
}

NoisePsdSpec psd_from_json(const nlohmann::json& j) {
    const std::string shape = j.at("shape").get<std::string>();
    NoisePsdSpec psd;
    if (shape == "zero") {
        psd = NoisePsdSpec::zero();
    } else if (shape == "lorentzian") {
        psd = NoisePsdSpec::lorentzian(j.at("total_power").get<double>(),
                                       j.at("center_mhz").get<double>(),
                                       j.at("hwhm_mhz").get<double>());
    } else if (shape == "boxcar") {
        psd = NoisePsdSpec::boxcar(j.at("level").get<double>(), j.at("f_lo_mhz").get<double>(),
                                   j.at("f_hi_mhz").get<double>());
    } else if (shape == "tabulated") {
        std::vector<std::pair<double, double>> pts;
        for (const auto& p : j.at("points")) {
            pts.emplace_back(p.at(0).get<double>(), p.at(1).get<double>());
        }
        psd = NoisePsdSpec::tabulated(std::move(pts));
    } else {
        throw std::invalid_argument("unknown psd shape: " + shape);
    }
    if (j.contains("symmetric")) psd.symmetric = j.at("symmetric").get<bool>();
    return psd;
}

nlohmann::json transmon_to_json(const TransmonSpec& spec) {
    return {{"ej_sum_ghz", spec.ej_sum_mhz / 1000.0},
            {"ec_mhz", spec.ec_mhz},
            {"asymmetry", spec.asymmetry},
            {"flux_bias_phi0", spec.flux_bias},
            {"num_levels", spec.num_levels},
            {"charge_cutoff", spec.charge_cutoff},
            {"dispersive_shifts_mhz", spec.dispersive_shifts_mhz}};
}

TransmonSpec transmon_from_json(const nlohmann::json& j) {
    TransmonSpec s;
    if (j.contains("ej_sum_mhz")) {
        s.ej_sum_mhz = j.at("ej_sum_mhz").get<double>();
    } else {
        s.ej_sum_mhz = j.at("ej_sum_ghz").get<double>() * 1000.0;
    }
    s.ec_mhz = j.at("ec_mhz").get<double>();
    s.asymmetry = j.value("asymmetry", 0.0);
    s.flux_bias = j.at("flux_bias_phi0").get<double>();
    s.num_levels = j.value("num_levels", 5);
    s.charge_cutoff = j.value("charge_cutoff", std::max(30, 3 * s.num_levels));
    if (j.contains("dispersive_shifts_mhz")) {
        s.dispersive_shifts_mhz = j.at("dispersive_shifts_mhz").get<std::vector<double>>();
    }
    s.validate();
    return s;
}

std::string level_structure_json(const LevelStructure& levels) {
    nlohmann::json j{{"level_freqs_mhz", levels.level_freqs_mhz},
                     {"drive_ratios", levels.drive_ratios},
                     {"flux_sens_mhz_per_phi0", levels.flux_sens_mhz_per_phi0},
                     {"dispersive_shifts_mhz", levels.dispersive_shifts_mhz},
                     {"anharmonicity_mhz", levels.anharmonicity_mhz()},
                     {"regime_warning", levels.regime_warning}};
    return j.dump(2) + "\n";
}

std::string dressed_frame_json(const DressedFrame& frame) {
    const int d = static_cast<int>(frame.energies_mhz.size());
    std::vector<std::vector<double>> v(static_cast<std::size_t>(d));
    for (int a = 0; a < d; ++a) {
        v[static_cast<std::size_t>(a)].resize(static_cast<std::size_t>(d));
        for (int b = 0; b < d; ++b)
            v[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)] = frame.basis_change(a, b);
    }
    nlohmann::json j{{"target", frame.target},
                     {"amplitude_mhz", frame.amplitude_mhz},
                     {"rabi_mhz", frame.rabi_mhz},
                     {"energies_mhz", frame.energies_mhz},
                     {"alpha", frame.alpha},
                     {"beta", frame.beta},
                     {"alpha_ground", frame.alpha_ground},
                     {"basis_change", v}};
    return j.dump(2) + "\n";
}

void save_waveform(const std::string& path_base, const NoiseWaveform& w,
                   const NoisePsdSpec& psd) {
    {
        std::ofstream f(path_base + ".f64", std::ios::binary);
        if (!f) throw std::runtime_error("cannot write waveform: " + path_base);
        f.write(reinterpret_cast<const char*>(w.samples.data()),
                static_cast<std::streamsize>(w.samples.size() * sizeof(double)));
    }
    nlohmann::json j{{"psd", psd_to_json(psd)},
                     {"seed", w.seed},
                     {"sample_rate_per_us", w.sample_rate},
                     {"duration_us", w.duration_us},
                     {"num_samples", w.samples.size()}};
    write_text_file(path_base + ".json", j.dump(2) + "\n");
}

NoiseWaveform load_waveform(const std::string& path_base) {
    const nlohmann::json j = nlohmann::json::parse(read_text_file(path_base + ".json"));
    NoiseWaveform w;
    w.seed = j.at("seed").get<std::uint64_t>();
    w.sample_rate = j.at("sample_rate_per_us").get<double>();
    w.duration_us = j.at("duration_us").get<double>();
    const auto n = j.at("num_samples").get<std::size_t>();
    w.samples.resize(n);
    std::ifstream f(path_base + ".f64", std::ios::binary);
    if (!f) throw std::runtime_error("cannot read waveform: " + path_base);
    f.read(reinterpret_cast<char*>(w.samples.data()),
           static_cast<std::streamsize>(n * sizeof(double)));
    if (static_cast<std::size_t>(f.gcount()) != n * sizeof(double)) {
        throw std::runtime_error("waveform file truncated: " + path_base);
    }
    return w;
}

}  // namespace qns
