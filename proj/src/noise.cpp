#include "qns/noise.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <mutex>
#include <stdexcept>

#include "qns/rng.hpp"

namespace qns {

namespace {

constexpr double kTwoPi = 6.28318530717958647692;

std::mutex& fftw_mutex() {
    static std::mutex m;
    return m;
}

// FFTW planning is not thread safe; execution on distinct buffers is.
fftw_plan make_c2r_plan(int n, fftw_complex* in, double* out) {
    std::lock_guard<std::mutex> lock(fftw_mutex());
    return fftw_plan_dft_c2r_1d(n, in, out, FFTW_ESTIMATE);
}

fftw_plan make_r2c_plan(int n, double* in, fftw_complex* out) {
    std::lock_guard<std::mutex> lock(fftw_mutex());
    return fftw_plan_dft_r2c_1d(n, in, out, FFTW_ESTIMATE);
}

void destroy_plan(fftw_plan p) {
    std::lock_guard<std::mutex> lock(fftw_mutex());
    fftw_destroy_plan(p);
}

int next_pow2(int n) {
    int p = 1;
    while (p < n) p *= 2;
    return p;
}

}  // namespace

NoisePsdSpec NoisePsdSpec::zero() { return NoisePsdSpec{}; }

NoisePsdSpec NoisePsdSpec::lorentzian(double total_power, double center_mhz, double hwhm_mhz) {
    NoisePsdSpec s;
    s.shape = Shape::Lorentzian;
    s.total_power = total_power;
    s.center_mhz = center_mhz;
    s.hwhm_mhz = hwhm_mhz;
    s.validate();
    return s;
}

NoisePsdSpec NoisePsdSpec::boxcar(double level, double f_lo_mhz, double f_hi_mhz) {
    NoisePsdSpec s;
    s.shape = Shape::BoxCar;
    s.level = level;
    s.f_lo_mhz = f_lo_mhz;
    s.f_hi_mhz = f_hi_mhz;
    s.validate();
    return s;
}

NoisePsdSpec NoisePsdSpec::tabulated(std::vector<std::pair<double, double>> table) {
    NoisePsdSpec s;
    s.shape = Shape::Tabulated;
    s.table = std::move(table);
    s.validate();
    return s;
}

void NoisePsdSpec::validate() const {
    switch (shape) {
        case Shape::Zero:
            return;
        case Shape::Lorentzian:
            if (total_power < 0.0) throw std::invalid_argument("lorentzian power must be >= 0");
            if (!(hwhm_mhz > 0.0)) throw std::invalid_argument("lorentzian hwhm must be > 0");
            if (center_mhz < 0.0) throw std::invalid_argument("lorentzian center must be >= 0");
            return;
        case Shape::BoxCar:
            if (level < 0.0) throw std::invalid_argument("boxcar level must be >= 0");
            if (f_lo_mhz < 0.0 || !(f_hi_mhz > f_lo_mhz))
                throw std::invalid_argument("boxcar band must satisfy 0 <= f_lo < f_hi");
            return;
        case Shape::Tabulated:
            if (table.size() < 2) throw std::invalid_argument("tabulated psd needs >= 2 points");
            for (std::size_t i = 0; i < table.size(); ++i) {
                if (!std::isfinite(table[i].first) || !std::isfinite(table[i].second) ||
                    table[i].second < 0.0) {
                    throw std::invalid_argument("tabulated psd entries must be finite, S >= 0");
                }
                if (i > 0 && !(table[i].first > table[i - 1].first)) {
                    throw std::invalid_argument("tabulated psd frequencies must be increasing");
                }
            }
            return;
    }
}

double NoisePsdSpec::value(double omega) const {
    switch (shape) {
        case Shape::Zero:
            return 0.0;
        case Shape::Lorentzian: {
            const double w0 = kTwoPi * center_mhz;
            const double wc = kTwoPi * hwhm_mhz;
            const double xm = (omega - w0) / wc;
            const double xp = (omega + w0) / wc;
            return total_power / (kTwoPi * wc) * (1.0 / (1.0 + xm * xm) + 1.0 / (1.0 + xp * xp));
        }
        case Shape::BoxCar: {
            const double f = std::abs(omega) / kTwoPi;
            return (f >= f_lo_mhz && f <= f_hi_mhz) ? level : 0.0;
        }
        case Shape::Tabulated: {
            const double f = symmetric ? std::abs(omega) / kTwoPi : omega / kTwoPi;
            if (f <= table.front().first) return f == table.front().first ? table.front().second : 0.0;
            if (f >= table.back().first) return f == table.back().first ? table.back().second : 0.0;
            auto it = std::upper_bound(table.begin(), table.end(), f,
                                       [](double x, const auto& p) { return x < p.first; });
            const auto& hi = *it;
            const auto& lo = *(it - 1);
            const double w = (f - lo.first) / (hi.first - lo.first);
            return lo.second + w * (hi.second - lo.second);
        }
    }
    return 0.0;
}

std::pair<double, double> NoisePsdSpec::default_window_mhz() const {
    switch (shape) {
        case Shape::Zero:
            return {0.0, 0.0};
        case Shape::Lorentzian:
            return {std::max(0.0, center_mhz - 50.0), center_mhz + 50.0};
        case Shape::BoxCar:
            return {f_lo_mhz, f_hi_mhz};
        case Shape::Tabulated:
            return {std::max(0.0, table.front().first), table.back().first};
    }
    return {0.0, 0.0};
}

double NoiseWaveform::at(double t_us) const {
    if (samples.empty()) return 0.0;
    const double x = t_us * sample_rate;
    if (x <= 0.0) return samples.front();
    const auto i = static_cast<std::size_t>(x);
    if (i + 1 >= samples.size()) return samples.back();
    const double w = x - static_cast<double>(i);
    return samples[i] + w * (samples[i + 1] - samples[i]);
}

NoiseWaveform synthesize(const NoisePsdSpec& psd, double duration_us, double fundamental_mhz,
                         std::pair<double, double> window_mhz, std::uint64_t seed,
                         int sample_rate_factor) {
    psd.validate();
    if (!(duration_us > 0.0)) throw std::invalid_argument("synthesize: duration must be > 0");
    if (!(fundamental_mhz > 0.0)) throw std::invalid_argument("synthesize: fundamental must be > 0");
    if (window_mhz.first < 0.0 && window_mhz.second < 0.0) {
        window_mhz = psd.default_window_mhz();
    }
    window_mhz.first = std::max(0.0, window_mhz.first);

    NoiseWaveform w;
    w.seed = seed;
    w.duration_us = duration_us;

    if (psd.is_zero()) {
        w.sample_rate = std::max(1.0, sample_rate_factor * fundamental_mhz);
        w.samples.assign(static_cast<std::size_t>(std::llround(duration_us * w.sample_rate)), 0.0);
        return w;
    }

    const double df = fundamental_mhz;
    const long m_lo = std::max<long>(1, static_cast<long>(std::ceil(window_mhz.first / df - 1e-9)));
    const long m_hi = static_cast<long>(std::floor(window_mhz.second / df + 1e-9));
    if (m_hi < m_lo) throw std::invalid_argument("synthesize: empty cutoff window");

    const int n = next_pow2(static_cast<int>(
        std::max<long>(16, sample_rate_factor * m_hi)));
    const double fs = n * df;
    w.sample_rate = fs;

    SplitMix64 rng(seed);
    std::vector<std::complex<double>> spec(static_cast<std::size_t>(n / 2 + 1), {0.0, 0.0});
    for (long m = m_lo; m <= m_hi; ++m) {
        const double f = m * df;
        const double s = psd.value(kTwoPi * f);
        const double phase = kTwoPi * rng.uniform();
        if (s <= 0.0) continue;
        const double a = 2.0 * std::sqrt(s * df);
        spec[static_cast<std::size_t>(m)] = 0.5 * a * std::complex<double>(std::cos(phase), std::sin(phase));
        w.harmonics.push_back({f, a, phase});
    }

    std::vector<double> period(static_cast<std::size_t>(n));
    fftw_plan plan = make_c2r_plan(n, reinterpret_cast<fftw_complex*>(spec.data()), period.data());
    fftw_execute(plan);
    destroy_plan(plan);

    const auto n_keep = static_cast<std::size_t>(std::llround(duration_us * fs));
    w.samples.resize(n_keep);
    for (std::size_t i = 0; i < n_keep; ++i) {
        w.samples[i] = period[i % static_cast<std::size_t>(n)];
    }
    return w;
}

void PhotonNoiseSpec::validate() const {
    if (!(kappa_mhz > 0.0)) throw std::invalid_argument("photon noise: kappa must be > 0");
    if (nbar < 0.0) throw std::invalid_argument("photon noise: nbar must be >= 0");
    if (weight < 0.0) throw std::invalid_argument("photon noise: weight must be >= 0");
    for (double c : chi_mhz) {
        if (!std::isfinite(c)) throw std::invalid_argument("photon noise: chi must be finite");
    }
}

NoisePsdSpec PhotonNoiseSpec::number_psd() const {
    validate();
    if (nbar == 0.0 || weight == 0.0) return NoisePsdSpec::zero();
    return NoisePsdSpec::lorentzian(kTwoPi * nbar * weight, std::abs(detuning_mhz),
                                    0.5 * kappa_mhz);
}

NoisePsdSpec photon_psd(const PhotonNoiseSpec& spec, int transition) {
    spec.validate();
    if (transition < 1 || transition > static_cast<int>(spec.chi_mhz.size())) {
        throw std::invalid_argument("photon_psd: transition outside chi list");
    }
    if (spec.nbar == 0.0 || spec.weight == 0.0) return NoisePsdSpec::zero();
    const double coeff = 2.0 * kTwoPi * spec.chi_mhz[static_cast<std::size_t>(transition - 1)];
    NoisePsdSpec s = spec.number_psd();
    s.total_power *= coeff * coeff;
    return s;
}

double LevelNoiseChannel::waveform_at(double t_us) const {
    if (!samples || samples->empty()) return 0.0;
    const double x = t_us * sample_rate;
    if (x <= 0.0) return samples->front();
    const auto i = static_cast<std::size_t>(x);
    if (i + 1 >= samples->size()) return samples->back();
    const double w = x - static_cast<double>(i);
    return (*samples)[i] + w * ((*samples)[i + 1] - (*samples)[i]);
}

LevelNoiseChannel level_noise_series(const NoiseWaveform& w, const FluxCoupling& c,
                                     int num_levels) {
    if (static_cast<int>(c.sens_mhz_per_phi0.size()) < num_levels - 1) {
        throw std::invalid_argument("flux coupling shorter than num_levels-1");
    }
    LevelNoiseChannel ch;
    ch.samples = std::make_shared<const std::vector<double>>(w.samples);
    ch.sample_rate = w.sample_rate;
    ch.level_coeff.assign(static_cast<std::size_t>(num_levels), 0.0);
    for (int k = 1; k < num_levels; ++k) {
        ch.level_coeff[static_cast<std::size_t>(k)] =
            kTwoPi * c.sens_mhz_per_phi0[static_cast<std::size_t>(k - 1)];
    }
    return ch;
}

LevelNoiseChannel level_noise_series(const NoiseWaveform& w, const PhotonCoupling& c,
                                     int num_levels) {
    if (static_cast<int>(c.chi_mhz.size()) < num_levels - 1) {
        throw std::invalid_argument("photon coupling shorter than num_levels-1");
    }
    LevelNoiseChannel ch;
    ch.samples = std::make_shared<const std::vector<double>>(w.samples);
    ch.sample_rate = w.sample_rate;
    ch.level_coeff.assign(static_cast<std::size_t>(num_levels), 0.0);
    double cum = 0.0;
    for (int k = 1; k < num_levels; ++k) {
        cum += c.chi_mhz[static_cast<std::size_t>(k - 1)];
        ch.level_coeff[static_cast<std::size_t>(k)] = kTwoPi * 2.0 * cum;
    }
    return ch;
}

std::vector<std::pair<double, double>> welch_psd(const std::vector<double>& x,
                                                 double sample_rate) {
    if (x.size() < 8) throw std::invalid_argument("welch_psd: record too short");
    const int n = static_cast<int>(x.size());
    std::vector<double> buf(x.size());
    double u = 0.0;
    for (int i = 0; i < n; ++i) {
        const double win = 0.5 * (1.0 - std::cos(kTwoPi * i / n));
        buf[static_cast<std::size_t>(i)] = win * x[static_cast<std::size_t>(i)];
        u += win * win;
    }
    std::vector<std::complex<double>> spec(static_cast<std::size_t>(n / 2 + 1));
    fftw_plan plan = make_r2c_plan(n, buf.data(), reinterpret_cast<fftw_complex*>(spec.data()));
    fftw_execute(plan);
    destroy_plan(plan);

    std::vector<std::pair<double, double>> out;
    out.reserve(spec.size());
    const double norm = 1.0 / (sample_rate * u);
    for (std::size_t k = 0; k + 1 < spec.size(); ++k) {
        const double f = static_cast<double>(k) * sample_rate / n;
        out.emplace_back(f, std::norm(spec[k]) * norm);
    }
    return out;
}

}  // namespace qns
