#include "qns/dressing.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "qns/noise.hpp"

namespace qns {

namespace {

constexpr double kTwoPi = 6.28318530717958647692;

// Minimum amplitude used to realize the A -> 0 limit of the dressed frame.
constexpr double kLimitAmplitude = 1e-9;

void fix_gauge(Eigen::MatrixXd& v) {
    for (int c = 0; c < v.cols(); ++c) {
        int imax = 0;
        double amax = 0.0;
        for (int i = 0; i < v.rows(); ++i) {
            if (std::abs(v(i, c)) > amax + 1e-15) {
                amax = std::abs(v(i, c));
                imax = i;
            }
        }
        if (v(imax, c) < 0.0) v.col(c) *= -1.0;
    }
}

// Adiabatic labels by rank: the RWA Hamiltonian is an unreduced symmetric
// tridiagonal matrix for A > 0, so its eigenvalues are simple and never
// cross along an amplitude sweep; maximum-overlap continuation therefore
// reduces to a fixed eigenvalue-rank -> label assignment. The assignment is
// seeded by a diagonalization at a small amplitude where every eigenvector
// still has a dominant bare component.
std::vector<int> seed_rank_labels(const LevelStructure& levels, const DriveSpec& drive) {
    const int d = levels.num_levels();
    DriveSpec seed = drive;
    seed.amplitude_mhz = 1e-3;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(build_rwa_hamiltonian(levels, seed));
    if (es.info() != Eigen::Success) throw std::runtime_error("dress: eigensolver failed");
    const Eigen::MatrixXd& v = es.eigenvectors();

    std::vector<int> label_of_rank(d, -1);
    std::vector<bool> used(d, false);
    // Ranks ascending in energy (Eigen returns ascending eigenvalues).
    // Assign each rank the bare index of its dominant component; the resonant
    // pair appears as two equal mixtures and is ordered lower -> target-1.
    for (int r = 0; r < d; ++r) {
        int best = -1;
        double amax = -1.0;
        for (int i = 0; i < d; ++i) {
            const double a = std::abs(v(i, r));
            if (!used[i] && a > amax) {
                amax = a;
                best = i;
            }
        }
        label_of_rank[r] = best;
        used[best] = true;
    }
    // The pair mixture can come out in either order from the overlap rule;
    // enforce lower energy -> target-1.
    int r_lo = -1, r_hi = -1;
    for (int r = 0; r < d; ++r) {
        if (label_of_rank[r] == drive.target - 1) r_lo = r;
        if (label_of_rank[r] == drive.target) r_hi = r;
    }
    if (r_lo > r_hi) std::swap(label_of_rank[r_lo], label_of_rank[r_hi]);
    return label_of_rank;
}

}  // namespace

void DriveSpec::validate(int num_levels) const {
    if (amplitude_mhz < 0.0) throw std::invalid_argument("drive amplitude must be >= 0");
    if (target < 1 || target >= num_levels)
        throw std::invalid_argument("drive target out of range");
    if (!(frequency_mhz > 0.0)) throw std::invalid_argument("drive frequency must be positive");
}

DriveSpec resonant_drive(const LevelStructure& levels, int target, double amplitude_mhz) {
    DriveSpec d;
    d.amplitude_mhz = amplitude_mhz;
    d.target = target;
    d.frequency_mhz = levels.transition_freq_mhz(target);
    return d;
}

Eigen::MatrixXd build_rwa_hamiltonian(const LevelStructure& levels, const DriveSpec& drive) {
    const int d = levels.num_levels();
    drive.validate(d);
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(d, d);
    for (int j = 0; j < d; ++j) {
        h(j, j) = levels.level_freqs_mhz[j] - j * drive.frequency_mhz;
    }
    for (int j = 1; j < d; ++j) {
        const double c = 0.5 * levels.drive_ratios[j - 1] * drive.amplitude_mhz;
        h(j - 1, j) = c;
        h(j, j - 1) = c;
    }
    return h;
}

DressedFrame dress(const LevelStructure& levels, const DriveSpec& drive) {
    const int d = levels.num_levels();
    drive.validate(d);
    const bool zero_limit = drive.amplitude_mhz == 0.0;
    DriveSpec dr = drive;
    if (zero_limit) dr.amplitude_mhz = kLimitAmplitude;

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(build_rwa_hamiltonian(levels, dr));
    if (es.info() != Eigen::Success) throw std::runtime_error("dress: eigensolver failed");

    const std::vector<int> label_of_rank = seed_rank_labels(levels, dr);
    DressedFrame f;
    f.target = dr.target;
    f.amplitude_mhz = drive.amplitude_mhz;
    f.energies_mhz.resize(d);
    f.basis_change.resize(d, d);
    for (int r = 0; r < d; ++r) {
        f.energies_mhz[label_of_rank[r]] = es.eigenvalues()(r);
        f.basis_change.col(label_of_rank[r]) = es.eigenvectors().col(r);
    }
    fix_gauge(f.basis_change);

    const int t = dr.target;
    f.rabi_mhz = f.energies_mhz[t] - f.energies_mhz[t - 1];
    if (!zero_limit && std::abs(f.rabi_mhz) < 1e-6) {
        throw std::runtime_error("dress: target pair near-degenerate, labeling ambiguous");
    }
    if (zero_limit) f.rabi_mhz = 0.0;

    // Participation ratios. The RWA Hamiltonian is real symmetric, so the
    // matrix elements <j-1|V^T|k><k|V|j> are real by construction.
    const Eigen::MatrixXd& v = f.basis_change;
    f.alpha.resize(d - 1);
    f.beta.resize(d - 1);
    for (int k = 1; k < d; ++k) {
        f.alpha[k - 1] = v(k, t - 1) * v(k, t);
        f.beta[k - 1] = v(k, t - 1) * v(k, t - 1) - v(k, t) * v(k, t);
    }
    f.alpha_ground = v(0, t - 1) * v(0, t);
    return f;
}

double RabiCurve::amplitude_for(double omega_mhz) const {
    if (amplitudes_mhz.size() < 2) throw std::runtime_error("rabi curve too short to invert");
    for (std::size_t i = 1; i < rabi_mhz.size(); ++i) {
        if (!(rabi_mhz[i] > rabi_mhz[i - 1])) {
            throw std::runtime_error("rabi curve not monotone, inversion undefined");
        }
    }
    if (omega_mhz < rabi_mhz.front() || omega_mhz > rabi_mhz.back()) {
        throw std::out_of_range("requested Rabi frequency outside tabulated range");
    }
    const auto it = std::lower_bound(rabi_mhz.begin(), rabi_mhz.end(), omega_mhz);
    if (it == rabi_mhz.begin()) return amplitudes_mhz.front();
    const std::size_t i = static_cast<std::size_t>(it - rabi_mhz.begin());
    const double w = (omega_mhz - rabi_mhz[i - 1]) / (rabi_mhz[i] - rabi_mhz[i - 1]);
    return amplitudes_mhz[i - 1] + w * (amplitudes_mhz[i] - amplitudes_mhz[i - 1]);
}

RabiCurve rabi_curve(const LevelStructure& levels, int target,
                     const std::vector<double>& amplitudes_mhz) {
    if (!std::is_sorted(amplitudes_mhz.begin(), amplitudes_mhz.end())) {
        throw std::invalid_argument("rabi_curve: amplitudes must be sorted ascending");
    }
    RabiCurve c;
    c.target = target;
    c.amplitudes_mhz = amplitudes_mhz;
    c.rabi_mhz.reserve(amplitudes_mhz.size());
    c.frames.reserve(amplitudes_mhz.size());
    for (double a : amplitudes_mhz) {
        if (a < 0.0) throw std::invalid_argument("rabi_curve: amplitudes must be non-negative");
        c.frames.push_back(dress(levels, resonant_drive(levels, target, a)));
        c.rabi_mhz.push_back(c.frames.back().rabi_mhz);
    }
    return c;
}

double invert_rabi(const LevelStructure& levels, int target, double omega_mhz,
                   double tol_mhz) {
    if (!(omega_mhz > 0.0)) throw std::invalid_argument("invert_rabi: omega must be positive");
    const double lam = levels.drive_ratios[target - 1];
    auto omega_at = [&](double a) {
        return dress(levels, resonant_drive(levels, target, a)).rabi_mhz;
    };
    double lo = 0.0, hi = omega_mhz / lam;
    double f_hi = omega_at(hi);
    int guard = 0;
    while (f_hi < omega_mhz) {
        lo = hi;
        hi *= 1.5;
        f_hi = omega_at(hi);
        if (++guard > 64) throw std::runtime_error("invert_rabi: failed to bracket");
    }
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double f = omega_at(mid);
        if (std::abs(f - omega_mhz) < tol_mhz) return mid;
        (f < omega_mhz ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

double leakage_rate(const DressedFrame& frame, const NoisePsdSpec& psd,
                    const LevelStructure& levels) {
    const int d = levels.num_levels();
    const int t = frame.target;
    const Eigen::MatrixXd& v = frame.basis_change;
    auto channel_rate = [&](int out, int edge) {
        double a = 0.0;
        for (int k = 1; k < d; ++k) a += v(k, out) * v(k, edge);
        const double gap_mhz = frame.energies_mhz[out] - frame.energies_mhz[edge];
        return a * a * psd.value(kTwoPi * gap_mhz);
    };
    double rate = 0.0;
    bool any = false;
    if (t + 1 < d) {
        rate = std::max(rate, channel_rate(t + 1, t));
        any = true;
    }
    if (t - 2 >= 0) {
        rate = std::max(rate, channel_rate(t - 2, t - 1));
        any = true;
    }
    if (!any) throw std::runtime_error("leakage_rate: no dressed state outside the pair");
    return rate;
}

double effective_t1_rate(const DressedFrame& frame, const std::vector<double>& gamma1) {
    const int d = static_cast<int>(frame.energies_mhz.size());
    if (static_cast<int>(gamma1.size()) < d - 1) {
        throw std::invalid_argument("effective_t1_rate: need one rate per transition");
    }
    const int t = frame.target;
    const Eigen::MatrixXd& v = frame.basis_change;
    double rate = 0.0;
    for (int k = 1; k < d; ++k) {
        const double el_a = v(k - 1, t - 1) * v(k, t);
        const double el_b = v(k - 1, t) * v(k, t - 1);
        rate += gamma1[k - 1] * (std::abs(el_a) + std::abs(el_b));
    }
    return rate;
}

std::vector<PumpProbeBranch> pump_probe_spectrum(const LevelStructure& levels,
                                                 const std::vector<double>& amplitudes_mhz) {
    std::vector<PumpProbeBranch> out;
    const int d = levels.num_levels();
    for (double a : amplitudes_mhz) {
        const DressedFrame f = dress(levels, resonant_drive(levels, 1, a));
        const double wd = levels.transition_freq_mhz(1);
        for (int k = 0; k < d; ++k) {
            PumpProbeBranch b;
            b.amplitude_mhz = a;
            b.dressed_level = k;
            b.photons = 1;
            b.probe_freq_mhz = wd + (f.energies_mhz[k] - f.energies_mhz[0]);
            out.push_back(b);
            if (k >= 2) {
                PumpProbeBranch b2;
                b2.amplitude_mhz = a;
                b2.dressed_level = k;
                b2.photons = 2;
                b2.probe_freq_mhz = wd + 0.5 * (f.energies_mhz[k] - f.energies_mhz[0]);
                out.push_back(b2);
            }
        }
    }
    return out;
}

}  // namespace qns
