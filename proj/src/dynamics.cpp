#include "qns/dynamics.hpp"

#include <fftw3.h>

#include <Eigen/Dense>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstring>
#include <stdexcept>
#include <thread>

namespace qns {

namespace {

constexpr double kTwoPi = 6.28318530717958647692;
using cd = std::complex<double>;

// ---------------------------------------------------------------------------
// Adaptive Dormand-Prince 5(4) integrator for the Lindblad equation
//   drho/dt = -2 pi i [H(t), rho] + sum_k G_k D[|k-1><k|] rho
// with H in MHz and t in us. In the interaction picture the static detunings
// move into phase factors on the drive couplings; ladder dissipators are
// invariant under that diagonal frame change.
// ---------------------------------------------------------------------------
class Rk45Lindblad {
  public:
    Rk45Lindblad(const LindbladProblem& prob, int dim, const PropagatorOptions& opts)
        : prob_(prob), d_(dim), n_(dim * dim), opts_(opts) {
        if (static_cast<int>(prob.detunings_mhz.size()) != d_)
            throw std::invalid_argument("propagator: detuning list size mismatch");
        if (static_cast<int>(prob.couplings_mhz.size()) != d_ - 1)
            throw std::invalid_argument("propagator: coupling list size mismatch");
        half_decay_.assign(d_, 0.0);
        gamma_.assign(d_ - 1, 0.0);
        if (!prob.decay_rates.empty()) {
            if (static_cast<int>(prob.decay_rates.size()) != d_ - 1)
                throw std::invalid_argument("propagator: decay rate list size mismatch");
            for (int k = 1; k < d_; ++k) {
                gamma_[k - 1] = prob.decay_rates[k - 1];
                half_decay_[k] = 0.5 * prob.decay_rates[k - 1];
            }
        }
        phase_rate_.assign(d_ - 1, 0.0);
        for (int j = 1; j < d_; ++j) {
            phase_rate_[j - 1] = kTwoPi * (prob.detunings_mhz[j - 1] - prob.detunings_mhz[j]);
        }
        for (const auto& ch : prob.noise) {
            if (static_cast<int>(ch.level_coeff.size()) != d_)
                throw std::invalid_argument("propagator: noise channel level count mismatch");
            Channel c;
            c.data = ch.samples ? ch.samples->data() : nullptr;
            c.size = ch.samples ? ch.samples->size() : 0;
            c.rate = ch.sample_rate;
            c.coeff_mhz.resize(d_);
            for (int m = 0; m < d_; ++m) c.coeff_mhz[m] = ch.level_coeff[m] / kTwoPi;
            channels_.push_back(std::move(c));
        }
        for (auto* buf : {&k1_, &k2_, &k3_, &k4_, &k5_, &k6_, &k7_, &ytmp_, &ynew_})
            buf->assign(n_, cd(0.0, 0.0));
        diag_.assign(d_, 0.0);
        off_.assign(d_ - 1, cd(0.0, 0.0));
        double scale = 1.0;
        for (double c : prob.couplings_mhz) scale = std::max(scale, kTwoPi * std::abs(c));
        for (double p : phase_rate_) scale = std::max(scale, std::abs(p));
        if (!opts.interaction_picture) {
            for (double dlt : prob.detunings_mhz) scale = std::max(scale, kTwoPi * std::abs(dlt));
        }
        h_init_ = std::min(opts.max_step_us, 0.01 / scale);
    }

    void set_state_interaction(std::vector<cd> rho, double t) {
        y_ = std::move(rho);
        if (static_cast<int>(y_.size()) != n_) throw std::invalid_argument("bad state size");
        t_ = t;
        h_ = h_init_;
        have_fsal_ = false;
    }

    void set_state_rotating(const std::vector<cd>& rho, double t) {
        std::vector<cd> y = rho;
        if (opts_.interaction_picture) to_frame(y, t, +1.0);
        set_state_interaction(std::move(y), t);
    }

    void advance_to(double t_end) {
        while (t_ < t_end - 1e-15) {
            double h = std::min(h_, t_end - t_);
            step(h);
        }
    }

    double time() const { return t_; }

    std::vector<cd> state_rotating() const {
        std::vector<cd> y = y_;
        if (opts_.interaction_picture) to_frame(y, t_, -1.0);
        return y;
    }

  private:
    struct Channel {
        const double* data = nullptr;
        std::size_t size = 0;
        double rate = 0.0;
        std::vector<double> coeff_mhz;
    };

    // rho_rotating = rho_ip * exp(-2 pi i (d_a - d_b) t); sign = -1 applies
    // that transform, sign = +1 its inverse.
    void to_frame(std::vector<cd>& y, double t, double sign) const {
        for (int a = 0; a < d_; ++a) {
            for (int b = 0; b < d_; ++b) {
                const double ph = sign * kTwoPi *
                                  (prob_.detunings_mhz[a] - prob_.detunings_mhz[b]) * t;
                y[a * d_ + b] *= cd(std::cos(ph), std::sin(ph));
            }
        }
    }

    double channel_value(const Channel& c, double t) const {
        if (c.size == 0) return 0.0;
        const double x = t * c.rate;
        if (x <= 0.0) return c.data[0];
        const auto i = static_cast<std::size_t>(x);
        if (i + 1 >= c.size) return c.data[c.size - 1];
        const double w = x - static_cast<double>(i);
        return c.data[i] + w * (c.data[i + 1] - c.data[i]);
    }

    void rhs(double t, const cd* y, cd* dy) {
        const double g = prob_.envelope.value(t);
        for (int m = 0; m < d_; ++m) diag_[m] = 0.0;
        for (const Channel& c : channels_) {
            const double w = channel_value(c, t);
            for (int m = 1; m < d_; ++m) diag_[m] += c.coeff_mhz[m] * w;
        }
        if (opts_.interaction_picture) {
            for (int j = 0; j < d_ - 1; ++j) {
                const double ph = phase_rate_[j] * t;
                off_[j] = prob_.couplings_mhz[j] * g * cd(std::cos(ph), std::sin(ph));
            }
        } else {
            for (int m = 0; m < d_; ++m) diag_[m] += prob_.detunings_mhz[m];
            for (int j = 0; j < d_ - 1; ++j) off_[j] = prob_.couplings_mhz[j] * g;
        }
        const cd m2pi_i(0.0, -kTwoPi);
        for (int a = 0; a < d_; ++a) {
            for (int b = 0; b < d_; ++b) {
                const int ab = a * d_ + b;
                cd hr = diag_[a] * y[ab];
                if (a > 0) hr += std::conj(off_[a - 1]) * y[ab - d_];
                if (a < d_ - 1) hr += off_[a] * y[ab + d_];
                cd rh = y[ab] * diag_[b];
                if (b > 0) rh += y[ab - 1] * off_[b - 1];
                if (b < d_ - 1) rh += y[ab + 1] * std::conj(off_[b]);
                dy[ab] = m2pi_i * (hr - rh) - (half_decay_[a] + half_decay_[b]) * y[ab];
            }
        }
        for (int k = 1; k < d_; ++k) {
            dy[(k - 1) * d_ + (k - 1)] += gamma_[k - 1] * y[k * d_ + k];
        }
    }

    void step(double h_try) {
        static constexpr double a21 = 1.0 / 5;
        static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
        static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
        static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                                a53 = 64448.0 / 6561, a54 = -212.0 / 729;
        static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33,
                                a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                                a65 = -5103.0 / 18656;
        static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                                b5 = -2187.0 / 6784, b6 = 11.0 / 84;
        static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                                e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
        static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;

        double h = h_try;
        for (int attempt = 0; attempt < 64; ++attempt) {
            if (h < 1e-13) throw std::runtime_error("integrator step size underflow");
            if (!have_fsal_) rhs(t_, y_.data(), k1_.data());
            for (int i = 0; i < n_; ++i) ytmp_[i] = y_[i] + h * a21 * k1_[i];
            rhs(t_ + c2 * h, ytmp_.data(), k2_.data());
            for (int i = 0; i < n_; ++i) ytmp_[i] = y_[i] + h * (a31 * k1_[i] + a32 * k2_[i]);
            rhs(t_ + c3 * h, ytmp_.data(), k3_.data());
            for (int i = 0; i < n_; ++i)
                ytmp_[i] = y_[i] + h * (a41 * k1_[i] + a42 * k2_[i] + a43 * k3_[i]);
            rhs(t_ + c4 * h, ytmp_.data(), k4_.data());
            for (int i = 0; i < n_; ++i)
                ytmp_[i] = y_[i] +
                           h * (a51 * k1_[i] + a52 * k2_[i] + a53 * k3_[i] + a54 * k4_[i]);
            rhs(t_ + c5 * h, ytmp_.data(), k5_.data());
            for (int i = 0; i < n_; ++i)
                ytmp_[i] = y_[i] + h * (a61 * k1_[i] + a62 * k2_[i] + a63 * k3_[i] +
                                        a64 * k4_[i] + a65 * k5_[i]);
            rhs(t_ + h, ytmp_.data(), k6_.data());
            for (int i = 0; i < n_; ++i)
                ynew_[i] = y_[i] + h * (b1 * k1_[i] + b3 * k3_[i] + b4 * k4_[i] +
                                        b5 * k5_[i] + b6 * k6_[i]);
            rhs(t_ + h, ynew_.data(), k7_.data());

            double err2 = 0.0;
            for (int i = 0; i < n_; ++i) {
                const cd e = h * (e1 * k1_[i] + e3 * k3_[i] + e4 * k4_[i] + e5 * k5_[i] +
                                  e6 * k6_[i] + e7 * k7_[i]);
                const double sc = opts_.atol +
                                  opts_.rtol * std::max(std::abs(y_[i]), std::abs(ynew_[i]));
                err2 += std::norm(e) / (sc * sc);
            }
            const double err = std::sqrt(err2 / n_);
            if (err <= 1.0) {
                t_ += h;
                y_.swap(ynew_);
                k1_.swap(k7_);
                have_fsal_ = true;
                const double fac = std::clamp(0.9 * std::pow(std::max(err, 1e-10), -0.2), 0.2, 5.0);
                h_ = std::min(opts_.max_step_us, h * fac);
                return;
            }
            have_fsal_ = false;
            h *= std::clamp(0.9 * std::pow(err, -0.2), 0.1, 0.9);
        }
        throw std::runtime_error("integrator failed to find an acceptable step");
    }

    const LindbladProblem& prob_;
    int d_, n_;
    PropagatorOptions opts_;
    std::vector<double> half_decay_, gamma_, phase_rate_, diag_;
    std::vector<cd> off_;
    std::vector<Channel> channels_;
    std::vector<cd> y_, k1_, k2_, k3_, k4_, k5_, k6_, k7_, ytmp_, ynew_;
    double t_ = 0.0, h_ = 1e-4, h_init_ = 1e-4;
    bool have_fsal_ = false;
};

Eigen::MatrixXcd to_matrix(const std::vector<cd>& y, int d) {
    Eigen::MatrixXcd m(d, d);
    for (int a = 0; a < d; ++a)
        for (int b = 0; b < d; ++b) m(a, b) = y[a * d + b];
    return m;
}

std::vector<cd> from_matrix(const Eigen::MatrixXcd& m) {
    std::vector<cd> y(static_cast<std::size_t>(m.rows() * m.cols()));
    for (int a = 0; a < m.rows(); ++a)
        for (int b = 0; b < m.cols(); ++b) y[a * m.cols() + b] = m(a, b);
    return y;
}

// Ideal pi pulse on the (a, a+1) subspace followed by further ladder steps,
// then the pi/2 about y that puts the sensor on the lock axis.
Eigen::MatrixXcd prep_unitary(int d, int target, bool include_half) {
    Eigen::MatrixXcd u = Eigen::MatrixXcd::Identity(d, d);
    for (int m = 1; m < target; ++m) {
        Eigen::MatrixXcd p = Eigen::MatrixXcd::Identity(d, d);
        p(m - 1, m - 1) = 0.0;
        p(m, m) = 0.0;
        p(m - 1, m) = cd(0.0, -1.0);
        p(m, m - 1) = cd(0.0, -1.0);
        u = p * u;
    }
    if (include_half) {
        const double c = std::sqrt(0.5);
        Eigen::MatrixXcd p = Eigen::MatrixXcd::Identity(d, d);
        p(target - 1, target - 1) = c;
        p(target - 1, target) = -c;
        p(target, target - 1) = c;
        p(target, target) = c;
        u = p * u;
    }
    return u;
}

Eigen::MatrixXcd closing_unitary(int d, int target) {
    const double c = std::sqrt(0.5);
    Eigen::MatrixXcd p = Eigen::MatrixXcd::Identity(d, d);
    p(target - 1, target - 1) = c;
    p(target - 1, target) = c;
    p(target, target - 1) = -c;
    p(target, target) = c;
    return p;
}

void check_physical(const Eigen::MatrixXcd& rho) {
    const double tr = rho.trace().real();
    if (std::abs(tr - 1.0) > 1e-6) {
        throw std::runtime_error("integrator accuracy: |Tr rho - 1| exceeds 1e-6");
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(rho, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < -1e-8) {
        throw std::runtime_error("density matrix positivity violated");
    }
}

double pairwise_sum(const double* x, std::size_t n) {
    if (n <= 8) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += x[i];
        return s;
    }
    const std::size_t half = n / 2;
    return pairwise_sum(x, half) + pairwise_sum(x + half, n - half);
}

struct RealizationResult {
    std::vector<double> lower, upper, leak, pol;
};

}  // namespace

double DriveEnvelope::value(double t_us) const {
    if (sigma_us <= 0.0) return (t_us >= up_end_us && t_us <= down_start_us) ? 1.0 : 0.0;
    const double ramp = 3.0 * sigma_us;
    static const double floor3 = std::exp(-4.5);
    auto edge = [&](double dt) {
        return (std::exp(-0.5 * dt * dt / (sigma_us * sigma_us)) - floor3) / (1.0 - floor3);
    };
    if (t_us < up_end_us - ramp) return 0.0;
    if (t_us < up_end_us) return edge(t_us - up_end_us);
    if (t_us <= down_start_us) return 1.0;
    if (t_us < down_start_us + ramp) return edge(t_us - down_start_us);
    return 0.0;
}

void SequenceSpec::validate(int num_levels) const {
    if (target < 1 || target >= num_levels) throw std::invalid_argument("sequence target out of range");
    if (ensemble < 1) throw std::invalid_argument("ensemble must be >= 1");
    if (prep == PrepMode::BarePulses && !(edge_sigma_ns > 0.0))
        throw std::invalid_argument("edge_sigma must be positive");
    if (durations_us.empty() || !std::is_sorted(durations_us.begin(), durations_us.end()))
        throw std::invalid_argument("durations must be non-empty and ascending");
    if (durations_us.front() < 0.0) throw std::invalid_argument("durations must be >= 0");
    if (!t1_rates.empty() && static_cast<int>(t1_rates.size()) < num_levels - 1)
        throw std::invalid_argument("t1_rates must cover every transition");
}

std::vector<std::complex<double>> propagate_density_matrix(
    const LindbladProblem& prob, std::vector<std::complex<double>> rho, int dim,
    double t0_us, double t1_us, const PropagatorOptions& opts) {
    Rk45Lindblad p(prob, dim, opts);
    p.set_state_rotating(rho, t0_us);
    p.advance_to(t1_us);
    return p.state_rotating();
}

DecayTrace simulate_sequence(const LevelStructure& levels, const SequenceSpec& seq,
                             const NoiseProvider& noise) {
    const int d = levels.num_levels();
    seq.validate(d);
    const bool dressed_mode = seq.prep == SequenceSpec::PrepMode::DressedState;
    const double sigma = dressed_mode ? 0.0 : seq.edge_sigma_ns * 1e-3;
    const double ramp = 3.0 * sigma;
    const double t_need = 2.0 * ramp + seq.durations_us.back();

    LindbladProblem base;
    base.detunings_mhz.resize(d);
    for (int j = 0; j < d; ++j)
        base.detunings_mhz[j] = levels.level_freqs_mhz[j] - j * seq.lock.frequency_mhz;
    base.couplings_mhz.resize(d - 1);
    for (int j = 1; j < d; ++j)
        base.couplings_mhz[j - 1] = 0.5 * levels.drive_ratios[j - 1] * seq.lock.amplitude_mhz;
    base.decay_rates = seq.t1_rates;
    base.envelope = DriveEnvelope{sigma, ramp, 1e30};

    const Eigen::MatrixXcd u_close = closing_unitary(d, seq.target);
    Eigen::MatrixXcd rho0 = Eigen::MatrixXcd::Zero(d, d);
    Eigen::VectorXd plus, minus;
    if (dressed_mode) {
        const DressedFrame f = dress(levels, seq.lock);
        plus = f.basis_change.col(seq.target);
        minus = f.basis_change.col(seq.target - 1);
        rho0 = (plus * plus.transpose()).cast<cd>();
    } else {
        const Eigen::MatrixXcd u_prep = prep_unitary(d, seq.target, true);
        rho0(0, 0) = 1.0;
        rho0 = u_prep * rho0 * u_prep.adjoint();
    }
    const std::vector<cd> y0 = from_matrix(rho0);

    const std::size_t n_tau = seq.durations_us.size();
    std::vector<RealizationResult> results(static_cast<std::size_t>(seq.ensemble));

    auto run_one = [&](int r) {
        LindbladProblem prob = base;
        prob.noise = noise ? noise(r) : std::vector<LevelNoiseChannel>{};
        for (const auto& ch : prob.noise) {
            if (!ch.samples) continue;
            const double cover = static_cast<double>(ch.samples->size()) / ch.sample_rate;
            if (cover + 1e-9 < t_need)
                throw std::invalid_argument("noise series shorter than lock duration plus ramps");
        }
        Rk45Lindblad main(prob, d, seq.integrator);
        main.set_state_rotating(y0, 0.0);

        RealizationResult res;
        res.lower.resize(n_tau);
        res.upper.resize(n_tau);
        res.leak.resize(n_tau);
        res.pol.resize(n_tau);
        for (std::size_t i = 0; i < n_tau; ++i) {
            const double t_snap = ramp + seq.durations_us[i];
            main.advance_to(t_snap);

            double lo = 0.0, up = 0.0;
            if (dressed_mode) {
                const Eigen::MatrixXcd rho = to_matrix(main.state_rotating(), d);
                check_physical(rho);
                lo = std::clamp((plus.cast<cd>().adjoint() * rho * plus.cast<cd>())(0).real(),
                                0.0, 1.0);
                up = std::clamp((minus.cast<cd>().adjoint() * rho * minus.cast<cd>())(0).real(),
                                0.0, 1.0);
            } else {
                LindbladProblem leg = prob;
                leg.envelope = DriveEnvelope{sigma, ramp, t_snap};
                Rk45Lindblad down(leg, d, seq.integrator);
                down.set_state_rotating(main.state_rotating(), t_snap);
                down.advance_to(t_snap + ramp);

                Eigen::MatrixXcd rho = to_matrix(down.state_rotating(), d);
                rho = u_close * rho * u_close.adjoint();
                check_physical(rho);
                lo = std::clamp(rho(seq.target - 1, seq.target - 1).real(), 0.0, 1.0);
                up = std::clamp(rho(seq.target, seq.target).real(), 0.0, 1.0);
            }
            res.lower[i] = lo;
            res.upper[i] = up;
            res.leak[i] = std::max(0.0, 1.0 - lo - up);
            res.pol[i] = (lo + up > 1e-12) ? (lo - up) / (lo + up) : 0.0;
        }
        results[static_cast<std::size_t>(r)] = std::move(res);
    };

    const int workers = std::clamp(seq.workers, 1, seq.ensemble);
    if (workers == 1) {
        for (int r = 0; r < seq.ensemble; ++r) run_one(r);
    } else {
        std::atomic<int> next{0};
        std::exception_ptr first_error;
        std::mutex err_mutex;
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w) {
            pool.emplace_back([&]() {
                for (;;) {
                    const int r = next.fetch_add(1);
                    if (r >= seq.ensemble) return;
                    try {
                        run_one(r);
                    } catch (...) {
                        std::lock_guard<std::mutex> lock(err_mutex);
                        if (!first_error) first_error = std::current_exception();
                        return;
                    }
                }
            });
        }
        for (auto& t : pool) t.join();
        if (first_error) std::rethrow_exception(first_error);
    }

    DecayTrace trace;
    trace.target = seq.target;
    trace.ensemble = seq.ensemble;
    trace.tau_us = seq.durations_us;
    trace.pop_lower.resize(n_tau);
    trace.pop_upper.resize(n_tau);
    trace.pop_leak.resize(n_tau);
    trace.polarization.resize(n_tau);
    trace.stderr_pol.resize(n_tau);
    const auto R = static_cast<std::size_t>(seq.ensemble);
    std::vector<double> scratch(R);
    for (std::size_t i = 0; i < n_tau; ++i) {
        for (std::size_t r = 0; r < R; ++r) scratch[r] = results[r].lower[i];
        const double lo = pairwise_sum(scratch.data(), R) / static_cast<double>(R);
        for (std::size_t r = 0; r < R; ++r) scratch[r] = results[r].upper[i];
        const double up = pairwise_sum(scratch.data(), R) / static_cast<double>(R);
        for (std::size_t r = 0; r < R; ++r) scratch[r] = results[r].leak[i];
        const double lk = pairwise_sum(scratch.data(), R) / static_cast<double>(R);
        trace.pop_lower[i] = lo;
        trace.pop_upper[i] = up;
        trace.pop_leak[i] = lk;
        trace.polarization[i] = (lo + up > 1e-12) ? (lo - up) / (lo + up) : 0.0;
        if (R >= 2) {
            for (std::size_t r = 0; r < R; ++r) scratch[r] = results[r].pol[i];
            const double mean = pairwise_sum(scratch.data(), R) / static_cast<double>(R);
            double ss = 0.0;
            for (std::size_t r = 0; r < R; ++r) ss += (scratch[r] - mean) * (scratch[r] - mean);
            trace.stderr_pol[i] = std::sqrt(ss / (static_cast<double>(R) * (R - 1.0)));
        } else {
            trace.stderr_pol[i] = 0.0;
        }
    }
    return trace;
}

DecayTrace simulate_sequence(const LevelStructure& levels, const SequenceSpec& seq,
                             const std::vector<LevelNoiseChannel>& noise) {
    if (noise.empty()) return simulate_sequence(levels, seq, NoiseProvider{});
    return simulate_sequence(levels, seq,
                             [&noise](int) { return noise; });
}

RabiTrace simulate_rabi(const LevelStructure& levels, const DriveSpec& drive,
                        double duration_us, double sample_rate, double edge_sigma_ns,
                        const PropagatorOptions& opts) {
    const int d = levels.num_levels();
    drive.validate(d);
    if (!(duration_us > 0.0) || !(sample_rate > 0.0))
        throw std::invalid_argument("simulate_rabi: duration and sample rate must be positive");

    const double sigma = edge_sigma_ns * 1e-3;
    const double ramp = 3.0 * sigma;
    LindbladProblem prob;
    prob.detunings_mhz.resize(d);
    for (int j = 0; j < d; ++j)
        prob.detunings_mhz[j] = levels.level_freqs_mhz[j] - j * drive.frequency_mhz;
    prob.couplings_mhz.resize(d - 1);
    for (int j = 1; j < d; ++j)
        prob.couplings_mhz[j - 1] = 0.5 * levels.drive_ratios[j - 1] * drive.amplitude_mhz;
    prob.envelope = DriveEnvelope{sigma, ramp, 1e30};

    const Eigen::MatrixXcd u_prep = prep_unitary(d, drive.target, false);
    Eigen::MatrixXcd rho0 = Eigen::MatrixXcd::Zero(d, d);
    rho0(0, 0) = 1.0;
    rho0 = u_prep * rho0 * u_prep.adjoint();

    Rk45Lindblad p(prob, d, opts);
    p.set_state_rotating(from_matrix(rho0), 0.0);

    const auto n = static_cast<std::size_t>(std::llround(duration_us * sample_rate));
    RabiTrace out;
    out.t_us.resize(n);
    out.populations.resize(n);
    std::vector<double> probe(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double t = ramp + static_cast<double>(i) / sample_rate;
        p.advance_to(t);
        const std::vector<cd> y = p.state_rotating();
        out.t_us[i] = t;
        out.populations[i].resize(d);
        for (int m = 0; m < d; ++m) out.populations[i][m] = y[m * d + m].real();
        probe[i] = out.populations[i][drive.target - 1];
    }

    const double mean = pairwise_sum(probe.data(), n) / static_cast<double>(n);
    for (double& v : probe) v -= mean;
    const auto psd = welch_psd(probe, sample_rate);
    std::size_t kpk = 1;
    for (std::size_t k = 2; k + 1 < psd.size(); ++k) {
        if (psd[k].second > psd[kpk].second) kpk = k;
    }
    double delta = 0.0;
    if (kpk >= 1 && kpk + 1 < psd.size() && psd[kpk].second > 0.0) {
        const double lm = std::log(std::max(psd[kpk - 1].second, 1e-300));
        const double l0 = std::log(std::max(psd[kpk].second, 1e-300));
        const double lp = std::log(std::max(psd[kpk + 1].second, 1e-300));
        const double den = lm - 2.0 * l0 + lp;
        if (std::abs(den) > 1e-12) delta = 0.5 * (lm - lp) / den;
    }
    const double bin = sample_rate / static_cast<double>(n);
    out.dominant_freq_mhz = (static_cast<double>(kpk) + delta) * bin;
    return out;
}

}  // namespace qns
