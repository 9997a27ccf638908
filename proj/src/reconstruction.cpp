#include "qns/reconstruction.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace qns {

namespace {

constexpr double kTwoPi = 6.28318530717958647692;

struct FitData {
    const std::vector<double>& tau;
    const std::vector<double>& y;
    std::vector<double> sigma;
};

double model(double tau, const Eigen::Vector3d& p) {
    return p(0) * std::exp(-p(1) * tau) + p(2);
}

}  // namespace

RelaxationFit fit_exponential(const std::vector<double>& tau, const std::vector<double>& y,
                              const std::vector<double>& sigma_in) {
    const std::size_t n = tau.size();
    if (n < 6) throw std::invalid_argument("fit requires at least 6 tau points");
    if (y.size() != n || (!sigma_in.empty() && sigma_in.size() != n))
        throw std::invalid_argument("fit input size mismatch");

    // With no usable uncertainties fall back to a uniform-weight fit and scale
    // parameter errors by the residual variance afterwards.
    std::vector<double> sigma = sigma_in;
    bool absolute_weights = true;
    double med = 0.0;
    if (!sigma.empty()) {
        std::vector<double> s = sigma;
        std::nth_element(s.begin(), s.begin() + s.size() / 2, s.end());
        med = s[s.size() / 2];
    }
    if (sigma.empty() || med < 1e-9) {
        sigma.assign(n, 1.0);
        absolute_weights = false;
    } else {
        for (double& s : sigma) s = std::max(s, 1e-4 * med);
    }

    // Initial guesses: offset from the tail, rate from the log-slope of the
    // first half, amplitude from the first point.
    const std::size_t n_tail = std::max<std::size_t>(2, n / 5);
    double tail = 0.0;
    for (std::size_t i = n - n_tail; i < n; ++i) tail += y[i];
    tail /= static_cast<double>(n_tail);
    double rate = 0.0;
    {
        const std::size_t half = std::max<std::size_t>(2, n / 2);
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        std::size_t m = 0;
        for (std::size_t i = 0; i < half; ++i) {
            const double v = y[i] - tail;
            if (v <= 1e-12) continue;
            const double ly = std::log(v);
            sx += tau[i];
            sy += ly;
            sxx += tau[i] * tau[i];
            sxy += tau[i] * ly;
            ++m;
        }
        const double den = static_cast<double>(m) * sxx - sx * sx;
        if (m >= 2 && std::abs(den) > 1e-30) rate = -(static_cast<double>(m) * sxy - sx * sy) / den;
        if (!(rate > 0.0)) rate = 1.0 / std::max(tau.back(), 1e-6);
    }
    Eigen::Vector3d p(y.front() - tail, rate, tail);

    // Variable projection: for fixed rate the model is linear in
    // (amplitude, offset), so profile those out exactly and search the rate
    // on a log grid plus golden-section refinement. The LM polish below then
    // starts inside the right basin and converges in a handful of steps.
    {
        auto profiled = [&](double g, double* amp_out, double* off_out) {
            double sww = 0, swe = 0, swee = 0, swy = 0, swey = 0;
            for (std::size_t i = 0; i < n; ++i) {
                const double w = 1.0 / (sigma[i] * sigma[i]);
                const double e = std::exp(-g * tau[i]);
                sww += w;
                swe += w * e;
                swee += w * e * e;
                swy += w * y[i];
                swey += w * e * y[i];
            }
            const double den = swee * sww - swe * swe;
            double a = 0.0, c = 0.0;
            if (std::abs(den) > 1e-300) {
                a = (swey * sww - swe * swy) / den;
                c = (swy - a * swe) / sww;
            } else {
                c = swy / sww;
            }
            if (amp_out) *amp_out = a;
            if (off_out) *off_out = c;
            double cost = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                const double ri = (y[i] - (a * std::exp(-g * tau[i]) + c)) / sigma[i];
                cost += ri * ri;
            }
            return cost;
        };
        const double g_lo = 1e-5 / tau.back(), g_hi = 1e3 / tau.back();
        double best_g = rate, best_cost = profiled(rate, nullptr, nullptr);
        const int n_grid = 120;
        for (int k = 0; k <= n_grid; ++k) {
            const double g = g_lo * std::pow(g_hi / g_lo, static_cast<double>(k) / n_grid);
            const double c = profiled(g, nullptr, nullptr);
            if (c < best_cost) {
                best_cost = c;
                best_g = g;
            }
        }
        double lo = best_g / 1.2, hi = best_g * 1.2;
        const double gr = 0.61803398874989484;
        double x1 = hi - gr * (hi - lo), x2 = lo + gr * (hi - lo);
        double f1 = profiled(x1, nullptr, nullptr), f2 = profiled(x2, nullptr, nullptr);
        for (int it = 0; it < 80; ++it) {
            if (f1 < f2) {
                hi = x2;
                x2 = x1;
                f2 = f1;
                x1 = hi - gr * (hi - lo);
                f1 = profiled(x1, nullptr, nullptr);
            } else {
                lo = x1;
                x1 = x2;
                f1 = f2;
                x2 = lo + gr * (hi - lo);
                f2 = profiled(x2, nullptr, nullptr);
            }
        }
        double amp = 0.0, off = 0.0;
        const double g_star = 0.5 * (lo + hi);
        profiled(g_star, &amp, &off);
        p = Eigen::Vector3d(amp, g_star, off);
    }

    auto cost_and_jac = [&](const Eigen::Vector3d& par, Eigen::VectorXd& r, Eigen::MatrixXd& j) {
        double c = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double e = std::exp(-par(1) * tau[i]);
            const double ri = (y[i] - (par(0) * e + par(2))) / sigma[i];
            r(static_cast<Eigen::Index>(i)) = ri;
            j(static_cast<Eigen::Index>(i), 0) = e / sigma[i];
            j(static_cast<Eigen::Index>(i), 1) = -par(0) * tau[i] * e / sigma[i];
            j(static_cast<Eigen::Index>(i), 2) = 1.0 / sigma[i];
            c += ri * ri;
        }
        return c;
    };

    Eigen::VectorXd r(static_cast<Eigen::Index>(n));
    Eigen::MatrixXd j(static_cast<Eigen::Index>(n), 3);
    double cost = cost_and_jac(p, r, j);
    double mu = 1e-3;
    bool converged = false;
    constexpr double xtol = 1e-12;
    constexpr double ftol = 1e-13;
    for (int it = 0; it < 200 && !converged; ++it) {
        const Eigen::Matrix3d jtj = j.transpose() * j;
        const Eigen::Vector3d g = j.transpose() * r;
        Eigen::Matrix3d a = jtj;
        a.diagonal() += mu * jtj.diagonal().cwiseMax(1e-12);
        const Eigen::Vector3d step = a.ldlt().solve(g);
        if (step.norm() <= xtol * (p.norm() + xtol)) {
            converged = true;
            break;
        }
        const Eigen::Vector3d trial = p + step;
        Eigen::VectorXd rt(static_cast<Eigen::Index>(n));
        Eigen::MatrixXd jt(static_cast<Eigen::Index>(n), 3);
        const double trial_cost = cost_and_jac(trial, rt, jt);
        if (trial_cost <= cost) {
            const double rel = (cost - trial_cost) / std::max(cost, 1e-300);
            p = trial;
            r.swap(rt);
            j.swap(jt);
            cost = trial_cost;
            mu = std::max(mu * 0.3, 1e-12);
            if (rel <= ftol) converged = true;
        } else {
            mu = std::min(mu * 4.0, 1e16);
        }
    }
    if (!converged) {
        throw std::runtime_error("exponential fit did not converge after 200 iterations, residual norm " +
                                 std::to_string(std::sqrt(cost)));
    }

    RelaxationFit out;
    out.amplitude = p(0);
    out.gamma_1rho = p(1);
    out.offset = p(2);
    out.sz_eq = p(2);
    out.converged = true;
    const double dof = static_cast<double>(n) - 3.0;
    out.chi2_reduced = dof > 0 ? cost / dof : 0.0;
    Eigen::Matrix3d cov = (j.transpose() * j).inverse();
    if (!absolute_weights && dof > 0) cov *= cost / dof;
    out.amplitude_err = std::sqrt(std::max(0.0, cov(0, 0)));
    out.gamma_err = std::sqrt(std::max(0.0, cov(1, 1)));
    out.sz_eq_err = std::sqrt(std::max(0.0, cov(2, 2)));
    out.rate_unresolved = out.gamma_1rho < 0.1 / tau.back();
    out.residuals.resize(n);
    for (std::size_t i = 0; i < n; ++i) out.residuals[i] = r(static_cast<Eigen::Index>(i));
    return out;
}

RelaxationFit fit_decay(const DecayTrace& trace) {
    return fit_exponential(trace.tau_us, trace.polarization, trace.stderr_pol);
}

TransverseEstimate extract_transverse_psd(const RelaxationFit& fit_pres,
                                          const RelaxationFit& fit_abs) {
    TransverseEstimate e;
    const double diff = fit_pres.gamma_1rho - fit_abs.gamma_1rho;
    const double w = 0.5 * (1.0 + fit_pres.sz_eq);
    e.value = w * diff;
    const double diff_var = fit_pres.gamma_err * fit_pres.gamma_err +
                            fit_abs.gamma_err * fit_abs.gamma_err;
    e.sigma = std::sqrt(w * w * diff_var +
                        0.25 * diff * diff * fit_pres.sz_eq_err * fit_pres.sz_eq_err);
    const double sd = std::sqrt(diff_var);
    e.negative_warning = diff < -2.0 * sd && sd > 0.0;
    return e;
}

namespace {

// Small-drive two-level transduction: B_perp = (B^(j-1) - B^(j))/2, so the
// flux coefficient is pi * d omega^(j-1,j)/dPhi in rad/us per Phi_0.
double naive_flux_coeff(int target, const LevelStructure& levels) {
    const double s_lo = target >= 2 ? levels.flux_sens_mhz_per_phi0[target - 2] : 0.0;
    const double s_hi = levels.flux_sens_mhz_per_phi0[target - 1];
    return kTwoPi * 0.5 * (s_lo - s_hi);
}

double dressed_flux_coeff(const DressedFrame& f, const LevelStructure& levels) {
    double c = 0.0;
    for (std::size_t k = 0; k < f.alpha.size(); ++k) {
        c += f.alpha[k] * levels.flux_sens_mhz_per_phi0[k];
    }
    return kTwoPi * c;
}

}  // namespace

PsdEstimate make_raw_estimate(int target, const std::vector<RawRatePoint>& points,
                              const LevelStructure& levels) {
    PsdEstimate est;
    est.target = target;
    const double lam = levels.drive_ratios[target - 1];
    const double naive = naive_flux_coeff(target, levels);
    const double naive_sq = naive * naive;
    for (const auto& rp : points) {
        PsdPoint p;
        p.a_drive_mhz = rp.a_drive_mhz;
        p.omega_naive_mhz = lam * rp.a_drive_mhz;
        p.omega_corrected_mhz = p.omega_naive_mhz;
        p.s_transverse = rp.transverse.value;
        p.sigma_transverse = rp.transverse.sigma;
        p.s_lab_naive = rp.transverse.value / naive_sq;
        p.s_lab = p.s_lab_naive;
        p.sigma = rp.transverse.sigma / naive_sq;
        p.negative_warning = rp.transverse.negative_warning;
        p.rate_unresolved = rp.rate_unresolved;
        est.points.push_back(p);
    }
    return est;
}

PsdEstimate correct_estimate(const PsdEstimate& raw, const std::vector<DressedFrame>& frames,
                             const LevelStructure& levels) {
    if (raw.freq_shift_applied && raw.amplitude_applied) return raw;
    if (frames.size() != raw.points.size())
        throw std::invalid_argument("correct_estimate: one dressed frame per point required");
    PsdEstimate out = raw;
    const double naive = std::abs(naive_flux_coeff(raw.target, levels));
    for (std::size_t i = 0; i < out.points.size(); ++i) {
        PsdPoint& p = out.points[i];
        const DressedFrame& f = frames[i];
        p.omega_corrected_mhz = f.rabi_mhz;
        const double coeff = dressed_flux_coeff(f, levels);
        const double coeff_sq = coeff * coeff;
        p.ill_conditioned = std::abs(coeff) < 1e-3 * naive;
        if (!p.ill_conditioned) {
            p.s_lab = p.s_transverse / coeff_sq;
            p.sigma = p.sigma_transverse / coeff_sq;
        }
    }
    out.freq_shift_applied = true;
    out.amplitude_applied = true;
    return out;
}

std::pair<SourceComponent, SourceComponent> discriminate_sources(
    const PsdEstimate& s01, const PsdEstimate& s12, double chi_ratio_sq) {
    if (std::abs(chi_ratio_sq - 1.0) < 0.05)
        throw std::invalid_argument("discriminate_sources: chi ratio too close to 1");
    if (s01.points.empty() || s12.points.empty())
        throw std::invalid_argument("discriminate_sources: empty estimate");

    const PsdEstimate& coarse = s01.points.size() <= s12.points.size() ? s01 : s12;
    const PsdEstimate& fine = s01.points.size() <= s12.points.size() ? s12 : s01;
    const bool coarse_is_01 = &coarse == &s01;

    auto interp = [](const PsdEstimate& e, double f, double& val, double& sig) {
        const auto& pts = e.points;
        if (f <= pts.front().omega_corrected_mhz) {
            val = pts.front().s_transverse;
            sig = pts.front().sigma_transverse;
            return;
        }
        if (f >= pts.back().omega_corrected_mhz) {
            val = pts.back().s_transverse;
            sig = pts.back().sigma_transverse;
            return;
        }
        for (std::size_t i = 1; i < pts.size(); ++i) {
            if (f <= pts[i].omega_corrected_mhz) {
                const double w = (f - pts[i - 1].omega_corrected_mhz) /
                                 (pts[i].omega_corrected_mhz - pts[i - 1].omega_corrected_mhz);
                val = pts[i - 1].s_transverse + w * (pts[i].s_transverse - pts[i - 1].s_transverse);
                sig = pts[i - 1].sigma_transverse +
                      w * (pts[i].sigma_transverse - pts[i - 1].sigma_transverse);
                return;
            }
        }
    };

    SourceComponent flux, photon;
    const double r = chi_ratio_sq;
    for (const auto& cp : coarse.points) {
        const double f = cp.omega_corrected_mhz;
        double ov = 0.0, os = 0.0;
        interp(fine, f, ov, os);
        const double v01 = coarse_is_01 ? cp.s_transverse : ov;
        const double e01 = coarse_is_01 ? cp.sigma_transverse : os;
        const double v12 = coarse_is_01 ? ov : cp.s_transverse;
        const double e12 = coarse_is_01 ? os : cp.sigma_transverse;

        double sn = (v12 - v01) / (r - 1.0);
        double sf = v01 - sn;
        const double sn_sig = std::sqrt(e12 * e12 + e01 * e01) / std::abs(r - 1.0);
        const double sf_sig = std::sqrt(r * r * e01 * e01 + e12 * e12) / std::abs(r - 1.0);
        bool sn_clip = false, sf_clip = false;
        if (sn < 0.0) {
            sn_clip = true;
            sn = 0.0;
            sf = v01;
        }
        if (sf < 0.0) {
            sf_clip = true;
            sf = 0.0;
        }
        flux.freq_mhz.push_back(f);
        flux.value.push_back(sf);
        flux.sigma.push_back(sf_sig);
        flux.clipped.push_back(sf_clip);
        photon.freq_mhz.push_back(f);
        photon.value.push_back(sn);
        photon.sigma.push_back(sn_sig);
        photon.clipped.push_back(sn_clip);
    }
    return {flux, photon};
}

}  // namespace qns
