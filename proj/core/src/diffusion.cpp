#include "tdsr/diffusion.hpp"

#include <cmath>
#include <stdexcept>

namespace tdsr {

double NoiseSchedule::alpha_bar_at(int t) const {
    if (t < 0 || t > T) throw std::out_of_range("alpha_bar_at: t out of range");
    return t == 0 ? 1.0 : alpha_bar[t - 1];
}

NoiseSchedule make_schedule(int T, double beta_start, double beta_end) {
    if (T < 1) throw std::invalid_argument("make_schedule: T must be >= 1");
    if (!(beta_start > 0.0) || !(beta_start <= beta_end) || !(beta_end < 1.0))
        throw std::invalid_argument("make_schedule: need 0 < beta_start <= beta_end < 1");

    NoiseSchedule s;
    s.T = T;
    s.beta.resize(T);
    s.alpha.resize(T);
    s.alpha_bar.resize(T);
    double running = 1.0;
    for (int i = 0; i < T; ++i) {
        const double frac = T == 1 ? 0.0 : static_cast<double>(i) / (T - 1);
        s.beta[i] = beta_start + (beta_end - beta_start) * frac;
        s.alpha[i] = 1.0 - s.beta[i];
        running *= s.alpha[i];
        s.alpha_bar[i] = running;
    }
    return s;
}

double snr(const NoiseSchedule& s, int t) {
    if (t < 1 || t > s.T) throw std::out_of_range("snr: t out of range");
    const double ab = s.alpha_bar[t - 1];
    return ab / (1.0 - ab);
}

Tensor q_sample(const Tensor& x0, int t, const Tensor& eps, const NoiseSchedule& s) {
    require_same_shape(x0, eps, "q_sample");
    const double ab = s.alpha_bar_at(t);
    const double a = std::sqrt(ab);
    const double b = std::sqrt(1.0 - ab);
    Tensor out = Tensor::zeros_like(x0);
    for (size_t i = 0; i < out.v.size(); ++i) out.v[i] = a * x0.v[i] + b * eps.v[i];
    return out;
}

Tensor ddpm_step(const Tensor& z_t, const Tensor& eps_pred, int t, const NoiseSchedule& s,
                 const Tensor* noise) {
    require_same_shape(z_t, eps_pred, "ddpm_step");
    if (t < 1 || t > s.T) throw std::out_of_range("ddpm_step: t out of range");
    if (t == 1 && noise != nullptr)
        throw std::invalid_argument("ddpm_step: noise must be absent at t = 1");

    const double beta = s.beta[t - 1];
    const double alpha = s.alpha[t - 1];
    const double ab_t = s.alpha_bar_at(t);
    const double ab_prev = s.alpha_bar_at(t - 1);

    const double inv_sqrt_alpha = 1.0 / std::sqrt(alpha);
    const double eps_coef = beta / std::sqrt(1.0 - ab_t);
    const double sigma = t == 1 ? 0.0 : std::sqrt((1.0 - ab_prev) / (1.0 - ab_t) * beta);

    Tensor out = Tensor::zeros_like(z_t);
    if (noise != nullptr) {
        require_same_shape(z_t, *noise, "ddpm_step(noise)");
        for (size_t i = 0; i < out.v.size(); ++i)
            out.v[i] = inv_sqrt_alpha * (z_t.v[i] - eps_coef * eps_pred.v[i]) + sigma * noise->v[i];
    } else {
        for (size_t i = 0; i < out.v.size(); ++i)
            out.v[i] = inv_sqrt_alpha * (z_t.v[i] - eps_coef * eps_pred.v[i]);
    }
    return out;
}

Tensor cfg_combine(const Tensor& eps_cond, const Tensor& eps_null, double s) {
    require_same_shape(eps_cond, eps_null, "cfg_combine");
    if (s == 0.0) return eps_cond;
    if (s == 1.0) return eps_null;
    Tensor out = Tensor::zeros_like(eps_cond);
    for (size_t i = 0; i < out.v.size(); ++i)
        out.v[i] = eps_cond.v[i] + s * (eps_null.v[i] - eps_cond.v[i]);
    return out;
}

std::vector<int> strided_timesteps(int T, int steps) {
    if (steps < 1 || steps > T) throw std::invalid_argument("strided_timesteps: need 1 <= steps <= T");
    std::vector<int> tau(steps);
    for (int i = 1; i <= steps; ++i)
        tau[i - 1] = static_cast<int>((static_cast<int64_t>(i) * T + steps - 1) / steps);
    return tau;
}

SubSchedule respace_schedule(const NoiseSchedule& s, int steps) {
    SubSchedule sub;
    sub.original_t = strided_timesteps(s.T, steps);
    if (steps == s.T) {
        sub.sched = s;  // exact: avoids re-deriving beta from alpha_bar ratios
        return sub;
    }
    sub.sched.T = steps;
    sub.sched.beta.resize(steps);
    sub.sched.alpha.resize(steps);
    sub.sched.alpha_bar.resize(steps);
    double prev_ab = 1.0;
    for (int i = 0; i < steps; ++i) {
        const double ab = s.alpha_bar[sub.original_t[i] - 1];
        sub.sched.alpha_bar[i] = ab;
        sub.sched.alpha[i] = ab / prev_ab;
        sub.sched.beta[i] = 1.0 - sub.sched.alpha[i];
        prev_ab = ab;
    }
    return sub;
}

Tensor sample(const NoisePredictor& predictor, const NoiseSchedule& s, int steps, uint64_t seed,
              int h, int w, int c) {
    const SubSchedule sub = respace_schedule(s, steps);
    Rng rng(seed);
    Tensor z = rng.normal_tensor(h, w, c);
    for (int i = steps; i >= 1; --i) {
        const Tensor eps = predictor(z, sub.original_t[i - 1]);
        if (i > 1) {
            const Tensor noise = rng.normal_tensor(h, w, c);
            z = ddpm_step(z, eps, i, sub.sched, &noise);
        } else {
            z = ddpm_step(z, eps, i, sub.sched, nullptr);
        }
    }
    return z;
}

}  // namespace tdsr
