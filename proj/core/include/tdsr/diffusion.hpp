#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "tdsr/rng.hpp"
#include "tdsr/tensor.hpp"

namespace tdsr {

// Per-timestep beta / alpha / alpha_bar tables. Timesteps are 1-based:
// beta[t-1] belongs to step t, with the convention alpha_bar(0) = 1 so that
// the final reverse step (t = 1) is deterministic.
struct NoiseSchedule {
    int T = 0;
    std::vector<double> beta;
    std::vector<double> alpha;
    std::vector<double> alpha_bar;

    double alpha_bar_at(int t) const;  // t in [0, T]; alpha_bar_at(0) == 1
};

NoiseSchedule make_schedule(int T, double beta_start, double beta_end);

// alpha_bar_t / (1 - alpha_bar_t); strictly decreasing in t.
double snr(const NoiseSchedule& s, int t);

// Forward process: sqrt(ab_t)*x0 + sqrt(1-ab_t)*eps. Accepts t = 0 (returns x0).
Tensor q_sample(const Tensor& x0, int t, const Tensor& eps, const NoiseSchedule& s);

// One reverse step z_t -> z_{t-1}: posterior mean
//   (z_t - beta_t / sqrt(1-ab_t) * eps_pred) / sqrt(alpha_t)
// plus sigma_t * noise with sigma_t^2 = (1-ab_{t-1})/(1-ab_t) * beta_t.
// noise must be absent at t = 1 (sigma_1 == 0; the step is deterministic).
Tensor ddpm_step(const Tensor& z_t, const Tensor& eps_pred, int t, const NoiseSchedule& s,
                 const Tensor* noise);

// Classifier-free guidance combination eps_cond + s*(eps_null - eps_cond).
// s == 0 returns eps_cond unchanged; s == 1 returns eps_null unchanged.
Tensor cfg_combine(const Tensor& eps_cond, const Tensor& eps_null, double s);

struct GuidanceConfig {
    double scale = 1.0;
    int conditioned_id = 1;    // embedding used for the guided ("negative") branch
    int unconditioned_id = 0;  // null embedding, the default branch
};

// Even stride over [1, T]: tau_i = ceil(i*T/steps), i = 1..steps. tau_steps == T,
// and steps == T yields the identity selection.
std::vector<int> strided_timesteps(int T, int steps);

// Schedule over a strided timestep subset, preserving alpha_bar at the selected
// steps. original_t[i-1] is the full-schedule timestep backing sub-step i.
struct SubSchedule {
    NoiseSchedule sched;
    std::vector<int> original_t;
};
SubSchedule respace_schedule(const NoiseSchedule& s, int steps);

using NoisePredictor = std::function<Tensor(const Tensor& z, int t)>;

// Full reverse loop from pure noise. The predictor is called with full-schedule
// timesteps; stepping uses the respaced schedule. Deterministic per seed.
Tensor sample(const NoisePredictor& predictor, const NoiseSchedule& s, int steps, uint64_t seed,
              int h, int w, int c);

}  // namespace tdsr
