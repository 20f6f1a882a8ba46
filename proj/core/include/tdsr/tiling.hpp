#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "tdsr/diffusion.hpp"
#include "tdsr/tensor.hpp"

namespace tdsr {

struct Rect {
    int y0 = 0, x0 = 0, h = 0, w = 0;
};

// Overlapping patch cover of an h x w grid. Regions are row-major; terminal
// rows/columns are shifted inward to end flush with the boundary.
struct PatchLayout {
    int grid_h = 0, grid_w = 0;
    int patch = 0, overlap = 0, stride = 0;
    std::vector<Rect> regions;

    int count() const { return static_cast<int>(regions.size()); }
};

PatchLayout plan_patches(int h, int w, int p, int overlap);

// p x p Gaussian bump exp(-(dy^2 + dx^2) / sigma^2) about the patch centre
// (p-1)/2; value 1 at the centre, strictly positive everywhere.
Tensor gaussian_weight(int p, double sigma);

// Per-patch weight maps normalised by the full-grid weight sum; the
// normalised maps form a partition of unity over the grid.
struct WeightMaps {
    std::vector<Tensor> normalized;  // local p x p x 1 views of w_n / w_hat
    Tensor weight_sum;               // w_hat on the full grid
};

WeightMaps make_weight_maps(const PatchLayout& layout, double sigma);

// Eq.-style fusion: out = sum_n (w_n / w_hat) * pad(pred_n). Pixels covered by
// a single patch reproduce that patch's values exactly.
Tensor aggregate_eps(const std::vector<Tensor>& patch_preds, const PatchLayout& layout,
                     const WeightMaps& weights);

using PatchPredictor =
    std::function<Tensor(const Tensor& z_patch, const Tensor& cond_patch, int t)>;

// Progressive patch aggregation: per reverse timestep, predict noise on every
// patch, fuse with the normalised weight maps, then take one full-grid
// sampler step and re-split. With a single patch this is bitwise identical to
// the plain sampling loop.
Tensor progressive_sample(const PatchPredictor& predictor, const Tensor& lr_latent_full,
                          const PatchLayout& layout, const WeightMaps& weights,
                          const NoiseSchedule& sched, int steps, uint64_t seed);

// Baseline for the seam comparison: non-overlapping p x p tiles, each sampled
// by an independent full reverse loop, stitched hard. Grid dims must be
// divisible by p.
Tensor naive_tiled_sample(const PatchPredictor& predictor, const Tensor& lr_latent_full, int p,
                          const NoiseSchedule& sched, int steps, uint64_t seed);

// Mean absolute finite difference across the row boundary at y = row.
double seam_metric_row(const Tensor& z, int row);

}  // namespace tdsr
