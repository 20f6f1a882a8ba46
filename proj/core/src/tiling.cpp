#include "tdsr/tiling.hpp"

#include <cmath>
#include <stdexcept>

namespace tdsr {

namespace {

std::vector<int> axis_positions(int dim, int p, int stride) {
    std::vector<int> pos;
    int x = 0;
    while (true) {
        if (x + p >= dim) {
            pos.push_back(dim - p);
            break;
        }
        pos.push_back(x);
        x += stride;
    }
    return pos;
}

}  // namespace

PatchLayout plan_patches(int h, int w, int p, int overlap) {
    if (p < 1 || p > h || p > w)
        throw std::invalid_argument("plan_patches: need 1 <= p <= min(h, w)");
    if (overlap <= 0 || overlap >= p)
        throw std::invalid_argument("plan_patches: need 0 < overlap < p");
    PatchLayout layout;
    layout.grid_h = h;
    layout.grid_w = w;
    layout.patch = p;
    layout.overlap = overlap;
    layout.stride = p - overlap;
    const std::vector<int> ys = axis_positions(h, p, layout.stride);
    const std::vector<int> xs = axis_positions(w, p, layout.stride);
    for (int y : ys)
        for (int x : xs) layout.regions.push_back({y, x, p, p});
    return layout;
}

Tensor gaussian_weight(int p, double sigma) {
    if (!(sigma > 0.0)) throw std::invalid_argument("gaussian_weight: sigma must be > 0");
    Tensor k(p, p, 1);
    const double c = (p - 1) / 2.0;
    const double inv = 1.0 / (sigma * sigma);
    for (int y = 0; y < p; ++y)
        for (int x = 0; x < p; ++x) {
            const double dy = y - c, dx = x - c;
            k.at(y, x, 0) = std::exp(-(dy * dy + dx * dx) * inv);
        }
    return k;
}

WeightMaps make_weight_maps(const PatchLayout& layout, double sigma) {
    const Tensor kernel = gaussian_weight(layout.patch, sigma);
    WeightMaps maps;
    maps.weight_sum = Tensor(layout.grid_h, layout.grid_w, 1);
    for (const Rect& r : layout.regions)
        for (int y = 0; y < r.h; ++y)
            for (int x = 0; x < r.w; ++x)
                maps.weight_sum.at(r.y0 + y, r.x0 + x, 0) += kernel.at(y, x, 0);

    maps.normalized.reserve(layout.regions.size());
    for (const Rect& r : layout.regions) {
        Tensor n(r.h, r.w, 1);
        for (int y = 0; y < r.h; ++y)
            for (int x = 0; x < r.w; ++x)
                n.at(y, x, 0) = kernel.at(y, x, 0) / maps.weight_sum.at(r.y0 + y, r.x0 + x, 0);
        maps.normalized.push_back(std::move(n));
    }
    return maps;
}

Tensor aggregate_eps(const std::vector<Tensor>& patch_preds, const PatchLayout& layout,
                     const WeightMaps& weights) {
    if (patch_preds.size() != layout.regions.size())
        throw std::invalid_argument("aggregate_eps: prediction count mismatch");
    if (patch_preds.empty()) throw std::invalid_argument("aggregate_eps: no predictions");
    const int c = patch_preds.front().c;
    Tensor out(layout.grid_h, layout.grid_w, c);
    for (size_t n = 0; n < patch_preds.size(); ++n) {  // fixed row-major reduction order
        const Rect& r = layout.regions[n];
        const Tensor& pred = patch_preds[n];
        if (pred.h != r.h || pred.w != r.w || pred.c != c)
            throw std::invalid_argument("aggregate_eps: prediction shape mismatch");
        const Tensor& nw = weights.normalized[n];
        for (int ch = 0; ch < c; ++ch)
            for (int y = 0; y < r.h; ++y)
                for (int x = 0; x < r.w; ++x)
                    out.at(r.y0 + y, r.x0 + x, ch) += nw.at(y, x, 0) * pred.at(y, x, ch);
    }
    return out;
}

Tensor progressive_sample(const PatchPredictor& predictor, const Tensor& lr_latent_full,
                          const PatchLayout& layout, const WeightMaps& weights,
                          const NoiseSchedule& sched, int steps, uint64_t seed) {
    if (layout.grid_h != lr_latent_full.h || layout.grid_w != lr_latent_full.w)
        throw std::invalid_argument("progressive_sample: layout does not match the latent");
    const SubSchedule sub = respace_schedule(sched, steps);
    Rng rng(seed);
    Tensor z = rng.normal_tensor(lr_latent_full.h, lr_latent_full.w, lr_latent_full.c);

    std::vector<Tensor> cond_patches;
    cond_patches.reserve(layout.regions.size());
    for (const Rect& r : layout.regions)
        cond_patches.push_back(crop(lr_latent_full, r.y0, r.x0, r.h, r.w));

    std::vector<Tensor> preds(layout.regions.size());
    for (int i = steps; i >= 1; --i) {
        const int t = sub.original_t[i - 1];
        for (size_t n = 0; n < layout.regions.size(); ++n) {
            const Rect& r = layout.regions[n];
            preds[n] = predictor(crop(z, r.y0, r.x0, r.h, r.w), cond_patches[n], t);
        }
        const Tensor eps = aggregate_eps(preds, layout, weights);
        if (i > 1) {
            const Tensor noise = rng.normal_tensor(z.h, z.w, z.c);
            z = ddpm_step(z, eps, i, sub.sched, &noise);
        } else {
            z = ddpm_step(z, eps, i, sub.sched, nullptr);
        }
    }
    return z;
}

Tensor naive_tiled_sample(const PatchPredictor& predictor, const Tensor& lr_latent_full, int p,
                          const NoiseSchedule& sched, int steps, uint64_t seed) {
    if (lr_latent_full.h % p != 0 || lr_latent_full.w % p != 0)
        throw std::invalid_argument("naive_tiled_sample: dims must be divisible by p");
    Tensor out(lr_latent_full.h, lr_latent_full.w, lr_latent_full.c);
    int tile_index = 0;
    for (int ty = 0; ty < lr_latent_full.h; ty += p) {
        for (int tx = 0; tx < lr_latent_full.w; tx += p, ++tile_index) {
            const Tensor cond = crop(lr_latent_full, ty, tx, p, p);
            NoisePredictor tile_pred = [&](const Tensor& z, int t) {
                return predictor(z, cond, t);
            };
            const Tensor z0 =
                sample(tile_pred, sched, steps, mix_seed(seed, tile_index), p, p, out.c);
            for (int ch = 0; ch < out.c; ++ch)
                for (int y = 0; y < p; ++y)
                    for (int x = 0; x < p; ++x) out.at(ty + y, tx + x, ch) = z0.at(y, x, ch);
        }
    }
    return out;
}

double seam_metric_row(const Tensor& z, int row) {
    if (row < 1 || row >= z.h) throw std::invalid_argument("seam_metric_row: bad row");
    double acc = 0.0;
    for (int ch = 0; ch < z.c; ++ch)
        for (int x = 0; x < z.w; ++x) acc += std::fabs(z.at(row, x, ch) - z.at(row - 1, x, ch));
    return acc / (static_cast<double>(z.c) * z.w);
}

}  // namespace tdsr
