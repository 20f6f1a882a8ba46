#pragma once

#include <cstdint>

#include "tdsr/rng.hpp"
#include "tdsr/tensor.hpp"

namespace tdsr {

Tensor gaussian_blur(const Tensor& img, double sigma);
// Catmull-Rom bicubic resampling (a = -0.5), edge-clamped taps.
Tensor resize_bicubic(const Tensor& img, int out_h, int out_w);
Tensor median3x3(const Tensor& img);
// Uniform quantization to `levels` values over [0,1] (input clamped first).
Tensor quantize(const Tensor& img, int levels);

struct DegradationParams {
    double blur_sigma_min = 1.2;
    double blur_sigma_max = 2.0;
    int down_factor = 4;
    double noise_sigma_min = 0.02;
    double noise_sigma_max = 0.06;
    int quant_levels = 256;

    void validate() const;
};

// Intermediate stages, for measurement hooks.
struct DegradeTrace {
    double blur_sigma = 0.0;
    double noise_sigma = 0.0;
    Tensor blurred;
    Tensor lr_noisy;  // after noise, before quantization
};

// Blur -> bicubic downsample by down_factor -> additive Gaussian noise ->
// quantize -> bicubic upsample back to the HR size. Deterministic per seed.
Tensor degrade(const Tensor& hr, const DegradationParams& params, uint64_t seed,
               DegradeTrace* trace = nullptr);

// Light restoration pass: 3x3 median, 2x bicubic down, bicubic back up.
Tensor preclean(const Tensor& lr);

}  // namespace tdsr
