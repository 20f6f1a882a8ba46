#include "tdsr/degradation.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace tdsr {

namespace {

int reflect_index(int i, int n) {
    if (i < 0) return -i;
    if (i >= n) return 2 * n - 2 - i;
    return i;
}

double cubic_weight(double t) {
    constexpr double a = -0.5;
    const double at = std::fabs(t);
    if (at <= 1.0) return ((a + 2.0) * at - (a + 3.0)) * at * at + 1.0;
    if (at < 2.0) return (((at - 5.0) * at + 8.0) * at - 4.0) * a;
    return 0.0;
}

}  // namespace

Tensor gaussian_blur(const Tensor& img, double sigma) {
    if (sigma <= 0.0) return img;
    const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
    std::vector<double> k(2 * radius + 1);
    double sum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        k[i + radius] = std::exp(-(i * i) / (2.0 * sigma * sigma));
        sum += k[i + radius];
    }
    for (double& v : k) v /= sum;

    Tensor tmp = Tensor::zeros_like(img);
    for (int c = 0; c < img.c; ++c)
        for (int y = 0; y < img.h; ++y)
            for (int x = 0; x < img.w; ++x) {
                double acc = 0.0;
                for (int i = -radius; i <= radius; ++i)
                    acc += k[i + radius] * img.at(y, reflect_index(x + i, img.w), c);
                tmp.at(y, x, c) = acc;
            }
    Tensor out = Tensor::zeros_like(img);
    for (int c = 0; c < img.c; ++c)
        for (int y = 0; y < img.h; ++y)
            for (int x = 0; x < img.w; ++x) {
                double acc = 0.0;
                for (int i = -radius; i <= radius; ++i)
                    acc += k[i + radius] * tmp.at(reflect_index(y + i, img.h), x, c);
                out.at(y, x, c) = acc;
            }
    return out;
}

Tensor resize_bicubic(const Tensor& img, int out_h, int out_w) {
    if (out_h < 1 || out_w < 1) throw std::invalid_argument("resize_bicubic: bad target size");
    const double sy = static_cast<double>(img.h) / out_h;
    const double sx = static_cast<double>(img.w) / out_w;
    Tensor out(out_h, out_w, img.c);
    for (int y = 0; y < out_h; ++y) {
        const double fy = (y + 0.5) * sy - 0.5;
        const int iy = static_cast<int>(std::floor(fy));
        double wy[4];
        for (int i = 0; i < 4; ++i) wy[i] = cubic_weight(fy - (iy - 1 + i));
        for (int x = 0; x < out_w; ++x) {
            const double fx = (x + 0.5) * sx - 0.5;
            const int ix = static_cast<int>(std::floor(fx));
            double wx[4];
            for (int i = 0; i < 4; ++i) wx[i] = cubic_weight(fx - (ix - 1 + i));
            for (int c = 0; c < img.c; ++c) {
                double acc = 0.0;
                for (int i = 0; i < 4; ++i) {
                    const int py = std::clamp(iy - 1 + i, 0, img.h - 1);
                    double row = 0.0;
                    for (int j = 0; j < 4; ++j) {
                        const int px = std::clamp(ix - 1 + j, 0, img.w - 1);
                        row += wx[j] * img.at(py, px, c);
                    }
                    acc += wy[i] * row;
                }
                out.at(y, x, c) = acc;
            }
        }
    }
    return out;
}

Tensor median3x3(const Tensor& img) {
    Tensor out = Tensor::zeros_like(img);
    double window[9];
    for (int c = 0; c < img.c; ++c)
        for (int y = 0; y < img.h; ++y)
            for (int x = 0; x < img.w; ++x) {
                int n = 0;
                for (int dy = -1; dy <= 1; ++dy)
                    for (int dx = -1; dx <= 1; ++dx)
                        window[n++] = img.at(reflect_index(y + dy, img.h),
                                             reflect_index(x + dx, img.w), c);
                std::nth_element(window, window + 4, window + 9);
                out.at(y, x, c) = window[4];
            }
    return out;
}

Tensor quantize(const Tensor& img, int levels) {
    if (levels < 2) throw std::invalid_argument("quantize: levels must be >= 2");
    const double steps = levels - 1;
    Tensor out = Tensor::zeros_like(img);
    for (size_t i = 0; i < img.v.size(); ++i)
        out.v[i] = std::round(std::clamp(img.v[i], 0.0, 1.0) * steps) / steps;
    return out;
}

void DegradationParams::validate() const {
    if (blur_sigma_min < 0.0 || blur_sigma_max < blur_sigma_min)
        throw std::invalid_argument("degradation: bad blur sigma range");
    if (noise_sigma_min < 0.0 || noise_sigma_max < noise_sigma_min)
        throw std::invalid_argument("degradation: bad noise sigma range");
    if (down_factor < 1) throw std::invalid_argument("degradation: down factor must be >= 1");
    if (quant_levels < 2) throw std::invalid_argument("degradation: quant levels must be >= 2");
}

Tensor degrade(const Tensor& hr, const DegradationParams& params, uint64_t seed,
               DegradeTrace* trace) {
    params.validate();
    if (hr.h % params.down_factor != 0 || hr.w % params.down_factor != 0)
        throw std::invalid_argument("degrade: dims must be divisible by the down factor");
    Rng rng(seed);
    const double blur_sigma = rng.uniform(params.blur_sigma_min, params.blur_sigma_max);
    const double noise_sigma = rng.uniform(params.noise_sigma_min, params.noise_sigma_max);

    Tensor blurred = gaussian_blur(hr, blur_sigma);
    Tensor lr = resize_bicubic(blurred, hr.h / params.down_factor, hr.w / params.down_factor);
    for (double& v : lr.v) v += noise_sigma * rng.normal();
    if (trace) {
        trace->blur_sigma = blur_sigma;
        trace->noise_sigma = noise_sigma;
        trace->blurred = blurred;
        trace->lr_noisy = lr;
    }
    Tensor q = quantize(lr, params.quant_levels);
    return clamp01(resize_bicubic(q, hr.h, hr.w));
}

Tensor preclean(const Tensor& lr) {
    if (lr.h < 2 || lr.w < 2) throw std::invalid_argument("preclean: image too small");
    Tensor m = median3x3(lr);
    Tensor down = resize_bicubic(m, std::max(1, lr.h / 2), std::max(1, lr.w / 2));
    return clamp01(resize_bicubic(down, lr.h, lr.w));
}

}  // namespace tdsr
