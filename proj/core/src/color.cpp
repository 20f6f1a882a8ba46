#include "tdsr/color.hpp"

#include <cmath>
#include <stdexcept>

namespace tdsr {

namespace {
constexpr double kSigmaFloor = 1e-6;

int reflect_index(int i, int n) {
    if (i < 0) return -i;
    if (i >= n) return 2 * n - 2 - i;
    return i;
}
}  // namespace

ChannelStats channel_stats(const Tensor& img) {
    ChannelStats s;
    s.mean.resize(img.c);
    s.stddev.resize(img.c);
    const double inv_n = 1.0 / (static_cast<double>(img.h) * img.w);
    for (int c = 0; c < img.c; ++c) {
        const double* p = img.plane(c);
        double m = 0.0;
        for (int i = 0; i < img.h * img.w; ++i) m += p[i];
        m *= inv_n;
        double var = 0.0;
        for (int i = 0; i < img.h * img.w; ++i) {
            const double d = p[i] - m;
            var += d * d;
        }
        s.mean[c] = m;
        s.stddev[c] = std::sqrt(var * inv_n);
    }
    return s;
}

Tensor pixel_color_correct_unclamped(const Tensor& y_hat, const Tensor& x, bool* sigma_floored) {
    require_same_shape(y_hat, x, "pixel_color_correct");
    const ChannelStats sy = channel_stats(y_hat);
    const ChannelStats sx = channel_stats(x);
    bool floored = false;
    Tensor out = Tensor::zeros_like(y_hat);
    for (int c = 0; c < y_hat.c; ++c) {
        double sigma = sy.stddev[c];
        if (sigma < kSigmaFloor) {
            sigma = kSigmaFloor;
            floored = true;
        }
        const double gain = sx.stddev[c] / sigma;
        const double* src = y_hat.plane(c);
        double* dst = out.plane(c);
        for (int i = 0; i < y_hat.h * y_hat.w; ++i)
            dst[i] = (src[i] - sy.mean[c]) * gain + sx.mean[c];
    }
    if (sigma_floored) *sigma_floored = floored;
    return out;
}

Tensor pixel_color_correct(const Tensor& y_hat, const Tensor& x, bool* sigma_floored) {
    return clamp01(pixel_color_correct_unclamped(y_hat, x, sigma_floored));
}

const double* wavelet_kernel() {
    static const double k[9] = {1.0 / 16, 1.0 / 8, 1.0 / 16, 1.0 / 8, 1.0 / 4,
                                1.0 / 8,  1.0 / 16, 1.0 / 8, 1.0 / 16};
    return k;
}

namespace {

Tensor dilated_lowpass(const Tensor& img, int dilation) {
    const double* k = wavelet_kernel();
    Tensor out = Tensor::zeros_like(img);
    for (int c = 0; c < img.c; ++c) {
        const double* src = img.plane(c);
        double* dst = out.plane(c);
        for (int y = 0; y < img.h; ++y) {
            const int ym = reflect_index(y - dilation, img.h);
            const int yp = reflect_index(y + dilation, img.h);
            const double* r0 = src + static_cast<size_t>(ym) * img.w;
            const double* r1 = src + static_cast<size_t>(y) * img.w;
            const double* r2 = src + static_cast<size_t>(yp) * img.w;
            for (int x = 0; x < img.w; ++x) {
                const int xm = reflect_index(x - dilation, img.w);
                const int xp = reflect_index(x + dilation, img.w);
                dst[static_cast<size_t>(y) * img.w + x] =
                    k[0] * r0[xm] + k[1] * r0[x] + k[2] * r0[xp] +
                    k[3] * r1[xm] + k[4] * r1[x] + k[5] * r1[xp] +
                    k[6] * r2[xm] + k[7] * r2[x] + k[8] * r2[xp];
            }
        }
    }
    return out;
}

}  // namespace

WaveletPyramid wavelet_decompose(const Tensor& img, int levels) {
    if (levels < 1) throw std::invalid_argument("wavelet_decompose: levels must be >= 1");
    const int max_dilation = 1 << (levels - 1);
    if (max_dilation > std::min(img.h, img.w) - 1)
        throw std::invalid_argument("wavelet_decompose: image too small for level " +
                                    std::to_string(levels));
    WaveletPyramid pyr;
    Tensor low = img;
    for (int i = 1; i <= levels; ++i) {
        Tensor next = dilated_lowpass(low, 1 << (i - 1));
        pyr.high.push_back(sub(low, next));
        low = std::move(next);
    }
    pyr.low = std::move(low);
    return pyr;
}

Tensor wavelet_reconstruct(const WaveletPyramid& pyr) {
    Tensor out = pyr.low;
    for (const Tensor& h : pyr.high) out = add(out, h);
    return out;
}

Tensor wavelet_color_correct_unclamped(const Tensor& y_hat, const Tensor& x, int levels) {
    require_same_shape(y_hat, x, "wavelet_color_correct");
    const WaveletPyramid py = wavelet_decompose(y_hat, levels);
    const WaveletPyramid px = wavelet_decompose(x, levels);
    Tensor out = px.low;  // low band of the reference replaces that of y_hat
    for (const Tensor& h : py.high) out = add(out, h);
    return out;
}

Tensor wavelet_color_correct(const Tensor& y_hat, const Tensor& x, int levels) {
    return clamp01(wavelet_color_correct_unclamped(y_hat, x, levels));
}

}  // namespace tdsr
