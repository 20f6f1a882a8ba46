#include "tdsr/metrics.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace tdsr {

Tensor luminance_bt601(const Tensor& img) {
    if (img.c == 1) return img;
    if (img.c != 3) throw std::invalid_argument("luminance_bt601: need 1 or 3 channels");
    Tensor y(img.h, img.w, 1);
    const double* r = img.plane(0);
    const double* g = img.plane(1);
    const double* b = img.plane(2);
    for (int i = 0; i < img.h * img.w; ++i) y.v[i] = 0.299 * r[i] + 0.587 * g[i] + 0.114 * b[i];
    return y;
}

double psnr(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "psnr");
    const Tensor ya = luminance_bt601(a);
    const Tensor yb = luminance_bt601(b);
    double mse = 0.0;
    for (size_t i = 0; i < ya.v.size(); ++i) {
        const double d = ya.v[i] - yb.v[i];
        mse += d * d;
    }
    mse /= static_cast<double>(ya.v.size());
    if (mse == 0.0) return kPsnrSentinelDb;
    return 10.0 * std::log10(1.0 / mse);
}

namespace {

// 1-D Gaussian window, length 11, sigma 1.5, normalized to sum 1.
const std::vector<double>& ssim_window() {
    static const std::vector<double> win = [] {
        std::vector<double> w(11);
        double sum = 0.0;
        for (int i = 0; i < 11; ++i) {
            const double d = i - 5;
            w[i] = std::exp(-d * d / (2.0 * 1.5 * 1.5));
            sum += w[i];
        }
        for (double& x : w) x /= sum;
        return w;
    }();
    return win;
}

// Separable weighted filter, valid region only: out is (h-10) x (w-10).
Tensor filter_valid(const Tensor& img) {
    const auto& win = ssim_window();
    Tensor tmp(img.h, img.w - 10, 1);
    for (int y = 0; y < img.h; ++y)
        for (int x = 0; x < img.w - 10; ++x) {
            double acc = 0.0;
            for (int k = 0; k < 11; ++k) acc += win[k] * img.at(y, x + k, 0);
            tmp.at(y, x, 0) = acc;
        }
    Tensor out(img.h - 10, img.w - 10, 1);
    for (int y = 0; y < img.h - 10; ++y)
        for (int x = 0; x < img.w - 10; ++x) {
            double acc = 0.0;
            for (int k = 0; k < 11; ++k) acc += win[k] * tmp.at(y + k, x, 0);
            out.at(y, x, 0) = acc;
        }
    return out;
}

}  // namespace

double ssim(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "ssim");
    if (a.h < 11 || a.w < 11) throw std::invalid_argument("ssim: image smaller than the window");
    const Tensor ya = luminance_bt601(a);
    const Tensor yb = luminance_bt601(b);

    Tensor ya2 = Tensor::zeros_like(ya), yb2 = Tensor::zeros_like(yb), yab = Tensor::zeros_like(ya);
    for (size_t i = 0; i < ya.v.size(); ++i) {
        ya2.v[i] = ya.v[i] * ya.v[i];
        yb2.v[i] = yb.v[i] * yb.v[i];
        yab.v[i] = ya.v[i] * yb.v[i];
    }

    const Tensor mu_a = filter_valid(ya);
    const Tensor mu_b = filter_valid(yb);
    const Tensor m_a2 = filter_valid(ya2);
    const Tensor m_b2 = filter_valid(yb2);
    const Tensor m_ab = filter_valid(yab);

    constexpr double c1 = 0.01 * 0.01;
    constexpr double c2 = 0.03 * 0.03;
    double acc = 0.0;
    for (size_t i = 0; i < mu_a.v.size(); ++i) {
        const double ma = mu_a.v[i], mb = mu_b.v[i];
        const double va = m_a2.v[i] - ma * ma;
        const double vb = m_b2.v[i] - mb * mb;
        const double cov = m_ab.v[i] - ma * mb;
        acc += ((2.0 * ma * mb + c1) * (2.0 * cov + c2)) /
               ((ma * ma + mb * mb + c1) * (va + vb + c2));
    }
    return acc / static_cast<double>(mu_a.v.size());
}

}  // namespace tdsr
