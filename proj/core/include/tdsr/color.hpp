#pragma once

#include <vector>

#include "tdsr/tensor.hpp"

namespace tdsr {

struct ChannelStats {
    std::vector<double> mean;
    std::vector<double> stddev;
};

ChannelStats channel_stats(const Tensor& img);

// Per-channel mean/std matching of y_hat onto x (sigma epsilon-floored at
// 1e-6; `sigma_floored` reports whether the floor engaged). The _unclamped
// variant is the pre-clamp result; the plain one clamps last.
Tensor pixel_color_correct_unclamped(const Tensor& y_hat, const Tensor& x,
                                     bool* sigma_floored = nullptr);
Tensor pixel_color_correct(const Tensor& y_hat, const Tensor& x, bool* sigma_floored = nullptr);

// 3x3 lowpass kernel of the a-trous decomposition; entries sum to 1.
const double* wavelet_kernel();  // row-major 9 values

struct WaveletPyramid {
    std::vector<Tensor> high;  // H^1 .. H^l
    Tensor low;                // L^l
};

// L^i = dilated 3x3 convolution of L^{i-1} (dilation 2^(i-1), reflect
// padding); H^i = L^{i-1} - L^i. The telescoping sum reconstructs the input
// exactly.
WaveletPyramid wavelet_decompose(const Tensor& img, int levels);
Tensor wavelet_reconstruct(const WaveletPyramid& pyr);

// y = H^l of y_hat + L^l of x.
Tensor wavelet_color_correct_unclamped(const Tensor& y_hat, const Tensor& x, int levels);
Tensor wavelet_color_correct(const Tensor& y_hat, const Tensor& x, int levels);

}  // namespace tdsr
