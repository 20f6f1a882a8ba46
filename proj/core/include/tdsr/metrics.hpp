#pragma once

#include "tdsr/tensor.hpp"

namespace tdsr {

// Reported when the MSE is exactly zero.
inline constexpr double kPsnrSentinelDb = 100.0;

// BT.601 luma: 0.299 R + 0.587 G + 0.114 B. Single-channel input passes through.
Tensor luminance_bt601(const Tensor& img);

// PSNR in dB over the luminance channel, signal range [0,1].
double psnr(const Tensor& a, const Tensor& b);

// SSIM over the luminance channel: 11x11 Gaussian window (sigma 1.5),
// K1 = 0.01, K2 = 0.03, mean over fully interior windows.
double ssim(const Tensor& a, const Tensor& b);

}  // namespace tdsr
