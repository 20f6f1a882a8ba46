#pragma once

#include <string>

#include "tdsr/tensor.hpp"

namespace tdsr {

// 8-bit RGB PNG I/O; values map linearly between [0,1] and [0,255].
Tensor load_png(const std::string& path);
void save_png(const std::string& path, const Tensor& img);

}  // namespace tdsr
