#include "tdsr/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

namespace tdsr {

void require_same_shape(const Tensor& a, const Tensor& b, const std::string& where) {
    if (!a.same_shape(b)) {
        throw std::invalid_argument(where + ": shape mismatch (" + std::to_string(a.h) + "x" +
                                    std::to_string(a.w) + "x" + std::to_string(a.c) + " vs " +
                                    std::to_string(b.h) + "x" + std::to_string(b.w) + "x" +
                                    std::to_string(b.c) + ")");
    }
}

bool all_finite(const Tensor& t) {
    for (double x : t.v)
        if (!std::isfinite(x)) return false;
    return true;
}

bool bitwise_equal(const Tensor& a, const Tensor& b) {
    if (!a.same_shape(b)) return false;
    return std::memcmp(a.v.data(), b.v.data(), a.v.size() * sizeof(double)) == 0;
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "max_abs_diff");
    double m = 0.0;
    for (size_t i = 0; i < a.v.size(); ++i) m = std::max(m, std::fabs(a.v[i] - b.v[i]));
    return m;
}

Tensor add(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "add");
    Tensor r = a;
    for (size_t i = 0; i < r.v.size(); ++i) r.v[i] += b.v[i];
    return r;
}

Tensor sub(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "sub");
    Tensor r = a;
    for (size_t i = 0; i < r.v.size(); ++i) r.v[i] -= b.v[i];
    return r;
}

Tensor scale(const Tensor& a, double s) {
    Tensor r = a;
    for (double& x : r.v) x *= s;
    return r;
}

Tensor axpy(const Tensor& a, double s, const Tensor& b) {
    require_same_shape(a, b, "axpy");
    Tensor r = a;
    for (size_t i = 0; i < r.v.size(); ++i) r.v[i] += s * b.v[i];
    return r;
}

Tensor clamp01(const Tensor& a) {
    Tensor r = a;
    for (double& x : r.v) x = std::clamp(x, 0.0, 1.0);
    return r;
}

Tensor crop(const Tensor& src, int y0, int x0, int ph, int pw) {
    if (y0 < 0 || x0 < 0 || y0 + ph > src.h || x0 + pw > src.w)
        throw std::invalid_argument("crop: region out of bounds");
    Tensor out(ph, pw, src.c);
    for (int ch = 0; ch < src.c; ++ch)
        for (int y = 0; y < ph; ++y)
            for (int x = 0; x < pw; ++x) out.at(y, x, ch) = src.at(y0 + y, x0 + x, ch);
    return out;
}

double mean_value(const Tensor& a) {
    double s = 0.0;
    for (double x : a.v) s += x;
    return a.v.empty() ? 0.0 : s / static_cast<double>(a.v.size());
}

}  // namespace tdsr
