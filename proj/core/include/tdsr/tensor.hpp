#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace tdsr {

// h x w x c real-valued field stored planar (channel, row, col). Used both for
// pixel-domain images (c=3, values nominally in [0,1]) and latent grids.
struct Tensor {
    int h = 0, w = 0, c = 0;
    std::vector<double> v;

    Tensor() = default;
    Tensor(int h_, int w_, int c_, double fill = 0.0)
        : h(h_), w(w_), c(c_), v(static_cast<size_t>(h_) * w_ * c_, fill) {}

    double& at(int y, int x, int ch) { return v[(static_cast<size_t>(ch) * h + y) * w + x]; }
    double at(int y, int x, int ch) const { return v[(static_cast<size_t>(ch) * h + y) * w + x]; }

    double* plane(int ch) { return v.data() + static_cast<size_t>(ch) * h * w; }
    const double* plane(int ch) const { return v.data() + static_cast<size_t>(ch) * h * w; }

    size_t size() const { return v.size(); }
    bool same_shape(const Tensor& o) const { return h == o.h && w == o.w && c == o.c; }

    static Tensor zeros_like(const Tensor& o) { return Tensor(o.h, o.w, o.c); }
};

// Rank-polymorphic value store for network parameters and their gradients.
struct Array {
    std::vector<uint32_t> dims;
    std::vector<double> v;

    Array() = default;
    explicit Array(std::vector<uint32_t> d) : dims(std::move(d)) {
        size_t n = 1;
        for (uint32_t x : dims) n *= x;
        v.assign(n, 0.0);
    }
    size_t size() const { return v.size(); }
    void zero() { std::fill(v.begin(), v.end(), 0.0); }
};

void require_same_shape(const Tensor& a, const Tensor& b, const std::string& where);

bool all_finite(const Tensor& t);
bool bitwise_equal(const Tensor& a, const Tensor& b);
double max_abs_diff(const Tensor& a, const Tensor& b);

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double s);
// a + s*b
Tensor axpy(const Tensor& a, double s, const Tensor& b);
Tensor clamp01(const Tensor& a);

// Copies region [y0,y0+ph) x [x0,x0+pw), all channels.
Tensor crop(const Tensor& src, int y0, int x0, int ph, int pw);

double mean_value(const Tensor& a);

}  // namespace tdsr
