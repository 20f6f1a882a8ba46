#include "tdsr/nn.hpp"

#include <cmath>
#include <cstring>
#include <stdexcept>

#include "tdsr/errors.hpp"

namespace tdsr {

double silu(double x) { return x / (1.0 + std::exp(-x)); }

double silu_grad(double x) {
    const double s = 1.0 / (1.0 + std::exp(-x));
    return s * (1.0 + x * (1.0 - s));
}

Tensor silu(const Tensor& x) {
    Tensor y = x;
    for (double& v : y.v) v = silu(v);
    return y;
}

Tensor silu_backward(const Tensor& x_cache, const Tensor& g) {
    Tensor r = g;
    for (size_t i = 0; i < r.v.size(); ++i) r.v[i] *= silu_grad(x_cache.v[i]);
    return r;
}

namespace {

// y += conv(x, W) with circular padding; y must be pre-filled with the bias.
// Term-addition order is identical for every output pixel, so the op is
// bitwise shift-equivariant.
void conv3x3_circ_accum(const double* x, int h, int w, int ci, const double* W, int co,
                        double* y) {
    for (int o = 0; o < co; ++o) {
        double* yp = y + static_cast<size_t>(o) * h * w;
        for (int i = 0; i < ci; ++i) {
            const double* xp = x + static_cast<size_t>(i) * h * w;
            const double* k = W + (static_cast<size_t>(o) * ci + i) * 9;
            const double w00 = k[0], w01 = k[1], w02 = k[2];
            const double w10 = k[3], w11 = k[4], w12 = k[5];
            const double w20 = k[6], w21 = k[7], w22 = k[8];
            for (int yy = 0; yy < h; ++yy) {
                const double* r0 = xp + static_cast<size_t>((yy + h - 1) % h) * w;
                const double* r1 = xp + static_cast<size_t>(yy) * w;
                const double* r2 = xp + static_cast<size_t>((yy + 1) % h) * w;
                double* yr = yp + static_cast<size_t>(yy) * w;
                if (w >= 3) {
                    yr[0] += w00 * r0[w - 1] + w01 * r0[0] + w02 * r0[1] +
                             w10 * r1[w - 1] + w11 * r1[0] + w12 * r1[1] +
                             w20 * r2[w - 1] + w21 * r2[0] + w22 * r2[1];
                    for (int xx = 1; xx < w - 1; ++xx) {
                        yr[xx] += w00 * r0[xx - 1] + w01 * r0[xx] + w02 * r0[xx + 1] +
                                  w10 * r1[xx - 1] + w11 * r1[xx] + w12 * r1[xx + 1] +
                                  w20 * r2[xx - 1] + w21 * r2[xx] + w22 * r2[xx + 1];
                    }
                    yr[w - 1] += w00 * r0[w - 2] + w01 * r0[w - 1] + w02 * r0[0] +
                                 w10 * r1[w - 2] + w11 * r1[w - 1] + w12 * r1[0] +
                                 w20 * r2[w - 2] + w21 * r2[w - 1] + w22 * r2[0];
                } else {
                    for (int xx = 0; xx < w; ++xx) {
                        const int xm = (xx + w - 1) % w, xpp = (xx + 1) % w;
                        yr[xx] += w00 * r0[xm] + w01 * r0[xx] + w02 * r0[xpp] +
                                  w10 * r1[xm] + w11 * r1[xx] + w12 * r1[xpp] +
                                  w20 * r2[xm] + w21 * r2[xx] + w22 * r2[xpp];
                    }
                }
            }
        }
    }
}

// sum_x g[x] * v[(x + shift) mod w], shift in {-1, 0, 1}
double dot_shift(const double* g, const double* v, int w, int shift) {
    double acc = 0.0;
    if (shift == 0) {
        for (int x = 0; x < w; ++x) acc += g[x] * v[x];
    } else if (shift == -1) {
        acc += g[0] * v[w - 1];
        for (int x = 1; x < w; ++x) acc += g[x] * v[x - 1];
    } else {
        for (int x = 0; x + 1 < w; ++x) acc += g[x] * v[x + 1];
        acc += g[w - 1] * v[0];
    }
    return acc;
}

}  // namespace

Conv3x3::Conv3x3(int ci_, int co_)
    : ci(ci_),
      co(co_),
      W({static_cast<uint32_t>(co_), static_cast<uint32_t>(ci_), 3u, 3u}),
      b({static_cast<uint32_t>(co_)}),
      gW(W.dims),
      gb(b.dims) {}

void Conv3x3::init_he(Rng& rng) {
    const double std = std::sqrt(2.0 / (ci * 9.0));
    for (double& x : W.v) x = rng.normal() * std;
    b.zero();
}

void Conv3x3::init_zero() {
    W.zero();
    b.zero();
}

Tensor Conv3x3::forward(const Tensor& x) {
    if (x.c != ci) throw std::invalid_argument("Conv3x3: channel mismatch");
    x_cache = x;
    Tensor y(x.h, x.w, co);
    for (int o = 0; o < co; ++o) {
        double* yp = y.plane(o);
        std::fill(yp, yp + static_cast<size_t>(x.h) * x.w, b.v[o]);
    }
    conv3x3_circ_accum(x.v.data(), x.h, x.w, ci, W.v.data(), co, y.v.data());
    return y;
}

Tensor Conv3x3::backward(const Tensor& gy) {
    const Tensor& x = x_cache;
    if (gy.c != co || gy.h != x.h || gy.w != x.w)
        throw std::invalid_argument("Conv3x3::backward: shape mismatch");
    const int h = x.h, w = x.w;

    if (requires_grad) {
        for (int o = 0; o < co; ++o) {
            const double* gp = gy.plane(o);
            double acc_b = 0.0;
            for (int n = 0; n < h * w; ++n) acc_b += gp[n];
            gb.v[o] += acc_b;
            for (int i = 0; i < ci; ++i) {
                const double* xp = x.plane(i);
                double* gk = gW.v.data() + (static_cast<size_t>(o) * ci + i) * 9;
                for (int ky = 0; ky < 3; ++ky) {
                    for (int kx = 0; kx < 3; ++kx) {
                        double acc = 0.0;
                        for (int yy = 0; yy < h; ++yy) {
                            const double* grow = gp + static_cast<size_t>(yy) * w;
                            const double* xrow =
                                xp + static_cast<size_t>((yy + ky - 1 + h) % h) * w;
                            acc += dot_shift(grow, xrow, w, kx - 1);
                        }
                        gk[ky * 3 + kx] += acc;
                    }
                }
            }
        }
    }

    // dx is a circular convolution of gy with the flipped, transposed kernel.
    Array Wt({static_cast<uint32_t>(ci), static_cast<uint32_t>(co), 3u, 3u});
    for (int o = 0; o < co; ++o)
        for (int i = 0; i < ci; ++i)
            for (int ky = 0; ky < 3; ++ky)
                for (int kx = 0; kx < 3; ++kx)
                    Wt.v[(static_cast<size_t>(i) * co + o) * 9 + ky * 3 + kx] =
                        W.v[(static_cast<size_t>(o) * ci + i) * 9 + (2 - ky) * 3 + (2 - kx)];
    Tensor gx(h, w, ci);
    conv3x3_circ_accum(gy.v.data(), h, w, co, Wt.v.data(), ci, gx.v.data());
    return gx;
}

void Conv3x3::zero_grads() {
    gW.zero();
    gb.zero();
}

Linear::Linear(int in_, int out_)
    : in(in_),
      out(out_),
      W({static_cast<uint32_t>(out_), static_cast<uint32_t>(in_)}),
      b({static_cast<uint32_t>(out_)}),
      gW(W.dims),
      gb(b.dims) {}

void Linear::init_he(Rng& rng) {
    const double std = std::sqrt(2.0 / in);
    for (double& x : W.v) x = rng.normal() * std;
    b.zero();
}

void Linear::init_zero() {
    W.zero();
    b.zero();
}

std::vector<double> Linear::forward(const std::vector<double>& x) {
    if (static_cast<int>(x.size()) != in) throw std::invalid_argument("Linear: size mismatch");
    x_cache = x;
    std::vector<double> y(out);
    for (int o = 0; o < out; ++o) {
        double acc = b.v[o];
        const double* wr = W.v.data() + static_cast<size_t>(o) * in;
        for (int i = 0; i < in; ++i) acc += wr[i] * x[i];
        y[o] = acc;
    }
    return y;
}

std::vector<double> Linear::backward(const std::vector<double>& gy) {
    if (static_cast<int>(gy.size()) != out)
        throw std::invalid_argument("Linear::backward: size mismatch");
    if (requires_grad) {
        for (int o = 0; o < out; ++o) {
            gb.v[o] += gy[o];
            double* gr = gW.v.data() + static_cast<size_t>(o) * in;
            for (int i = 0; i < in; ++i) gr[i] += gy[o] * x_cache[i];
        }
    }
    std::vector<double> gx(in, 0.0);
    for (int o = 0; o < out; ++o) {
        const double* wr = W.v.data() + static_cast<size_t>(o) * in;
        for (int i = 0; i < in; ++i) gx[i] += wr[i] * gy[o];
    }
    return gx;
}

void Linear::zero_grads() {
    gW.zero();
    gb.zero();
}

Tensor avgpool2(const Tensor& x) {
    if (x.h % 2 != 0 || x.w % 2 != 0)
        throw std::invalid_argument("avgpool2: spatial dims must be even");
    Tensor y(x.h / 2, x.w / 2, x.c);
    for (int ch = 0; ch < x.c; ++ch)
        for (int yy = 0; yy < y.h; ++yy)
            for (int xx = 0; xx < y.w; ++xx)
                y.at(yy, xx, ch) = 0.25 * (x.at(2 * yy, 2 * xx, ch) + x.at(2 * yy, 2 * xx + 1, ch) +
                                           x.at(2 * yy + 1, 2 * xx, ch) +
                                           x.at(2 * yy + 1, 2 * xx + 1, ch));
    return y;
}

Tensor avgpool2_backward(const Tensor& gy) {
    Tensor gx(gy.h * 2, gy.w * 2, gy.c);
    for (int ch = 0; ch < gy.c; ++ch)
        for (int yy = 0; yy < gy.h; ++yy)
            for (int xx = 0; xx < gy.w; ++xx) {
                const double g = 0.25 * gy.at(yy, xx, ch);
                gx.at(2 * yy, 2 * xx, ch) = g;
                gx.at(2 * yy, 2 * xx + 1, ch) = g;
                gx.at(2 * yy + 1, 2 * xx, ch) = g;
                gx.at(2 * yy + 1, 2 * xx + 1, ch) = g;
            }
    return gx;
}

Tensor upsample2(const Tensor& x) {
    Tensor y(x.h * 2, x.w * 2, x.c);
    for (int ch = 0; ch < x.c; ++ch)
        for (int yy = 0; yy < x.h; ++yy)
            for (int xx = 0; xx < x.w; ++xx) {
                const double v = x.at(yy, xx, ch);
                y.at(2 * yy, 2 * xx, ch) = v;
                y.at(2 * yy, 2 * xx + 1, ch) = v;
                y.at(2 * yy + 1, 2 * xx, ch) = v;
                y.at(2 * yy + 1, 2 * xx + 1, ch) = v;
            }
    return y;
}

Tensor upsample2_backward(const Tensor& gy) {
    if (gy.h % 2 != 0 || gy.w % 2 != 0)
        throw std::invalid_argument("upsample2_backward: dims must be even");
    Tensor gx(gy.h / 2, gy.w / 2, gy.c);
    for (int ch = 0; ch < gx.c; ++ch)
        for (int yy = 0; yy < gx.h; ++yy)
            for (int xx = 0; xx < gx.w; ++xx)
                gx.at(yy, xx, ch) = gy.at(2 * yy, 2 * xx, ch) + gy.at(2 * yy, 2 * xx + 1, ch) +
                                    gy.at(2 * yy + 1, 2 * xx, ch) +
                                    gy.at(2 * yy + 1, 2 * xx + 1, ch);
    return gx;
}

Tensor concat_channels(const Tensor& a, const Tensor& b) {
    if (a.h != b.h || a.w != b.w)
        throw std::invalid_argument("concat_channels: spatial mismatch");
    Tensor y(a.h, a.w, a.c + b.c);
    std::memcpy(y.v.data(), a.v.data(), a.v.size() * sizeof(double));
    std::memcpy(y.v.data() + a.v.size(), b.v.data(), b.v.size() * sizeof(double));
    return y;
}

void split_channels(const Tensor& g, int ca, Tensor& ga, Tensor& gb) {
    ga = Tensor(g.h, g.w, ca);
    gb = Tensor(g.h, g.w, g.c - ca);
    std::memcpy(ga.v.data(), g.v.data(), ga.v.size() * sizeof(double));
    std::memcpy(gb.v.data(), g.v.data() + ga.v.size(), gb.v.size() * sizeof(double));
}

ModelParams collect_params(const std::vector<ParamRef>& refs) {
    ModelParams p;
    for (const auto& r : refs) p.tensors[r.name] = *r.value;
    return p;
}

void apply_params(const std::vector<ParamRef>& refs, const ModelParams& src) {
    for (const auto& r : refs) {
        auto it = src.tensors.find(r.name);
        if (it == src.tensors.end())
            throw std::invalid_argument("apply_params: missing tensor " + r.name);
        if (it->second.dims != r.value->dims)
            throw std::invalid_argument("apply_params: shape mismatch for " + r.name);
        r.value->v = it->second.v;
    }
}

uint64_t params_hash(const ModelParams& p, const std::string& prefix) {
    uint64_t h = 1469598103934665603ULL;
    auto feed = [&h](const void* data, size_t n) {
        const auto* b = static_cast<const unsigned char*>(data);
        for (size_t i = 0; i < n; ++i) {
            h ^= b[i];
            h *= 1099511628211ULL;
        }
    };
    for (const auto& [name, arr] : p.tensors) {  // std::map: sorted order
        if (!prefix.empty() && name.rfind(prefix, 0) != 0) continue;
        feed(name.data(), name.size());
        feed(arr.v.data(), arr.v.size() * sizeof(double));
    }
    return h;
}

void Adam::step(const std::vector<ParamRef>& params, const std::set<std::string>& frozen,
                double grad_scale) {
    ++t_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (const auto& p : params) {
        if (frozen.count(p.name)) continue;
        auto& [m, v] = state_[p.name];
        if (m.empty()) {
            m.assign(p.value->size(), 0.0);
            v.assign(p.value->size(), 0.0);
        }
        for (size_t i = 0; i < p.value->v.size(); ++i) {
            const double g = p.grad->v[i] * grad_scale;
            m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * g;
            v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * g * g;
            const double mh = m[i] / bc1;
            const double vh = v[i] / bc2;
            p.value->v[i] -= cfg_.lr * mh / (std::sqrt(vh) + cfg_.eps);
        }
    }
}

void DivergenceGuard::observe(double loss) {
    if (!std::isfinite(loss))
        throw DivergenceError("training diverged: non-finite loss");
    if (!has_initial_) {
        has_initial_ = true;
        initial_ = loss;
        return;
    }
    if (loss > 10.0 * initial_) {
        if (++consecutive_ >= 100)
            throw DivergenceError("training diverged: loss above 10x initial for 100 steps");
    } else {
        consecutive_ = 0;
    }
}

}  // namespace tdsr
