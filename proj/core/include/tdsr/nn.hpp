#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "tdsr/rng.hpp"
#include "tdsr/tensor.hpp"

namespace tdsr {

double silu(double x);
double silu_grad(double x);
Tensor silu(const Tensor& x);
// g * silu'(x_cache), elementwise
Tensor silu_backward(const Tensor& x_cache, const Tensor& g);

// 3x3 convolution, stride 1, circular padding on both axes. Circular padding
// keeps the net exactly shift-equivariant, which the tests rely on.
struct Conv3x3 {
    int ci = 0, co = 0;
    Array W, b;    // {co, ci, 3, 3}, {co}
    Array gW, gb;
    bool requires_grad = true;
    Tensor x_cache;

    Conv3x3() = default;
    Conv3x3(int ci_, int co_);

    void init_he(Rng& rng);
    void init_zero();

    Tensor forward(const Tensor& x);
    // Accumulates gW/gb (unless requires_grad is false) and returns dL/dx.
    Tensor backward(const Tensor& gy);
    void zero_grads();
};

struct Linear {
    int in = 0, out = 0;
    Array W, b;  // {out, in}, {out}
    Array gW, gb;
    bool requires_grad = true;
    std::vector<double> x_cache;

    Linear() = default;
    Linear(int in_, int out_);

    void init_he(Rng& rng);
    void init_zero();

    std::vector<double> forward(const std::vector<double>& x);
    std::vector<double> backward(const std::vector<double>& gy);
    void zero_grads();
};

// 2x2 mean pooling; spatial dims must be even.
Tensor avgpool2(const Tensor& x);
Tensor avgpool2_backward(const Tensor& gy);

// Nearest-neighbour 2x upsampling.
Tensor upsample2(const Tensor& x);
Tensor upsample2_backward(const Tensor& gy);

Tensor concat_channels(const Tensor& a, const Tensor& b);
void split_channels(const Tensor& g, int ca, Tensor& ga, Tensor& gb);

// Named-tensor parameter store. Frozen names are excluded from optimizer
// updates; checkpoints carry the tensors only.
struct ModelParams {
    std::map<std::string, Array> tensors;
    std::set<std::string> frozen;

    bool has(const std::string& name) const { return tensors.count(name) != 0; }
};

struct ParamRef {
    std::string name;
    Array* value = nullptr;
    Array* grad = nullptr;
};

ModelParams collect_params(const std::vector<ParamRef>& refs);
// Copies matching tensors from `src` into the referenced storage. Every ref
// must be present in src with an identical shape.
void apply_params(const std::vector<ParamRef>& refs, const ModelParams& src);
// FNV-1a over the raw bytes of the named tensors, in sorted name order.
uint64_t params_hash(const ModelParams& p, const std::string& prefix = "");

struct AdamConfig {
    double lr = 5e-5;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

class Adam {
public:
    explicit Adam(AdamConfig cfg) : cfg_(cfg) {}
    // One update from accumulated gradients (scaled by grad_scale, e.g. 1/batch).
    // Frozen names receive no update.
    void step(const std::vector<ParamRef>& params, const std::set<std::string>& frozen,
              double grad_scale);

private:
    AdamConfig cfg_;
    std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> state_;
    int64_t t_ = 0;
};

// Aborts training when the loss stays above 10x the initial loss for 100
// consecutive steps.
class DivergenceGuard {
public:
    void observe(double loss);

private:
    bool has_initial_ = false;
    double initial_ = 0.0;
    int consecutive_ = 0;
};

}  // namespace tdsr
