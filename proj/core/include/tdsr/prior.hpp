#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "tdsr/diffusion.hpp"
#include "tdsr/nn.hpp"

namespace tdsr {

// Sinusoidal embedding: concatenated sin/cos of t at geometric frequencies
// spanning wavelengths [1, 1e4]. dim must be even.
std::vector<double> time_embed(int t, int dim);

struct PriorConfig {
    int channels = 4;   // latent channels
    int width1 = 32;    // full-resolution scale
    int width2 = 64;    // half-resolution scale
    int time_dim = 32;
    bool zero_init_out = true;
};

// Per-scale SFT affine maps shaped like the prior's features at that scale.
struct SftTensors {
    Tensor alpha1, beta1;  // width1 channels, full latent resolution
    Tensor alpha2, beta2;  // width2 channels, half resolution
};

struct SftGrads {
    Tensor alpha1, beta1, alpha2, beta2;
};

// Captured (pre-SFT, post-SFT) feature pairs, one per modulated block.
struct ModulationTrace {
    std::vector<Tensor> pre, post;
};

// Elementwise (1 + alpha) * f + beta.
Tensor sft_modulate(const Tensor& f, const Tensor& alpha, const Tensor& beta);

// Residual block: x + conv(silu(conv(silu(x)) + proj(e))), time embedding
// injected as a learned per-channel shift.
struct ResBlock {
    int ch = 0;
    Conv3x3 conv1, conv2;
    Linear tproj;

    Tensor x_in, h1;

    ResBlock() = default;
    ResBlock(int ch_, int time_dim);
    void init(Rng& rng);
    Tensor forward(const Tensor& x, const std::vector<double>& e);
    // Returns dL/dx; de accumulates dL/de.
    Tensor backward(const Tensor& gy, std::vector<double>& de);
    void collect(const std::string& prefix, std::vector<ParamRef>& out);
    void zero_grads();
    void set_requires_grad(bool rg);
};

// Two-scale residual UNet over latents. Six residual blocks (two per scale on
// the contracting path, two on the expanding path); SFT modulation is applied
// after every block when `mod` is supplied.
class PriorNet {
public:
    explicit PriorNet(PriorConfig cfg = {});

    const PriorConfig& config() const { return cfg_; }
    void init(uint64_t seed);

    Tensor forward(const Tensor& z, int t, const SftTensors* mod = nullptr,
                   ModulationTrace* trace = nullptr);
    // mod_grads must be supplied iff the last forward ran with modulation.
    Tensor backward(const Tensor& gy, SftGrads* mod_grads = nullptr);

    std::vector<ParamRef> params();
    void zero_grads();
    void set_requires_grad(bool rg);

    // Spatial dims of the scale-1 / scale-2 feature maps for an h x w latent.
    static void scale_dims(int h, int w, int& h2, int& w2);

private:
    struct SftApp {
        const Tensor* alpha = nullptr;
        Tensor f_pre;
    };
    Tensor apply_sft(const Tensor& f, const Tensor& alpha, const Tensor& beta,
                     ModulationTrace* trace);
    Tensor sft_backward_app(size_t app_index, const Tensor& g, SftGrads& grads, bool scale1);

    PriorConfig cfg_;
    Conv3x3 conv_in_, conv_down_, conv_up_, conv_out_;
    ResBlock enc1a_, enc1b_, mid1_, mid2_, dec1a_, dec1b_;

    bool modulated_ = false;
    std::vector<SftApp> apps_;
    Tensor b2m_, b6m_;
    std::vector<double> emb_;
};

struct TrainConfig {
    AdamConfig adam;
    int steps = 100;
    int batch = 16;
    uint64_t seed = 0;
    std::function<void(int step, double loss)> on_step;
};

// Epsilon-MSE training of the prior on HR latents with uniformly drawn
// timesteps. Returns the final parameter snapshot (frozen set carried over).
ModelParams train_prior(PriorNet& net, const std::set<std::string>& frozen,
                        const std::vector<Tensor>& hr_latents, const NoiseSchedule& sched,
                        const TrainConfig& tc);

}  // namespace tdsr
