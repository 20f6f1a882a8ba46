#pragma once

#include <cstdint>
#include <set>
#include <utility>
#include <vector>

#include "tdsr/prior.hpp"

namespace tdsr {

struct EncoderConfig {
    int channels = 4;
    int width1 = 16;  // half the prior widths
    int width2 = 32;
    int time_dim = 32;
    int prior_width1 = 32;
    int prior_width2 = 64;
    int cond_count = 2;      // 0 = null embedding, 1 = guided ("negative") embedding
    bool time_aware = true;  // false: the time embedding is replaced by a constant
};

struct MultiScaleFeatures {
    Tensor f1;  // width1 channels, full latent resolution
    Tensor f2;  // width2 channels, half resolution
};

// Time-conditional encoder over the degraded input's latent. Produces
// multi-scale features and, from one small conv head per scale, the SFT
// affine parameters that modulate the frozen prior. Head output convs are
// zero-initialised so a fresh encoder leaves the prior untouched.
class EncoderNet {
public:
    explicit EncoderNet(EncoderConfig cfg = {});

    const EncoderConfig& config() const { return cfg_; }
    void init(uint64_t seed);

    std::pair<MultiScaleFeatures, SftTensors> forward(const Tensor& lr_latent, int t,
                                                      int cond_id = 0);
    // Backpropagates the SFT-parameter gradients produced by the prior.
    void backward(const SftGrads& g);

    std::vector<ParamRef> params();
    void zero_grads();
    void set_requires_grad(bool rg);

private:
    EncoderConfig cfg_;
    Conv3x3 conv_in_, conv_down_;
    ResBlock rb1a_, rb1b_, rb2a_, rb2b_;
    Conv3x3 head1_conv1_, head1_conv2_;
    Conv3x3 head2_conv1_, head2_conv2_;
    Array cond_table_, g_cond_table_;  // {cond_count, time_dim}
    bool cond_requires_grad_ = true;

    Tensor h1_pre_, h2_pre_;
    int cond_id_used_ = 0;
};

// Prior forward pass with SFT modulation from the encoder applied after every
// residual block. With zero alpha/beta it reduces to the plain prior exactly.
Tensor conditioned_forward(PriorNet& prior, EncoderNet& enc, const Tensor& z_t,
                           const Tensor& lr_latent, int t, int cond_id = 0,
                           ModulationTrace* trace = nullptr);

// One forward/backward in a conditioned training step; keeps the SFT tensors
// alive across the pair of calls.
struct ConditionedPass {
    SftTensors sft;
    MultiScaleFeatures feats;

    Tensor forward(PriorNet& prior, EncoderNet& enc, const Tensor& z_t, const Tensor& lr_latent,
                   int t, int cond_id = 0);
    void backward(PriorNet& prior, EncoderNet& enc, const Tensor& gy);
};

// Epsilon-MSE fine-tuning of the encoder and SFT heads against a frozen prior.
// Prior parameters are bit-identical before and after.
ModelParams finetune_encoder(PriorNet& prior, EncoderNet& enc,
                             const std::vector<std::pair<Tensor, Tensor>>& lr_hr_latents,
                             const NoiseSchedule& sched, const TrainConfig& tc);

struct ProbePoint {
    int t = 0;
    double snr = 0.0;
    double cosine = 0.0;
};

// For each timestep: noise the HR latent, run the conditioned forward, and
// record the mean cosine similarity between prior features before and after
// SFT across all modulated blocks.
std::vector<ProbePoint> cosine_probe(PriorNet& prior, EncoderNet& enc, const Tensor& hr_latent,
                                     const Tensor& lr_latent, const NoiseSchedule& sched,
                                     const std::vector<int>& t_list, uint64_t seed);

}  // namespace tdsr
