#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "tdsr/diffusion.hpp"
#include "tdsr/nn.hpp"

namespace tdsr {

struct AeConfig {
    int in_channels = 3;
    int width1 = 16;
    int width2 = 32;
    int latent_channels = 4;  // 4x spatial downsample to this many channels
};

// Encoder features cached for CFW, one per decoder injection scale. Spatial
// dims match the corresponding decoder features.
struct EncoderFeatures {
    Tensor e1;  // width2 channels at h/4 (matches decoder scale 1)
    Tensor e2;  // width2 channels at h/2 (matches decoder scale 2)
};

// Captured decoder features around each CFW injection, in scale order.
struct DecodeTrace {
    std::vector<Tensor> f_d;  // pre-injection decoder features
    std::vector<Tensor> f_m;  // post-injection features actually decoded
};

// Controllable feature wrapping: F_m = F_d + C(F_e, F_d) * w, with C two conv
// layers on the channel concatenation and a zero-initialised output conv.
class CfwModule {
public:
    explicit CfwModule(const AeConfig& cfg = {});
    void init(uint64_t seed);

    Tensor inject(int scale_id, const Tensor& f_e, const Tensor& f_d, double w);
    // Gradient w.r.t. f_d (the f_e branch is frozen context and is dropped).
    Tensor inject_backward(int scale_id, const Tensor& g, double w);

    std::vector<ParamRef> params();
    void zero_grads();
    void set_requires_grad(bool rg);

private:
    Conv3x3 s1_conv1_, s1_conv2_, s2_conv1_, s2_conv2_;
    Tensor mid1_pre_, mid2_pre_;
    int e1_ch_ = 0, e2_ch_ = 0;
};

// Toy convolutional autoencoder: 4x spatial downsample into a 4-channel
// latent. Value-semantic; copy the object for concurrent use (forward passes
// keep scratch state for the paired backward).
class Autoencoder {
public:
    explicit Autoencoder(AeConfig cfg = {});

    const AeConfig& config() const { return cfg_; }
    void init(uint64_t seed);

    std::pair<Tensor, EncoderFeatures> encode(const Tensor& img);
    Tensor encode_backward(const Tensor& gz);

    // cfw/features may be null when w == 0; then this is the plain decoder.
    // Output is clamped to [0,1] unless clamp == false (training path).
    Tensor decode(const Tensor& z, CfwModule* cfw, const EncoderFeatures* features, double w,
                  DecodeTrace* trace = nullptr, bool clamp = true);
    Tensor decode_backward(const Tensor& g_unclamped, CfwModule* cfw, double w);

    std::vector<ParamRef> params();
    void zero_grads();
    void set_requires_grad(bool rg);

private:
    AeConfig cfg_;
    Conv3x3 e1_, e2_, e3_;
    Conv3x3 d1_, d2_, d3_;
    Tensor t1p_, t2p_;
    Tensor d1p_, d2p_;
    bool decoded_with_cfw_ = false;
};

std::pair<Tensor, EncoderFeatures> ae_encode(Autoencoder& ae, const Tensor& img);
Tensor ae_decode_cfw(Autoencoder& ae, CfwModule* cfw, const Tensor& z,
                     const EncoderFeatures* features, double w, DecodeTrace* trace = nullptr);

// Pixel-MSE reconstruction training of the autoencoder.
ModelParams train_autoencoder(Autoencoder& ae, const std::vector<Tensor>& hr_images,
                              const TrainConfig& tc);

struct CfwTrainConfig {
    TrainConfig train;
    int sample_steps = 40;     // reverse steps used to produce the Z_0 latents
    uint64_t sample_seed = 1;
    double w = 1.0;            // injection strength during CFW training
};

// Trains CFW only: Z_0 latents are produced by the frozen conditioned sampler
// on the LR inputs, then CFW learns to reconstruct HR (pixel L1 + MSE).
// All non-CFW parameters are bit-identical before and after.
class PriorNet;
class EncoderNet;
ModelParams train_cfw(Autoencoder& ae, CfwModule& cfw, PriorNet& prior, EncoderNet& enc,
                      const std::vector<std::pair<Tensor, Tensor>>& lr_hr_images,
                      const NoiseSchedule& sched, const CfwTrainConfig& cc);

}  // namespace tdsr
