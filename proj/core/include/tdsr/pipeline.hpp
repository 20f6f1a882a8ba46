#pragma once

#include <string>

#include "tdsr/autoencoder.hpp"
#include "tdsr/config.hpp"
#include "tdsr/encoder.hpp"
#include "tdsr/prior.hpp"
#include "tdsr/tiling.hpp"

namespace tdsr {

struct Models {
    PriorNet prior;
    EncoderNet enc;
    Autoencoder ae;
    CfwModule cfw;
    bool has_prior = false, has_enc = false, has_ae = false, has_cfw = false;

    explicit Models(const ArchConfig& arch = {});
};

PriorConfig prior_config(const ArchConfig& a);
EncoderConfig encoder_config(const ArchConfig& a);
AeConfig ae_config(const ArchConfig& a);

// Loads the per-component checkpoints (ae.tdsr, prior.tdsr, encoder.tdsr,
// cfw.tdsr) from dir. Missing required components raise PrereqError; optional
// ones are skipped.
void load_models(Models& m, const std::string& dir, bool need_ae, bool need_prior, bool need_enc,
                 bool need_cfw);

struct InferOptions {
    int steps = 200;
    uint64_t seed = 0;
    double guidance_scale = 1.0;
    double w = 0.5;
    std::string color = "pixel";
    int wavelet_levels = 3;
    bool preclean = false;
    int tile_size = 16;
    int tile_overlap = 8;
    double tile_sigma = 4.0;
    int scale = 1;
};

InferOptions infer_options(const RunConfig& cfg);

// Patch predictor over the conditioned model with optional classifier-free
// guidance. s == 1 evaluates only the null branch, s == 0 only the guided one.
PatchPredictor make_guided_predictor(Models& m, const GuidanceConfig& guidance);

// Full restoration pipeline: optional bicubic pre-upsample and pre-clean,
// latent encoding, progressive aggregation sampling, CFW decode, color
// correction against the (processed) input.
Tensor infer_image(Models& m, const Tensor& lr_input, const InferOptions& opt,
                   const NoiseSchedule& sched);

}  // namespace tdsr
