#pragma once

#include <cstdint>
#include <string>

#include "tdsr/degradation.hpp"

namespace tdsr {

struct ScheduleConfig {
    int T = 1000;
    double beta_start = 1e-4;
    double beta_end = 2e-2;
};

struct SampleConfig {
    int steps = 200;
    uint64_t seed = 0;
    double guidance_scale = 1.0;  // s = 1: plain null-conditioned sampling
    double w = 0.5;
    std::string color = "pixel";  // pixel | wavelet | none
    int wavelet_levels = 3;
    bool preclean = false;
    int tile_size = 16;
    int tile_overlap = 8;
    double tile_sigma = 4.0;
    int scale = 1;  // bicubic pre-upsample factor applied to the input
};

struct StageConfig {
    int steps = 1500;
    int batch = 16;
    double lr = 5e-5;
    uint64_t seed = 0;
};

struct CfwStageConfig {
    StageConfig train;
    int sample_steps = 40;
    uint64_t sample_seed = 1;
    double w = 1.0;
};

struct ArchConfig {
    int latent_channels = 4;
    int prior_width1 = 32;
    int prior_width2 = 64;
    int enc_width1 = 16;
    int enc_width2 = 32;
    int ae_width1 = 16;
    int ae_width2 = 32;
    int time_dim = 32;
};

struct DataConfig {
    std::string dir = "data";
    int count = 32;
    int size = 64;
    uint64_t seed = 0;
    DegradationParams degradation;
};

struct RunConfig {
    ScheduleConfig schedule;
    SampleConfig sample;
    ArchConfig arch;
    DataConfig data;
    StageConfig train_autoencoder{1500, 4, 2e-3, 0};
    StageConfig train_prior{1500, 16, 5e-5, 0};
    StageConfig train_encoder{1500, 8, 1e-3, 0};
    CfwStageConfig train_cfw{{1500, 4, 2e-3, 0}, 40, 1, 1.0};
    std::string checkpoint_dir = "checkpoints";

    void validate() const;  // throws ConfigError
};

// Parses a JSON config file. Unknown keys are rejected; missing keys keep
// their defaults. The result is validated.
RunConfig load_config(const std::string& path);
RunConfig parse_config_json(const std::string& json_text);

}  // namespace tdsr
