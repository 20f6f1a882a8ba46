#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tdsr/config.hpp"

namespace tdsr {

// CLI entry points. Errors are reported by exception: ConfigError (exit 2),
// PrereqError (exit 3), DivergenceError (exit 4).

void cmd_gen_data(const RunConfig& cfg);

// stage: autoencoder | prior | encoder | cfw. Stages expect their
// prerequisite checkpoints in cfg.checkpoint_dir and write
// <stage>.tdsr plus loss_<stage>.csv there.
void cmd_train(const RunConfig& cfg, const std::string& stage);

void cmd_infer(const RunConfig& cfg, const std::string& input_png, const std::string& output_png);

// Runs the pipeline over the manifest pairs in data_dir for every (w, s,
// seed) combination; writes per-pair rows plus one aggregate row per setting.
void cmd_eval(const RunConfig& cfg, const std::string& data_dir, const std::string& out_csv,
              const std::vector<double>& w_list, const std::vector<double>& s_list,
              const std::vector<uint64_t>& seeds);

// Cosine-similarity probe over the given manifest pair; writes t,snr,cosine.
void cmd_probe(const RunConfig& cfg, const std::string& data_dir, int pair_index,
               const std::string& out_csv, int num_t);

}  // namespace tdsr
