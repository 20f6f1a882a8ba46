#pragma once

#include <string>
#include <utility>
#include <vector>

#include "tdsr/config.hpp"
#include "tdsr/tensor.hpp"

namespace tdsr {

// Procedural 3-channel texture at the given size: sinusoid mixtures,
// low-pass-filtered noise, or random polygons, chosen by seed.
Tensor gen_texture(int size, uint64_t seed);

struct PairEntry {
    std::string hr;
    std::string lr;
    uint64_t seed = 0;
    double psnr_lr = 0.0;  // PSNR of the degraded input vs the HR image
};

struct Manifest {
    uint64_t seed = 0;
    int count = 0;
    int size = 0;
    DegradationParams degradation;
    std::vector<PairEntry> pairs;
};

// Writes hr_NNNN.png / lr_NNNN.png pairs plus manifest.json into dir.
// Deterministic: the same config yields byte-identical output.
Manifest generate_dataset(const DataConfig& cfg);

void write_manifest(const std::string& path, const Manifest& m);
Manifest read_manifest(const std::string& path);

// Loads (lr, hr) image pairs listed in the manifest, paths relative to dir.
std::vector<std::pair<Tensor, Tensor>> load_pairs(const std::string& dir, const Manifest& m);

}  // namespace tdsr
