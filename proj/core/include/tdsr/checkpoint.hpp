#pragma once

#include <string>

#include "tdsr/nn.hpp"

namespace tdsr {

// Versioned binary tensor container:
//   "TDSR" | version u32 | tensor count u32
//   per tensor: name length u32 | name | dtype u8 (0 = f32) | rank u32 |
//               dims u32[rank] | payload (little-endian f32)
//   trailing CRC32 of everything above.
// Writes are atomic (temp file + rename). Values are quantized to f32 on
// save, so save(load(file)) reproduces the file byte for byte.
inline constexpr uint32_t kCheckpointVersion = 1;

void save_checkpoint(const std::string& path, const ModelParams& params);
ModelParams load_checkpoint(const std::string& path);

}  // namespace tdsr
