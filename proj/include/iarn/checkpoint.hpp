#pragma once

#include <string>
#include <vector>

#include "iarn/backbone.hpp"
#include "iarn/trainer.hpp"

namespace iarn {

// Binary model file, little-endian throughout:
//   "IARN" | u32 format_version | u32 config_len | config key=value text |
//   u32 param_count | per param: u32 name_len, name, u32 rank, u32 dims[],
//   f32 data[] | u32 CRC-32 of all preceding bytes.
inline constexpr char kCheckpointMagic[4] = {'I', 'A', 'R', 'N'};
inline constexpr uint32_t kCheckpointVersion = 1;

void save_checkpoint(const std::string& path, const TrainConfig& cfg,
                     std::vector<NamedParam<float>> params);

struct LoadedCheckpoint {
    TrainConfig config;
    Backbone<float> net;
};

LoadedCheckpoint load_checkpoint(const std::string& path);

std::vector<uint8_t> serialize_checkpoint(const TrainConfig& cfg,
                                          std::vector<NamedParam<float>> params);
LoadedCheckpoint deserialize_checkpoint(const std::vector<uint8_t>& bytes);

}  // namespace iarn
