#pragma once

#include <string>
#include <vector>

#include "iarn/trainer.hpp"

namespace iarn {

// Flat `key = value` text, one pair per line, `#` comments. Unknown keys are
// errors. Serialization round-trips every field exactly.
TrainConfig parse_train_config(const std::string& text, TrainConfig base = TrainConfig());
TrainConfig load_train_config(const std::string& path, TrainConfig base = TrainConfig());
std::string serialize_train_config(const TrainConfig& cfg);

// Scale argument grammar: "2.5" (symmetric), "2.0x3.0" (horizontal x
// vertical), "lo:hi:step" (sweep), comma-separated combinations.
ScalePair parse_scale(const std::string& arg);
std::vector<ScalePair> parse_scale_list(const std::string& arg);

}  // namespace iarn
