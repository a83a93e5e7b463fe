#pragma once

#include <map>
#include <string>
#include <vector>

#include "flowmotion/net.hpp"

namespace flowmotion {

// Versioned binary checkpoint: JSON config header plus named f32 tensors
// (parameters, normalization buffers, optimizer momentum under "opt.").
// Save -> load -> save is byte-identical.
std::vector<uint8_t> serialize_checkpoint(Net& net,
                                          const std::map<std::string, Tensor>* velocities = nullptr);

struct LoadedCheckpoint {
    NetConfig config;
    Net net;
    std::map<std::string, Tensor> velocities;
};

LoadedCheckpoint deserialize_checkpoint(const std::vector<uint8_t>& bytes);

void save_checkpoint(const std::string& path, Net& net,
                     const std::map<std::string, Tensor>* velocities = nullptr);
LoadedCheckpoint load_checkpoint(const std::string& path);

std::string net_config_json(const NetConfig& cfg);
NetConfig net_config_from_json(const std::string& text);

}  // namespace flowmotion
