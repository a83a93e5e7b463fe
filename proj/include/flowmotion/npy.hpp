#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "flowmotion/flow_field.hpp"

namespace flowmotion {

// NPY codec for flow fields. Exactly one profile is supported: format
// version 1.0, little-endian f32, C order, shape (height, width, 2).
FlowField read_npy(const std::vector<uint8_t>& bytes);
std::vector<uint8_t> write_npy(const FlowField& field);

FlowField read_npy_file(const std::string& path);
void write_npy_file(const std::string& path, const FlowField& field);

}  // namespace flowmotion
