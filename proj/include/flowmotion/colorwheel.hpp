#pragma once

#include "flowmotion/flow_field.hpp"
#include "flowmotion/image.hpp"

namespace flowmotion {

// Flow visualization: hue encodes atan2(v, u), saturation encodes
// magnitude / max_magnitude (clamped to 1) at full value, so zero flow
// renders white. max_magnitude <= 0 selects auto scaling by the field's
// own max magnitude (1 if the field is all-zero).
RgbImage render_colorwheel(const FlowField& field, double max_magnitude = 0.0);

}  // namespace flowmotion
