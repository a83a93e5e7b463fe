#pragma once

#include <cstdint>
#include <utility>
#include <vector>

namespace flowmotion {

// Dense 2-channel motion field. data is row-major (u, v) pairs in
// pixels-per-frame-pair; channel 0 is u (horizontal), channel 1 is v.
struct FlowField {
    int width = 0;
    int height = 0;
    std::vector<float> data;  // width * height * 2 floats

    FlowField() = default;
    FlowField(int w, int h);

    float& u(int x, int y) { return data[(static_cast<size_t>(y) * width + x) * 2]; }
    float& v(int x, int y) { return data[(static_cast<size_t>(y) * width + x) * 2 + 1]; }
    float u(int x, int y) const { return data[(static_cast<size_t>(y) * width + x) * 2]; }
    float v(int x, int y) const { return data[(static_cast<size_t>(y) * width + x) * 2 + 1]; }

    size_t pixel_count() const { return static_cast<size_t>(width) * height; }

    bool operator==(const FlowField& other) const = default;

    // Throws ShapeError / NumericError when the type invariants are broken.
    void validate() const;
};

// Bilinear blend of the 4 nearest grid samples, each channel independently.
// Out-of-range coordinates clamp to the valid sample range (edge extension).
std::pair<double, double> bilinear_sample(const FlowField& field, double x, double y);

// Align-corners-false resampling to (out_w, out_h). Flow values are
// interpolated as numbers; they are not rescaled by the geometric ratio.
FlowField resize_bilinear(const FlowField& field, int out_w, int out_h);

// Mirror columns and negate u; v is unchanged.
FlowField hflip(const FlowField& field);

}  // namespace flowmotion
