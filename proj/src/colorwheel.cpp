#include "flowmotion/colorwheel.hpp"

#include <algorithm>
#include <cmath>

#include "flowmotion/errors.hpp"

namespace flowmotion {

namespace {

constexpr double kRadToDeg = 57.29577951308232;

void hsv_to_rgb8(double hue_deg, double sat, uint8_t* out) {
    // Value fixed at 1 so zero saturation (zero flow) is white.
    const double t = hue_deg / 60.0;
    const int sector = std::min(5, static_cast<int>(t));
    const double f = t - sector;
    const double p = 1.0 - sat;
    const double q = 1.0 - sat * f;
    const double u = 1.0 - sat * (1.0 - f);

    double r, g, b;
    switch (sector) {
        case 0: r = 1.0; g = u; b = p; break;
        case 1: r = q; g = 1.0; b = p; break;
        case 2: r = p; g = 1.0; b = u; break;
        case 3: r = p; g = q; b = 1.0; break;
        case 4: r = u; g = p; b = 1.0; break;
        default: r = 1.0; g = p; b = q; break;
    }
    out[0] = static_cast<uint8_t>(std::lround(255.0 * r));
    out[1] = static_cast<uint8_t>(std::lround(255.0 * g));
    out[2] = static_cast<uint8_t>(std::lround(255.0 * b));
}

}  // namespace

RgbImage render_colorwheel(const FlowField& field, double max_magnitude) {
    if (!std::isfinite(max_magnitude) || max_magnitude < 0.0) {
        throw ArgumentError("max_magnitude must be positive (or 0 for auto)");
    }
    double scale = max_magnitude;
    if (scale <= 0.0) {
        double max_mag = 0.0;
        for (size_t i = 0; i < field.pixel_count(); ++i) {
            const double u = field.data[i * 2];
            const double v = field.data[i * 2 + 1];
            max_mag = std::max(max_mag, std::hypot(u, v));
        }
        scale = (max_mag > 0.0) ? max_mag : 1.0;
    }

    RgbImage image(field.width, field.height);
    for (int y = 0; y < field.height; ++y) {
        for (int x = 0; x < field.width; ++x) {
            // Normalize first: the pixel color is a function of (u/max, v/max)
            // alone, so scaling field and max together cannot change it.
            const double ru = field.u(x, y) / scale;
            const double rv = field.v(x, y) / scale;
            const double mag = std::min(1.0, std::hypot(ru, rv));
            if (mag == 0.0) {
                uint8_t* p = image.pixel(x, y);
                p[0] = p[1] = p[2] = 255;
                continue;
            }
            double hue = std::atan2(rv, ru) * kRadToDeg;
            if (hue < 0.0) hue += 360.0;
            if (hue >= 360.0) hue = 0.0;
            hsv_to_rgb8(hue, mag, image.pixel(x, y));
        }
    }
    return image;
}

}  // namespace flowmotion
