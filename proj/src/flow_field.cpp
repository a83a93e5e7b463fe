#include "flowmotion/flow_field.hpp"

#include <algorithm>
#include <cmath>

#include "flowmotion/errors.hpp"

namespace flowmotion {

FlowField::FlowField(int w, int h) : width(w), height(h) {
    if (w <= 0 || h <= 0) {
        throw ShapeError("flow field dimensions must be positive, got " +
                         std::to_string(w) + "x" + std::to_string(h));
    }
    data.assign(static_cast<size_t>(w) * h * 2, 0.0f);
}

void FlowField::validate() const {
    if (width <= 0 || height <= 0) {
        throw ShapeError("flow field dimensions must be positive");
    }
    if (data.size() != static_cast<size_t>(width) * height * 2) {
        throw ShapeError("flow field data length does not match width*height*2");
    }
    for (float c : data) {
        if (!std::isfinite(c)) {
            throw NumericError("flow field contains a non-finite component");
        }
    }
}

std::pair<double, double> bilinear_sample(const FlowField& field, double x, double y) {
    const int w = field.width;
    const int h = field.height;

    x = std::clamp(x, 0.0, static_cast<double>(w - 1));
    y = std::clamp(y, 0.0, static_cast<double>(h - 1));

    int x0 = static_cast<int>(std::floor(x));
    int y0 = static_cast<int>(std::floor(y));
    int x1 = std::min(x0 + 1, w - 1);
    int y1 = std::min(y0 + 1, h - 1);
    const double tx = x - x0;
    const double ty = y - y0;

    // Difference form keeps constants and grid points exact.
    auto blend = [&](double v00, double v10, double v01, double v11) {
        double top = v00 + (v10 - v00) * tx;
        double bot = v01 + (v11 - v01) * tx;
        return top + (bot - top) * ty;
    };

    double u = blend(field.u(x0, y0), field.u(x1, y0), field.u(x0, y1), field.u(x1, y1));
    double v = blend(field.v(x0, y0), field.v(x1, y0), field.v(x0, y1), field.v(x1, y1));
    return {u, v};
}

FlowField resize_bilinear(const FlowField& field, int out_w, int out_h) {
    if (out_w <= 0 || out_h <= 0) {
        throw ArgumentError("resize target must be positive, got " +
                            std::to_string(out_w) + "x" + std::to_string(out_h));
    }
    if (out_w == field.width && out_h == field.height) {
        return field;
    }

    FlowField out(out_w, out_h);
    const double sx = static_cast<double>(field.width) / out_w;
    const double sy = static_cast<double>(field.height) / out_h;
    for (int i = 0; i < out_h; ++i) {
        const double y = (i + 0.5) * sy - 0.5;
        for (int j = 0; j < out_w; ++j) {
            const double x = (j + 0.5) * sx - 0.5;
            auto [u, v] = bilinear_sample(field, x, y);
            out.u(j, i) = static_cast<float>(u);
            out.v(j, i) = static_cast<float>(v);
        }
    }
    return out;
}

FlowField hflip(const FlowField& field) {
    FlowField out(field.width, field.height);
    for (int y = 0; y < field.height; ++y) {
        for (int x = 0; x < field.width; ++x) {
            const int mx = field.width - 1 - x;
            out.u(x, y) = -field.u(mx, y);
            out.v(x, y) = field.v(mx, y);
        }
    }
    return out;
}

}  // namespace flowmotion
