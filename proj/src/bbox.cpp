#include "flowmotion/bbox.hpp"

#include <algorithm>
#include <cmath>

#include "flowmotion/errors.hpp"

namespace flowmotion {

void Box2D::validate() const {
    if (!(std::isfinite(xmin) && std::isfinite(xmax) && std::isfinite(ymin) && std::isfinite(ymax))) {
        throw ArgumentError("box coordinates must be finite");
    }
    if (xmin > xmax || ymin > ymax) {
        throw ArgumentError("box must satisfy xmin <= xmax and ymin <= ymax");
    }
}

Box2D box_from_corners(const std::vector<Point2D>& corners) {
    if (corners.size() != 8) {
        throw ArgumentError("expected exactly 8 projected corners, got " +
                            std::to_string(corners.size()));
    }
    Box2D box{corners[0].x, corners[0].x, corners[0].y, corners[0].y};
    for (const Point2D& p : corners) {
        if (!(std::isfinite(p.x) && std::isfinite(p.y))) {
            throw ArgumentError("corner coordinates must be finite");
        }
        box.xmin = std::min(box.xmin, p.x);
        box.xmax = std::max(box.xmax, p.x);
        box.ymin = std::min(box.ymin, p.y);
        box.ymax = std::max(box.ymax, p.y);
    }
    return box;
}

Box2D squarify(const Box2D& box) {
    box.validate();
    const double side = std::max(box.width(), box.height());
    const double cx = box.center_x();
    const double cy = box.center_y();
    return {cx - side / 2.0, cx + side / 2.0, cy - side / 2.0, cy + side / 2.0};
}

Box2D expand(const Box2D& box, double factor) {
    box.validate();
    if (!(factor > 0.0) || !std::isfinite(factor)) {
        throw ArgumentError("expansion factor must be positive and finite");
    }
    const double half_w = box.width() * factor / 2.0;
    const double half_h = box.height() * factor / 2.0;
    const double cx = box.center_x();
    const double cy = box.center_y();
    return {cx - half_w, cx + half_w, cy - half_h, cy + half_h};
}

namespace {

int64_t round_half_away(double v) {
    return static_cast<int64_t>(v < 0.0 ? std::ceil(v - 0.5) : std::floor(v + 0.5));
}

}  // namespace

FlowField crop_edge_padded(const FlowField& field, const Box2D& box) {
    box.validate();
    const int64_t x0 = round_half_away(box.xmin);
    const int64_t x1 = round_half_away(box.xmax);
    const int64_t y0 = round_half_away(box.ymin);
    const int64_t y1 = round_half_away(box.ymax);
    const int64_t out_w = x1 - x0;
    const int64_t out_h = y1 - y0;
    if (out_w <= 0 || out_h <= 0) {
        throw DegenerateBoxError("box rounds to zero area: [" + std::to_string(box.xmin) + ", " +
                                 std::to_string(box.xmax) + ") x [" + std::to_string(box.ymin) +
                                 ", " + std::to_string(box.ymax) + ")");
    }
    constexpr int64_t kMaxCropSide = 1 << 16;
    if (out_w > kMaxCropSide || out_h > kMaxCropSide) {
        throw ArgumentError("crop window " + std::to_string(out_w) + "x" + std::to_string(out_h) +
                            " exceeds the supported size");
    }

    FlowField out(static_cast<int>(out_w), static_cast<int>(out_h));
    for (int64_t i = 0; i < out_h; ++i) {
        const int sy = static_cast<int>(std::clamp<int64_t>(y0 + i, 0, field.height - 1));
        for (int64_t j = 0; j < out_w; ++j) {
            const int sx = static_cast<int>(std::clamp<int64_t>(x0 + j, 0, field.width - 1));
            out.u(static_cast<int>(j), static_cast<int>(i)) = field.u(sx, sy);
            out.v(static_cast<int>(j), static_cast<int>(i)) = field.v(sx, sy);
        }
    }
    return out;
}

FlowField preprocess_roi(const FlowField& field, const Box2D& raw_box) {
    const FlowField cropped = crop_edge_padded(field, expand(squarify(raw_box), 3.0));
    return resize_bilinear(cropped, kRoiSize, kRoiSize);
}

Box2D mirror_box(const Box2D& box, int image_width) {
    box.validate();
    return {static_cast<double>(image_width) - box.xmax,
            static_cast<double>(image_width) - box.xmin, box.ymin, box.ymax};
}

}  // namespace flowmotion
