#pragma once

#include <array>
#include <vector>

#include "flowmotion/flow_field.hpp"

namespace flowmotion {

struct Point2D {
    double x = 0.0;
    double y = 0.0;
};

// Axis-aligned box in continuous pixel coordinates. Coordinates may lie
// outside the image; cropping clamps to the source at sampling time.
struct Box2D {
    double xmin = 0.0;
    double xmax = 0.0;
    double ymin = 0.0;
    double ymax = 0.0;

    double width() const { return xmax - xmin; }
    double height() const { return ymax - ymin; }
    double center_x() const { return 0.5 * (xmin + xmax); }
    double center_y() const { return 0.5 * (ymin + ymax); }

    bool operator==(const Box2D& other) const = default;

    // Throws ArgumentError if ordering or finiteness is violated.
    void validate() const;
};

// Hull of the 8 projected corners of a 3D box: min/max of x and of y.
Box2D box_from_corners(const std::vector<Point2D>& corners);

// Square box with side max(width, height) and the same center.
Box2D squarify(const Box2D& box);

// Same center, each side multiplied by factor.
Box2D expand(const Box2D& box, double factor = 3.0);

// Integer crop window from a continuous box, rounding each edge
// half-away-from-zero. Pixels outside the source replicate the nearest
// edge pixel. Throws DegenerateBoxError if the window rounds to zero area.
FlowField crop_edge_padded(const FlowField& field, const Box2D& box);

constexpr int kRoiSize = 224;

// Full ROI chain: squarify -> x3 -> edge-padded crop -> 224x224 resize.
FlowField preprocess_roi(const FlowField& field, const Box2D& raw_box);

// Mirror a box across the vertical axis of an image of the given width,
// matching what hflip does to the field.
Box2D mirror_box(const Box2D& box, int image_width);

}  // namespace flowmotion
