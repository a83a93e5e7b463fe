#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "flowmotion/bbox.hpp"

namespace flowmotion {

enum class MotionLabel : uint8_t { Still = 0, Moving = 1 };

const char* to_string(MotionLabel label);
MotionLabel motion_label_from_string(const std::string& text);

struct Vec3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;
};

// One time point of an annotated object.
struct Observation {
    int64_t timestamp_us = 0;
    Vec3 position;                    // global frame, meters
    std::vector<Point2D> corners;     // 8 projected 2D points
    double visibility = 1.0;          // fraction in [0, 1]
    bool is_keyframe = true;
};

struct TrackedObject {
    std::string object_id;
    std::string category;
    std::vector<Observation> observations;  // strictly increasing timestamps

    void validate() const;
};

constexpr double kMovingSpeedThreshold = 2.0;  // m/s

// Component-wise (p2 - p1) / ((t2 - t1) * 1e-6 s). Requires t2 > t1.
Vec3 velocity(const Vec3& p1, const Vec3& p2, int64_t t1_us, int64_t t2_us);

// Moving iff speed >= threshold (inclusive).
MotionLabel classify_motion(double speed_mps, double threshold_mps = kMovingSpeedThreshold);

// Label at keyframe observation `at` from the planar (x, y) speed between
// it and the next keyframe observation (forward difference).
MotionLabel label_object(const TrackedObject& obj, size_t at,
                         double threshold_mps = kMovingSpeedThreshold);

// Linear interpolation of each coordinate between two keyframe boxes.
// Requires t_a < t_b and t within [t_a, t_b].
Box2D interpolate_box(const Box2D& box_a, int64_t t_a_us, const Box2D& box_b, int64_t t_b_us,
                      int64_t t_us);

struct KeyframeLabel {
    int64_t timestamp_us = 0;
    MotionLabel label = MotionLabel::Still;
};

// Label of the latest keyframe whose timestamp <= query_t.
MotionLabel propagate_label(const std::vector<KeyframeLabel>& keyframe_labels, int64_t query_t_us);

}  // namespace flowmotion
