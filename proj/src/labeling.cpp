#include "flowmotion/labeling.hpp"

#include <algorithm>
#include <cmath>

#include "flowmotion/errors.hpp"

namespace flowmotion {

const char* to_string(MotionLabel label) {
    return label == MotionLabel::Moving ? "Moving" : "Still";
}

MotionLabel motion_label_from_string(const std::string& text) {
    if (text == "Moving") return MotionLabel::Moving;
    if (text == "Still") return MotionLabel::Still;
    throw ArgumentError("unknown motion label: " + text);
}

void TrackedObject::validate() const {
    if (observations.empty()) {
        throw ArgumentError("tracked object '" + object_id + "' has no observations");
    }
    for (size_t i = 0; i < observations.size(); ++i) {
        const Observation& obs = observations[i];
        if (obs.visibility < 0.0 || obs.visibility > 1.0) {
            throw ArgumentError("visibility must be in [0, 1]");
        }
        if (i > 0 && observations[i - 1].timestamp_us >= obs.timestamp_us) {
            throw TemporalOrderError("observations of '" + object_id +
                                     "' are not strictly increasing in timestamp");
        }
    }
}

Vec3 velocity(const Vec3& p1, const Vec3& p2, int64_t t1_us, int64_t t2_us) {
    if (t2_us <= t1_us) {
        throw TemporalOrderError("velocity requires t2 > t1 (got t1=" + std::to_string(t1_us) +
                                 ", t2=" + std::to_string(t2_us) + ")");
    }
    const double dt_s = static_cast<double>(t2_us - t1_us) * 1e-6;
    return {(p2.x - p1.x) / dt_s, (p2.y - p1.y) / dt_s, (p2.z - p1.z) / dt_s};
}

MotionLabel classify_motion(double speed_mps, double threshold_mps) {
    if (!(speed_mps >= 0.0)) {
        throw ArgumentError("speed must be non-negative, got " + std::to_string(speed_mps));
    }
    if (!(threshold_mps > 0.0)) {
        throw ArgumentError("threshold must be positive");
    }
    return speed_mps >= threshold_mps ? MotionLabel::Moving : MotionLabel::Still;
}

MotionLabel label_object(const TrackedObject& obj, size_t at, double threshold_mps) {
    obj.validate();
    if (at >= obj.observations.size()) {
        throw ArgumentError("observation index out of range");
    }
    if (!obj.observations[at].is_keyframe) {
        throw ArgumentError("label_object must start from a keyframe observation");
    }
    // Pair partner is the next keyframe observation (forward difference).
    size_t partner = at + 1;
    while (partner < obj.observations.size() && !obj.observations[partner].is_keyframe) {
        ++partner;
    }
    if (partner >= obj.observations.size()) {
        throw InsufficientTrackError("object '" + obj.object_id +
                                     "' has no keyframe observation after index " +
                                     std::to_string(at));
    }
    const Observation& a = obj.observations[at];
    const Observation& b = obj.observations[partner];
    const Vec3 vel = velocity(a.position, b.position, a.timestamp_us, b.timestamp_us);
    // Planar speed: vertical annotation jitter must not flip labels.
    const double speed = std::hypot(vel.x, vel.y);
    return classify_motion(speed, threshold_mps);
}

Box2D interpolate_box(const Box2D& box_a, int64_t t_a_us, const Box2D& box_b, int64_t t_b_us,
                      int64_t t_us) {
    box_a.validate();
    box_b.validate();
    if (t_a_us >= t_b_us) {
        throw TemporalOrderError("interpolation interval requires t_a < t_b");
    }
    if (t_us < t_a_us || t_us > t_b_us) {
        throw ExtrapolationError("query time " + std::to_string(t_us) + " outside [" +
                                 std::to_string(t_a_us) + ", " + std::to_string(t_b_us) + "]");
    }
    const double w = static_cast<double>(t_us - t_a_us) / static_cast<double>(t_b_us - t_a_us);
    auto lerp = [w](double a, double b) {
        // (1-w)a + wb reproduces both endpoints exactly; the clamp keeps
        // round-off inside the endpoint interval.
        return std::clamp((1.0 - w) * a + w * b, std::min(a, b), std::max(a, b));
    };
    return {lerp(box_a.xmin, box_b.xmin), lerp(box_a.xmax, box_b.xmax),
            lerp(box_a.ymin, box_b.ymin), lerp(box_a.ymax, box_b.ymax)};
}

MotionLabel propagate_label(const std::vector<KeyframeLabel>& keyframe_labels, int64_t query_t_us) {
    if (keyframe_labels.empty()) {
        throw ArgumentError("no keyframe labels to propagate from");
    }
    for (size_t i = 1; i < keyframe_labels.size(); ++i) {
        if (keyframe_labels[i - 1].timestamp_us >= keyframe_labels[i].timestamp_us) {
            throw TemporalOrderError("keyframe labels must be strictly increasing in timestamp");
        }
    }
    auto it = std::upper_bound(
        keyframe_labels.begin(), keyframe_labels.end(), query_t_us,
        [](int64_t t, const KeyframeLabel& k) { return t < k.timestamp_us; });
    if (it == keyframe_labels.begin()) {
        throw NoPredecessorError("query time " + std::to_string(query_t_us) +
                                 " precedes every keyframe");
    }
    return std::prev(it)->label;
}

}  // namespace flowmotion
