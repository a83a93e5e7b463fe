#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "flowmotion/bbox.hpp"
#include "flowmotion/labeling.hpp"
#include "flowmotion/rng.hpp"

namespace flowmotion {

struct Annotation {
    std::string object_id;
    std::string category;
    std::vector<Point2D> corners;  // 8 projected 2D points
    Vec3 position;                 // global frame, meters
    double visibility = 1.0;
    double distance = 0.0;         // meters from ego
};

struct FrameRecord {
    int64_t timestamp_us = 0;
    bool is_keyframe = true;
    std::string image_ref;
    std::string flow_ref;  // empty when no flow has been produced yet
    std::vector<Annotation> annotations;
};

struct EgoSample {
    int64_t timestamp_us = 0;
    Vec3 position;
};

struct SceneRecord {
    std::string scene_id;
    std::string description;
    std::vector<EgoSample> ego_positions;
    std::vector<FrameRecord> frames;

    void validate() const;
};

// Table-style dataset filter. Defaults follow the seven vehicle categories,
// 30-70 m, 80-100% visibility, front camera, and the night/rain/lightning
// scene exclusions.
struct FilterCriteria {
    std::set<std::string> categories = {
        "vehicle.car",         "vehicle.emergency.ambulance", "vehicle.emergency.police",
        "vehicle.truck",       "vehicle.bus.bendy",           "vehicle.bus.rigid",
        "vehicle.construction"};
    double min_distance = 30.0;
    double max_distance = 70.0;
    double min_visibility = 0.8;
    double max_visibility = 1.0;
    std::string sensor = "CAM_FRONT";
    std::set<std::string> scene_exclusion_keywords = {"night", "rain", "lightning"};

    void validate() const;
};

enum class Split : uint8_t { Train = 0, Eval = 1 };

const char* to_string(Split split);
Split split_from_string(const std::string& text);

struct SampleRecord {
    std::string object_id;
    std::string scene_id;
    std::string category;
    size_t frame_a = 0;
    size_t frame_b = 0;
    int64_t t_a_us = 0;
    int64_t t_b_us = 0;
    std::string flow_path;
    Box2D roi_box;
    MotionLabel label = MotionLabel::Still;
    Split split = Split::Train;
    std::string roi_path;  // set by the preprocessing stage
};

// Keeps scenes whose description contains none of the exclusion keywords
// (case-insensitive substring match).
std::vector<SceneRecord> filter_scenes(const std::vector<SceneRecord>& scenes,
                                       const FilterCriteria& criteria);

// Closed-interval category/distance/visibility filter.
std::vector<Annotation> filter_annotations(const FrameRecord& frame,
                                           const FilterCriteria& criteria);

struct PairMode {
    enum class Kind : uint8_t { KeyframesOnly, EveryNFrames } kind = Kind::KeyframesOnly;
    int interval = 1;  // n for EveryNFrames

    static PairMode keyframes() { return {Kind::KeyframesOnly, 1}; }
    static PairMode every_n(int n) { return {Kind::EveryNFrames, n}; }
};

// KeyframesOnly pairs consecutive keyframes; EveryNFrames(n) pairs frame i
// with frame i+n for i = 0, n, 2n, ... Scenes too short yield an empty list.
std::vector<std::pair<size_t, size_t>> build_pairs(const SceneRecord& scene, PairMode mode);

// Groups annotations by object id into time-ordered tracks.
std::vector<TrackedObject> tracked_objects(const SceneRecord& scene);

// Filtered, labeled samples for each pair of a scene. Keyframe pairs label
// by forward difference between the pair's own keyframes; interval pairs on
// non-keyframes interpolate the box between the surrounding keyframes and
// propagate the label of the closest previous keyframe.
std::vector<SampleRecord> build_samples(const SceneRecord& scene, PairMode mode,
                                        const FilterCriteria& criteria);

// Deterministic scene-atomic split targeting the eval fraction.
void split_samples(std::vector<SampleRecord>& samples, double eval_fraction, uint64_t seed);

// With probability p returns (hflip(roi), label); the label is
// flip-invariant.
std::pair<FlowField, MotionLabel> augment(const FlowField& roi, MotionLabel label, double p,
                                          Rng& rng);

// Scene metadata JSON. Reading resolves relative image/flow paths against
// the meta file's directory.
SceneRecord read_scene(const std::string& meta_path);
void write_scene(const std::string& meta_path, const SceneRecord& scene);

// Newline-delimited JSON sample manifest.
std::vector<SampleRecord> read_manifest(const std::string& path);
void write_manifest(const std::string& path, const std::vector<SampleRecord>& samples);

}  // namespace flowmotion
