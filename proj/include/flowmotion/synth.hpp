#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "flowmotion/dataset.hpp"
#include "flowmotion/flow_field.hpp"
#include "flowmotion/image.hpp"

namespace flowmotion {

struct SynthObjectConfig {
    double size_px = 12.0;   // square side
    double x0 = 0.0;         // initial center
    double y0 = 0.0;
    double vx = 0.0;         // apparent velocity, px/frame
    double vy = 0.0;
    double contrast = 0.25;  // intensity offset against the background
};

struct SynthSceneConfig {
    std::string scene_id = "scene_0000";
    std::string description = "synthetic daylight scene";
    int image_width = 64;
    int image_height = 64;
    int background_smoothness = 6;  // blur passes over the noise canvas
    std::vector<SynthObjectConfig> objects;
    double ego_vx = 0.0;  // background translation, px/frame
    double ego_vy = 0.0;
    uint64_t seed = 0;
    int frames = 2;
    int keyframe_interval = 1;  // every k-th frame carries annotations
    double meters_per_pixel = 0.5;
    double frame_interval_s = 0.5;

    void validate() const;
};

// A fully generated scene: rendered frames, exact ground-truth flow for
// each consecutive-keyframe pair, the metadata record, and the tracks.
struct SynthScene {
    SceneRecord record;  // flow/image refs filled by write_scene_dir
    std::vector<GrayImage> frames;
    std::vector<FlowField> gt_flows;            // one per keyframe pair
    std::vector<size_t> gt_flow_head_frames;    // frame index each flow belongs to
    std::vector<TrackedObject> objects;
};

// Deterministic in cfg.seed. Throws ConfigError before rendering if any
// object would leave the image.
SynthScene generate(const SynthSceneConfig& cfg);

// Writes dir/{meta.json, frames/*.png, flow/*.npy} with relative refs.
void write_scene_dir(const std::string& dir, SynthScene& scene);

// Intended label of one object under the velocity threshold rule.
MotionLabel intended_label(const SynthObjectConfig& obj, const SynthSceneConfig& cfg);

std::string synth_config_json(const SynthSceneConfig& cfg);
SynthSceneConfig synth_config_from_json(const std::string& text);

}  // namespace flowmotion
