#include "flowmotion/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>

#include <nlohmann/json.hpp>

#include "flowmotion/errors.hpp"
#include "flowmotion/npy.hpp"
#include "flowmotion/rng.hpp"

namespace flowmotion {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

void SynthSceneConfig::validate() const {
    if (image_width < 8 || image_height < 8) {
        throw ConfigError("scene image must be at least 8x8");
    }
    if (frames < 2) {
        throw ConfigError("scene needs at least 2 frames");
    }
    if (keyframe_interval < 1) {
        throw ConfigError("keyframe_interval must be >= 1");
    }
    if (!(meters_per_pixel > 0.0) || !(frame_interval_s > 0.0)) {
        throw ConfigError("meters_per_pixel and frame_interval_s must be positive");
    }
    if (background_smoothness < 0) {
        throw ConfigError("background_smoothness must be non-negative");
    }
    for (size_t i = 0; i < objects.size(); ++i) {
        const SynthObjectConfig& obj = objects[i];
        if (!(obj.size_px > 1.0)) {
            throw ConfigError("object " + std::to_string(i) + " must be larger than 1 px");
        }
        for (int k = 0; k < frames; ++k) {
            const double cx = obj.x0 + k * obj.vx;
            const double cy = obj.y0 + k * obj.vy;
            if (cx - obj.size_px / 2.0 < 0.0 || cx + obj.size_px / 2.0 > image_width - 1 ||
                cy - obj.size_px / 2.0 < 0.0 || cy + obj.size_px / 2.0 > image_height - 1) {
                throw ConfigError("object " + std::to_string(i) + " leaves the frame at frame " +
                                  std::to_string(k));
            }
        }
    }
}

namespace {

// Smoothed uniform noise in [0.15, 0.85]; the texture every stage of the
// pipeline relies on for image gradients.
GrayImage smooth_noise(Rng& rng, int w, int h, int blur_passes) {
    GrayImage img(w, h);
    for (float& v : img.data) {
        v = static_cast<float>(rng.next_double());
    }
    GrayImage tmp(w, h);
    for (int pass = 0; pass < blur_passes; ++pass) {
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                const int xl = std::max(0, x - 1);
                const int xr = std::min(w - 1, x + 1);
                const int yu = std::max(0, y - 1);
                const int yd = std::min(h - 1, y + 1);
                tmp.at(x, y) = (img.at(xl, y) + img.at(xr, y) + img.at(x, yu) + img.at(x, yd) +
                                4.0f * img.at(x, y)) /
                               8.0f;
            }
        }
        std::swap(img, tmp);
    }
    float lo = img.data[0];
    float hi = img.data[0];
    for (float v : img.data) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    const float range = std::max(1e-6f, hi - lo);
    for (float& v : img.data) {
        v = 0.15f + 0.7f * (v - lo) / range;
    }
    return img;
}

float sample_bilinear(const GrayImage& img, double x, double y) {
    x = std::clamp(x, 0.0, static_cast<double>(img.width - 1));
    y = std::clamp(y, 0.0, static_cast<double>(img.height - 1));
    const int x0 = static_cast<int>(std::floor(x));
    const int y0 = static_cast<int>(std::floor(y));
    const int x1 = std::min(x0 + 1, img.width - 1);
    const int y1 = std::min(y0 + 1, img.height - 1);
    const double tx = x - x0;
    const double ty = y - y0;
    const double top = img.at(x0, y0) + (img.at(x1, y0) - img.at(x0, y0)) * tx;
    const double bot = img.at(x0, y1) + (img.at(x1, y1) - img.at(x0, y1)) * tx;
    return static_cast<float>(top + (bot - top) * ty);
}

struct ObjectState {
    double cx = 0.0;
    double cy = 0.0;
};

ObjectState object_at(const SynthObjectConfig& obj, int frame) {
    return {obj.x0 + frame * obj.vx, obj.y0 + frame * obj.vy};
}

bool covers(const SynthObjectConfig& obj, const ObjectState& state, int x, int y) {
    const double half = obj.size_px / 2.0;
    return x >= state.cx - half && x <= state.cx + half && y >= state.cy - half &&
           y <= state.cy + half;
}

std::vector<Point2D> box_corners(const SynthObjectConfig& obj, const ObjectState& state) {
    const double half = obj.size_px / 2.0;
    const Point2D tl{state.cx - half, state.cy - half};
    const Point2D tr{state.cx + half, state.cy - half};
    const Point2D bl{state.cx - half, state.cy + half};
    const Point2D br{state.cx + half, state.cy + half};
    // A zero-depth 3D box projects its front and rear faces onto the same
    // four points.
    return {tl, tr, bl, br, tl, tr, bl, br};
}

}  // namespace

MotionLabel intended_label(const SynthObjectConfig& obj, const SynthSceneConfig& cfg) {
    const double speed =
        std::hypot(obj.vx, obj.vy) * cfg.meters_per_pixel / cfg.frame_interval_s;
    return classify_motion(speed);
}

SynthScene generate(const SynthSceneConfig& cfg) {
    cfg.validate();
    Rng rng(cfg.seed);

    const int margin =
        static_cast<int>(std::ceil(cfg.frames * std::max(std::abs(cfg.ego_vx), std::abs(cfg.ego_vy)))) +
        4;
    const GrayImage canvas = smooth_noise(rng, cfg.image_width + 2 * margin,
                                          cfg.image_height + 2 * margin, cfg.background_smoothness);

    std::vector<GrayImage> textures;
    textures.reserve(cfg.objects.size());
    for (const SynthObjectConfig& obj : cfg.objects) {
        const int patch = static_cast<int>(std::ceil(obj.size_px)) + 4;
        GrayImage tex = smooth_noise(rng, patch, patch, cfg.background_smoothness);
        for (float& v : tex.data) {
            v = std::clamp(v + static_cast<float>(obj.contrast), 0.01f, 0.99f);
        }
        textures.push_back(std::move(tex));
    }

    SynthScene scene;
    scene.record.scene_id = cfg.scene_id;
    scene.record.description = cfg.description;

    // Rendered frames: background translated by the ego motion, objects
    // composited at their per-frame positions with subpixel sampling.
    for (int k = 0; k < cfg.frames; ++k) {
        GrayImage frame(cfg.image_width, cfg.image_height);
        const double bg_x = margin - k * cfg.ego_vx;
        const double bg_y = margin - k * cfg.ego_vy;
        for (int y = 0; y < cfg.image_height; ++y) {
            for (int x = 0; x < cfg.image_width; ++x) {
                frame.at(x, y) = sample_bilinear(canvas, x + bg_x, y + bg_y);
            }
        }
        for (size_t i = 0; i < cfg.objects.size(); ++i) {
            const SynthObjectConfig& obj = cfg.objects[i];
            const ObjectState state = object_at(obj, k);
            const double half = obj.size_px / 2.0;
            const int x_lo = static_cast<int>(std::ceil(state.cx - half));
            const int x_hi = static_cast<int>(std::floor(state.cx + half));
            const int y_lo = static_cast<int>(std::ceil(state.cy - half));
            const int y_hi = static_cast<int>(std::floor(state.cy + half));
            for (int y = y_lo; y <= y_hi; ++y) {
                for (int x = x_lo; x <= x_hi; ++x) {
                    frame.at(x, y) = sample_bilinear(textures[i], x - (state.cx - half) + 2.0,
                                                     y - (state.cy - half) + 2.0);
                }
            }
        }
        scene.frames.push_back(std::move(frame));
    }

    // Frame records, ego track, and keyframe annotations.
    for (int k = 0; k < cfg.frames; ++k) {
        const int64_t t_us = static_cast<int64_t>(std::llround(k * cfg.frame_interval_s * 1e6));
        const bool keyframe = (k % cfg.keyframe_interval) == 0;
        const Vec3 ego{k * cfg.ego_vx * cfg.meters_per_pixel,
                       k * cfg.ego_vy * cfg.meters_per_pixel, 0.0};
        scene.record.ego_positions.push_back({t_us, ego});

        FrameRecord frame;
        frame.timestamp_us = t_us;
        frame.is_keyframe = keyframe;
        if (keyframe) {
            for (size_t i = 0; i < cfg.objects.size(); ++i) {
                const SynthObjectConfig& obj = cfg.objects[i];
                const ObjectState state = object_at(obj, k);
                Annotation ann;
                ann.object_id = cfg.scene_id + "_obj" + std::to_string(i);
                ann.category = "vehicle.car";
                ann.corners = box_corners(obj, state);
                ann.position = {state.cx * cfg.meters_per_pixel, state.cy * cfg.meters_per_pixel,
                                0.0};
                ann.visibility = 1.0;
                ann.distance = std::hypot(ann.position.x - ego.x, ann.position.y - ego.y);
                frame.annotations.push_back(std::move(ann));
            }
        }
        scene.record.frames.push_back(std::move(frame));
    }

    // Exact ground-truth flow per consecutive keyframe pair: the object's
    // displacement inside its silhouette at the head frame, ego translation
    // elsewhere.
    std::vector<size_t> keyframes;
    for (size_t i = 0; i < scene.record.frames.size(); ++i) {
        if (scene.record.frames[i].is_keyframe) keyframes.push_back(i);
    }
    for (size_t p = 0; p + 1 < keyframes.size(); ++p) {
        const int a = static_cast<int>(keyframes[p]);
        const int b = static_cast<int>(keyframes[p + 1]);
        const double gap = static_cast<double>(b - a);
        FlowField flow(cfg.image_width, cfg.image_height);
        for (int y = 0; y < cfg.image_height; ++y) {
            for (int x = 0; x < cfg.image_width; ++x) {
                double u = gap * cfg.ego_vx;
                double v = gap * cfg.ego_vy;
                for (size_t i = 0; i < cfg.objects.size(); ++i) {
                    const SynthObjectConfig& obj = cfg.objects[i];
                    if (covers(obj, object_at(obj, a), x, y)) {
                        u = gap * obj.vx;
                        v = gap * obj.vy;
                        break;
                    }
                }
                flow.u(x, y) = static_cast<float>(u);
                flow.v(x, y) = static_cast<float>(v);
            }
        }
        scene.gt_flows.push_back(std::move(flow));
        scene.gt_flow_head_frames.push_back(keyframes[p]);
    }

    scene.objects = tracked_objects(scene.record);
    return scene;
}

void write_scene_dir(const std::string& dir, SynthScene& scene) {
    fs::create_directories(fs::path(dir) / "frames");
    fs::create_directories(fs::path(dir) / "flow");

    char name[64];
    for (size_t k = 0; k < scene.frames.size(); ++k) {
        std::snprintf(name, sizeof(name), "frames/frame_%04zu.png", k);
        write_png_gray((fs::path(dir) / name).string(), scene.frames[k]);
        scene.record.frames[k].image_ref = name;
    }
    for (size_t p = 0; p < scene.gt_flows.size(); ++p) {
        const size_t head = scene.gt_flow_head_frames[p];
        std::snprintf(name, sizeof(name), "flow/pair_%04zu.npy", head);
        write_npy_file((fs::path(dir) / name).string(), scene.gt_flows[p]);
        scene.record.frames[head].flow_ref = name;
    }
    write_scene((fs::path(dir) / "meta.json").string(), scene.record);
}

std::string synth_config_json(const SynthSceneConfig& cfg) {
    ordered_json j;
    j["scene_id"] = cfg.scene_id;
    j["description"] = cfg.description;
    j["image_width"] = cfg.image_width;
    j["image_height"] = cfg.image_height;
    j["background_smoothness"] = cfg.background_smoothness;
    ordered_json objs = ordered_json::array();
    for (const SynthObjectConfig& obj : cfg.objects) {
        ordered_json o;
        o["size_px"] = obj.size_px;
        o["x0"] = obj.x0;
        o["y0"] = obj.y0;
        o["vx"] = obj.vx;
        o["vy"] = obj.vy;
        o["contrast"] = obj.contrast;
        objs.push_back(std::move(o));
    }
    j["objects"] = std::move(objs);
    j["ego_vx"] = cfg.ego_vx;
    j["ego_vy"] = cfg.ego_vy;
    j["seed"] = cfg.seed;
    j["frames"] = cfg.frames;
    j["keyframe_interval"] = cfg.keyframe_interval;
    j["meters_per_pixel"] = cfg.meters_per_pixel;
    j["frame_interval_s"] = cfg.frame_interval_s;
    return j.dump(2);
}

SynthSceneConfig synth_config_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw FormatError(std::string("bad synth config json: ") + e.what());
    }
    SynthSceneConfig cfg;
    try {
        cfg.scene_id = j.value("scene_id", cfg.scene_id);
        cfg.description = j.value("description", cfg.description);
        cfg.image_width = j.value("image_width", cfg.image_width);
        cfg.image_height = j.value("image_height", cfg.image_height);
        cfg.background_smoothness = j.value("background_smoothness", cfg.background_smoothness);
        if (j.contains("objects")) {
            for (const auto& o : j["objects"]) {
                SynthObjectConfig obj;
                obj.size_px = o.value("size_px", obj.size_px);
                obj.x0 = o.value("x0", obj.x0);
                obj.y0 = o.value("y0", obj.y0);
                obj.vx = o.value("vx", obj.vx);
                obj.vy = o.value("vy", obj.vy);
                obj.contrast = o.value("contrast", obj.contrast);
                cfg.objects.push_back(obj);
            }
        }
        cfg.ego_vx = j.value("ego_vx", cfg.ego_vx);
        cfg.ego_vy = j.value("ego_vy", cfg.ego_vy);
        cfg.seed = j.value("seed", cfg.seed);
        cfg.frames = j.value("frames", cfg.frames);
        cfg.keyframe_interval = j.value("keyframe_interval", cfg.keyframe_interval);
        cfg.meters_per_pixel = j.value("meters_per_pixel", cfg.meters_per_pixel);
        cfg.frame_interval_s = j.value("frame_interval_s", cfg.frame_interval_s);
    } catch (const json::exception& e) {
        throw FormatError(std::string("bad synth config value: ") + e.what());
    }
    cfg.validate();
    return cfg;
}

}  // namespace flowmotion
