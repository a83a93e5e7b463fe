#include "flowmotion/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>

#include <nlohmann/json.hpp>

#include "flowmotion/errors.hpp"

namespace flowmotion {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

void SceneRecord::validate() const {
    for (size_t i = 1; i < frames.size(); ++i) {
        if (frames[i - 1].timestamp_us >= frames[i].timestamp_us) {
            throw TemporalOrderError("scene '" + scene_id +
                                     "' frames are not strictly increasing in timestamp");
        }
    }
    for (const FrameRecord& frame : frames) {
        for (const Annotation& ann : frame.annotations) {
            if (ann.visibility < 0.0 || ann.visibility > 1.0) {
                throw ArgumentError("annotation visibility must be in [0, 1]");
            }
            if (ann.distance < 0.0) {
                throw ArgumentError("annotation distance must be non-negative");
            }
            if (ann.corners.size() != 8) {
                throw ArgumentError("annotation must carry 8 projected corners");
            }
        }
    }
}

void FilterCriteria::validate() const {
    if (min_distance > max_distance) {
        throw ArgumentError("distance range must satisfy min <= max");
    }
    if (min_visibility > max_visibility) {
        throw ArgumentError("visibility range must satisfy min <= max");
    }
}

const char* to_string(Split split) {
    return split == Split::Eval ? "Eval" : "Train";
}

Split split_from_string(const std::string& text) {
    if (text == "Train") return Split::Train;
    if (text == "Eval") return Split::Eval;
    throw ArgumentError("unknown split: " + text);
}

namespace {

std::string lowercase(const std::string& s) {
    std::string out = s;
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

}  // namespace

std::vector<SceneRecord> filter_scenes(const std::vector<SceneRecord>& scenes,
                                       const FilterCriteria& criteria) {
    criteria.validate();
    std::vector<SceneRecord> kept;
    for (const SceneRecord& scene : scenes) {
        const std::string description = lowercase(scene.description);
        bool excluded = false;
        for (const std::string& keyword : criteria.scene_exclusion_keywords) {
            if (!keyword.empty() && description.find(lowercase(keyword)) != std::string::npos) {
                excluded = true;
                break;
            }
        }
        if (!excluded) kept.push_back(scene);
    }
    return kept;
}

std::vector<Annotation> filter_annotations(const FrameRecord& frame,
                                           const FilterCriteria& criteria) {
    criteria.validate();
    std::vector<Annotation> kept;
    for (const Annotation& ann : frame.annotations) {
        if (criteria.categories.count(ann.category) == 0) continue;
        if (ann.distance < criteria.min_distance || ann.distance > criteria.max_distance) continue;
        if (ann.visibility < criteria.min_visibility || ann.visibility > criteria.max_visibility) {
            continue;
        }
        kept.push_back(ann);
    }
    return kept;
}

std::vector<std::pair<size_t, size_t>> build_pairs(const SceneRecord& scene, PairMode mode) {
    std::vector<std::pair<size_t, size_t>> pairs;
    if (mode.kind == PairMode::Kind::KeyframesOnly) {
        std::vector<size_t> keyframes;
        for (size_t i = 0; i < scene.frames.size(); ++i) {
            if (scene.frames[i].is_keyframe) keyframes.push_back(i);
        }
        for (size_t i = 0; i + 1 < keyframes.size(); ++i) {
            pairs.emplace_back(keyframes[i], keyframes[i + 1]);
        }
        return pairs;
    }
    if (mode.interval < 1) {
        throw ArgumentError("pair interval must be >= 1");
    }
    const size_t n = static_cast<size_t>(mode.interval);
    for (size_t i = 0; i + n < scene.frames.size(); i += n) {
        pairs.emplace_back(i, i + n);
    }
    return pairs;
}

std::vector<TrackedObject> tracked_objects(const SceneRecord& scene) {
    std::map<std::string, TrackedObject> by_id;
    for (const FrameRecord& frame : scene.frames) {
        for (const Annotation& ann : frame.annotations) {
            TrackedObject& obj = by_id[ann.object_id];
            if (obj.observations.empty()) {
                obj.object_id = ann.object_id;
                obj.category = ann.category;
            }
            obj.observations.push_back(
                {frame.timestamp_us, ann.position, ann.corners, ann.visibility, frame.is_keyframe});
        }
    }
    std::vector<TrackedObject> out;
    out.reserve(by_id.size());
    for (auto& [id, obj] : by_id) {
        out.push_back(std::move(obj));
    }
    return out;
}

namespace {

// Index of the observation at exactly this timestamp, or npos.
size_t observation_at(const TrackedObject& obj, int64_t t_us) {
    for (size_t i = 0; i < obj.observations.size(); ++i) {
        if (obj.observations[i].timestamp_us == t_us) return i;
    }
    return static_cast<size_t>(-1);
}

bool annotation_passes(const Annotation& ann, const FilterCriteria& criteria) {
    return criteria.categories.count(ann.category) > 0 && ann.distance >= criteria.min_distance &&
           ann.distance <= criteria.max_distance && ann.visibility >= criteria.min_visibility &&
           ann.visibility <= criteria.max_visibility;
}

const Annotation* find_annotation(const FrameRecord& frame, const std::string& object_id) {
    for (const Annotation& ann : frame.annotations) {
        if (ann.object_id == object_id) return &ann;
    }
    return nullptr;
}

}  // namespace

std::vector<SampleRecord> build_samples(const SceneRecord& scene, PairMode mode,
                                        const FilterCriteria& criteria) {
    scene.validate();
    criteria.validate();
    const std::vector<TrackedObject> objects = tracked_objects(scene);
    const std::vector<std::pair<size_t, size_t>> pairs = build_pairs(scene, mode);

    std::vector<SampleRecord> samples;
    for (const auto& [a, b] : pairs) {
        const FrameRecord& frame_a = scene.frames[a];
        const FrameRecord& frame_b = scene.frames[b];

        for (const TrackedObject& obj : objects) {
            Box2D roi_box;
            MotionLabel label;

            if (frame_a.is_keyframe) {
                const Annotation* ann = find_annotation(frame_a, obj.object_id);
                if (!ann || !annotation_passes(*ann, criteria)) continue;
                const size_t at = observation_at(obj, frame_a.timestamp_us);
                try {
                    label = label_object(obj, at);
                } catch (const InsufficientTrackError&) {
                    continue;  // track ends here; nothing to pair with
                }
                roi_box = box_from_corners(ann->corners);
            } else {
                // Non-keyframe: box by interpolation between the surrounding
                // keyframe observations, label propagated from the previous one.
                size_t prev = static_cast<size_t>(-1);
                size_t next = static_cast<size_t>(-1);
                for (size_t i = 0; i < obj.observations.size(); ++i) {
                    const Observation& obs = obj.observations[i];
                    if (!obs.is_keyframe) continue;
                    if (obs.timestamp_us <= frame_a.timestamp_us) prev = i;
                    if (obs.timestamp_us > frame_a.timestamp_us) {
                        next = i;
                        break;
                    }
                }
                if (prev == static_cast<size_t>(-1) || next == static_cast<size_t>(-1)) continue;

                const Observation& obs_prev = obj.observations[prev];
                const Observation& obs_next = obj.observations[next];
                // Filter on the keyframe annotation the label comes from.
                bool passes = false;
                for (const FrameRecord& frame : scene.frames) {
                    if (frame.timestamp_us != obs_prev.timestamp_us) continue;
                    if (const Annotation* ann = find_annotation(frame, obj.object_id)) {
                        passes = annotation_passes(*ann, criteria);
                    }
                    break;
                }
                if (!passes) continue;

                try {
                    label = label_object(obj, prev);
                } catch (const InsufficientTrackError&) {
                    continue;
                }
                roi_box = interpolate_box(box_from_corners(obs_prev.corners),
                                          obs_prev.timestamp_us,
                                          box_from_corners(obs_next.corners),
                                          obs_next.timestamp_us, frame_a.timestamp_us);
            }

            SampleRecord sample;
            sample.object_id = obj.object_id;
            sample.scene_id = scene.scene_id;
            sample.category = obj.category;
            sample.frame_a = a;
            sample.frame_b = b;
            sample.t_a_us = frame_a.timestamp_us;
            sample.t_b_us = frame_b.timestamp_us;
            sample.flow_path = frame_a.flow_ref;
            sample.roi_box = roi_box;
            sample.label = label;
            samples.push_back(std::move(sample));
        }
    }
    return samples;
}

void split_samples(std::vector<SampleRecord>& samples, double eval_fraction, uint64_t seed) {
    if (samples.empty()) {
        throw ArgumentError("cannot split an empty sample list");
    }
    if (!(eval_fraction > 0.0) || !(eval_fraction < 1.0)) {
        throw ArgumentError("eval_fraction must be in (0, 1)");
    }

    // Scene-atomic partition: shuffle scene order, then fill eval until the
    // target count is reached, keeping at least one scene in train.
    std::vector<std::string> scene_order;
    std::map<std::string, size_t> scene_counts;
    for (const SampleRecord& s : samples) {
        auto [it, inserted] = scene_counts.try_emplace(s.scene_id, 0);
        if (inserted) scene_order.push_back(s.scene_id);
        ++it->second;
    }

    Rng rng(seed);
    rng.shuffle(scene_order);

    const double target = eval_fraction * static_cast<double>(samples.size());
    std::set<std::string> eval_scenes;
    size_t eval_count = 0;
    for (const std::string& scene_id : scene_order) {
        if (static_cast<double>(eval_count) >= target) break;
        if (eval_scenes.size() + 1 >= scene_order.size()) break;  // keep one train scene
        eval_scenes.insert(scene_id);
        eval_count += scene_counts[scene_id];
    }

    for (SampleRecord& s : samples) {
        s.split = eval_scenes.count(s.scene_id) ? Split::Eval : Split::Train;
    }
}

std::pair<FlowField, MotionLabel> augment(const FlowField& roi, MotionLabel label, double p,
                                          Rng& rng) {
    if (p < 0.0 || p > 1.0) {
        throw ArgumentError("flip probability must be in [0, 1]");
    }
    if (rng.bernoulli(p)) {
        return {hflip(roi), label};
    }
    return {roi, label};
}

namespace {

std::string resolve_path(const fs::path& base_dir, const std::string& ref) {
    if (ref.empty()) return ref;
    fs::path p(ref);
    if (p.is_absolute()) return p.lexically_normal().string();
    return (base_dir / p).lexically_normal().string();
}

Annotation annotation_from_json(const json& j) {
    Annotation ann;
    ann.object_id = j.at("object_id").get<std::string>();
    ann.category = j.at("category").get<std::string>();
    const auto& corners = j.at("corners");
    if (!corners.is_array() || corners.size() != 8) {
        throw FormatError("annotation corners must be an array of 8 points");
    }
    for (const auto& c : corners) {
        ann.corners.push_back({c.at(0).get<double>(), c.at(1).get<double>()});
    }
    const auto& pos = j.at("position");
    ann.position = {pos.at(0).get<double>(), pos.at(1).get<double>(), pos.at(2).get<double>()};
    ann.visibility = j.at("visibility").get<double>();
    ann.distance = j.at("distance").get<double>();
    return ann;
}

ordered_json annotation_to_json(const Annotation& ann) {
    ordered_json j;
    j["object_id"] = ann.object_id;
    j["category"] = ann.category;
    ordered_json corners = ordered_json::array();
    for (const Point2D& c : ann.corners) {
        corners.push_back({c.x, c.y});
    }
    j["corners"] = std::move(corners);
    j["position"] = {ann.position.x, ann.position.y, ann.position.z};
    j["visibility"] = ann.visibility;
    j["distance"] = ann.distance;
    return j;
}

}  // namespace

SceneRecord read_scene(const std::string& meta_path) {
    std::ifstream in(meta_path);
    if (!in) {
        throw IoError("cannot open scene metadata: " + meta_path);
    }
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw FormatError("bad scene metadata json in " + meta_path + ": " + e.what());
    }

    // Resolve refs against the meta file's directory, absolutely, so scene
    // records stay valid when re-written into a different run directory.
    const fs::path base_dir = fs::absolute(fs::path(meta_path)).parent_path();
    SceneRecord scene;
    try {
        scene.scene_id = j.at("scene_id").get<std::string>();
        scene.description = j.value("description", std::string());
        if (j.contains("ego_positions")) {
            for (const auto& e : j["ego_positions"]) {
                scene.ego_positions.push_back(
                    {e.at(0).get<int64_t>(),
                     {e.at(1).get<double>(), e.at(2).get<double>(), e.at(3).get<double>()}});
            }
        }
        for (const auto& f : j.at("frames")) {
            FrameRecord frame;
            frame.timestamp_us = f.at("timestamp").get<int64_t>();
            frame.is_keyframe = f.at("is_keyframe").get<bool>();
            frame.image_ref = resolve_path(base_dir, f.value("image", std::string()));
            if (f.contains("flow") && !f["flow"].is_null()) {
                frame.flow_ref = resolve_path(base_dir, f["flow"].get<std::string>());
            }
            if (f.contains("annotations")) {
                for (const auto& a : f["annotations"]) {
                    frame.annotations.push_back(annotation_from_json(a));
                }
            }
            scene.frames.push_back(std::move(frame));
        }
    } catch (const json::exception& e) {
        throw FormatError("bad scene metadata in " + meta_path + ": " + e.what());
    }
    scene.validate();
    return scene;
}

void write_scene(const std::string& meta_path, const SceneRecord& scene) {
    scene.validate();
    ordered_json j;
    j["scene_id"] = scene.scene_id;
    j["description"] = scene.description;
    ordered_json ego = ordered_json::array();
    for (const EgoSample& e : scene.ego_positions) {
        ego.push_back({e.timestamp_us, e.position.x, e.position.y, e.position.z});
    }
    j["ego_positions"] = std::move(ego);
    ordered_json frames = ordered_json::array();
    for (const FrameRecord& frame : scene.frames) {
        ordered_json f;
        f["timestamp"] = frame.timestamp_us;
        f["is_keyframe"] = frame.is_keyframe;
        f["image"] = frame.image_ref;
        if (frame.flow_ref.empty()) {
            f["flow"] = nullptr;
        } else {
            f["flow"] = frame.flow_ref;
        }
        ordered_json anns = ordered_json::array();
        for (const Annotation& ann : frame.annotations) {
            anns.push_back(annotation_to_json(ann));
        }
        f["annotations"] = std::move(anns);
        frames.push_back(std::move(f));
    }
    j["frames"] = std::move(frames);

    std::ofstream out(meta_path, std::ios::trunc);
    if (!out) {
        throw IoError("cannot write scene metadata: " + meta_path);
    }
    out << j.dump(2) << "\n";
}

std::vector<SampleRecord> read_manifest(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open manifest: " + path);
    }
    std::vector<SampleRecord> samples;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
            SampleRecord s;
            s.object_id = j.at("object_id").get<std::string>();
            s.scene_id = j.at("scene_id").get<std::string>();
            s.category = j.value("category", std::string());
            s.frame_a = j.at("frame_a").get<size_t>();
            s.frame_b = j.at("frame_b").get<size_t>();
            s.t_a_us = j.at("t_a").get<int64_t>();
            s.t_b_us = j.at("t_b").get<int64_t>();
            s.flow_path = j.value("flow", std::string());
            const auto& box = j.at("roi_box");
            s.roi_box = {box.at(0).get<double>(), box.at(1).get<double>(), box.at(2).get<double>(),
                         box.at(3).get<double>()};
            s.label = motion_label_from_string(j.at("label").get<std::string>());
            s.split = split_from_string(j.value("split", "Train"));
            s.roi_path = j.value("roi", std::string());
            samples.push_back(std::move(s));
        } catch (const json::exception& e) {
            throw FormatError("bad manifest line " + std::to_string(line_no) + " in " + path +
                              ": " + e.what());
        }
    }
    return samples;
}

void write_manifest(const std::string& path, const std::vector<SampleRecord>& samples) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) {
        throw IoError("cannot write manifest: " + path);
    }
    for (const SampleRecord& s : samples) {
        ordered_json j;
        j["object_id"] = s.object_id;
        j["scene_id"] = s.scene_id;
        j["category"] = s.category;
        j["frame_a"] = s.frame_a;
        j["frame_b"] = s.frame_b;
        j["t_a"] = s.t_a_us;
        j["t_b"] = s.t_b_us;
        j["flow"] = s.flow_path;
        j["roi_box"] = {s.roi_box.xmin, s.roi_box.xmax, s.roi_box.ymin, s.roi_box.ymax};
        j["label"] = to_string(s.label);
        j["split"] = to_string(s.split);
        if (!s.roi_path.empty()) {
            j["roi"] = s.roi_path;
        }
        out << j.dump() << "\n";
    }
}

}  // namespace flowmotion
