// flowmotion: optical-flow motion classification pipeline.
//
// Subcommands mirror the pipeline stages so every intermediate artifact
// (scenes, flow files, manifests, ROI tensors, checkpoints, metrics) is
// inspectable and cacheable on disk.

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <nlohmann/json.hpp>

#include "flowmotion/bbox.hpp"
#include "flowmotion/checkpoint.hpp"
#include "flowmotion/colorwheel.hpp"
#include "flowmotion/dataset.hpp"
#include "flowmotion/errors.hpp"
#include "flowmotion/horn_schunck.hpp"
#include "flowmotion/image.hpp"
#include "flowmotion/metrics.hpp"
#include "flowmotion/npy.hpp"
#include "flowmotion/synth.hpp"
#include "flowmotion/train.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;
using namespace flowmotion;

namespace {

// ---------------------------------------------------------------------------
// logging
// ---------------------------------------------------------------------------

enum class LogLevel { Error = 0, Warn = 1, Info = 2, Debug = 3 };

LogLevel log_level() {
    static LogLevel level = [] {
        const char* env = std::getenv("FLOWMOTION_LOG");
        if (!env) return LogLevel::Info;
        const std::string v(env);
        if (v == "error") return LogLevel::Error;
        if (v == "warn") return LogLevel::Warn;
        if (v == "debug") return LogLevel::Debug;
        return LogLevel::Info;
    }();
    return level;
}

void log_info(const std::string& msg) {
    if (log_level() >= LogLevel::Info) std::cerr << "[info] " << msg << "\n";
}

void log_warn(const std::string& msg) {
    if (log_level() >= LogLevel::Warn) std::cerr << "[warn] " << msg << "\n";
}

// ---------------------------------------------------------------------------
// run directory helpers
// ---------------------------------------------------------------------------

void write_run_config(const std::string& out_dir, const std::string& subcommand,
                      const ordered_json& resolved) {
    ordered_json run;
    run["subcommand"] = subcommand;
    run["config"] = resolved;
    std::ofstream out(fs::path(out_dir) / "run.json");
    if (!out) throw IoError("cannot write run config in " + out_dir);
    out << run.dump(2) << "\n";
}

std::vector<std::string> discover_scene_metas(const std::string& root) {
    std::vector<std::string> metas;
    const fs::path root_path(root);
    if (fs::exists(root_path / "meta.json")) {
        metas.push_back((root_path / "meta.json").string());
        return metas;
    }
    if (!fs::is_directory(root_path)) {
        throw IoError("scene root does not exist: " + root);
    }
    for (const auto& entry : fs::directory_iterator(root_path)) {
        if (entry.is_directory() && fs::exists(entry.path() / "meta.json")) {
            metas.push_back((entry.path() / "meta.json").string());
        }
    }
    std::sort(metas.begin(), metas.end());
    if (metas.empty()) {
        throw IoError("no scene meta.json found under " + root);
    }
    return metas;
}

PairMode parse_pair_mode(const std::string& text) {
    if (text == "keyframes") return PairMode::keyframes();
    if (text.rfind("every:", 0) == 0) {
        const int n = std::stoi(text.substr(6));
        return PairMode::every_n(n);
    }
    throw ArgumentError("pair mode must be 'keyframes' or 'every:N', got '" + text + "'");
}

std::vector<int> parse_int_list(const std::string& text) {
    std::vector<int> out;
    std::string token;
    for (char c : text + ",") {
        if (c == ',') {
            if (!token.empty()) out.push_back(std::stoi(token));
            token.clear();
        } else {
            token += c;
        }
    }
    return out;
}

std::set<std::string> parse_string_set(const std::string& text) {
    std::set<std::string> out;
    std::string token;
    for (char c : text + ",") {
        if (c == ',') {
            if (!token.empty()) out.insert(token);
            token.clear();
        } else {
            token += c;
        }
    }
    return out;
}

// Boxes on a frame: annotations when the frame is a keyframe, linear
// interpolation between the surrounding keyframe observations otherwise.
std::vector<std::pair<std::string, Box2D>> boxes_at_frame(const SceneRecord& scene,
                                                          const std::vector<TrackedObject>& objects,
                                                          size_t frame_idx) {
    std::vector<std::pair<std::string, Box2D>> boxes;
    const FrameRecord& frame = scene.frames[frame_idx];
    if (frame.is_keyframe) {
        for (const Annotation& ann : frame.annotations) {
            boxes.emplace_back(ann.object_id, box_from_corners(ann.corners));
        }
        return boxes;
    }
    for (const TrackedObject& obj : objects) {
        const Observation* prev = nullptr;
        const Observation* next = nullptr;
        for (const Observation& obs : obj.observations) {
            if (!obs.is_keyframe) continue;
            if (obs.timestamp_us <= frame.timestamp_us) prev = &obs;
            if (obs.timestamp_us > frame.timestamp_us && !next) next = &obs;
        }
        if (!prev || !next) continue;
        boxes.emplace_back(obj.object_id,
                           interpolate_box(box_from_corners(prev->corners), prev->timestamp_us,
                                           box_from_corners(next->corners), next->timestamp_us,
                                           frame.timestamp_us));
    }
    return boxes;
}

// ---------------------------------------------------------------------------
// subcommands
// ---------------------------------------------------------------------------

int cmd_synth(const std::string& config_path, const std::string& out_dir, int64_t seed_override) {
    std::ifstream in(config_path);
    if (!in) throw IoError("cannot open synth config: " + config_path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw FormatError(std::string("bad synth config: ") + e.what());
    }

    std::vector<SynthSceneConfig> configs;
    if (j.contains("scenes")) {
        for (const auto& scene_json : j["scenes"]) {
            configs.push_back(synth_config_from_json(scene_json.dump()));
        }
    } else {
        configs.push_back(synth_config_from_json(j.dump()));
    }

    fs::create_directories(out_dir);
    ordered_json resolved = ordered_json::array();
    for (size_t i = 0; i < configs.size(); ++i) {
        SynthSceneConfig& cfg = configs[i];
        if (seed_override >= 0) {
            cfg.seed = static_cast<uint64_t>(seed_override) + i;
        }
        SynthScene scene = generate(cfg);
        const std::string scene_dir = (fs::path(out_dir) / cfg.scene_id).string();
        write_scene_dir(scene_dir, scene);
        resolved.push_back(ordered_json::parse(synth_config_json(cfg)));
        log_info("wrote scene " + cfg.scene_id + " (" + std::to_string(cfg.frames) + " frames, " +
                 std::to_string(cfg.objects.size()) + " objects)");
    }
    ordered_json run;
    run["scenes"] = std::move(resolved);
    write_run_config(out_dir, "synth", run);
    return 0;
}

int cmd_flow(const std::string& scenes_root, const std::string& out_dir, const HsConfig& hs,
             const std::string& pairs_text) {
    const PairMode mode = parse_pair_mode(pairs_text);
    fs::create_directories(out_dir);

    for (const std::string& meta : discover_scene_metas(scenes_root)) {
        SceneRecord scene = read_scene(meta);
        const fs::path scene_out = fs::path(out_dir) / scene.scene_id;
        fs::create_directories(scene_out / "flow");

        const auto pairs = build_pairs(scene, mode);
        if (pairs.empty()) {
            log_warn("scene " + scene.scene_id + " has no frame pairs in mode '" + pairs_text +
                     "'");
        }
        for (const auto& [a, b] : pairs) {
            const GrayImage img_a = read_image_gray(scene.frames[a].image_ref);
            const GrayImage img_b = read_image_gray(scene.frames[b].image_ref);
            const FlowField flow = estimate_flow(img_a, img_b, hs);

            char name[64];
            std::snprintf(name, sizeof(name), "flow/pair_%04zu.npy", a);
            write_npy_file((scene_out / name).string(), flow);
            scene.frames[a].flow_ref = name;
        }
        // Frames that head no pair keep no flow ref in the derived meta.
        for (size_t i = 0; i < scene.frames.size(); ++i) {
            bool heads_pair = false;
            for (const auto& [a, b] : pairs) {
                if (a == i) heads_pair = true;
            }
            if (!heads_pair) scene.frames[i].flow_ref.clear();
        }
        write_scene((scene_out / "meta.json").string(), scene);
        log_info("estimated flow for " + scene.scene_id + " (" + std::to_string(pairs.size()) +
                 " pairs)");
    }

    ordered_json resolved;
    resolved["scenes"] = scenes_root;
    resolved["alpha"] = hs.alpha;
    resolved["iterations"] = hs.iterations;
    resolved["pyramid_levels"] = hs.pyramid_levels;
    resolved["pairs"] = pairs_text;
    write_run_config(out_dir, "flow", resolved);
    return 0;
}

ordered_json criteria_json(const FilterCriteria& criteria) {
    ordered_json j;
    j["categories"] = criteria.categories;
    j["min_distance"] = criteria.min_distance;
    j["max_distance"] = criteria.max_distance;
    j["min_visibility"] = criteria.min_visibility;
    j["max_visibility"] = criteria.max_visibility;
    j["sensor"] = criteria.sensor;
    j["scene_exclusion_keywords"] = criteria.scene_exclusion_keywords;
    return j;
}

int cmd_filter(const std::string& scenes_root, const std::string& out_dir,
               const FilterCriteria& criteria, const std::string& pairs_text, double eval_fraction,
               uint64_t seed) {
    const PairMode mode = parse_pair_mode(pairs_text);
    fs::create_directories(out_dir);

    std::vector<SceneRecord> scenes;
    for (const std::string& meta : discover_scene_metas(scenes_root)) {
        scenes.push_back(read_scene(meta));
    }
    const size_t before = scenes.size();
    scenes = filter_scenes(scenes, criteria);
    log_info(std::to_string(scenes.size()) + " of " + std::to_string(before) +
             " scenes kept after description filter");

    std::vector<SampleRecord> samples;
    for (const SceneRecord& scene : scenes) {
        auto scene_samples = build_samples(scene, mode, criteria);
        samples.insert(samples.end(), scene_samples.begin(), scene_samples.end());
    }
    if (samples.empty()) {
        throw ArgumentError("no samples survived filtering; check the criteria");
    }
    split_samples(samples, eval_fraction, seed);

    size_t eval_count = 0;
    for (const SampleRecord& s : samples) {
        if (s.split == Split::Eval) ++eval_count;
    }
    log_info(std::to_string(samples.size()) + " samples (" + std::to_string(eval_count) +
             " eval)");

    write_manifest((fs::path(out_dir) / "samples.ndjson").string(), samples);

    ordered_json resolved;
    resolved["scenes"] = scenes_root;
    resolved["criteria"] = criteria_json(criteria);
    resolved["pairs"] = pairs_text;
    resolved["eval_fraction"] = eval_fraction;
    resolved["seed"] = seed;
    write_run_config(out_dir, "filter", resolved);
    return 0;
}

int cmd_preprocess(const std::string& manifest_path, const std::string& out_dir) {
    std::vector<SampleRecord> samples = read_manifest(manifest_path);
    if (samples.empty()) {
        throw ArgumentError("manifest is empty: " + manifest_path);
    }
    fs::create_directories(out_dir);

    for (size_t i = 0; i < samples.size(); ++i) {
        SampleRecord& s = samples[i];
        if (s.flow_path.empty()) {
            throw ArgumentError("sample " + std::to_string(i) + " has no flow file; run flow first");
        }
        const FlowField flow = read_npy_file(s.flow_path);
        const FlowField roi = preprocess_roi(flow, s.roi_box);
        char name[64];
        std::snprintf(name, sizeof(name), "roi_%06zu.npy", i);
        const std::string roi_path = (fs::path(out_dir) / name).string();
        write_npy_file(roi_path, roi);
        s.roi_path = roi_path;
    }
    write_manifest((fs::path(out_dir) / "rois.ndjson").string(), samples);
    log_info("preprocessed " + std::to_string(samples.size()) + " rois");

    ordered_json resolved;
    resolved["manifest"] = manifest_path;
    resolved["roi_size"] = kRoiSize;
    write_run_config(out_dir, "preprocess", resolved);
    return 0;
}

std::vector<LabeledRoi> load_rois(const std::vector<SampleRecord>& samples, Split split,
                                  bool all_splits) {
    std::vector<LabeledRoi> out;
    for (const SampleRecord& s : samples) {
        if (!all_splits && s.split != split) continue;
        if (s.roi_path.empty()) {
            throw ArgumentError("sample for object " + s.object_id +
                                " has no roi tensor; run preprocess first");
        }
        out.push_back({read_npy_file(s.roi_path), s.label});
    }
    return out;
}

ordered_json train_config_json(const TrainConfig& cfg) {
    ordered_json j;
    j["batch_size"] = cfg.batch_size;
    j["learning_rate"] = cfg.learning_rate;
    j["weight_decay"] = cfg.weight_decay;
    j["momentum"] = cfg.momentum;
    j["step_size"] = cfg.step_size;
    j["gamma"] = cfg.gamma;
    j["epochs"] = cfg.epochs;
    j["seed"] = cfg.seed;
    j["flip_probability"] = cfg.flip_probability;
    return j;
}

int cmd_train(const std::string& manifest_path, const std::string& out_dir, const NetConfig& net_cfg,
              const TrainConfig& train_cfg) {
    const std::vector<SampleRecord> samples = read_manifest(manifest_path);
    const std::vector<LabeledRoi> train_set = load_rois(samples, Split::Train, false);
    const std::vector<LabeledRoi> eval_set = load_rois(samples, Split::Eval, false);
    log_info("training on " + std::to_string(train_set.size()) + " samples, evaluating on " +
             std::to_string(eval_set.size()));

    fs::create_directories(out_dir);

    Net net(net_cfg);
    SgdOptimizer opt(train_cfg.momentum, train_cfg.weight_decay);
    const TrainResult result = train(net, train_set, eval_set, train_cfg, &opt);

    save_checkpoint((fs::path(out_dir) / "model.ckpt").string(), net, &opt.velocities());
    std::ofstream history(fs::path(out_dir) / "history.csv");
    if (!history) throw IoError("cannot write history.csv in " + out_dir);
    history << history_csv(result.history);

    if (!result.history.empty()) {
        const EpochStats& last = result.history.back();
        char line[160];
        std::snprintf(line, sizeof(line), "final epoch %d: loss %.4f, eval F1 %.2f", last.epoch,
                      last.train_loss, last.eval_f1);
        log_info(line);
    }

    ordered_json resolved;
    resolved["manifest"] = manifest_path;
    resolved["net"] = ordered_json::parse(net_config_json(net_cfg));
    resolved["train"] = train_config_json(train_cfg);
    write_run_config(out_dir, "train", resolved);
    return 0;
}

int cmd_eval(const std::string& checkpoint_path, const std::string& manifest_path,
             const std::string& out_dir, const std::string& split_text, double threshold) {
    LoadedCheckpoint loaded = load_checkpoint(checkpoint_path);
    const std::vector<SampleRecord> samples = read_manifest(manifest_path);
    const bool all_splits = split_text == "all";
    const Split split = all_splits ? Split::Eval : split_from_string(split_text);
    const std::vector<LabeledRoi> rois = load_rois(samples, split, all_splits);
    if (rois.empty()) {
        throw ArgumentError("no samples in split '" + split_text + "'");
    }

    std::vector<MotionLabel> preds, truths;
    for (const Prediction& p : predict_batch(loaded.net, rois, 64, threshold)) {
        preds.push_back(p.label);
    }
    for (const LabeledRoi& r : rois) {
        truths.push_back(r.label);
    }
    const Confusion c = confusion(preds, truths);
    const std::string report = metrics_report_json(c);

    fs::create_directories(out_dir);
    std::ofstream out(fs::path(out_dir) / "metrics.json");
    if (!out) throw IoError("cannot write metrics.json in " + out_dir);
    out << report;
    std::cout << report;

    ordered_json resolved;
    resolved["checkpoint"] = checkpoint_path;
    resolved["manifest"] = manifest_path;
    resolved["split"] = split_text;
    resolved["threshold"] = threshold;
    write_run_config(out_dir, "eval", resolved);
    return 0;
}

int cmd_infer(const std::string& checkpoint_path, const std::string& scene_root,
              const std::string& out_dir, double threshold) {
    LoadedCheckpoint loaded = load_checkpoint(checkpoint_path);
    fs::create_directories(out_dir);

    for (const std::string& meta : discover_scene_metas(scene_root)) {
        const SceneRecord scene = read_scene(meta);
        const std::vector<TrackedObject> objects = tracked_objects(scene);
        const fs::path scene_out = fs::path(out_dir) / scene.scene_id;
        fs::create_directories(scene_out);

        size_t annotated = 0;
        for (size_t i = 0; i < scene.frames.size(); ++i) {
            const FrameRecord& frame = scene.frames[i];
            if (frame.flow_ref.empty()) continue;
            const FlowField flow = read_npy_file(frame.flow_ref);
            const bool is_pgm =
                frame.image_ref.size() >= 4 &&
                frame.image_ref.substr(frame.image_ref.size() - 4) == ".pgm";
            RgbImage canvas =
                is_pgm ? gray_to_rgb(read_pgm(frame.image_ref)) : read_png(frame.image_ref);

            for (const auto& [object_id, box] : boxes_at_frame(scene, objects, i)) {
                const FlowField roi = preprocess_roi(flow, box);
                const Prediction pred = predict(loaded.net, roi, threshold);
                // Red marks moving, blue marks still.
                const uint8_t r = pred.label == MotionLabel::Moving ? 255 : 0;
                const uint8_t b = pred.label == MotionLabel::Moving ? 0 : 255;
                draw_rect(canvas, static_cast<int>(std::lround(box.xmin)),
                          static_cast<int>(std::lround(box.ymin)),
                          static_cast<int>(std::lround(box.xmax)),
                          static_cast<int>(std::lround(box.ymax)), r, 0, b);
            }
            char name[64];
            std::snprintf(name, sizeof(name), "frame_%04zu.png", i);
            write_png((scene_out / name).string(), canvas);
            ++annotated;
        }
        log_info("annotated " + std::to_string(annotated) + " frames of " + scene.scene_id);
    }

    ordered_json resolved;
    resolved["checkpoint"] = checkpoint_path;
    resolved["scene"] = scene_root;
    resolved["threshold"] = threshold;
    write_run_config(out_dir, "infer", resolved);
    return 0;
}

int cmd_render(const std::string& flow_path, const std::string& output_path, double max_magnitude) {
    const FlowField flow = read_npy_file(flow_path);
    const RgbImage image = render_colorwheel(flow, max_magnitude);
    if (const fs::path parent = fs::path(output_path).parent_path(); !parent.empty()) {
        fs::create_directories(parent);
    }
    write_png(output_path, image);
    log_info("rendered " + flow_path + " -> " + output_path);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"optical-flow motion classification pipeline"};
    app.require_subcommand(1);

    // synth ------------------------------------------------------------
    std::string synth_config;
    std::string synth_out = "runs/synth";
    int64_t synth_seed = -1;
    CLI::App* synth = app.add_subcommand("synth", "generate synthetic scenes");
    synth->add_option("--config", synth_config, "scene config json")->required();
    synth->add_option("--out", synth_out, "output directory");
    synth->add_option("--seed", synth_seed, "override scene seeds (scene i uses seed+i)");

    // flow -------------------------------------------------------------
    std::string flow_scenes;
    std::string flow_out = "runs/flow";
    std::string flow_pairs = "keyframes";
    HsConfig hs;
    CLI::App* flow = app.add_subcommand("flow", "estimate optical flow for frame pairs");
    flow->add_option("--scenes", flow_scenes, "scene directory (or root of scene dirs)")->required();
    flow->add_option("--out", flow_out, "output directory");
    flow->add_option("--pairs", flow_pairs, "pairing mode: keyframes | every:N");
    flow->add_option("--alpha", hs.alpha, "smoothness weight");
    flow->add_option("--iterations", hs.iterations, "Jacobi sweeps per level");
    flow->add_option("--levels", hs.pyramid_levels, "pyramid levels");

    // filter -----------------------------------------------------------
    std::string filter_scenes_root;
    std::string filter_out = "runs/filter";
    std::string filter_pairs = "keyframes";
    std::string filter_categories;
    std::string filter_exclude;
    FilterCriteria criteria;
    double eval_fraction = 0.108;
    uint64_t filter_seed = 0;
    CLI::App* filter = app.add_subcommand("filter", "build the filtered sample manifest");
    filter->add_option("--scenes", filter_scenes_root, "scene directory root")->required();
    filter->add_option("--out", filter_out, "output directory");
    filter->add_option("--pairs", filter_pairs, "pairing mode: keyframes | every:N");
    filter->add_option("--categories", filter_categories, "comma-separated category whitelist");
    filter->add_option("--min-distance", criteria.min_distance, "meters");
    filter->add_option("--max-distance", criteria.max_distance, "meters");
    filter->add_option("--min-visibility", criteria.min_visibility, "fraction");
    filter->add_option("--max-visibility", criteria.max_visibility, "fraction");
    filter->add_option("--exclude", filter_exclude, "comma-separated scene keywords");
    filter->add_option("--eval-fraction", eval_fraction, "target eval fraction");
    filter->add_option("--seed", filter_seed, "split shuffle seed");

    // preprocess ---------------------------------------------------------
    std::string pre_manifest;
    std::string pre_out = "runs/roi";
    CLI::App* preprocess = app.add_subcommand("preprocess", "crop and resize flow ROIs");
    preprocess->add_option("--manifest", pre_manifest, "sample manifest")->required();
    preprocess->add_option("--out", pre_out, "output directory");

    // train --------------------------------------------------------------
    std::string train_manifest;
    std::string train_out = "runs/train";
    std::string train_config_path;
    std::string stage_widths_text;
    std::string blocks_text;
    NetConfig net_cfg;
    TrainConfig train_cfg;
    CLI::App* train_cmd = app.add_subcommand("train", "train the classifier from scratch");
    train_cmd->add_option("--manifest", train_manifest, "roi manifest")->required();
    train_cmd->add_option("--out", train_out, "output directory");
    train_cmd->add_option("--config", train_config_path,
                          "json config with net/train sections; flags override it");
    train_cmd->add_option("--input-size", net_cfg.input_size, "net input size");
    train_cmd->add_option("--stem-channels", net_cfg.stem_channels, "stem width");
    train_cmd->add_option("--stage-widths", stage_widths_text, "comma list, e.g. 64,128,256,512");
    train_cmd->add_option("--blocks", blocks_text, "comma list, e.g. 2,2,2,2");
    train_cmd->add_option("--epochs", train_cfg.epochs, "training epochs");
    train_cmd->add_option("--batch-size", train_cfg.batch_size, "batch size");
    train_cmd->add_option("--lr", train_cfg.learning_rate, "base learning rate");
    train_cmd->add_option("--wd", train_cfg.weight_decay, "weight decay");
    train_cmd->add_option("--momentum", train_cfg.momentum, "SGD momentum");
    train_cmd->add_option("--step-size", train_cfg.step_size, "epochs per lr decay");
    train_cmd->add_option("--gamma", train_cfg.gamma, "lr decay factor");
    train_cmd->add_option("--seed", train_cfg.seed, "training seed");
    train_cmd->add_option("--flip-prob", train_cfg.flip_probability, "augmentation probability");

    // eval ---------------------------------------------------------------
    std::string eval_ckpt, eval_manifest;
    std::string eval_out = "runs/eval";
    std::string eval_split = "Eval";
    double eval_threshold = 0.5;
    CLI::App* eval_cmd = app.add_subcommand("eval", "evaluate a checkpoint on a manifest");
    eval_cmd->add_option("--checkpoint", eval_ckpt, "model checkpoint")->required();
    eval_cmd->add_option("--manifest", eval_manifest, "roi manifest")->required();
    eval_cmd->add_option("--out", eval_out, "output directory");
    eval_cmd->add_option("--split", eval_split, "Eval | Train | all");
    eval_cmd->add_option("--threshold", eval_threshold, "decision threshold");

    // infer --------------------------------------------------------------
    std::string infer_ckpt, infer_scene;
    std::string infer_out = "runs/infer";
    double infer_threshold = 0.5;
    CLI::App* infer = app.add_subcommand("infer", "annotate scene frames with predictions");
    infer->add_option("--checkpoint", infer_ckpt, "model checkpoint")->required();
    infer->add_option("--scene", infer_scene, "scene directory")->required();
    infer->add_option("--out", infer_out, "output directory");
    infer->add_option("--threshold", infer_threshold, "decision threshold");

    // render -------------------------------------------------------------
    std::string render_flow, render_output = "flow.png";
    double render_max = 0.0;
    CLI::App* render = app.add_subcommand("render", "render a flow file as a color wheel png");
    render->add_option("--flow", render_flow, "npy flow file")->required();
    render->add_option("--output", render_output, "output png path");
    render->add_option("--max-magnitude", render_max, "color scale (0 = auto)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (*synth) return cmd_synth(synth_config, synth_out, synth_seed);
        if (*flow) return cmd_flow(flow_scenes, flow_out, hs, flow_pairs);
        if (*filter) {
            if (!filter_categories.empty()) criteria.categories = parse_string_set(filter_categories);
            if (filter->count("--exclude")) {
                criteria.scene_exclusion_keywords = parse_string_set(filter_exclude);
            }
            return cmd_filter(filter_scenes_root, filter_out, criteria, filter_pairs, eval_fraction,
                              filter_seed);
        }
        if (*preprocess) return cmd_preprocess(pre_manifest, pre_out);
        if (*train_cmd) {
            if (!train_config_path.empty()) {
                // Precedence: flags > config file > defaults.
                std::ifstream in(train_config_path);
                if (!in) throw IoError("cannot open train config: " + train_config_path);
                json cfg_json;
                try {
                    in >> cfg_json;
                } catch (const json::exception& e) {
                    throw FormatError(std::string("bad train config: ") + e.what());
                }
                if (cfg_json.contains("net")) {
                    NetConfig from_file = net_config_from_json(cfg_json["net"].dump());
                    if (!train_cmd->count("--input-size")) net_cfg.input_size = from_file.input_size;
                    if (!train_cmd->count("--stem-channels")) {
                        net_cfg.stem_channels = from_file.stem_channels;
                    }
                    if (!train_cmd->count("--stage-widths")) {
                        net_cfg.stage_widths = from_file.stage_widths;
                    }
                    if (!train_cmd->count("--blocks")) {
                        net_cfg.blocks_per_stage = from_file.blocks_per_stage;
                    }
                }
                if (cfg_json.contains("train")) {
                    const json& t = cfg_json["train"];
                    auto merge = [&](const char* flag, const char* key, auto& field) {
                        if (!train_cmd->count(flag) && t.contains(key)) {
                            field = t[key].get<std::decay_t<decltype(field)>>();
                        }
                    };
                    merge("--epochs", "epochs", train_cfg.epochs);
                    merge("--batch-size", "batch_size", train_cfg.batch_size);
                    merge("--lr", "learning_rate", train_cfg.learning_rate);
                    merge("--wd", "weight_decay", train_cfg.weight_decay);
                    merge("--momentum", "momentum", train_cfg.momentum);
                    merge("--step-size", "step_size", train_cfg.step_size);
                    merge("--gamma", "gamma", train_cfg.gamma);
                    merge("--seed", "seed", train_cfg.seed);
                    merge("--flip-prob", "flip_probability", train_cfg.flip_probability);
                }
            }
            if (!stage_widths_text.empty()) net_cfg.stage_widths = parse_int_list(stage_widths_text);
            if (!blocks_text.empty()) net_cfg.blocks_per_stage = parse_int_list(blocks_text);
            return cmd_train(train_manifest, train_out, net_cfg, train_cfg);
        }
        if (*eval_cmd) return cmd_eval(eval_ckpt, eval_manifest, eval_out, eval_split, eval_threshold);
        if (*infer) return cmd_infer(infer_ckpt, infer_scene, infer_out, infer_threshold);
        if (*render) return cmd_render(render_flow, render_output, render_max);
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
