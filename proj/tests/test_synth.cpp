#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <set>

#include "flowmotion/errors.hpp"
#include "flowmotion/npy.hpp"
#include "flowmotion/synth.hpp"

using namespace flowmotion;
namespace fs = std::filesystem;

namespace {

SynthSceneConfig still_and_moving_config() {
    SynthSceneConfig cfg;
    cfg.scene_id = "scene_demo";
    cfg.image_width = 64;
    cfg.image_height = 64;
    cfg.seed = 7;
    cfg.frames = 3;
    cfg.meters_per_pixel = 0.5;
    cfg.frame_interval_s = 1.0;

    SynthObjectConfig still_obj;
    still_obj.size_px = 10;
    still_obj.x0 = 16;
    still_obj.y0 = 16;
    cfg.objects.push_back(still_obj);

    SynthObjectConfig moving_obj;
    moving_obj.size_px = 10;
    moving_obj.x0 = 20;
    moving_obj.y0 = 44;
    moving_obj.vx = 10.0;  // 10 px/frame * 0.5 m/px / 1 s = 5 m/s
    cfg.objects.push_back(moving_obj);
    return cfg;
}

}  // namespace

TEST_CASE("generation is bit-deterministic in the seed") {
    const SynthSceneConfig cfg = still_and_moving_config();
    const SynthScene a = generate(cfg);
    const SynthScene b = generate(cfg);
    REQUIRE(a.frames.size() == b.frames.size());
    for (size_t i = 0; i < a.frames.size(); ++i) {
        REQUIRE(a.frames[i] == b.frames[i]);
    }
    REQUIRE(a.gt_flows.size() == b.gt_flows.size());
    for (size_t i = 0; i < a.gt_flows.size(); ++i) {
        REQUIRE(a.gt_flows[i] == b.gt_flows[i]);
    }
}

TEST_CASE("static scene with zero ego motion has zero ground-truth flow") {
    SynthSceneConfig cfg;
    cfg.seed = 3;
    cfg.frames = 2;
    SynthObjectConfig obj;
    obj.size_px = 8;
    obj.x0 = 32;
    obj.y0 = 32;
    cfg.objects.push_back(obj);

    const SynthScene scene = generate(cfg);
    REQUIRE(scene.gt_flows.size() == 1);
    for (float c : scene.gt_flows[0].data) {
        REQUIRE(c == 0.0f);
    }
    // Frames are identical when nothing moves.
    CHECK(scene.frames[0] == scene.frames[1]);

    REQUIRE(scene.objects.size() == 1);
    CHECK(label_object(scene.objects[0], 0) == MotionLabel::Still);
}

TEST_CASE("object at 10 px/frame with 0.5 m/px and 1 s interval is Moving at 5 m/s") {
    const SynthSceneConfig cfg = still_and_moving_config();
    const SynthScene scene = generate(cfg);

    REQUIRE(scene.objects.size() == 2);
    const TrackedObject* moving = nullptr;
    const TrackedObject* still_obj = nullptr;
    for (const TrackedObject& obj : scene.objects) {
        if (obj.object_id == "scene_demo_obj1") moving = &obj;
        if (obj.object_id == "scene_demo_obj0") still_obj = &obj;
    }
    REQUIRE(moving != nullptr);
    REQUIRE(still_obj != nullptr);

    const Vec3 v = velocity(moving->observations[0].position, moving->observations[1].position,
                            moving->observations[0].timestamp_us,
                            moving->observations[1].timestamp_us);
    CHECK(std::hypot(v.x, v.y) == doctest::Approx(5.0).epsilon(1e-9));
    CHECK(label_object(*moving, 0) == MotionLabel::Moving);
    CHECK(label_object(*still_obj, 0) == MotionLabel::Still);
    CHECK(intended_label(cfg.objects[1], cfg) == MotionLabel::Moving);
    CHECK(intended_label(cfg.objects[0], cfg) == MotionLabel::Still);
}

TEST_CASE("labels from the labeling module always match intended labels") {
    SynthSceneConfig cfg;
    cfg.image_width = 96;
    cfg.image_height = 48;
    cfg.seed = 11;
    cfg.frames = 2;
    cfg.meters_per_pixel = 2.0;
    cfg.frame_interval_s = 1.0;
    // Speeds in m/s: 0, 1.5, 2 (exact threshold), 3 -> px/frame = speed / 2.
    const double speeds[] = {0.0, 1.5, 2.0, 3.0};
    for (int i = 0; i < 4; ++i) {
        SynthObjectConfig obj;
        obj.size_px = 8;
        obj.x0 = 12 + 24 * i;
        obj.y0 = 20;
        obj.vy = speeds[i] / 2.0;
        cfg.objects.push_back(obj);
    }

    const SynthScene scene = generate(cfg);
    REQUIRE(scene.objects.size() == 4);
    const MotionLabel expected[] = {MotionLabel::Still, MotionLabel::Still, MotionLabel::Moving,
                                    MotionLabel::Moving};
    for (int i = 0; i < 4; ++i) {
        const TrackedObject* obj = nullptr;
        for (const TrackedObject& o : scene.objects) {
            if (o.object_id == cfg.scene_id + "_obj" + std::to_string(i)) obj = &o;
        }
        REQUIRE(obj != nullptr);
        CHECK(label_object(*obj, 0) == expected[i]);
        CHECK(intended_label(cfg.objects[i], cfg) == expected[i]);
    }
}

TEST_CASE("ground-truth flow is piecewise constant per region") {
    SynthSceneConfig cfg;
    cfg.seed = 5;
    cfg.frames = 2;
    cfg.ego_vx = 1.0;
    cfg.ego_vy = -0.5;
    SynthObjectConfig obj;
    obj.size_px = 10;
    obj.x0 = 32;
    obj.y0 = 32;
    obj.vx = 3.0;
    obj.vy = 2.0;
    cfg.objects.push_back(obj);

    const SynthScene scene = generate(cfg);
    const FlowField& flow = scene.gt_flows[0];

    // Inside the silhouette at frame 0: object velocity.
    CHECK(flow.u(32, 32) == 3.0f);
    CHECK(flow.v(32, 32) == 2.0f);
    CHECK(flow.u(28, 29) == 3.0f);
    // Far corner: ego translation.
    CHECK(flow.u(2, 2) == 1.0f);
    CHECK(flow.v(2, 2) == -0.5f);
    // Exactly two distinct vectors exist.
    std::set<std::pair<float, float>> distinct;
    for (size_t i = 0; i < flow.pixel_count(); ++i) {
        distinct.insert({flow.data[i * 2], flow.data[i * 2 + 1]});
    }
    CHECK(distinct.size() == 2);
}

TEST_CASE("frames actually move the object texture by its velocity") {
    SynthSceneConfig cfg;
    cfg.seed = 13;
    cfg.frames = 2;
    SynthObjectConfig obj;
    obj.size_px = 9;
    obj.x0 = 20;
    obj.y0 = 32;
    obj.vx = 4.0;  // integer shift: frame 1 content is an exact copy
    cfg.objects.push_back(obj);

    const SynthScene scene = generate(cfg);
    // The object patch at frame 0 around (20, 32) appears at (24, 32) in frame 1.
    for (int dy = -4; dy <= 4; ++dy) {
        for (int dx = -4; dx <= 4; ++dx) {
            REQUIRE(scene.frames[0].at(20 + dx, 32 + dy) ==
                    doctest::Approx(scene.frames[1].at(24 + dx, 32 + dy)).epsilon(1e-6));
        }
    }
}

TEST_CASE("objects that leave the frame are rejected before rendering") {
    SynthSceneConfig cfg;
    cfg.frames = 5;
    SynthObjectConfig runaway;
    runaway.size_px = 10;
    runaway.x0 = 50;
    runaway.y0 = 32;
    runaway.vx = 5.0;  // exits the 64 px frame by frame 4
    cfg.objects.push_back(runaway);
    CHECK_THROWS_AS(generate(cfg), ConfigError);
}

TEST_CASE("keyframe interval marks frames and spaces ground-truth flow") {
    SynthSceneConfig cfg;
    cfg.seed = 17;
    cfg.frames = 5;
    cfg.keyframe_interval = 2;  // keyframes at 0, 2, 4
    SynthObjectConfig obj;
    obj.size_px = 8;
    obj.x0 = 20;
    obj.y0 = 32;
    obj.vx = 2.0;
    cfg.objects.push_back(obj);

    const SynthScene scene = generate(cfg);
    CHECK(scene.record.frames[0].is_keyframe);
    CHECK(!scene.record.frames[1].is_keyframe);
    CHECK(scene.record.frames[2].is_keyframe);
    // Non-keyframes carry no annotations.
    CHECK(scene.record.frames[1].annotations.empty());
    CHECK(scene.record.frames[0].annotations.size() == 1);

    // Flow per keyframe pair covers the 2-frame gap: displacement 4 px.
    REQUIRE(scene.gt_flows.size() == 2);
    CHECK(scene.gt_flows[0].u(20, 32) == 4.0f);
}

TEST_CASE("write_scene_dir produces a loadable scene tree") {
    const fs::path dir = fs::temp_directory_path() / "flowmotion_test_synth";
    fs::remove_all(dir);

    SynthSceneConfig cfg = still_and_moving_config();
    SynthScene scene = generate(cfg);
    write_scene_dir(dir.string(), scene);

    CHECK(fs::exists(dir / "meta.json"));
    CHECK(fs::exists(dir / "frames/frame_0000.png"));
    CHECK(fs::exists(dir / "flow/pair_0000.npy"));

    const SceneRecord loaded = read_scene((dir / "meta.json").string());
    REQUIRE(loaded.frames.size() == 3);
    CHECK(!loaded.frames[0].flow_ref.empty());
    CHECK(loaded.frames[2].flow_ref.empty());  // last frame heads no pair

    const FlowField flow = read_npy_file(loaded.frames[0].flow_ref);
    CHECK(flow == scene.gt_flows[0]);

    // The tree feeds the sample builder directly.
    FilterCriteria criteria;
    criteria.min_distance = 0.0;
    criteria.max_distance = 10'000.0;
    const auto samples = build_samples(loaded, PairMode::keyframes(), criteria);
    CHECK(samples.size() == 4);  // 2 objects x 2 keyframe pairs

    fs::remove_all(dir);
}

TEST_CASE("synth config json round-trip") {
    SynthSceneConfig cfg = still_and_moving_config();
    cfg.ego_vx = 0.25;
    const SynthSceneConfig back = synth_config_from_json(synth_config_json(cfg));
    CHECK(back.scene_id == cfg.scene_id);
    CHECK(back.image_width == cfg.image_width);
    CHECK(back.objects.size() == cfg.objects.size());
    CHECK(back.objects[1].vx == cfg.objects[1].vx);
    CHECK(back.ego_vx == 0.25);
    CHECK(back.seed == cfg.seed);
    CHECK(back.meters_per_pixel == cfg.meters_per_pixel);
}
