#define DOCTEST_CONFIG_IMPLEMENT
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include <nlohmann/json.hpp>

#include "flowmotion/dataset.hpp"
#include "flowmotion/npy.hpp"
#include "flowmotion/synth.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string g_binary;
fs::path g_root;

int run(const std::string& args) {
    const std::string cmd = g_binary + " " + args + " 2>/dev/null";
    return std::system(cmd.c_str());
}

int exit_code(int system_status) {
    return WIFEXITED(system_status) ? WEXITSTATUS(system_status) : -1;
}

void write_synth_config(const std::string& path) {
    json scenes = json::array();
    for (int s = 0; s < 2; ++s) {
        json scene;
        scene["scene_id"] = "scene_" + std::to_string(s);
        scene["image_width"] = 48;
        scene["image_height"] = 48;
        scene["frames"] = 2;
        scene["seed"] = 100 + s;
        scene["meters_per_pixel"] = 2.0;
        scene["frame_interval_s"] = 1.0;
        json objects = json::array();
        for (int i = 0; i < 2; ++i) {
            json obj;
            obj["size_px"] = 8;
            obj["x0"] = 12 + 22 * i;
            obj["y0"] = 24;
            obj["vx"] = i == 0 ? 0.0 : 2.0;  // 0 m/s vs 4 m/s
            objects.push_back(obj);
        }
        scene["objects"] = objects;
        scenes.push_back(scene);
    }
    json config;
    config["scenes"] = scenes;
    std::ofstream out(path);
    out << config.dump(2);
}

}  // namespace

TEST_CASE("pipeline subcommands chain end to end") {
    const fs::path root = g_root;
    write_synth_config((root / "synth.json").string());

    CHECK(exit_code(run("synth --config " + (root / "synth.json").string() + " --out " +
                        (root / "scenes").string())) == 0);
    CHECK(fs::exists(root / "scenes/scene_0/meta.json"));
    CHECK(fs::exists(root / "scenes/run.json"));

    CHECK(exit_code(run("flow --scenes " + (root / "scenes").string() + " --out " +
                        (root / "flow").string())) == 0);
    CHECK(fs::exists(root / "flow/scene_0/flow/pair_0000.npy"));
    CHECK(fs::exists(root / "flow/scene_0/meta.json"));

    CHECK(exit_code(run("filter --scenes " + (root / "flow").string() + " --out " +
                        (root / "filter").string() +
                        " --min-distance 0 --max-distance 100000 --eval-fraction 0.5 --seed 3")) ==
          0);
    CHECK(fs::exists(root / "filter/samples.ndjson"));
    const auto samples = flowmotion::read_manifest((root / "filter/samples.ndjson").string());
    CHECK(samples.size() == 4);  // 2 scenes x 2 objects x 1 pair

    CHECK(exit_code(run("preprocess --manifest " + (root / "filter/samples.ndjson").string() +
                        " --out " + (root / "roi").string())) == 0);
    CHECK(fs::exists(root / "roi/rois.ndjson"));
    CHECK(fs::exists(root / "roi/roi_000000.npy"));
    const flowmotion::FlowField roi =
        flowmotion::read_npy_file((root / "roi/roi_000000.npy").string());
    CHECK(roi.width == 224);
    CHECK(roi.height == 224);

    CHECK(exit_code(run("train --manifest " + (root / "roi/rois.ndjson").string() + " --out " +
                        (root / "train").string() +
                        " --stem-channels 4 --stage-widths 4 --blocks 1 --epochs 2" +
                        " --batch-size 4 --seed 9")) == 0);
    CHECK(fs::exists(root / "train/model.ckpt"));
    CHECK(fs::exists(root / "train/history.csv"));
    CHECK(fs::exists(root / "train/run.json"));

    CHECK(exit_code(run("eval --checkpoint " + (root / "train/model.ckpt").string() +
                        " --manifest " + (root / "roi/rois.ndjson").string() + " --out " +
                        (root / "eval").string() + " --split all")) == 0);
    CHECK(fs::exists(root / "eval/metrics.json"));
    std::ifstream metrics_in(root / "eval/metrics.json");
    json metrics;
    metrics_in >> metrics;
    CHECK(metrics.contains("f1_pct"));
    CHECK(metrics["tp"].get<int>() + metrics["fp"].get<int>() + metrics["fn"].get<int>() +
              metrics["tn"].get<int>() ==
          4);

    CHECK(exit_code(run("infer --checkpoint " + (root / "train/model.ckpt").string() +
                        " --scene " + (root / "flow/scene_0").string() + " --out " +
                        (root / "infer").string())) == 0);
    CHECK(fs::exists(root / "infer/scene_0/frame_0000.png"));

    CHECK(exit_code(run("render --flow " + (root / "flow/scene_0/flow/pair_0000.npy").string() +
                        " --output " + (root / "render/pair0.png").string())) == 0);
    CHECK(fs::exists(root / "render/pair0.png"));
}

TEST_CASE("train config file merges under flag precedence") {
    // Depends on the roi manifest produced by the pipeline test above.
    const fs::path manifest = g_root / "roi/rois.ndjson";
    REQUIRE(fs::exists(manifest));

    json cfg;
    cfg["net"] = {{"stem_channels", 4}, {"stage_widths", {4}}, {"blocks_per_stage", {1}}};
    cfg["train"] = {{"epochs", 3}, {"batch_size", 2}, {"seed", 11}};
    std::ofstream((g_root / "train_cfg.json").string()) << cfg.dump();

    // --epochs on the command line overrides the config file's 3.
    CHECK(exit_code(run("train --manifest " + manifest.string() + " --config " +
                        (g_root / "train_cfg.json").string() + " --out " +
                        (g_root / "train_cfgrun").string() + " --epochs 1")) == 0);

    std::ifstream run_json(g_root / "train_cfgrun/run.json");
    json resolved;
    run_json >> resolved;
    CHECK(resolved["config"]["train"]["epochs"] == 1);
    CHECK(resolved["config"]["train"]["batch_size"] == 2);
    CHECK(resolved["config"]["net"]["stem_channels"] == 4);

    std::ifstream history(g_root / "train_cfgrun/history.csv");
    std::string line;
    int lines = 0;
    while (std::getline(history, line)) ++lines;
    CHECK(lines == 2);  // header + 1 epoch
}

TEST_CASE("usage and module errors map to exit codes 2 and 1") {
    // Unknown flag -> usage error.
    CHECK(exit_code(run("synth --nonsense")) == 2);
    // Missing subcommand -> usage error.
    CHECK(exit_code(run(""))== 2);
    // Missing input file -> exit 2.
    CHECK(exit_code(run("render --flow /nonexistent/flow.npy --output " +
                        (g_root / "x.png").string())) == 2);
    // Well-formed call that fails in a module (empty manifest) -> exit 1.
    const fs::path empty_manifest = g_root / "empty.ndjson";
    std::ofstream(empty_manifest).close();
    CHECK(exit_code(run("preprocess --manifest " + empty_manifest.string() + " --out " +
                        (g_root / "pre_fail").string())) == 1);
}

int main(int argc, char** argv) {
    if (argc < 2) {
        std::fprintf(stderr, "usage: test_cli <flowmotion-binary> [doctest args]\n");
        return 1;
    }
    g_binary = argv[1];
    g_root = fs::temp_directory_path() / "flowmotion_cli_test";
    fs::remove_all(g_root);
    fs::create_directories(g_root);

    doctest::Context context;
    context.applyCommandLine(argc - 1, argv + 1);
    const int res = context.run();
    fs::remove_all(g_root);
    return res;
}
