// Exercises the installed binary end to end through std::system. Only built
// when the tools target is enabled; NIRSGAF_CLI_PATH points at the binary.
#ifdef NIRSGAF_CLI_PATH

#include <sys/wait.h>

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <string>

#include <doctest.h>
#include <nirsgaf/metrics.hpp>
#include <nirsgaf/nn_network.hpp>
#include <nlohmann/json.hpp>

#include "test_support.hpp"

using nlohmann::json;
namespace fs = std::filesystem;
using testsupport::TempDir;

namespace {

struct CmdResult {
    int code = -1;
    std::string output;  // stdout + stderr
};

CmdResult run_cli(const std::string& args) {
    static TempDir captures;
    static std::atomic<unsigned> counter{0};
    const std::string capture = captures.file("out_" + std::to_string(counter.fetch_add(1)));
    const std::string cmd =
        std::string("\"") + NIRSGAF_CLI_PATH + "\" " + args + " > \"" + capture + "\" 2>&1";
    const int rc = std::system(cmd.c_str());
    CmdResult r;
    r.code = WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
    r.output = testsupport::read_file(capture);
    return r;
}

// The one-conv-block 16x16 network used throughout the CLI chain.
std::string small_network_json() {
    nirsgaf::nn::NetworkSpec spec;
    spec.input_shape = {1, 16, 16};
    spec.l2_strength = 1e-4;
    nirsgaf::nn::LayerSpec conv;
    conv.kind = "conv2d";
    conv.out_channels = 4;
    conv.kernel = 3;
    conv.relu = true;
    nirsgaf::nn::LayerSpec pool;
    pool.kind = "maxpool";
    nirsgaf::nn::LayerSpec flat;
    flat.kind = "flatten";
    nirsgaf::nn::LayerSpec dense;
    dense.kind = "dense";
    dense.units = 3;
    nirsgaf::nn::LayerSpec sm;
    sm.kind = "softmax";
    spec.layers = {conv, pool, flat, dense, sm};
    return spec.to_json_text();
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("--help exits cleanly and names the subcommands") {
    const CmdResult r = run_cli("--help");
    CHECK(r.code == 0);
    for (const char* cmd : {"synth", "ingest", "preprocess", "features", "gaf", "train", "eval",
                            "classify", "pipeline"})
        CHECK_MESSAGE(r.output.find(cmd) != std::string::npos, "help lacks " << cmd);
}

TEST_CASE("usage mistakes exit with the config code") {
    CHECK(run_cli("").code == 2);              // a subcommand is required
    CHECK(run_cli("--bogus").code == 2);       // unknown flag
    CHECK(run_cli("pipeline run").code == 2);  // --config is required
    CHECK(run_cli("synth").code == 2);         // --out is required
    CHECK(run_cli("gaf encode --channel ch01").code == 2);  // --epochs is required
    CHECK(run_cli("pipeline run --config /nonexistent/cfg.json").code == 2);
}

TEST_CASE("missing data exits with the data code") {
    const CmdResult r = run_cli("ingest validate --dir /nonexistent/recording");
    CHECK(r.code == 3);
    CHECK(r.output.find("error:") != std::string::npos);
    CHECK(run_cli("classify --model /nonexistent/model.gnn1 --input /nonexistent/x.csv").code ==
          3);
}

TEST_CASE("the full command chain round trips") {
    TempDir tmp;
    const std::string rec = tmp.file("rec");
    // four trials per class: stratified k=2 CV then leaves two per class in
    // every training subset, enough for the cnn's internal validation split
    const std::string synth_args =
        " --trials-per-class 4 --channels 3 --rate 5 --iti 32 --out ";

    CmdResult r = run_cli("synth --seed 5 --subject s01" + synth_args + rec);
    REQUIRE_MESSAGE(r.code == 0, r.output);
    CHECK(r.output.find("12 trials") != std::string::npos);

    // same seed reproduces the recording byte for byte; a new seed does not
    run_cli("synth --seed 5 --subject s01" + synth_args + tmp.file("rec_same"));
    run_cli("synth --seed 6 --subject s01" + synth_args + tmp.file("rec_other"));
    const std::string original = testsupport::read_file(rec + "/recording.csv");
    CHECK(original == testsupport::read_file(tmp.file("rec_same") + "/recording.csv"));
    CHECK(original != testsupport::read_file(tmp.file("rec_other") + "/recording.csv"));

    r = run_cli("ingest validate --dir " + rec);
    REQUIRE_MESSAGE(r.code == 0, r.output);
    CHECK(r.output.find("ok:") != std::string::npos);
    CHECK(r.output.find("markers=12") != std::string::npos);

    const std::string epochs = tmp.file("epochs");
    r = run_cli("preprocess run --dir " + rec + " --out " + epochs);
    REQUIRE_MESSAGE(r.code == 0, r.output);
    CHECK(r.output.find("wrote 12 epochs") != std::string::npos);

    // a singular extinction matrix is a numeric failure
    const std::string singular = tmp.file("singular.json");
    testsupport::write_file(singular,
                            R"({"extinction": [[1, 1], [1, 1]], "dpf": [1, 1],)"
                            R"( "source_detector_distance": 1})");
    r = run_cli("preprocess run --dir " + rec + " --coefficients " + singular + " --out " +
                tmp.file("epochs_bad"));
    CHECK(r.code == 4);

    const std::string feats = tmp.file("features.csv");
    r = run_cli("features extract --epochs " + epochs + " --out " + feats);
    REQUIRE_MESSAGE(r.code == 0, r.output);
    CHECK(r.output.find("12 x 12") != std::string::npos);

    const std::string sel = tmp.file("selected.txt");
    r = run_cli("features importance --features " + feats + " --repeats 2 --seed 5 --out " +
                tmp.file("importance.csv") + " --selected-out " + sel);
    REQUIRE_MESSAGE(r.code == 0, r.output);
    CHECK(r.output.find("selected_channel: ch") != std::string::npos);
    CHECK(testsupport::read_file(sel).rfind("ch", 0) == 0);

    const std::string images = tmp.file("images");
    r = run_cli("gaf encode --epochs " + epochs +
                " --channel ch01 --size 16 --full-window --out " + images);
    REQUIRE_MESSAGE(r.code == 0, r.output);
    CHECK(r.output.find("wrote 12 images") != std::string::npos);
    CHECK(fs::is_regular_file(fs::path(images) / "labels.csv"));
    CHECK(fs::is_regular_file(fs::path(images) / "trial_000.csv"));
    CHECK(fs::is_regular_file(fs::path(images) / "trial_011.pgm"));

    const std::string net = tmp.file("network.json");
    const std::string train_cfg = tmp.file("train.json");
    testsupport::write_file(net, small_network_json());
    testsupport::write_file(train_cfg,
                            R"({"batch_size": 4, "max_epochs": 2, "optimizer": {"lr": 0.01}})");

    const std::string model = tmp.file("model.gnn1");
    r = run_cli("train --images " + images + " --network " + net + " --train-config " +
                train_cfg + " --seed 3 --out " + model);
    REQUIRE_MESSAGE(r.code == 0, r.output);
    CHECK(r.output.find("trained on 12 images") != std::string::npos);
    CHECK(fs::is_regular_file(model));
    CHECK(fs::is_regular_file(model + ".json"));

    const std::string cv_report = tmp.file("cv.json");
    r = run_cli("eval cv --features " + feats + " --model logreg --k 2 --seed 5 --out " +
                cv_report);
    REQUIRE_MESSAGE(r.code == 0, r.output);
    CHECK(r.output.find("logreg accuracy:") != std::string::npos);
    const auto report =
        nirsgaf::eval::MetricsReport::from_json_text(testsupport::read_file(cv_report));
    CHECK(report.accuracy >= 0.0);
    CHECK(report.accuracy <= 1.0);

    r = run_cli("eval cv --features " + feats + " --model knn --knn-k 3 --k 2 --seed 5 --out " +
                tmp.file("cv_knn.json"));
    REQUIRE_MESSAGE(r.code == 0, r.output);
    CHECK(r.output.find("knn accuracy:") != std::string::npos);

    r = run_cli("eval cv-cnn --images " + images + " --k 2 --network " + net +
                " --train-config " + train_cfg + " --seed 5 --out " + tmp.file("cv_cnn.json"));
    REQUIRE_MESSAGE(r.code == 0, r.output);
    CHECK(r.output.find("cnn accuracy:") != std::string::npos);

    r = run_cli("classify --model " + model + " --input " + images + "/trial_000.csv");
    REQUIRE_MESSAGE(r.code == 0, r.output);
    CHECK(r.output.find("prediction: ") != std::string::npos);
    CHECK(r.output.find("MI: ") != std::string::npos);

    r = run_cli("classify --model " + model + " --input " + epochs +
                "/epoch_000.csv --channel ch01 --size 16 --full-window");
    REQUIRE_MESSAGE(r.code == 0, r.output);
    CHECK(r.output.find("prediction: ") != std::string::npos);

    // pipeline run from a JSON config, out_dir and seed given on the command line
    json cfg;
    cfg["input"] = {{"synth",
                     {{"subjects", 1},
                      {"trials_per_class", 4},
                      {"channels", 3},
                      {"sample_rate_hz", 5.0},
                      {"inter_trial_s", 32.0}}}};
    cfg["gaf"] = {{"channel", "ch01"}, {"image_size", 16}, {"full_window", true}};
    cfg["eval"] = {{"k_folds", 2}, {"k_folds_cnn", 2}, {"knn_k", 3}};
    cfg["network"] = json::parse(small_network_json());
    cfg["train"] = json::parse(testsupport::read_file(train_cfg));
    const std::string cfg_path = tmp.file("pipeline.json");
    testsupport::write_file(cfg_path, cfg.dump(2) + "\n");

    const std::string pipe_out = tmp.file("pipe_out");
    r = run_cli("pipeline run --config " + cfg_path + " --out " + pipe_out + " --seed 5");
    REQUIRE_MESSAGE(r.code == 0, r.output);
    CHECK(r.output.find("subjects: 1, trials: 12") != std::string::npos);
    CHECK(r.output.find("selected channel: ch01") != std::string::npos);
    CHECK(r.output.find("cnn pooled accuracy:") != std::string::npos);
    CHECK(fs::is_regular_file(fs::path(pipe_out) / "report.json"));
    CHECK(fs::is_regular_file(fs::path(pipe_out) / "manifests" / "eval.json"));
}

}  // TEST_SUITE

#endif  // NIRSGAF_CLI_PATH
