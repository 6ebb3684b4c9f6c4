#include "doctest.h"

#include <Eigen/Dense>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include "prefmod/cli.hpp"
#include "prefmod/io.hpp"
#include "prefmod/rlhf.hpp"
#include "prefmod/rmcore.hpp"

using namespace prefmod;
namespace fs = std::filesystem;

namespace {

struct CliResult {
    int code = -1;
    std::string out;
    std::string err;
};

CliResult run(const std::vector<std::string>& args) {
    std::ostringstream out, err;
    CliResult result;
    result.code = cli::run_cli(args, out, err);
    result.out = out.str();
    result.err = err.str();
    return result;
}

struct TempDir {
    fs::path path;

    TempDir() {
        static int counter = 0;
        path = fs::temp_directory_path() / ("prefmod_cli_test_" + std::to_string(counter++));
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }

    std::string file(const std::string& name, const std::string& content) const {
        io::atomic_write(path / name, content);
        return (path / name).string();
    }
    std::string at(const std::string& name) const { return (path / name).string(); }
};

// The seed env var must never leak between cases.
struct EnvSeed {
    explicit EnvSeed(const char* value) { ::setenv("PREFMOD_SEED", value, 1); }
    ~EnvSeed() { ::unsetenv("PREFMOD_SEED"); }
};

constexpr const char* kGenConfig =
    "seed = 11\n"
    "n_tasks = 40\n"
    "feature_dim = 5\n"
    "annotator_noise_sd = 0.4\n"
    "invalid_rate = 0.1\n"
    "val_fraction = 0.3\n"
    "n_bench = 24\n";

// Manifest prefix before the timestamp; everything else must be stable.
std::string manifest_prefix(const std::string& text) {
    return text.substr(0, text.find("\"generated_at\""));
}

bool contains(const std::string& text, const std::string& needle) {
    return text.find(needle) != std::string::npos;
}

std::string generate_corpus_dir(const TempDir& dir, const std::string& out_name) {
    const std::string config = dir.file("gen.cfg", kGenConfig);
    const CliResult r = run({"gen-synth", "--config", config, "--out", dir.at(out_name)});
    REQUIRE(r.code == 0);
    return dir.at(out_name);
}

}  // namespace

TEST_CASE("cli maps failures to exit codes") {
    CHECK(run({"--help"}).code == 0);
    CHECK(contains(run({"--help"}).out, "gen-synth"));
    CHECK(contains(run({"--help"}).out, "reinforce"));

    // No subcommand, unknown subcommand, missing required flag: config errors.
    CliResult r = run({});
    CHECK(r.code == 2);
    CHECK(r.err.starts_with("error 2: "));
    CHECK(run({"nonsense"}).code == 2);
    r = run({"train"});
    CHECK(r.code == 2);
    CHECK(contains(r.err, "--config"));
    CHECK(run({"gen-synth", "--config", "x", "--out", "y", "--threads", "0"}).code == 2);

    // Missing input files are data errors with a single-line message.
    r = run({"aggregate", "--in", "/definitely/absent.jsonl", "--out", "/tmp/never.jsonl"});
    CHECK(r.code == 3);
    CHECK(r.err.starts_with("error 3: "));
    CHECK(contains(r.err, "cannot read file"));
    CHECK(r.err.find('\n') == r.err.size() - 1);
}

TEST_CASE("table5 prints the pairwise loss grid") {
    const CliResult r = run({"table5"});
    CHECK(r.code == 0);
    CHECK(r.err.empty());
    CHECK(r.out ==
          "variant  (+3,1) (+3,3) (+1,1) (+1,3) (-1,1) (-1,3) (-3,1) (-3,3)     avg\n"
          "Regular  0.0486  0.0486  0.3133  0.3133  1.3133  1.3133  3.0486  3.0486  1.1809\n"
          "Margin   0.1269  0.6931  0.6931  2.1269  2.1269  4.0181  4.0181  6.0025  2.4757\n"
          "Scaled   0.0486  0.1458  0.3133  0.9398  1.3133  3.9398  3.0486  9.1458  2.3618\n");
}

TEST_CASE("gen-synth writes a reproducible corpus with a manifest") {
    TempDir dir;
    const std::string config = dir.file("gen.cfg", kGenConfig);

    REQUIRE(run({"gen-synth", "--config", config, "--out", dir.at("d1")}).code == 0);
    for (const char* name : {"tasks.jsonl", "oracle.json", "bench.jsonl", "manifest.json"})
        CHECK(fs::exists(dir.path / "d1" / name));

    const auto tasks = io::tasks_from_jsonl(io::read_file(dir.path / "d1" / "tasks.jsonl"));
    CHECK(tasks.size() == 40);
    const auto bench_set = io::bench_from_jsonl(io::read_file(dir.path / "d1" / "bench.jsonl"));
    CHECK(bench_set.size() == 24);

    // Rerun: identical artifacts, manifest identical up to the timestamp.
    REQUIRE(run({"gen-synth", "--config", config, "--out", dir.at("d2")}).code == 0);
    for (const char* name : {"tasks.jsonl", "oracle.json", "bench.jsonl"})
        CHECK(io::read_file(dir.path / "d1" / name) == io::read_file(dir.path / "d2" / name));
    CHECK(manifest_prefix(io::read_file(dir.path / "d1" / "manifest.json")) ==
          manifest_prefix(io::read_file(dir.path / "d2" / "manifest.json")));

    // --seed overrides the config seed and changes the data.
    REQUIRE(run({"gen-synth", "--config", config, "--out", dir.at("d3"), "--seed", "99"}).code ==
            0);
    CHECK(contains(io::read_file(dir.path / "d3" / "manifest.json"), "\"seed\": 99"));
    CHECK(io::read_file(dir.path / "d3" / "tasks.jsonl") !=
          io::read_file(dir.path / "d1" / "tasks.jsonl"));

    {
        // The environment beats --seed, so this reproduces the first corpus.
        EnvSeed env("11");
        REQUIRE(
            run({"gen-synth", "--config", config, "--out", dir.at("d4"), "--seed", "99"}).code ==
            0);
        CHECK(io::read_file(dir.path / "d4" / "tasks.jsonl") ==
              io::read_file(dir.path / "d1" / "tasks.jsonl"));
    }
    {
        EnvSeed env("not-a-number");
        const CliResult r = run({"gen-synth", "--config", config, "--out", dir.at("d5")});
        CHECK(r.code == 2);
        CHECK(contains(r.err, "PREFMOD_SEED"));
    }
}

TEST_CASE("analysis subcommands run on a generated corpus") {
    TempDir dir;
    const std::string data = generate_corpus_dir(dir, "data");
    const std::string tasks = (fs::path(data) / "tasks.jsonl").string();

    CliResult r = run({"aggregate", "--in", tasks, "--out", dir.at("agg.jsonl")});
    REQUIRE(r.code == 0);
    const auto aggregates = io::aggregates_from_jsonl(io::read_file(dir.path / "agg.jsonl"));
    CHECK(aggregates.size() == 40);
    const std::string stats = io::read_file(dir.path / "agg.stats.json");
    CHECK(contains(stats, "\"n_tasks\": 40"));
    CHECK(contains(stats, "\"kept\""));

    // Report commands print to stdout and mirror the bytes into --out.
    r = run({"kappa", "--in", tasks, "--out", dir.at("kappa.json")});
    REQUIRE(r.code == 0);
    CHECK(contains(r.out, "\"kappa_raw\""));
    CHECK(io::read_file(dir.path / "kappa.json") == r.out);

    r = run({"diagnostics", "--in", tasks});
    REQUIRE(r.code == 0);
    CHECK(contains(r.out, "\"histogram\""));
    CHECK(contains(r.out, "\"position_bias\""));
    CHECK_FALSE(fs::exists(dir.path / "diagnostics.json"));

    r = run({"justify", "--in", tasks, "--out", dir.at("sft.jsonl"), "--flip", "--all"});
    REQUIRE(r.code == 0);
    const auto records = io::sft_records_from_jsonl(io::read_file(dir.path / "sft.jsonl"));
    CHECK(records.size() > 0);
    std::size_t flipped = 0;
    for (const auto& rec : records) {
        CHECK_FALSE(rec.label.empty());
        if (rec.flipped) ++flipped;
    }
    CHECK(flipped * 2 == records.size());
    CHECK(contains(io::read_file(dir.path / "sft.stats.json"),
                   "\"n_records\": " + std::to_string(records.size())));

    // Corrupt input surfaces the line number through the exit path.
    const std::string broken = dir.file("broken.jsonl", "{nope\n");
    r = run({"aggregate", "--in", broken, "--out", dir.at("x.jsonl")});
    CHECK(r.code == 3);
    CHECK(contains(r.err, "line 1"));
}

TEST_CASE("train writes checkpoints, traces, and manifests") {
    TempDir dir;
    const std::string data = generate_corpus_dir(dir, "data");
    const std::string reg_cfg = dir.file("reg.cfg",
                                         "loss_kind = regression_all\n"
                                         "epochs = 2\n"
                                         "batch_size = 16\n"
                                         "learning_rate = 0.01\n"
                                         "checkpoint_every = 50\n"
                                         "seed = 1\n");

    REQUIRE(run({"train", "--config", reg_cfg, "--data", data, "--out", dir.at("reg")}).code == 0);
    for (const char* name : {"final.ckpt.json", "best_val.ckpt.json", "trace.csv",
                             "manifest.json"})
        CHECK(fs::exists(dir.path / "reg" / name));

    const io::Checkpoint final_ckpt =
        io::checkpoint_from_json(io::read_file(dir.path / "reg" / "final.ckpt.json"));
    CHECK(final_ckpt.params.head_kind == rmcore::HeadKind::regression);
    CHECK(final_ckpt.params.feature_dim() == 5);
    CHECK(final_ckpt.params.hidden_dim() == 32);
    CHECK(final_ckpt.params.output_dim() == 5);
    CHECK(final_ckpt.seed == 1);
    CHECK(io::read_file(dir.path / "reg" / "trace.csv").starts_with("step,train_loss,val_loss\n"));

    // Same config, same data: byte-identical checkpoint.
    REQUIRE(run({"train", "--config", reg_cfg, "--data", data, "--out", dir.at("reg2")}).code ==
            0);
    CHECK(io::read_file(dir.path / "reg" / "final.ckpt.json") ==
          io::read_file(dir.path / "reg2" / "final.ckpt.json"));

    const std::string bt_cfg = dir.file("bt.cfg",
                                        "loss_kind = bt_scaled\n"
                                        "epochs = 2\n"
                                        "batch_size = 8\n"
                                        "learning_rate = 0.05\n"
                                        "checkpoint_every = 50\n"
                                        "seed = 2\n");
    REQUIRE(run({"train", "--config", bt_cfg, "--data", data, "--out", dir.at("bt")}).code == 0);
    const io::Checkpoint bt_ckpt =
        io::checkpoint_from_json(io::read_file(dir.path / "bt" / "final.ckpt.json"));
    CHECK(bt_ckpt.params.head_kind == rmcore::HeadKind::bradley_terry);
    CHECK(bt_ckpt.params.output_dim() == 1);

    // A preference head cannot seed a regression run.
    CliResult r = run({"train", "--config", reg_cfg, "--data", data, "--out", dir.at("bad"),
                       "--init-from", dir.at("bt/final.ckpt.json")});
    CHECK(r.code == 2);
    CHECK(contains(r.err, "init checkpoint"));

    // Only a scalar regression head converts into a preference head; the
    // 5-attribute model is rejected with advice, the helpfulness model works.
    r = run({"train", "--config", bt_cfg, "--data", data, "--out", dir.at("warm"),
             "--init-from", dir.at("reg/final.ckpt.json")});
    CHECK(r.code == 2);
    CHECK(contains(r.err, "1-output regression"));

    const std::string help_cfg = dir.file("help.cfg",
                                          "loss_kind = regression_helpfulness\n"
                                          "epochs = 2\nbatch_size = 16\n"
                                          "learning_rate = 0.01\nseed = 1\n");
    REQUIRE(run({"train", "--config", help_cfg, "--data", data, "--out", dir.at("help")}).code ==
            0);
    CHECK(run({"train", "--config", bt_cfg, "--data", data, "--out", dir.at("warm"),
               "--init-from", dir.at("help/final.ckpt.json")})
              .code == 0);
}

TEST_CASE("weight search, bench eval, and extrapolation close the loop") {
    TempDir dir;
    const std::string data = generate_corpus_dir(dir, "data");
    const std::string bench_path = (fs::path(data) / "bench.jsonl").string();
    const std::string reg_cfg = dir.file("reg.cfg",
                                         "loss_kind = regression_all\n"
                                         "epochs = 2\nbatch_size = 16\n"
                                         "learning_rate = 0.01\nseed = 1\n");
    const std::string bt_cfg = dir.file("bt.cfg",
                                        "loss_kind = bt_regular\n"
                                        "epochs = 2\nbatch_size = 8\n"
                                        "learning_rate = 0.05\nseed = 2\n");
    REQUIRE(run({"train", "--config", reg_cfg, "--data", data, "--out", dir.at("reg")}).code == 0);
    REQUIRE(run({"train", "--config", bt_cfg, "--data", data, "--out", dir.at("bt")}).code == 0);
    REQUIRE(run({"train", "--config", bt_cfg, "--data", data, "--out", dir.at("bt5"), "--seed",
                 "5"})
                .code == 0);
    const std::string reg_ckpt = dir.at("reg/final.ckpt.json");
    const std::string bt_ckpt = dir.at("bt/final.ckpt.json");
    const std::string bt5_ckpt = dir.at("bt5/final.ckpt.json");

    CliResult r = run({"grid-weights", "--model", reg_ckpt, "--bench", bench_path, "--step", "1",
                       "--out", dir.at("weights.json")});
    REQUIRE(r.code == 0);
    CHECK(contains(r.out, "\"bench_overall\""));
    CHECK(contains(r.out, "\"n_candidates\": 243"));
    CHECK(io::read_file(dir.path / "weights.json") == r.out);

    // Attribute models need combination weights; scalar models do not.
    CHECK(run({"eval-bench", "--model", reg_ckpt, "--bench", bench_path}).code == 2);
    r = run({"eval-bench", "--model", reg_ckpt, "--weights", dir.at("weights.json"), "--bench",
             bench_path});
    REQUIRE(r.code == 0);
    CHECK(contains(r.out, "\"overall\""));
    r = run({"eval-bench", "--model", bt_ckpt, "--bench", bench_path});
    REQUIRE(r.code == 0);
    CHECK(contains(r.out, "\"n_tasks\": 24"));

    // alpha 0 reproduces the weak checkpoint byte for byte.
    r = run({"expo", "--weak", bt_ckpt, "--strong", bt5_ckpt, "--alpha", "0", "--out",
             dir.at("e0.ckpt.json")});
    REQUIRE(r.code == 0);
    CHECK(contains(r.out, "\"alpha\": 0.0"));
    CHECK(io::read_file(dir.path / "e0.ckpt.json") == io::read_file(fs::path(bt_ckpt)));

    // Exactly one of --alpha and --search, and --search needs --val.
    CHECK(run({"expo", "--weak", bt_ckpt, "--strong", bt5_ckpt, "--out", dir.at("x")}).code == 2);
    CHECK(run({"expo", "--weak", bt_ckpt, "--strong", bt5_ckpt, "--alpha", "1.5", "--search",
               "--out", dir.at("x")})
              .code == 2);
    CHECK(run({"expo", "--weak", bt_ckpt, "--strong", bt5_ckpt, "--search", "--out", dir.at("x")})
              .code == 2);

    r = run({"expo", "--weak", bt_ckpt, "--strong", bt5_ckpt, "--search", "--val", data, "--out",
             dir.at("es.ckpt.json")});
    REQUIRE(r.code == 0);
    CHECK(contains(r.out, "\"val_accuracy\""));
    const io::Checkpoint searched =
        io::checkpoint_from_json(io::read_file(dir.path / "es.ckpt.json"));
    CHECK(searched.params.feature_dim() == 5);
}

TEST_CASE("dpo and reinforce produce improved policies") {
    TempDir dir;
    const std::string pairs = dir.file("pairs.jsonl",
                                       "{\"context\":0,\"chosen\":0,\"rejected\":1,\"m\":1.0}\n"
                                       "{\"context\":0,\"chosen\":0,\"rejected\":2,\"m\":2.0}\n"
                                       "{\"context\":0,\"chosen\":0,\"rejected\":1,\"m\":1.0}\n"
                                       "{\"context\":1,\"chosen\":2,\"rejected\":0,\"m\":3.0}\n"
                                       "{\"context\":1,\"chosen\":2,\"rejected\":1,\"m\":1.0}\n"
                                       "{\"context\":1,\"chosen\":2,\"rejected\":0,\"m\":2.0}\n");
    const std::string dpo_cfg = dir.file("dpo.cfg",
                                         "learning_rate = 0.1\nbatch_size = 2\nepochs = 3\n"
                                         "seed = 4\nbeta = 0.5\nvariant = margin\n");

    REQUIRE(run({"dpo", "--config", dpo_cfg, "--pairs", pairs, "--out", dir.at("dpo")}).code == 0);
    const rlhf::PolicyTable tuned =
        io::policy_from_json(io::read_file(dir.path / "dpo" / "policy.json"));
    CHECK(tuned.logits().rows() == 2);
    CHECK(tuned.logits().cols() == 3);
    CHECK(tuned.logits()(0, 0) > tuned.logits()(0, 1));
    CHECK(tuned.logits()(1, 2) > tuned.logits()(1, 0));
    CHECK(io::read_file(dir.path / "dpo" / "trace.csv").starts_with("step,loss,mean_kl\n"));

    // An explicit all-zero starting policy matches the built-in default.
    const std::string zero_policy = dir.file(
        "zero.json",
        "{\"version\":1,\"logits\":[[0,0,0],[0,0,0]],\"reference_logits\":[[0,0,0],[0,0,0]]}");
    REQUIRE(run({"dpo", "--config", dpo_cfg, "--pairs", pairs, "--out", dir.at("dpo2"),
                 "--policy", zero_policy})
                .code == 0);
    CHECK(io::read_file(dir.path / "dpo" / "policy.json") ==
          io::read_file(dir.path / "dpo2" / "policy.json"));

    const std::string env = dir.file(
        "env.json",
        "{\"version\":1,\"reward_table\":[[1.0,0.5,0.0]],\"prompt_distribution\":[1.0]}");
    const std::string rf_cfg = dir.file("rf.cfg",
                                        "steps = 500\nk = 2\nbeta = 0\n"
                                        "learning_rate = 0.5\nseed = 3\n");
    REQUIRE(run({"reinforce", "--config", rf_cfg, "--env", env, "--out", dir.at("rf")}).code == 0);
    const rlhf::PolicyTable trained =
        io::policy_from_json(io::read_file(dir.path / "rf" / "policy.json"));
    const Eigen::VectorXd row = trained.logits().row(0);
    const Eigen::VectorXd probs = (row.array() - row.maxCoeff()).exp() /
                                  (row.array() - row.maxCoeff()).exp().sum();
    CHECK(probs(0) > 0.9);
    CHECK(io::read_file(dir.path / "rf" / "trace.csv")
              .starts_with("step,mean_reward,mean_kl\n"));

    // Empty pair files are data errors.
    const std::string none = dir.file("none.jsonl", "");
    CHECK(run({"dpo", "--config", dpo_cfg, "--pairs", none, "--out", dir.at("x")}).code == 3);
}

TEST_CASE("numerical failures surface as exit 4") {
    TempDir dir;
    io::Checkpoint overflow;
    overflow.params.head_kind = rmcore::HeadKind::bradley_terry;
    overflow.params.w1 = Eigen::MatrixXd::Ones(1, 2);
    overflow.params.b1 = Eigen::VectorXd::Zero(2);
    overflow.params.w2 = Eigen::MatrixXd::Constant(2, 1, 1e308);
    overflow.params.b2 = Eigen::VectorXd::Zero(1);
    const std::string ckpt = dir.file("overflow.ckpt.json", io::checkpoint_to_json(overflow));
    const std::string bench_path = dir.file(
        "bench.jsonl",
        "{\"category\":\"chat\",\"reasoning_kind\":\"none\","
        "\"prompt\":[40.0],\"chosen\":[40.0],\"rejected\":[40.0]}\n");

    const CliResult r = run({"eval-bench", "--model", ckpt, "--bench", bench_path});
    CHECK(r.code == 4);
    CHECK(r.err.starts_with("error 4: "));

    // A tampered version field in the same file is a data error instead.
    std::string text = io::checkpoint_to_json(overflow);
    text.replace(text.find("\"version\":1"), 11, "\"version\":2");
    const std::string bad = dir.file("bad.ckpt.json", text);
    CHECK(run({"eval-bench", "--model", bad, "--bench", bench_path}).code == 3);
}
