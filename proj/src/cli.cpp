#include "prefmod/cli.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <unordered_map>

#include "prefmod/errors.hpp"
#include "prefmod/io.hpp"
#include "prefmod/losses.hpp"
#include "prefmod/rng.hpp"

#include "CLI11.hpp"
#include "json.hpp"

namespace prefmod::cli {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

constexpr Eigen::Index kHiddenDim = 32;
constexpr std::uint64_t kInitStream = 0x696e6974ULL;

std::string single_line(std::string message) {
    std::replace(message.begin(), message.end(), '\n', ' ');
    std::replace(message.begin(), message.end(), '\r', ' ');
    return message;
}

// Shared --seed/--threads state for one invocation.
struct GlobalFlags {
    std::optional<std::uint64_t> seed;
    int threads = 1;

    std::uint64_t resolve_seed(std::uint64_t config_seed) const {
        if (const char* env = std::getenv("PREFMOD_SEED")) {
            char* end = nullptr;
            errno = 0;
            const unsigned long long v = std::strtoull(env, &end, 10);
            if (errno != 0 || end == env || *end != '\0')
                throw ConfigError("PREFMOD_SEED must be an unsigned integer");
            return static_cast<std::uint64_t>(v);
        }
        if (seed) return *seed;
        return config_seed;
    }
};

void add_global_flags(CLI::App* sub, GlobalFlags& flags) {
    sub->add_option("--seed", flags.seed, "Override the config seed");
    sub->add_option("--threads", flags.threads, "Worker cap (recorded in the manifest)")
        ->check(CLI::PositiveNumber);
}

std::string read_config_file(const fs::path& path) {
    try {
        return io::read_file(path);
    } catch (const DataError& e) {
        throw ConfigError(e.what());
    }
}

std::vector<prefdata::AnnotationTask> load_tasks(const fs::path& path) {
    return io::tasks_from_jsonl(io::read_file(path));
}

io::Checkpoint load_checkpoint(const fs::path& path) {
    return io::checkpoint_from_json(io::read_file(path));
}

struct JoinedCorpus {
    std::vector<prefdata::AnnotationTask> tasks;
    std::unordered_map<std::string, const synth::OracleTask*> features;
    std::vector<synth::OracleTask> oracle_storage;
};

// Tasks carry ratings and splits; the oracle sidecar carries the numeric
// response features the reward model consumes.
JoinedCorpus load_joined(const fs::path& dir) {
    JoinedCorpus joined;
    joined.tasks = load_tasks(dir / "tasks.jsonl");
    joined.oracle_storage = io::oracle_from_json(io::read_file(dir / "oracle.json"));
    for (const auto& entry : joined.oracle_storage)
        joined.features.emplace(entry.task_id, &entry);
    for (const auto& task : joined.tasks) {
        if (joined.features.find(task.task_id) == joined.features.end())
            throw DataError("task missing from oracle sidecar: " + task.task_id);
    }
    return joined;
}

Eigen::VectorXd mean_ratings(const prefdata::AnnotationTask& task, bool first_response,
                             bool helpfulness_only) {
    const Eigen::Index width = helpfulness_only ? 1 : 5;
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(width);
    for (const auto& a : task.annotations) {
        const auto& r = first_response ? a.ratings_1 : a.ratings_2;
        if (helpfulness_only) {
            sum(0) += r.helpfulness;
        } else {
            sum += r.to_vector();
        }
    }
    return sum / static_cast<double>(task.annotations.size());
}

trainer::RegressionCorpus build_regression_corpus(const JoinedCorpus& joined,
                                                  bool helpfulness_only) {
    trainer::RegressionCorpus corpus;
    for (const auto& task : joined.tasks) {
        const auto* oracle = joined.features.at(task.task_id);
        auto& slice = task.split == prefdata::Split::val ? corpus.val : corpus.train;
        slice.push_back({oracle->features_1, mean_ratings(task, true, helpfulness_only)});
        slice.push_back({oracle->features_2, mean_ratings(task, false, helpfulness_only)});
    }
    return corpus;
}

trainer::PreferenceCorpus build_preference_corpus(const JoinedCorpus& joined) {
    trainer::PreferenceCorpus corpus;
    for (const auto& task : joined.tasks) {
        const auto agg = prefdata::aggregate_task(task);
        if (agg.status != prefdata::AggregateStatus::kept) continue;
        const auto* oracle = joined.features.at(task.task_id);
        rmcore::PreferencePair pair;
        if (agg.chosen == prefdata::Chosen::response_2) {
            pair.chosen = oracle->features_2;
            pair.rejected = oracle->features_1;
        } else {
            pair.chosen = oracle->features_1;
            pair.rejected = oracle->features_2;
        }
        pair.m = agg.magnitude;
        auto& slice = task.split == prefdata::Split::val ? corpus.val : corpus.train;
        slice.push_back(std::move(pair));
    }
    return corpus;
}

std::vector<rmcore::PreferencePair> val_pairs_of(const JoinedCorpus& joined) {
    return build_preference_corpus(joined).val;
}

// -- subcommand bodies --

int cmd_gen_synth(const fs::path& config_path, const fs::path& out_dir,
                  const GlobalFlags& flags) {
    synth::GenConfig config = io::parse_gen_config(read_config_file(config_path));
    config.seed = flags.resolve_seed(config.seed);
    config.validate();

    const synth::Corpus corpus = synth::generate_corpus(config);
    const bench::BenchSet bench_set = synth::generate_bench(config);

    fs::create_directories(out_dir);
    io::atomic_write(out_dir / "tasks.jsonl", io::tasks_to_jsonl(corpus.tasks));
    io::atomic_write(out_dir / "oracle.json", io::oracle_to_json(corpus.oracle));
    io::atomic_write(out_dir / "bench.jsonl", io::bench_to_jsonl(bench_set));

    io::Manifest manifest;
    manifest.command = "gen-synth";
    manifest.config_json = io::gen_config_to_json(config);
    manifest.inputs = {config_path.string()};
    manifest.outputs = {"tasks.jsonl", "oracle.json", "bench.jsonl"};
    manifest.seed = config.seed;
    manifest.threads = flags.threads;
    io::write_manifest(out_dir, std::move(manifest));
    return 0;
}

int cmd_aggregate(const fs::path& in_path, const fs::path& out_path, const GlobalFlags& flags) {
    const auto tasks = load_tasks(in_path);
    std::vector<prefdata::AggregatedPreference> aggregates;
    aggregates.reserve(tasks.size());
    for (const auto& task : tasks) aggregates.push_back(prefdata::aggregate_task(task));

    const fs::path dir = out_path.has_parent_path() ? out_path.parent_path() : fs::path(".");
    fs::create_directories(dir);
    const fs::path stats_path = dir / (out_path.stem().string() + ".stats.json");
    io::atomic_write(out_path, io::aggregates_to_jsonl(aggregates));
    io::atomic_write(stats_path, io::aggregate_stats_to_json(aggregates));

    io::Manifest manifest;
    manifest.command = "aggregate";
    json cfg = json::object();
    cfg["in"] = in_path.string();
    manifest.config_json = cfg.dump();
    manifest.inputs = {in_path.string()};
    manifest.outputs = {out_path.filename().string(), stats_path.filename().string()};
    manifest.seed = flags.resolve_seed(0);
    manifest.threads = flags.threads;
    io::write_manifest(dir, std::move(manifest));
    return 0;
}

int cmd_kappa(const fs::path& in_path, const std::string& out_path, const GlobalFlags& flags,
              std::ostream& out) {
    const auto report = prefdata::agreement_report(load_tasks(in_path));
    const std::string text = io::agreement_report_to_json(report);
    out << text;
    if (!out_path.empty()) {
        const fs::path path(out_path);
        const fs::path dir = path.has_parent_path() ? path.parent_path() : fs::path(".");
        fs::create_directories(dir);
        io::atomic_write(path, text);
        io::Manifest manifest;
        manifest.command = "kappa";
        json cfg = json::object();
        cfg["in"] = in_path.string();
        manifest.config_json = cfg.dump();
        manifest.inputs = {in_path.string()};
        manifest.outputs = {path.filename().string()};
        manifest.seed = flags.resolve_seed(0);
        manifest.threads = flags.threads;
        io::write_manifest(dir, std::move(manifest));
    }
    return 0;
}

int cmd_diagnostics(const fs::path& in_path, const std::string& out_path,
                    const GlobalFlags& flags, std::ostream& out) {
    const auto diagnostics = prefdata::distribution_diagnostics(load_tasks(in_path));
    const std::string text = io::diagnostics_to_json(diagnostics);
    out << text;
    if (!out_path.empty()) {
        const fs::path path(out_path);
        const fs::path dir = path.has_parent_path() ? path.parent_path() : fs::path(".");
        fs::create_directories(dir);
        io::atomic_write(path, text);
        io::Manifest manifest;
        manifest.command = "diagnostics";
        json cfg = json::object();
        cfg["in"] = in_path.string();
        manifest.config_json = cfg.dump();
        manifest.inputs = {in_path.string()};
        manifest.outputs = {path.filename().string()};
        manifest.seed = flags.resolve_seed(0);
        manifest.threads = flags.threads;
        io::write_manifest(dir, std::move(manifest));
    }
    return 0;
}

int cmd_justify(const fs::path& in_path, const fs::path& out_path, bool flip, bool all,
                const GlobalFlags& flags) {
    const auto tasks = load_tasks(in_path);
    std::vector<prefdata::AggregatedPreference> aggregates;
    aggregates.reserve(tasks.size());
    for (const auto& task : tasks) aggregates.push_back(prefdata::aggregate_task(task));
    const auto records = justif::build_justifier_records(tasks, aggregates, flip, all);

    std::int64_t n_kept = 0;
    for (const auto& agg : aggregates)
        if (agg.status == prefdata::AggregateStatus::kept) ++n_kept;
    std::set<std::string> covered;
    std::int64_t n_flipped = 0;
    for (const auto& rec : records) {
        if (rec.flipped) {
            ++n_flipped;
        } else {
            covered.insert(rec.task_id);
        }
    }

    const fs::path dir = out_path.has_parent_path() ? out_path.parent_path() : fs::path(".");
    fs::create_directories(dir);
    const fs::path stats_path = dir / (out_path.stem().string() + ".stats.json");
    io::atomic_write(out_path, io::sft_records_to_jsonl(records));
    json stats = json::object();
    stats["n_tasks"] = static_cast<std::int64_t>(tasks.size());
    stats["n_kept"] = n_kept;
    stats["n_records"] = static_cast<std::int64_t>(records.size());
    stats["n_flipped"] = n_flipped;
    stats["n_kept_without_record"] = n_kept - static_cast<std::int64_t>(covered.size());
    io::atomic_write(stats_path, stats.dump(2) + "\n");

    io::Manifest manifest;
    manifest.command = "justify";
    json cfg = json::object();
    cfg["in"] = in_path.string();
    cfg["flip"] = flip;
    cfg["all"] = all;
    manifest.config_json = cfg.dump();
    manifest.inputs = {in_path.string()};
    manifest.outputs = {out_path.filename().string(), stats_path.filename().string()};
    manifest.seed = flags.resolve_seed(0);
    manifest.threads = flags.threads;
    io::write_manifest(dir, std::move(manifest));
    return 0;
}

int cmd_train(const fs::path& config_path, const fs::path& data_dir, const fs::path& out_dir,
              const std::string& init_from, const GlobalFlags& flags) {
    trainer::TrainConfig config = io::parse_train_config(read_config_file(config_path));
    config.seed = flags.resolve_seed(config.seed);
    config.validate();

    const JoinedCorpus joined = load_joined(data_dir);
    if (joined.oracle_storage.empty()) throw DataError("empty data directory");
    const Eigen::Index d = joined.oracle_storage.front().features_1.size();

    trainer::TrainResult result;
    if (trainer::is_regression(config.loss_kind)) {
        const bool helpfulness_only =
            config.loss_kind == trainer::LossKind::regression_helpfulness;
        const Eigen::Index width = helpfulness_only ? 1 : 5;
        rmcore::RewardModelParams init;
        if (!init_from.empty()) {
            const io::Checkpoint ckpt = load_checkpoint(init_from);
            if (ckpt.params.head_kind != rmcore::HeadKind::regression ||
                ckpt.params.feature_dim() != d || ckpt.params.output_dim() != width)
                throw ConfigError("init checkpoint does not match the regression task shape");
            init = ckpt.params;
        } else {
            Rng rng = derive_rng(config.seed, kInitStream);
            init = rmcore::init_params(d, kHiddenDim, width, rmcore::HeadKind::regression, rng);
        }
        result = trainer::train_regression(config, build_regression_corpus(joined, helpfulness_only),
                                           init);
    } else {
        rmcore::RewardModelParams init;
        if (!init_from.empty()) {
            const io::Checkpoint ckpt = load_checkpoint(init_from);
            if (ckpt.params.feature_dim() != d)
                throw ConfigError("init checkpoint does not match the data feature width");
            init = ckpt.params.head_kind == rmcore::HeadKind::regression
                       ? rmcore::init_bt_from_regression(ckpt.params)
                       : ckpt.params;
        } else {
            Rng rng = derive_rng(config.seed, kInitStream);
            init = rmcore::init_params(d, kHiddenDim, 1, rmcore::HeadKind::bradley_terry, rng);
        }
        result = trainer::train_bt(config, build_preference_corpus(joined), init);
    }

    fs::create_directories(out_dir);
    io::Checkpoint final_ckpt{result.final_params, config.seed,
                              result.checkpoints.back().step};
    io::Checkpoint best_ckpt{result.best_val_params, config.seed, result.best_val_step};
    io::atomic_write(out_dir / "final.ckpt.json", io::checkpoint_to_json(final_ckpt));
    io::atomic_write(out_dir / "best_val.ckpt.json", io::checkpoint_to_json(best_ckpt));
    io::atomic_write(out_dir / "trace.csv", io::train_trace_to_csv(result.checkpoints));

    io::Manifest manifest;
    manifest.command = "train";
    manifest.config_json = io::train_config_to_json(config);
    manifest.inputs = {config_path.string(), (data_dir / "tasks.jsonl").string(),
                       (data_dir / "oracle.json").string()};
    if (!init_from.empty()) manifest.inputs.push_back(init_from);
    manifest.outputs = {"final.ckpt.json", "best_val.ckpt.json", "trace.csv"};
    manifest.seed = config.seed;
    manifest.threads = flags.threads;
    io::write_manifest(out_dir, std::move(manifest));
    return 0;
}

int cmd_grid_weights(const fs::path& model_path, const fs::path& bench_path, double step,
                     const std::string& out_path, const GlobalFlags& flags, std::ostream& out) {
    const io::Checkpoint ckpt = load_checkpoint(model_path);
    const bench::BenchSet set = io::bench_from_jsonl(io::read_file(bench_path));
    const rmcore::WeightSearchResult result = rmcore::grid_search_weights(ckpt.params, set, step);
    const std::string text = io::weights_to_json(result);
    out << text;
    if (!out_path.empty()) {
        const fs::path path(out_path);
        const fs::path dir = path.has_parent_path() ? path.parent_path() : fs::path(".");
        fs::create_directories(dir);
        io::atomic_write(path, text);
        io::Manifest manifest;
        manifest.command = "grid-weights";
        json cfg = json::object();
        cfg["step"] = step;
        manifest.config_json = cfg.dump();
        manifest.inputs = {model_path.string(), bench_path.string()};
        manifest.outputs = {path.filename().string()};
        manifest.seed = flags.resolve_seed(0);
        manifest.threads = flags.threads;
        io::write_manifest(dir, std::move(manifest));
    }
    return 0;
}

int cmd_expo(const fs::path& weak_path, const fs::path& strong_path,
             std::optional<double> alpha, bool search, const std::string& val_dir,
             const fs::path& out_path, const GlobalFlags& flags, std::ostream& out) {
    if (alpha.has_value() == search)
        throw ConfigError("pass exactly one of --alpha or --search");
    if (search && val_dir.empty()) throw ConfigError("--search requires --val");

    const io::Checkpoint weak = load_checkpoint(weak_path);
    const io::Checkpoint strong = load_checkpoint(strong_path);

    io::Checkpoint result;
    json cfg = json::object();
    if (alpha) {
        result.params = rmcore::expo(weak.params, strong.params, *alpha);
        // alpha 0 reproduces the weak checkpoint bit-exactly, alpha 1 the
        // strong one, metadata included.
        result.seed = *alpha == 0.0 ? weak.seed : strong.seed;
        result.step = *alpha == 0.0 ? weak.step : strong.step;
        cfg["alpha"] = *alpha;
        json report = json::object();
        report["alpha"] = *alpha;
        out << report.dump(2) + "\n";
    } else {
        const auto pairs = val_pairs_of(load_joined(val_dir));
        const rmcore::ExpoSearchResult found =
            rmcore::expo_search(weak.params, strong.params, pairs);
        result.params = found.params;
        result.seed = strong.seed;
        result.step = strong.step;
        cfg["search"] = true;
        cfg["val"] = val_dir;
        cfg["alpha"] = found.alpha;
        json report = json::object();
        report["alpha"] = found.alpha;
        report["val_accuracy"] = found.val_accuracy;
        out << report.dump(2) + "\n";
    }

    const fs::path dir = out_path.has_parent_path() ? out_path.parent_path() : fs::path(".");
    fs::create_directories(dir);
    io::atomic_write(out_path, io::checkpoint_to_json(result));

    io::Manifest manifest;
    manifest.command = "expo";
    manifest.config_json = cfg.dump();
    manifest.inputs = {weak_path.string(), strong_path.string()};
    if (search) {
        manifest.inputs.push_back((fs::path(val_dir) / "tasks.jsonl").string());
        manifest.inputs.push_back((fs::path(val_dir) / "oracle.json").string());
    }
    manifest.outputs = {out_path.filename().string()};
    manifest.seed = flags.resolve_seed(0);
    manifest.threads = flags.threads;
    io::write_manifest(dir, std::move(manifest));
    return 0;
}

int cmd_eval_bench(const fs::path& model_path, const std::string& weights_path,
                   const fs::path& bench_path, const std::string& out_path,
                   const GlobalFlags& flags, std::ostream& out) {
    const io::Checkpoint ckpt = load_checkpoint(model_path);
    const bench::BenchSet set = io::bench_from_jsonl(io::read_file(bench_path));

    bench::BenchReport report;
    if (ckpt.params.output_dim() == 1) {
        report = bench::score_bench(
            [&](const Eigen::VectorXd& x) { return rmcore::reward_scalar(ckpt.params, x); }, set);
    } else {
        if (weights_path.empty())
            throw ConfigError("a 5-attribute model needs --weights to produce a scalar reward");
        const Eigen::VectorXd weights = io::weights_from_json(io::read_file(weights_path));
        report = bench::score_bench(
            [&](const Eigen::VectorXd& x) {
                return rmcore::combine_attributes(rmcore::forward(ckpt.params, x), weights);
            },
            set);
    }
    const std::string text = io::bench_report_to_json(report);
    out << text;
    if (!out_path.empty()) {
        const fs::path path(out_path);
        const fs::path dir = path.has_parent_path() ? path.parent_path() : fs::path(".");
        fs::create_directories(dir);
        io::atomic_write(path, text);
        io::Manifest manifest;
        manifest.command = "eval-bench";
        json cfg = json::object();
        cfg["weights"] = weights_path;
        manifest.config_json = cfg.dump();
        manifest.inputs = {model_path.string(), bench_path.string()};
        if (!weights_path.empty()) manifest.inputs.push_back(weights_path);
        manifest.outputs = {path.filename().string()};
        manifest.seed = flags.resolve_seed(0);
        manifest.threads = flags.threads;
        io::write_manifest(dir, std::move(manifest));
    }
    return 0;
}

rlhf::PolicyTable initial_policy(const std::string& policy_path, Eigen::Index contexts,
                                 Eigen::Index responses) {
    if (!policy_path.empty()) return io::policy_from_json(io::read_file(policy_path));
    return rlhf::PolicyTable(Eigen::MatrixXd::Zero(contexts, responses));
}

int cmd_dpo(const fs::path& config_path, const fs::path& pairs_path, const fs::path& out_dir,
            const std::string& policy_path, const GlobalFlags& flags) {
    rlhf::DpoConfig config = io::parse_dpo_config(read_config_file(config_path));
    config.seed = flags.resolve_seed(config.seed);

    const auto pairs = io::dpo_pairs_from_jsonl(io::read_file(pairs_path));
    if (pairs.empty()) throw DataError("no preference pairs");
    Eigen::Index contexts = 0, responses = 2;
    for (const auto& pair : pairs) {
        contexts = std::max(contexts, pair.context + 1);
        responses = std::max({responses, pair.chosen + 1, pair.rejected + 1});
    }
    rlhf::PolicyTable policy = initial_policy(policy_path, contexts, responses);

    const rlhf::DpoResult result = rlhf::dpo_train(std::move(policy), pairs, config);

    fs::create_directories(out_dir);
    io::atomic_write(out_dir / "policy.json", io::policy_to_json(result.policy));
    io::atomic_write(out_dir / "trace.csv", io::rl_trace_to_csv(result.trace, true));

    io::Manifest manifest;
    manifest.command = "dpo";
    manifest.config_json = io::dpo_config_to_json(config);
    manifest.inputs = {config_path.string(), pairs_path.string()};
    if (!policy_path.empty()) manifest.inputs.push_back(policy_path);
    manifest.outputs = {"policy.json", "trace.csv"};
    manifest.seed = config.seed;
    manifest.threads = flags.threads;
    io::write_manifest(out_dir, std::move(manifest));
    return 0;
}

int cmd_reinforce(const fs::path& config_path, const fs::path& env_path, const fs::path& out_dir,
                  const std::string& policy_path, const GlobalFlags& flags) {
    rlhf::ReinforceConfig config = io::parse_reinforce_config(read_config_file(config_path));
    config.seed = flags.resolve_seed(config.seed);

    const rlhf::BanditEnv env = io::env_from_json(io::read_file(env_path));
    rlhf::PolicyTable policy =
        initial_policy(policy_path, env.reward_table.rows(), env.reward_table.cols());

    const rlhf::ReinforceResult result = rlhf::reinforce_run(std::move(policy), env, config);

    fs::create_directories(out_dir);
    io::atomic_write(out_dir / "policy.json", io::policy_to_json(result.policy));
    io::atomic_write(out_dir / "trace.csv", io::rl_trace_to_csv(result.trace, false));

    io::Manifest manifest;
    manifest.command = "reinforce";
    manifest.config_json = io::reinforce_config_to_json(config);
    manifest.inputs = {config_path.string(), env_path.string()};
    if (!policy_path.empty()) manifest.inputs.push_back(policy_path);
    manifest.outputs = {"policy.json", "trace.csv"};
    manifest.seed = config.seed;
    manifest.threads = flags.threads;
    io::write_manifest(out_dir, std::move(manifest));
    return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Preference-based reward modeling laboratory"};
    app.require_subcommand(1);

    GlobalFlags flags;

    // gen-synth
    std::string gs_config, gs_out;
    auto* gen_synth = app.add_subcommand("gen-synth", "Generate a synthetic annotated corpus");
    gen_synth->add_option("--config", gs_config, "Generator config file")->required();
    gen_synth->add_option("--out", gs_out, "Output directory")->required();
    add_global_flags(gen_synth, flags);

    // aggregate
    std::string ag_in, ag_out;
    auto* aggregate = app.add_subcommand("aggregate", "Aggregate annotations per task");
    aggregate->add_option("--in", ag_in, "Tasks JSONL")->required();
    aggregate->add_option("--out", ag_out, "Aggregates JSONL")->required();
    add_global_flags(aggregate, flags);

    // kappa
    std::string ka_in, ka_out;
    auto* kappa = app.add_subcommand("kappa", "Inter-annotator agreement report");
    kappa->add_option("--in", ka_in, "Tasks JSONL")->required();
    kappa->add_option("--out", ka_out, "Optional report file");
    add_global_flags(kappa, flags);

    // diagnostics
    std::string di_in, di_out;
    auto* diagnostics = app.add_subcommand("diagnostics", "Preference distribution report");
    diagnostics->add_option("--in", di_in, "Tasks JSONL")->required();
    diagnostics->add_option("--out", di_out, "Optional report file");
    add_global_flags(diagnostics, flags);

    // justify
    std::string ju_in, ju_out;
    bool ju_flip = false, ju_all = false;
    auto* justify = app.add_subcommand("justify", "Build justification generation records");
    justify->add_option("--in", ju_in, "Tasks JSONL")->required();
    justify->add_option("--out", ju_out, "Records JSONL")->required();
    justify->add_flag("--flip", ju_flip, "Also emit response-swapped variants");
    justify->add_flag("--all", ju_all, "Emit every usable justification per task");
    add_global_flags(justify, flags);

    // table5
    auto* table5_cmd = app.add_subcommand("table5", "Print the pairwise loss grid");
    add_global_flags(table5_cmd, flags);

    // train
    std::string tr_config, tr_data, tr_out, tr_init;
    auto* train = app.add_subcommand("train", "Train a reward model");
    train->add_option("--config", tr_config, "Trainer config file")->required();
    train->add_option("--data", tr_data, "Data directory (tasks.jsonl + oracle.json)")->required();
    train->add_option("--out", tr_out, "Output directory")->required();
    train->add_option("--init-from", tr_init, "Checkpoint to initialize from");
    add_global_flags(train, flags);

    // grid-weights
    std::string gw_model, gw_bench, gw_out;
    double gw_step = 0.5;
    auto* grid_weights = app.add_subcommand("grid-weights", "Search attribute combination weights");
    grid_weights->add_option("--model", gw_model, "Regression checkpoint")->required();
    grid_weights->add_option("--bench", gw_bench, "Bench JSONL")->required();
    grid_weights->add_option("--step", gw_step, "Grid step over [-1, 1]");
    grid_weights->add_option("--out", gw_out, "Optional weights file");
    add_global_flags(grid_weights, flags);

    // expo
    std::string ex_weak, ex_strong, ex_val, ex_out;
    std::optional<double> ex_alpha;
    bool ex_search = false;
    auto* expo = app.add_subcommand("expo", "Extrapolate between two checkpoints");
    expo->add_option("--weak", ex_weak, "Weak checkpoint")->required();
    expo->add_option("--strong", ex_strong, "Strong checkpoint")->required();
    expo->add_option("--alpha", ex_alpha, "Fixed extrapolation coefficient");
    expo->add_flag("--search", ex_search, "Search alpha on validation accuracy");
    expo->add_option("--val", ex_val, "Validation data directory for --search");
    expo->add_option("--out", ex_out, "Output checkpoint")->required();
    add_global_flags(expo, flags);

    // eval-bench
    std::string eb_model, eb_weights, eb_bench, eb_out;
    auto* eval_bench = app.add_subcommand("eval-bench", "Score a model on a preference bench");
    eval_bench->add_option("--model", eb_model, "Checkpoint")->required();
    eval_bench->add_option("--weights", eb_weights, "Attribute weights for 5-output models");
    eval_bench->add_option("--bench", eb_bench, "Bench JSONL")->required();
    eval_bench->add_option("--out", eb_out, "Optional report file");
    add_global_flags(eval_bench, flags);

    // dpo
    std::string dp_config, dp_pairs, dp_out, dp_policy;
    auto* dpo = app.add_subcommand("dpo", "Direct preference optimization on a tabular policy");
    dpo->add_option("--config", dp_config, "DPO config file")->required();
    dpo->add_option("--pairs", dp_pairs, "Preference pairs JSONL")->required();
    dpo->add_option("--out", dp_out, "Output directory")->required();
    dpo->add_option("--policy", dp_policy, "Initial policy JSON (default: uniform)");
    add_global_flags(dpo, flags);

    // reinforce
    std::string rf_config, rf_env, rf_out, rf_policy;
    auto* reinforce = app.add_subcommand("reinforce", "Leave-one-out policy gradient");
    reinforce->add_option("--config", rf_config, "Config file")->required();
    reinforce->add_option("--env", rf_env, "Bandit environment JSON")->required();
    reinforce->add_option("--out", rf_out, "Output directory")->required();
    reinforce->add_option("--policy", rf_policy, "Initial policy JSON (default: uniform)");
    add_global_flags(reinforce, flags);

    std::vector<const char*> argv;
    argv.reserve(args.size() + 1);
    argv.push_back("prefmod");
    for (const auto& a : args) argv.push_back(a.c_str());

    try {
        try {
            app.parse(static_cast<int>(argv.size()), argv.data());
        } catch (const CLI::CallForHelp&) {
            out << app.help();
            return 0;
        } catch (const CLI::ParseError& e) {
            throw ConfigError(e.what());
        }

        if (gen_synth->parsed()) return cmd_gen_synth(gs_config, gs_out, flags);
        if (aggregate->parsed()) return cmd_aggregate(ag_in, ag_out, flags);
        if (kappa->parsed()) return cmd_kappa(ka_in, ka_out, flags, out);
        if (diagnostics->parsed()) return cmd_diagnostics(di_in, di_out, flags, out);
        if (justify->parsed()) return cmd_justify(ju_in, ju_out, ju_flip, ju_all, flags);
        if (table5_cmd->parsed()) {
            out << losses::render_table5(losses::table5());
            return 0;
        }
        if (train->parsed()) return cmd_train(tr_config, tr_data, tr_out, tr_init, flags);
        if (grid_weights->parsed())
            return cmd_grid_weights(gw_model, gw_bench, gw_step, gw_out, flags, out);
        if (expo->parsed())
            return cmd_expo(ex_weak, ex_strong, ex_alpha, ex_search, ex_val, ex_out, flags, out);
        if (eval_bench->parsed())
            return cmd_eval_bench(eb_model, eb_weights, eb_bench, eb_out, flags, out);
        if (dpo->parsed()) return cmd_dpo(dp_config, dp_pairs, dp_out, dp_policy, flags);
        if (reinforce->parsed()) return cmd_reinforce(rf_config, rf_env, rf_out, rf_policy, flags);
        throw ConfigError("no subcommand given");
    } catch (const ConfigError& e) {
        err << "error 2: " << single_line(e.what()) << "\n";
        return 2;
    } catch (const DataError& e) {
        err << "error 3: " << single_line(e.what()) << "\n";
        return 3;
    } catch (const NumericalError& e) {
        err << "error 4: " << single_line(e.what()) << "\n";
        return 4;
    } catch (const std::exception& e) {
        err << "error 1: " << single_line(e.what()) << "\n";
        return 1;
    }
}

}  // namespace prefmod::cli
