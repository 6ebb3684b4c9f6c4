#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "prefmod/bench.hpp"
#include "prefmod/justif.hpp"
#include "prefmod/prefdata.hpp"
#include "prefmod/rlhf.hpp"
#include "prefmod/rmcore.hpp"
#include "prefmod/synth.hpp"
#include "prefmod/trainer.hpp"

// Serialization layer: JSON-Lines corpora, JSON checkpoints and reports, CSV
// traces, config files, atomic writes, and run manifests. Every *_to_*
// function returns the exact bytes written, so hashing and byte-identity
// checks operate on strings.

namespace prefmod::io {

// Write via a temp file in the same directory plus rename, so readers never
// observe partial content.
void atomic_write(const std::filesystem::path& path, const std::string& content);
std::string read_file(const std::filesystem::path& path);

std::uint64_t fnv1a64(const std::string& bytes);
std::string fnv1a64_hex(const std::string& bytes);

// -- annotation tasks ---------------------------------------------------

std::string tasks_to_jsonl(const std::vector<prefdata::AnnotationTask>& tasks);
std::vector<prefdata::AnnotationTask> tasks_from_jsonl(const std::string& text);

// -- aggregates ----------------------------------------------------------

std::string aggregates_to_jsonl(const std::vector<prefdata::AggregatedPreference>& aggregates);
std::vector<prefdata::AggregatedPreference> aggregates_from_jsonl(const std::string& text);

std::string aggregate_stats_to_json(const std::vector<prefdata::AggregatedPreference>& aggregates);

// -- generation records ----------------------------------------------------

std::string sft_records_to_jsonl(const std::vector<justif::SftRecord>& records);
std::vector<justif::SftRecord> sft_records_from_jsonl(const std::string& text);

// -- bench sets -------------------------------------------------------------

std::string bench_to_jsonl(const bench::BenchSet& set);
bench::BenchSet bench_from_jsonl(const std::string& text);

// -- synthetic oracle sidecar -----------------------------------------------

std::string oracle_to_json(const std::vector<synth::OracleTask>& oracle);
std::vector<synth::OracleTask> oracle_from_json(const std::string& text);

// -- reward model checkpoints ------------------------------------------------

struct Checkpoint {
    rmcore::RewardModelParams params;
    std::uint64_t seed = 0;
    std::int64_t step = 0;
};

std::string checkpoint_to_json(const Checkpoint& checkpoint);
Checkpoint checkpoint_from_json(const std::string& text);

// -- tabular policies and environments ----------------------------------------

std::string policy_to_json(const rlhf::PolicyTable& policy);
rlhf::PolicyTable policy_from_json(const std::string& text);

std::string env_to_json(const rlhf::BanditEnv& env);
rlhf::BanditEnv env_from_json(const std::string& text);

// Preference pairs over table indices; m defaults to 1 when absent.
std::string dpo_pairs_to_jsonl(const std::vector<rlhf::DpoPair>& pairs);
std::vector<rlhf::DpoPair> dpo_pairs_from_jsonl(const std::string& text);

// -- reports -----------------------------------------------------------------

std::string agreement_report_to_json(const prefdata::AgreementReport& report);
std::string diagnostics_to_json(const prefdata::DistributionDiagnostics& diagnostics);
std::string bench_report_to_json(const bench::BenchReport& report);
std::string weights_to_json(const rmcore::WeightSearchResult& result);
Eigen::VectorXd weights_from_json(const std::string& text);  // canonical attribute order
std::string keyword_report_to_json(const std::map<std::string, double>& fractions);

// -- configs ------------------------------------------------------------------

// Config files are either a JSON object (first non-space byte '{') or
// key=value lines with '#' comments. Unknown keys are rejected.
synth::GenConfig parse_gen_config(const std::string& text);
trainer::TrainConfig parse_train_config(const std::string& text);
rlhf::DpoConfig parse_dpo_config(const std::string& text);
rlhf::ReinforceConfig parse_reinforce_config(const std::string& text);

std::string gen_config_to_json(const synth::GenConfig& config);
std::string train_config_to_json(const trainer::TrainConfig& config);
std::string dpo_config_to_json(const rlhf::DpoConfig& config);
std::string reinforce_config_to_json(const rlhf::ReinforceConfig& config);

std::string loss_kind_name(trainer::LossKind kind);
trainer::LossKind loss_kind_from_name(const std::string& name);

// -- CSV traces -----------------------------------------------------------------

std::string train_trace_to_csv(const std::vector<trainer::CheckpointEntry>& checkpoints);
std::string rl_trace_to_csv(const std::vector<rlhf::TraceRow>& trace, bool dpo_loss_column);

// -- run manifests -----------------------------------------------------------------

struct Manifest {
    std::string command;
    std::string config_json = "{}";  // resolved config as a JSON object
    std::vector<std::string> inputs;
    std::vector<std::string> outputs;  // paths relative to the manifest
    std::uint64_t seed = 0;
    int threads = 1;
    std::map<std::string, std::string> artifact_hashes;  // output path -> fnv1a64
};

// generated_at is the only timestamp in any artifact.
std::string manifest_to_json(const Manifest& manifest, const std::string& generated_at);
std::string current_timestamp_utc();

// Hashes the named outputs (relative to dir), then writes manifest.json.
void write_manifest(const std::filesystem::path& dir, Manifest manifest);

}  // namespace prefmod::io
