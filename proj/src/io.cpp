#include "prefmod/io.hpp"

#include <cerrno>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <sstream>

#include "prefmod/errors.hpp"

#include "json.hpp"

namespace prefmod::io {

using json = nlohmann::ordered_json;

namespace {

// -- json field helpers --

const json& require(const json& object, const char* key) {
    const auto it = object.find(key);
    if (it == object.end()) throw DataError(std::string("missing field: ") + key);
    return *it;
}

std::string get_string(const json& object, const char* key) {
    const json& v = require(object, key);
    if (!v.is_string()) throw DataError(std::string("field is not a string: ") + key);
    return v.get<std::string>();
}

std::int64_t get_int(const json& object, const char* key) {
    const json& v = require(object, key);
    if (!v.is_number_integer() && !v.is_number_unsigned())
        throw DataError(std::string("field is not an integer: ") + key);
    return v.get<std::int64_t>();
}

double get_double(const json& object, const char* key) {
    const json& v = require(object, key);
    if (!v.is_number()) throw DataError(std::string("field is not a number: ") + key);
    return v.get<double>();
}

bool get_bool(const json& object, const char* key) {
    const json& v = require(object, key);
    if (!v.is_boolean()) throw DataError(std::string("field is not a boolean: ") + key);
    return v.get<bool>();
}

json vec_to_json(const Eigen::VectorXd& v) {
    json a = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
    return a;
}

Eigen::VectorXd json_to_vec(const json& a, const char* key) {
    if (!a.is_array()) throw DataError(std::string("field is not an array: ") + key);
    Eigen::VectorXd v(static_cast<Eigen::Index>(a.size()));
    Eigen::Index i = 0;
    for (const auto& x : a) {
        if (!x.is_number()) throw DataError(std::string("non-numeric entry in: ") + key);
        v(i++) = x.get<double>();
    }
    return v;
}

json mat_to_json_rows(const Eigen::MatrixXd& m) {
    json rows = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        rows.push_back(std::move(row));
    }
    return rows;
}

Eigen::MatrixXd json_to_mat(const json& rows, const char* key) {
    if (!rows.is_array() || rows.empty())
        throw DataError(std::string("field is not a non-empty array: ") + key);
    const Eigen::Index nr = static_cast<Eigen::Index>(rows.size());
    Eigen::Index nc = -1;
    Eigen::MatrixXd m;
    Eigen::Index r = 0;
    for (const auto& row : rows) {
        if (!row.is_array()) throw DataError(std::string("row is not an array in: ") + key);
        if (nc < 0) {
            nc = static_cast<Eigen::Index>(row.size());
            m.resize(nr, nc);
        } else if (static_cast<Eigen::Index>(row.size()) != nc) {
            throw DataError(std::string("ragged rows in: ") + key);
        }
        Eigen::Index c = 0;
        for (const auto& x : row) {
            if (!x.is_number()) throw DataError(std::string("non-numeric entry in: ") + key);
            m(r, c++) = x.get<double>();
        }
        ++r;
    }
    return m;
}

json flat_rowmajor(const Eigen::MatrixXd& m) {
    json a = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r)
        for (Eigen::Index c = 0; c < m.cols(); ++c) a.push_back(m(r, c));
    return a;
}

Eigen::MatrixXd unflatten_rowmajor(const json& a, Eigen::Index rows, Eigen::Index cols,
                                   const char* key) {
    if (!a.is_array() || static_cast<Eigen::Index>(a.size()) != rows * cols)
        throw DataError(std::string("parameter array has wrong length: ") + key);
    Eigen::MatrixXd m(rows, cols);
    Eigen::Index i = 0;
    for (const auto& x : a) {
        if (!x.is_number()) throw DataError(std::string("non-numeric entry in: ") + key);
        m(i / cols, i % cols) = x.get<double>();
        ++i;
    }
    return m;
}

// -- enum <-> string --

const char* split_name(prefdata::Split s) {
    return s == prefdata::Split::train ? "train" : "val";
}

prefdata::Split split_from(const std::string& s) {
    if (s == "train") return prefdata::Split::train;
    if (s == "val") return prefdata::Split::val;
    throw DataError("unknown split: " + s);
}

const char* chosen_name(prefdata::Chosen c) {
    switch (c) {
        case prefdata::Chosen::response_1: return "response_1";
        case prefdata::Chosen::response_2: return "response_2";
        default: return "none";
    }
}

prefdata::Chosen chosen_from(const std::string& s) {
    if (s == "response_1") return prefdata::Chosen::response_1;
    if (s == "response_2") return prefdata::Chosen::response_2;
    if (s == "none") return prefdata::Chosen::none;
    throw DataError("unknown chosen value: " + s);
}

const char* status_name(prefdata::AggregateStatus s) {
    switch (s) {
        case prefdata::AggregateStatus::kept: return "kept";
        case prefdata::AggregateStatus::dropped_spread: return "dropped_spread";
        case prefdata::AggregateStatus::dropped_zero: return "dropped_zero";
        default: return "dropped_all_invalid";
    }
}

prefdata::AggregateStatus status_from(const std::string& s) {
    if (s == "kept") return prefdata::AggregateStatus::kept;
    if (s == "dropped_spread") return prefdata::AggregateStatus::dropped_spread;
    if (s == "dropped_zero") return prefdata::AggregateStatus::dropped_zero;
    if (s == "dropped_all_invalid") return prefdata::AggregateStatus::dropped_all_invalid;
    throw DataError("unknown status: " + s);
}

bench::Category category_from(const std::string& s) {
    if (s == "chat") return bench::Category::chat;
    if (s == "chat_hard") return bench::Category::chat_hard;
    if (s == "safety") return bench::Category::safety;
    if (s == "reasoning") return bench::Category::reasoning;
    throw DataError("unknown category: " + s);
}

bench::ReasoningKind reasoning_kind_from(const std::string& s) {
    if (s == "none") return bench::ReasoningKind::none;
    if (s == "math") return bench::ReasoningKind::math;
    if (s == "code") return bench::ReasoningKind::code;
    throw DataError("unknown reasoning_kind: " + s);
}

const char* head_kind_name(rmcore::HeadKind k) {
    return k == rmcore::HeadKind::regression ? "regression" : "bradley_terry";
}

rmcore::HeadKind head_kind_from(const std::string& s) {
    if (s == "regression") return rmcore::HeadKind::regression;
    if (s == "bradley_terry") return rmcore::HeadKind::bradley_terry;
    throw DataError("unknown head_kind: " + s);
}

const char* optimizer_name(trainer::Optimizer o) {
    return o == trainer::Optimizer::sgd ? "sgd" : "adaptive_moments";
}

trainer::Optimizer optimizer_from(const std::string& s) {
    if (s == "sgd") return trainer::Optimizer::sgd;
    if (s == "adaptive_moments") return trainer::Optimizer::adaptive_moments;
    throw ConfigError("unknown optimizer: " + s);
}

const char* variant_name(rlhf::DpoVariant v) {
    switch (v) {
        case rlhf::DpoVariant::regular: return "regular";
        case rlhf::DpoVariant::margin: return "margin";
        default: return "scaled";
    }
}

rlhf::DpoVariant variant_from(const std::string& s) {
    if (s == "regular") return rlhf::DpoVariant::regular;
    if (s == "margin") return rlhf::DpoVariant::margin;
    if (s == "scaled") return rlhf::DpoVariant::scaled;
    throw ConfigError("unknown variant: " + s);
}

// -- ratings --

json ratings_to_json(const prefdata::AttributeRatings& r) {
    json o = json::object();
    o["helpfulness"] = r.helpfulness;
    o["correctness"] = r.correctness;
    o["coherence"] = r.coherence;
    o["complexity"] = r.complexity;
    o["verbosity"] = r.verbosity;
    return o;
}

prefdata::AttributeRatings ratings_from_json(const json& o, const char* key) {
    if (!o.is_object()) throw DataError(std::string("field is not an object: ") + key);
    prefdata::AttributeRatings r;
    r.helpfulness = static_cast<int>(get_int(o, "helpfulness"));
    r.correctness = static_cast<int>(get_int(o, "correctness"));
    r.coherence = static_cast<int>(get_int(o, "coherence"));
    r.complexity = static_cast<int>(get_int(o, "complexity"));
    r.verbosity = static_cast<int>(get_int(o, "verbosity"));
    return r;
}

// Applies fn to each non-empty JSONL line, wrapping failures with the
// 1-based line number.
template <typename Fn>
void for_each_jsonl_line(const std::string& text, Fn&& fn) {
    std::istringstream in(text);
    std::string line;
    std::int64_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            fn(json::parse(line));
        } catch (const json::exception& e) {
            throw DataError("line " + std::to_string(line_no) + ": " + e.what());
        } catch (const DataError& e) {
            throw DataError("line " + std::to_string(line_no) + ": " + e.what());
        }
    }
}

}  // namespace

void atomic_write(const std::filesystem::path& path, const std::string& content) {
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw DataError("cannot open for writing: " + tmp.string());
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) throw DataError("write failed: " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw DataError("rename failed: " + path.string() + ": " + ec.message());
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot read file: " + path.string());
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

std::uint64_t fnv1a64(const std::string& bytes) {
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char b : bytes) {
        h ^= b;
        h *= 1099511628211ULL;
    }
    return h;
}

std::string fnv1a64_hex(const std::string& bytes) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(fnv1a64(bytes)));
    return buf;
}

// -- annotation tasks --

std::string tasks_to_jsonl(const std::vector<prefdata::AnnotationTask>& tasks) {
    std::string out;
    for (const auto& task : tasks) {
        json o = json::object();
        o["task_id"] = task.task_id;
        o["prompt"] = task.prompt;
        o["response_1"] = task.response_1;
        o["response_2"] = task.response_2;
        o["split"] = split_name(task.split);
        json anns = json::array();
        for (const auto& a : task.annotations) {
            json ao = json::object();
            ao["annotator_id"] = a.annotator_id;
            ao["preference"] = a.preference;
            ao["ratings_1"] = ratings_to_json(a.ratings_1);
            ao["ratings_2"] = ratings_to_json(a.ratings_2);
            ao["justification"] = a.justification;
            anns.push_back(std::move(ao));
        }
        o["annotations"] = std::move(anns);
        out += o.dump();
        out += '\n';
    }
    return out;
}

std::vector<prefdata::AnnotationTask> tasks_from_jsonl(const std::string& text) {
    std::vector<prefdata::AnnotationTask> tasks;
    for_each_jsonl_line(text, [&](const json& o) {
        prefdata::AnnotationTask task;
        task.task_id = get_string(o, "task_id");
        task.prompt = get_string(o, "prompt");
        task.response_1 = get_string(o, "response_1");
        task.response_2 = get_string(o, "response_2");
        task.split = split_from(get_string(o, "split"));
        const json& anns = require(o, "annotations");
        if (!anns.is_array()) throw DataError("field is not an array: annotations");
        for (const auto& ao : anns) {
            prefdata::Annotation a;
            a.annotator_id = get_string(ao, "annotator_id");
            a.preference = static_cast<int>(get_int(ao, "preference"));
            a.ratings_1 = ratings_from_json(require(ao, "ratings_1"), "ratings_1");
            a.ratings_2 = ratings_from_json(require(ao, "ratings_2"), "ratings_2");
            a.justification = get_string(ao, "justification");
            task.annotations.push_back(std::move(a));
        }
        tasks.push_back(std::move(task));
    });
    return tasks;
}

// -- aggregates --

std::string aggregates_to_jsonl(const std::vector<prefdata::AggregatedPreference>& aggregates) {
    std::string out;
    for (const auto& agg : aggregates) {
        json o = json::object();
        o["task_id"] = agg.task_id;
        o["used_annotations"] = agg.used_annotations;
        o["overall"] = agg.overall;
        o["magnitude"] = agg.magnitude;
        o["chosen"] = chosen_name(agg.chosen);
        o["status"] = status_name(agg.status);
        out += o.dump();
        out += '\n';
    }
    return out;
}

std::vector<prefdata::AggregatedPreference> aggregates_from_jsonl(const std::string& text) {
    std::vector<prefdata::AggregatedPreference> aggregates;
    for_each_jsonl_line(text, [&](const json& o) {
        prefdata::AggregatedPreference agg;
        agg.task_id = get_string(o, "task_id");
        const json& used = require(o, "used_annotations");
        if (!used.is_array()) throw DataError("field is not an array: used_annotations");
        for (const auto& x : used) {
            if (!x.is_number_integer() && !x.is_number_unsigned())
                throw DataError("non-integer entry in: used_annotations");
            agg.used_annotations.push_back(x.get<int>());
        }
        agg.overall = static_cast<int>(get_int(o, "overall"));
        agg.magnitude = static_cast<int>(get_int(o, "magnitude"));
        agg.chosen = chosen_from(get_string(o, "chosen"));
        agg.status = status_from(get_string(o, "status"));
        aggregates.push_back(std::move(agg));
    });
    return aggregates;
}

std::string aggregate_stats_to_json(
    const std::vector<prefdata::AggregatedPreference>& aggregates) {
    std::int64_t kept = 0, spread = 0, zero = 0, invalid = 0;
    for (const auto& agg : aggregates) {
        switch (agg.status) {
            case prefdata::AggregateStatus::kept: ++kept; break;
            case prefdata::AggregateStatus::dropped_spread: ++spread; break;
            case prefdata::AggregateStatus::dropped_zero: ++zero; break;
            case prefdata::AggregateStatus::dropped_all_invalid: ++invalid; break;
        }
    }
    json o = json::object();
    o["n_tasks"] = static_cast<std::int64_t>(aggregates.size());
    o["kept"] = kept;
    o["dropped_spread"] = spread;
    o["dropped_zero"] = zero;
    o["dropped_all_invalid"] = invalid;
    return o.dump(2) + "\n";
}

// -- generation records --

std::string sft_records_to_jsonl(const std::vector<justif::SftRecord>& records) {
    std::string out;
    for (const auto& rec : records) {
        json o = json::object();
        o["input"] = rec.input;
        o["target"] = rec.target;
        o["label"] = rec.label;
        o["task_id"] = rec.task_id;
        o["flipped"] = rec.flipped;
        out += o.dump();
        out += '\n';
    }
    return out;
}

std::vector<justif::SftRecord> sft_records_from_jsonl(const std::string& text) {
    std::vector<justif::SftRecord> records;
    for_each_jsonl_line(text, [&](const json& o) {
        justif::SftRecord rec;
        rec.input = get_string(o, "input");
        rec.target = get_string(o, "target");
        rec.label = get_string(o, "label");
        rec.task_id = get_string(o, "task_id");
        rec.flipped = get_bool(o, "flipped");
        records.push_back(std::move(rec));
    });
    return records;
}

// -- bench sets --

std::string bench_to_jsonl(const bench::BenchSet& set) {
    std::string out;
    for (const auto& task : set) {
        json o = json::object();
        o["category"] = bench::category_name(task.category);
        o["reasoning_kind"] = bench::reasoning_kind_name(task.reasoning_kind);
        o["prompt"] = vec_to_json(task.prompt);
        o["chosen"] = vec_to_json(task.chosen);
        o["rejected"] = vec_to_json(task.rejected);
        out += o.dump();
        out += '\n';
    }
    return out;
}

bench::BenchSet bench_from_jsonl(const std::string& text) {
    bench::BenchSet set;
    for_each_jsonl_line(text, [&](const json& o) {
        bench::BenchTask task;
        task.category = category_from(get_string(o, "category"));
        task.reasoning_kind = reasoning_kind_from(get_string(o, "reasoning_kind"));
        task.prompt = json_to_vec(require(o, "prompt"), "prompt");
        task.chosen = json_to_vec(require(o, "chosen"), "chosen");
        task.rejected = json_to_vec(require(o, "rejected"), "rejected");
        set.push_back(std::move(task));
    });
    return set;
}

// -- oracle sidecar --

std::string oracle_to_json(const std::vector<synth::OracleTask>& oracle) {
    json tasks = json::array();
    for (const auto& t : oracle) {
        json o = json::object();
        o["task_id"] = t.task_id;
        o["q1"] = t.q1;
        o["q2"] = t.q2;
        o["true_gap"] = t.true_gap;
        o["truth"] = chosen_name(t.truth);
        o["features_1"] = vec_to_json(t.features_1);
        o["features_2"] = vec_to_json(t.features_2);
        tasks.push_back(std::move(o));
    }
    json root = json::object();
    root["version"] = 1;
    root["tasks"] = std::move(tasks);
    return root.dump(2) + "\n";
}

std::vector<synth::OracleTask> oracle_from_json(const std::string& text) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::exception& e) {
        throw DataError(std::string("oracle parse error: ") + e.what());
    }
    if (get_int(root, "version") != 1) throw DataError("unsupported oracle version");
    const json& tasks = require(root, "tasks");
    if (!tasks.is_array()) throw DataError("field is not an array: tasks");
    std::vector<synth::OracleTask> oracle;
    for (const auto& o : tasks) {
        synth::OracleTask t;
        t.task_id = get_string(o, "task_id");
        t.q1 = get_double(o, "q1");
        t.q2 = get_double(o, "q2");
        t.true_gap = get_double(o, "true_gap");
        t.truth = chosen_from(get_string(o, "truth"));
        t.features_1 = json_to_vec(require(o, "features_1"), "features_1");
        t.features_2 = json_to_vec(require(o, "features_2"), "features_2");
        oracle.push_back(std::move(t));
    }
    return oracle;
}

// -- checkpoints --

std::string checkpoint_to_json(const Checkpoint& checkpoint) {
    checkpoint.params.validate();
    json o = json::object();
    o["version"] = 1;
    o["head_kind"] = head_kind_name(checkpoint.params.head_kind);
    o["feature_dim"] = checkpoint.params.feature_dim();
    o["hidden_dim"] = checkpoint.params.hidden_dim();
    o["output_dim"] = checkpoint.params.output_dim();
    o["seed"] = checkpoint.seed;
    o["step"] = checkpoint.step;
    o["w1"] = flat_rowmajor(checkpoint.params.w1);
    o["b1"] = vec_to_json(checkpoint.params.b1);
    o["w2"] = flat_rowmajor(checkpoint.params.w2);
    o["b2"] = vec_to_json(checkpoint.params.b2);
    return o.dump() + "\n";
}

Checkpoint checkpoint_from_json(const std::string& text) {
    json o;
    try {
        o = json::parse(text);
    } catch (const json::exception& e) {
        throw DataError(std::string("checkpoint parse error: ") + e.what());
    }
    if (get_int(o, "version") != 1) throw DataError("unsupported checkpoint version");
    const Eigen::Index d = get_int(o, "feature_dim");
    const Eigen::Index h = get_int(o, "hidden_dim");
    const Eigen::Index width = get_int(o, "output_dim");
    if (d < 1 || h < 1 || width < 1) throw DataError("checkpoint dimensions must be positive");
    Checkpoint checkpoint;
    checkpoint.params.head_kind = head_kind_from(get_string(o, "head_kind"));
    checkpoint.seed = static_cast<std::uint64_t>(get_int(o, "seed"));
    checkpoint.step = get_int(o, "step");
    checkpoint.params.w1 = unflatten_rowmajor(require(o, "w1"), d, h, "w1");
    checkpoint.params.b1 = json_to_vec(require(o, "b1"), "b1");
    checkpoint.params.w2 = unflatten_rowmajor(require(o, "w2"), h, width, "w2");
    checkpoint.params.b2 = json_to_vec(require(o, "b2"), "b2");
    try {
        checkpoint.params.validate();
    } catch (const std::exception& e) {
        throw DataError(std::string("invalid checkpoint: ") + e.what());
    }
    return checkpoint;
}

// -- policies and environments --

std::string policy_to_json(const rlhf::PolicyTable& policy) {
    json o = json::object();
    o["version"] = 1;
    o["logits"] = mat_to_json_rows(policy.logits());
    o["reference_logits"] = mat_to_json_rows(policy.reference_logits());
    return o.dump() + "\n";
}

rlhf::PolicyTable policy_from_json(const std::string& text) {
    json o;
    try {
        o = json::parse(text);
    } catch (const json::exception& e) {
        throw DataError(std::string("policy parse error: ") + e.what());
    }
    if (get_int(o, "version") != 1) throw DataError("unsupported policy version");
    Eigen::MatrixXd logits = json_to_mat(require(o, "logits"), "logits");
    Eigen::MatrixXd reference = json_to_mat(require(o, "reference_logits"), "reference_logits");
    if (logits.rows() != reference.rows() || logits.cols() != reference.cols())
        throw DataError("logits and reference_logits have different shapes");
    return rlhf::PolicyTable(std::move(logits), std::move(reference));
}

std::string env_to_json(const rlhf::BanditEnv& env) {
    json o = json::object();
    o["version"] = 1;
    o["reward_table"] = mat_to_json_rows(env.reward_table);
    o["prompt_distribution"] = vec_to_json(env.prompt_distribution);
    return o.dump() + "\n";
}

rlhf::BanditEnv env_from_json(const std::string& text) {
    json o;
    try {
        o = json::parse(text);
    } catch (const json::exception& e) {
        throw DataError(std::string("env parse error: ") + e.what());
    }
    if (get_int(o, "version") != 1) throw DataError("unsupported env version");
    rlhf::BanditEnv env;
    env.reward_table = json_to_mat(require(o, "reward_table"), "reward_table");
    env.prompt_distribution = json_to_vec(require(o, "prompt_distribution"), "prompt_distribution");
    try {
        env.validate();
    } catch (const std::exception& e) {
        throw DataError(std::string("invalid env: ") + e.what());
    }
    return env;
}

std::string dpo_pairs_to_jsonl(const std::vector<rlhf::DpoPair>& pairs) {
    std::string out;
    for (const auto& pair : pairs) {
        json o = json::object();
        o["context"] = static_cast<std::int64_t>(pair.context);
        o["chosen"] = static_cast<std::int64_t>(pair.chosen);
        o["rejected"] = static_cast<std::int64_t>(pair.rejected);
        o["m"] = pair.m;
        out += o.dump();
        out += '\n';
    }
    return out;
}

std::vector<rlhf::DpoPair> dpo_pairs_from_jsonl(const std::string& text) {
    std::vector<rlhf::DpoPair> pairs;
    for_each_jsonl_line(text, [&](const json& o) {
        rlhf::DpoPair pair;
        pair.context = get_int(o, "context");
        pair.chosen = get_int(o, "chosen");
        pair.rejected = get_int(o, "rejected");
        if (o.contains("m")) pair.m = get_double(o, "m");
        pairs.push_back(pair);
    });
    return pairs;
}

// -- reports --

std::string agreement_report_to_json(const prefdata::AgreementReport& report) {
    json o = json::object();
    o["kappa_raw"] = report.kappa_raw;
    o["kappa_after_subset"] = report.kappa_after_subset;
    o["kappa_after_zero_exclusion"] = report.kappa_after_zero_exclusion;
    o["n_pairs"] = report.n_pairs;
    return o.dump(2) + "\n";
}

std::string diagnostics_to_json(const prefdata::DistributionDiagnostics& diagnostics) {
    json hist = json::object();
    for (int v = -3; v <= 3; ++v)
        hist[std::to_string(v)] = diagnostics.histogram[static_cast<std::size_t>(v + 3)];
    json o = json::object();
    o["histogram"] = std::move(hist);
    o["mean"] = diagnostics.mean;
    o["stddev"] = diagnostics.stddev;
    o["frac_prefer_response_1"] = diagnostics.frac_prefer_response_1;
    o["frac_prefer_response_2"] = diagnostics.frac_prefer_response_2;
    o["position_bias"] = diagnostics.position_bias;
    o["pearson_pref_helpfulness"] = diagnostics.pearson_pref_helpfulness;
    o["n_tasks"] = diagnostics.n_tasks;
    return o.dump(2) + "\n";
}

std::string bench_report_to_json(const bench::BenchReport& report) {
    std::int64_t n_correct = 0;
    for (bool c : report.correct) n_correct += c ? 1 : 0;
    json o = json::object();
    o["accuracy"] = report.accuracy;
    o["overall"] = report.overall;
    o["n_tasks"] = static_cast<std::int64_t>(report.correct.size());
    o["n_correct"] = n_correct;
    return o.dump(2) + "\n";
}

std::string weights_to_json(const rmcore::WeightSearchResult& result) {
    static const char* names[5] = {"helpfulness", "correctness", "coherence", "complexity",
                                   "verbosity"};
    json w = json::object();
    for (int i = 0; i < 5; ++i) w[names[i]] = result.weights(i);
    json o = json::object();
    o["weights"] = std::move(w);
    o["bench_overall"] = result.bench_overall;
    o["n_candidates"] = result.n_candidates;
    return o.dump(2) + "\n";
}

Eigen::VectorXd weights_from_json(const std::string& text) {
    json o;
    try {
        o = json::parse(text);
    } catch (const json::exception& e) {
        throw DataError(std::string("weights parse error: ") + e.what());
    }
    static const char* names[5] = {"helpfulness", "correctness", "coherence", "complexity",
                                   "verbosity"};
    const json& w = require(o, "weights");
    if (!w.is_object()) throw DataError("field is not an object: weights");
    Eigen::VectorXd v(5);
    for (int i = 0; i < 5; ++i) v(i) = get_double(w, names[i]);
    return v;
}

std::string keyword_report_to_json(const std::map<std::string, double>& fractions) {
    json o = json::object();
    for (const auto& [attribute, fraction] : fractions) o[attribute] = fraction;
    return o.dump(2) + "\n";
}

// -- configs --

namespace {

// Minimal scalar typing for key=value files: bool, integer, real, string.
json coerce_scalar(const std::string& raw) {
    if (raw == "true") return true;
    if (raw == "false") return false;
    if (raw.empty()) return std::string();
    char* end = nullptr;
    errno = 0;
    const long long i = std::strtoll(raw.c_str(), &end, 10);
    if (errno == 0 && end == raw.c_str() + raw.size()) return static_cast<std::int64_t>(i);
    errno = 0;
    const double d = std::strtod(raw.c_str(), &end);
    if (errno == 0 && end == raw.c_str() + raw.size()) return d;
    return raw;
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

// Parses either a JSON object or key=value lines into a flat json object.
// Comma-separated key=value entries become arrays so list-valued fields work
// in both syntaxes.
json parse_config_object(const std::string& text) {
    const auto first = text.find_first_not_of(" \t\r\n");
    if (first != std::string::npos && text[first] == '{') {
        try {
            json o = json::parse(text);
            if (!o.is_object()) throw ConfigError("config root must be an object");
            return o;
        } catch (const json::exception& e) {
            throw ConfigError(std::string("config parse error: ") + e.what());
        }
    }
    json o = json::object();
    std::istringstream in(text);
    std::string line;
    std::int64_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(line_no) + ": expected key=value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty())
            throw ConfigError("config line " + std::to_string(line_no) + ": empty key");
        if (value.find(',') != std::string::npos) {
            json a = json::array();
            std::istringstream items(value);
            std::string item;
            while (std::getline(items, item, ',')) a.push_back(coerce_scalar(trim(item)));
            o[key] = std::move(a);
        } else {
            o[key] = coerce_scalar(value);
        }
    }
    return o;
}

std::int64_t config_int(const json& v, const std::string& key) {
    if (!v.is_number_integer() && !v.is_number_unsigned())
        throw ConfigError("config key " + key + " must be an integer");
    return v.get<std::int64_t>();
}

double config_double(const json& v, const std::string& key) {
    if (!v.is_number()) throw ConfigError("config key " + key + " must be a number");
    return v.get<double>();
}

std::string config_string(const json& v, const std::string& key) {
    if (!v.is_string()) throw ConfigError("config key " + key + " must be a string");
    return v.get<std::string>();
}

Eigen::VectorXd config_vec(const json& v, const std::string& key) {
    if (!v.is_array()) throw ConfigError("config key " + key + " must be an array");
    Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (const auto& x : v) {
        if (!x.is_number()) throw ConfigError("config key " + key + " must hold numbers");
        out(i++) = x.get<double>();
    }
    return out;
}

}  // namespace

synth::GenConfig parse_gen_config(const std::string& text) {
    const json o = parse_config_object(text);
    synth::GenConfig config;
    for (const auto& [key, v] : o.items()) {
        if (key == "seed") config.seed = static_cast<std::uint64_t>(config_int(v, key));
        else if (key == "n_tasks") config.n_tasks = config_int(v, key);
        else if (key == "n_annotators_range") {
            if (!v.is_array() || v.size() != 2)
                throw ConfigError("config key n_annotators_range must be [lo, hi]");
            config.n_annotators_range[0] = static_cast<int>(config_int(v[0], key));
            config.n_annotators_range[1] = static_cast<int>(config_int(v[1], key));
        } else if (key == "feature_dim") config.feature_dim = config_int(v, key);
        else if (key == "true_weights") config.true_weights = config_vec(v, key);
        else if (key == "annotator_noise_sd") config.annotator_noise_sd = config_double(v, key);
        else if (key == "position_bias") config.position_bias = config_double(v, key);
        else if (key == "invalid_rate") config.invalid_rate = config_double(v, key);
        else if (key == "val_fraction") config.val_fraction = config_double(v, key);
        else if (key == "n_bench") config.n_bench = config_int(v, key);
        else throw ConfigError("unknown config key: " + key);
    }
    config.validate();
    return config;
}

trainer::TrainConfig parse_train_config(const std::string& text) {
    const json o = parse_config_object(text);
    trainer::TrainConfig config;
    for (const auto& [key, v] : o.items()) {
        if (key == "learning_rate") config.learning_rate = config_double(v, key);
        else if (key == "batch_size") config.batch_size = config_int(v, key);
        else if (key == "epochs") config.epochs = config_int(v, key);
        else if (key == "seed") config.seed = static_cast<std::uint64_t>(config_int(v, key));
        else if (key == "optimizer") config.optimizer = optimizer_from(config_string(v, key));
        else if (key == "weight_decay") config.weight_decay = config_double(v, key);
        else if (key == "loss_kind") config.loss_kind = loss_kind_from_name(config_string(v, key));
        else if (key == "checkpoint_every") config.checkpoint_every = config_int(v, key);
        else throw ConfigError("unknown config key: " + key);
    }
    config.validate();
    return config;
}

rlhf::DpoConfig parse_dpo_config(const std::string& text) {
    const json o = parse_config_object(text);
    rlhf::DpoConfig config;
    for (const auto& [key, v] : o.items()) {
        if (key == "learning_rate") config.learning_rate = config_double(v, key);
        else if (key == "batch_size") config.batch_size = config_int(v, key);
        else if (key == "epochs") config.epochs = config_int(v, key);
        else if (key == "seed") config.seed = static_cast<std::uint64_t>(config_int(v, key));
        else if (key == "beta") config.beta = config_double(v, key);
        else if (key == "variant") config.variant = variant_from(config_string(v, key));
        else throw ConfigError("unknown config key: " + key);
    }
    config.validate();
    return config;
}

rlhf::ReinforceConfig parse_reinforce_config(const std::string& text) {
    const json o = parse_config_object(text);
    rlhf::ReinforceConfig config;
    for (const auto& [key, v] : o.items()) {
        if (key == "steps") config.steps = config_int(v, key);
        else if (key == "k") config.k = static_cast<int>(config_int(v, key));
        else if (key == "beta") config.beta = config_double(v, key);
        else if (key == "learning_rate") config.learning_rate = config_double(v, key);
        else if (key == "seed") config.seed = static_cast<std::uint64_t>(config_int(v, key));
        else throw ConfigError("unknown config key: " + key);
    }
    config.validate();
    return config;
}

std::string gen_config_to_json(const synth::GenConfig& config) {
    json o = json::object();
    o["seed"] = config.seed;
    o["n_tasks"] = config.n_tasks;
    o["n_annotators_range"] = {config.n_annotators_range[0], config.n_annotators_range[1]};
    o["feature_dim"] = static_cast<std::int64_t>(config.feature_dim);
    o["true_weights"] = vec_to_json(config.true_weights);
    o["annotator_noise_sd"] = config.annotator_noise_sd;
    o["position_bias"] = config.position_bias;
    o["invalid_rate"] = config.invalid_rate;
    o["val_fraction"] = config.val_fraction;
    o["n_bench"] = config.n_bench;
    return o.dump();
}

std::string train_config_to_json(const trainer::TrainConfig& config) {
    json o = json::object();
    o["learning_rate"] = config.learning_rate;
    o["batch_size"] = config.batch_size;
    o["epochs"] = config.epochs;
    o["seed"] = config.seed;
    o["optimizer"] = optimizer_name(config.optimizer);
    o["weight_decay"] = config.weight_decay;
    o["loss_kind"] = loss_kind_name(config.loss_kind);
    o["checkpoint_every"] = config.checkpoint_every;
    return o.dump();
}

std::string dpo_config_to_json(const rlhf::DpoConfig& config) {
    json o = json::object();
    o["learning_rate"] = config.learning_rate;
    o["batch_size"] = config.batch_size;
    o["epochs"] = config.epochs;
    o["seed"] = config.seed;
    o["beta"] = config.beta;
    o["variant"] = variant_name(config.variant);
    return o.dump();
}

std::string reinforce_config_to_json(const rlhf::ReinforceConfig& config) {
    json o = json::object();
    o["steps"] = config.steps;
    o["k"] = config.k;
    o["beta"] = config.beta;
    o["learning_rate"] = config.learning_rate;
    o["seed"] = config.seed;
    return o.dump();
}

std::string loss_kind_name(trainer::LossKind kind) {
    switch (kind) {
        case trainer::LossKind::regression_all: return "regression_all";
        case trainer::LossKind::regression_helpfulness: return "regression_helpfulness";
        case trainer::LossKind::bt_regular: return "bt_regular";
        case trainer::LossKind::bt_margin: return "bt_margin";
        default: return "bt_scaled";
    }
}

trainer::LossKind loss_kind_from_name(const std::string& name) {
    if (name == "regression_all") return trainer::LossKind::regression_all;
    if (name == "regression_helpfulness") return trainer::LossKind::regression_helpfulness;
    if (name == "bt_regular") return trainer::LossKind::bt_regular;
    if (name == "bt_margin") return trainer::LossKind::bt_margin;
    if (name == "bt_scaled") return trainer::LossKind::bt_scaled;
    throw ConfigError("unknown loss_kind: " + name);
}

// -- CSV traces --

std::string train_trace_to_csv(const std::vector<trainer::CheckpointEntry>& checkpoints) {
    std::string out = "step,train_loss,val_loss\n";
    char buf[96];
    for (const auto& entry : checkpoints) {
        std::snprintf(buf, sizeof buf, "%lld,%.17g,%.17g\n",
                      static_cast<long long>(entry.step), entry.train_loss, entry.val_loss);
        out += buf;
    }
    return out;
}

std::string rl_trace_to_csv(const std::vector<rlhf::TraceRow>& trace, bool dpo_loss_column) {
    std::string out = dpo_loss_column ? "step,loss,mean_kl\n" : "step,mean_reward,mean_kl\n";
    char buf[96];
    for (const auto& row : trace) {
        std::snprintf(buf, sizeof buf, "%lld,%.17g,%.17g\n", static_cast<long long>(row.step),
                      row.mean_reward, row.mean_kl);
        out += buf;
    }
    return out;
}

// -- manifests --

std::string manifest_to_json(const Manifest& manifest, const std::string& generated_at) {
    json config;
    try {
        config = json::parse(manifest.config_json);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("manifest config is not valid JSON: ") + e.what());
    }
    json o = json::object();
    o["command"] = manifest.command;
    o["config"] = std::move(config);
    o["inputs"] = manifest.inputs;
    o["outputs"] = manifest.outputs;
    o["seed"] = manifest.seed;
    o["threads"] = manifest.threads;
    json hashes = json::object();
    for (const auto& [path, hash] : manifest.artifact_hashes) hashes[path] = hash;
    o["artifact_hashes"] = std::move(hashes);
    o["generated_at"] = generated_at;
    return o.dump(2) + "\n";
}

std::string current_timestamp_utc() {
    const std::time_t now = std::time(nullptr);
    std::tm tm_utc{};
    gmtime_r(&now, &tm_utc);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
    return buf;
}

void write_manifest(const std::filesystem::path& dir, Manifest manifest) {
    for (const auto& output : manifest.outputs)
        manifest.artifact_hashes[output] = fnv1a64_hex(read_file(dir / output));
    atomic_write(dir / "manifest.json", manifest_to_json(manifest, current_timestamp_utc()));
}

}  // namespace prefmod::io
