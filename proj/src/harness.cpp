#include "jurysim/harness.hpp"

#include <atomic>
#include <fstream>
#include <mutex>
#include <thread>

#include <json.hpp>

#include "jurysim/json_codec.hpp"
#include "jurysim/llm_client.hpp"

namespace jurysim {

namespace {

using nlohmann::json;

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << content;
}

json parse_json_file(const std::filesystem::path& path) {
    json j = json::parse(read_file(path), nullptr, false);
    if (j.is_discarded()) throw std::runtime_error("malformed JSON in " + path.string());
    return j;
}

// An LlmSpeakerSelector adapted to the engine's hook.
class LlmSelectorAdapter final : public SpeakerSelector {
public:
    explicit LlmSelectorAdapter(LlmSpeakerSelector selector) : selector_(std::move(selector)) {}

    std::pair<std::string, std::optional<JurorId>> select(std::span<const Utterance> transcript,
                                                          int turn) override {
        auto reply = selector_.select(transcript, turn);
        return {reply.raw, reply.juror};
    }

private:
    LlmSpeakerSelector selector_;
};

std::unique_ptr<SpeakerSelector> make_selector(const RunConfig& config) {
    if (config.selector_policy != SelectorPolicy::ModelDriven) return nullptr;
    const BackendSpec& spec = config.backend_spec;
    const std::string env = spec.api_key_env.empty() ? "LLM_API_KEY" : spec.api_key_env;
    const char* key = std::getenv(env.c_str());
    if (!key || !*key)
        throw std::runtime_error("missing API key: environment variable " + env + " is not set");
    ChatClient client(spec.endpoint, spec.model_name, key);
    return std::make_unique<LlmSelectorAdapter>(
        LlmSpeakerSelector(std::move(client), config.temperature));
}

} // namespace

std::vector<std::string> validate_matrix(const MatrixSpec& spec) {
    std::vector<std::string> v;
    if (spec.cells.empty()) v.push_back("matrix has no cells");
    if (spec.output_dir.empty()) v.push_back("matrix needs an output_dir");
    for (std::size_t i = 0; i < spec.cells.size(); ++i)
        if (spec.cells[i].replications < 1)
            v.push_back("cell " + std::to_string(i + 1) + ": replications must be >= 1");
    return v;
}

RunPaths run_paths(const std::filesystem::path& output_dir, const std::string& model_label,
                   Condition condition, int replication) {
    RunPaths paths;
    paths.dir =
        output_dir / model_label / to_string(condition) / ("run_" + std::to_string(replication));
    paths.events = paths.dir / "events.jsonl";
    paths.manifest = paths.dir / "manifest.json";
    return paths;
}

RunConfig resolve_config(RunConfig config, const DataBundle& data) {
    BackendSpec& b = config.backend_spec;
    if (b.kind == BackendKind::LlmChat) {
        // LLM_BASE_URL redirects any llm backend (e.g. at a local proxy); the
        // manifest then records the endpoint that actually served the run.
        if (const char* base = std::getenv("LLM_BASE_URL"); base && *base) b.endpoint = base;
    }
    if (b.kind == BackendKind::Scripted && !b.scripted_params) {
        auto it = data.scripted_presets.presets.find(b.preset);
        if (it == data.scripted_presets.presets.end())
            throw std::runtime_error("unknown scripted preset '" + b.preset + "'");
        b.scripted_params = it->second;
    }
    if (b.kind == BackendKind::Replay && !b.source_record && !b.source_path.empty()) {
        std::filesystem::path source = b.source_path;
        if (std::filesystem::is_directory(source)) {
            auto loaded = load_run(source);
            b.source_record = std::make_shared<DeliberationRecord>(std::move(loaded.record));
        } else {
            // bare events.jsonl: enough for replays, config comes from this run
            DeliberationRecord record;
            record.events = decode_events_jsonl(read_file(source));
            b.source_record = std::make_shared<DeliberationRecord>(std::move(record));
        }
    }
    return config;
}

RunResult execute_and_persist(RunConfig config, const DataBundle& data, const RunPaths& paths) {
    config = resolve_config(std::move(config), data);
    auto violations = validate_config(config);
    if (!violations.empty()) throw std::runtime_error("invalid config: " + violations.front());

    std::filesystem::create_directories(paths.dir);
    std::ofstream events_out(paths.events, std::ios::binary | std::ios::trunc);
    if (!events_out) throw std::runtime_error("cannot write " + paths.events.string());

    EventSink sink = [&events_out](const Event& event) {
        events_out << event_to_json(event).dump() << '\n';
        events_out.flush(); // interrupted runs keep a usable prefix
    };

    auto conditioned = condition_personas(data.personas, config.condition);
    auto persona_violations = validate_personas(conditioned, config.condition);
    if (!persona_violations.empty())
        throw std::runtime_error("invalid personas: " + persona_violations.front());

    auto backend = make_backend(config, conditioned, data.case_file);
    auto selector = make_selector(config);
    DeliberationEngine engine(config, std::move(conditioned), data.case_file);
    RunResult result = engine.run(*backend, selector.get(), sink);
    events_out.close();

    json manifest = record_manifest_json(result.record);
    manifest["aborted"] = result.aborted;
    if (result.aborted) {
        manifest["abort_reason"] = result.abort_reason;
        manifest.erase("verdict"); // an aborted run has no verdict of any kind
    } else {
        RunMetrics metrics = compute_run_metrics(result.record, data.case_file, data.personas,
                                                 data.metric_config);
        manifest["metrics"] = metrics_to_json(metrics);
    }
    if (!result.selector_audit.empty()) {
        json audit = json::array();
        for (const auto& entry : result.selector_audit)
            audit.push_back({{"turn", entry.turn},
                             {"raw", entry.raw},
                             {"chosen", entry.chosen},
                             {"fallback", entry.fallback}});
        manifest["selector_audit"] = audit;
    }
    write_file(paths.manifest, manifest.dump(2) + "\n");
    return result;
}

LoadedRun load_run(const std::filesystem::path& run_dir) {
    LoadedRun run;
    json manifest = parse_json_file(run_dir / "manifest.json");
    run.aborted = manifest.value("aborted", false);
    run.abort_reason = manifest.value("abort_reason", std::string{});
    std::string events = read_file(run_dir / "events.jsonl");
    if (run.aborted) {
        // partial prefix; manifest has no verdict
        run.record.config = config_from_json(manifest.at("config"));
        run.record.events = decode_events_jsonl(events);
        run.record.total_turns = manifest.value("total_turns", 0);
    } else {
        run.record = decode_record(manifest, events);
    }
    if (manifest.contains("metrics")) run.stored_metrics = metrics_from_json(manifest["metrics"]);
    return run;
}

RunMetrics recompute_metrics(const LoadedRun& run, const DataBundle& data) {
    return compute_run_metrics(run.record, data.case_file, data.personas, data.metric_config);
}

std::vector<CellRun> collect_cell_runs(const std::filesystem::path& output_dir,
                                       std::vector<std::string>* warnings) {
    std::vector<CellRun> runs;
    if (!std::filesystem::is_directory(output_dir)) return runs;

    std::vector<std::filesystem::path> run_dirs;
    for (const auto& model_dir : std::filesystem::directory_iterator(output_dir)) {
        if (!model_dir.is_directory()) continue;
        for (const auto& condition_dir : std::filesystem::directory_iterator(model_dir)) {
            if (!condition_dir.is_directory()) continue;
            for (const auto& run_dir : std::filesystem::directory_iterator(condition_dir)) {
                if (run_dir.is_directory() &&
                    std::filesystem::exists(run_dir.path() / "manifest.json"))
                    run_dirs.push_back(run_dir.path());
            }
        }
    }
    std::sort(run_dirs.begin(), run_dirs.end());

    for (const auto& dir : run_dirs) {
        json manifest = parse_json_file(dir / "manifest.json");
        if (manifest.value("aborted", false)) {
            if (warnings)
                warnings->push_back("excluding aborted run " + dir.string() + " (" +
                                    manifest.value("abort_reason", std::string("unknown")) + ")");
            continue;
        }
        if (!manifest.contains("metrics")) {
            if (warnings) warnings->push_back("no metrics in " + dir.string() + ", skipping");
            continue;
        }
        RunConfig config = config_from_json(manifest.at("config"));
        runs.push_back({config.backend_spec.effective_label(), to_string(config.condition),
                        metrics_from_json(manifest["metrics"])});
    }
    return runs;
}

void write_aggregate_outputs(const std::vector<AggregateRow>& rows,
                             const std::filesystem::path& output_dir) {
    std::filesystem::create_directories(output_dir);
    write_file(output_dir / "aggregate_table.txt", format_aggregate_table(rows));
    write_file(output_dir / "verdicts_by_cell.csv", verdicts_csv(rows));
    write_file(output_dir / "mean_changes_by_cell.csv", mean_changes_csv(rows));
    write_file(output_dir / "mean_turns_by_cell.csv", mean_turns_csv(rows));
    write_file(output_dir / "ablation_comparison.csv", ablation_csv(rows));
}

MatrixOutcome run_matrix(const MatrixSpec& spec, const DataBundle& data, int jobs,
                         const ProgressFn& progress) {
    auto violations = validate_matrix(spec);
    if (!violations.empty()) throw std::runtime_error("invalid matrix: " + violations.front());

    struct Task {
        RunConfig config;
        RunPaths paths;
        std::string model;
        std::string condition;
    };
    std::vector<Task> tasks;
    for (const auto& cell : spec.cells) {
        for (int k = 1; k <= cell.replications; ++k) {
            RunConfig config = spec.defaults;
            config.backend_spec = cell.backend;
            config.condition = cell.condition;
            config.seed = cell.base_seed + static_cast<std::uint64_t>(k - 1);
            tasks.push_back({config,
                             run_paths(spec.output_dir, cell.backend.effective_label(),
                                       cell.condition, k),
                             cell.backend.effective_label(), to_string(cell.condition)});
        }
    }

    MatrixOutcome outcome;
    std::vector<std::optional<CellRun>> results(tasks.size());
    std::vector<std::string> task_warnings(tasks.size());
    std::atomic<std::size_t> next{0};
    std::mutex progress_mutex;

    auto worker = [&]() {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= tasks.size()) return;
            const Task& task = tasks[i];
            RunResult result;
            try {
                result = execute_and_persist(task.config, data, task.paths);
            } catch (const std::exception& e) {
                result.aborted = true;
                result.abort_reason = e.what();
            }
            std::string line;
            if (result.aborted) {
                task_warnings[i] = "aborted run " + task.paths.dir.string() + ": " +
                                   result.abort_reason;
                line = task.paths.dir.string() + "  ABORTED: " + result.abort_reason;
            } else {
                RunMetrics metrics = compute_run_metrics(result.record, data.case_file,
                                                         data.personas, data.metric_config);
                results[i] = CellRun{task.model, task.condition, metrics};
                line = task.paths.dir.string() + "  " + to_string(result.record.verdict) +
                       " turns=" + std::to_string(result.record.total_turns) +
                       " flips=" + std::to_string(metrics.num_changes);
            }
            if (progress) {
                std::lock_guard<std::mutex> lock(progress_mutex);
                progress(line);
            }
        }
    };

    const int worker_count = std::max(1, std::min<int>(jobs, static_cast<int>(tasks.size())));
    if (worker_count == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int i = 0; i < worker_count; ++i) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    std::vector<CellRun> completed;
    for (std::size_t i = 0; i < tasks.size(); ++i) {
        if (results[i]) {
            completed.push_back(*results[i]);
            ++outcome.completed;
        } else {
            ++outcome.aborted;
            outcome.warnings.push_back(task_warnings[i]);
        }
    }

    outcome.rows = aggregate(completed);
    outcome.table = format_aggregate_table(outcome.rows);
    write_aggregate_outputs(outcome.rows, spec.output_dir);
    return outcome;
}

MatrixSpec load_matrix_file(const std::filesystem::path& path) {
    json doc = parse_json_file(path);
    MatrixSpec spec;
    spec.output_dir = doc.at("output_dir").get<std::string>();
    if (doc.contains("defaults")) {
        const json& d = doc.at("defaults");
        RunConfig& c = spec.defaults;
        c.temperature = d.value("temperature", c.temperature);
        c.max_turns = d.value("max_turns", c.max_turns);
        c.vote_interval = d.value("vote_interval", c.vote_interval);
        c.patience_rounds = d.value("patience_rounds", c.patience_rounds);
        if (d.contains("selector_policy")) {
            auto p = parse_selector_policy(d.at("selector_policy").get<std::string>());
            if (!p) throw std::runtime_error(path.string() + ": bad selector_policy");
            c.selector_policy = *p;
        }
        if (d.contains("rho_undefined_policy")) {
            auto p = parse_rho_policy(d.at("rho_undefined_policy").get<std::string>());
            if (!p) throw std::runtime_error(path.string() + ": bad rho_undefined_policy");
            c.rho_undefined_policy = *p;
        }
        if (d.contains("canonical_flip_order")) {
            c.canonical_flip_order.clear();
            for (const auto& name : d.at("canonical_flip_order")) {
                auto id = JurorId::parse(name.get<std::string>());
                if (!id) throw std::runtime_error(path.string() + ": bad juror in flip order");
                c.canonical_flip_order.push_back(*id);
            }
        }
    }
    for (const auto& cell_json : doc.at("cells")) {
        MatrixCell cell;
        const json& b = cell_json.at("backend");
        auto kind = parse_backend_kind(b.at("kind").get<std::string>());
        if (!kind) throw std::runtime_error(path.string() + ": bad backend kind");
        cell.backend.kind = *kind;
        cell.backend.label = b.value("label", std::string{});
        cell.backend.model_name = b.value("model_name", std::string{});
        cell.backend.endpoint = b.value("endpoint", std::string{});
        cell.backend.api_key_env = b.value("api_key_env", std::string{});
        cell.backend.preset = b.value("preset", std::string{});
        cell.backend.source_path = b.value("source_path", std::string{});
        auto condition = parse_condition(cell_json.at("condition").get<std::string>());
        if (!condition) throw std::runtime_error(path.string() + ": bad condition");
        cell.condition = *condition;
        cell.replications = cell_json.value("replications", 1);
        cell.base_seed = cell_json.value("base_seed", 0ULL);
        spec.cells.push_back(std::move(cell));
    }
    return spec;
}

RunConfig load_run_config_file(const std::filesystem::path& path) {
    return config_from_json(parse_json_file(path));
}

} // namespace jurysim
