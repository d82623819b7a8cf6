#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "jurysim/data_files.hpp"
#include "jurysim/harness.hpp"
#include "jurysim/json_codec.hpp"
#include "jurysim/prompts.hpp"

namespace {

using namespace jurysim;

std::filesystem::path default_data_dir() {
    if (const char* env = std::getenv("JURYSIM_DATA_DIR"); env && *env) return env;
    return "data";
}

// "scripted:rigid" | "llm:<model>" | "replay:<path>"
BackendSpec parse_backend_arg(const std::string& arg) {
    BackendSpec spec;
    auto colon = arg.find(':');
    std::string kind = arg.substr(0, colon);
    std::string rest = colon == std::string::npos ? "" : arg.substr(colon + 1);
    auto parsed = parse_backend_kind(kind);
    if (!parsed) throw CLI::ValidationError("--backend", "unknown backend kind '" + kind + "'");
    spec.kind = *parsed;
    switch (spec.kind) {
    case BackendKind::Scripted:
        spec.preset = rest.empty() ? "rigid" : rest;
        break;
    case BackendKind::LlmChat:
        spec.model_name = rest;
        break;
    case BackendKind::Replay:
        spec.source_path = rest;
        break;
    }
    return spec;
}

int cmd_run(const std::filesystem::path& data_dir, const std::string& config_file,
            const std::string& backend_arg, const std::string& condition_arg,
            std::uint64_t seed, bool seed_set, const std::string& out_dir,
            double temperature, bool temperature_set, int max_turns, bool max_turns_set,
            const std::string& endpoint, const std::string& api_key_env,
            const std::string& label, const std::string& selector_arg,
            const std::string& rho_arg, const std::string& show_prompt) {
    DataBundle data = load_data_bundle(data_dir);

    RunConfig config;
    if (!config_file.empty()) config = load_run_config_file(config_file);
    if (!backend_arg.empty()) config.backend_spec = parse_backend_arg(backend_arg);
    if (!condition_arg.empty()) {
        auto condition = parse_condition(condition_arg);
        if (!condition) {
            std::cerr << "error: unknown condition '" << condition_arg << "'\n";
            return 1;
        }
        config.condition = *condition;
    }
    if (seed_set) config.seed = seed;
    if (temperature_set) config.temperature = temperature;
    if (max_turns_set) config.max_turns = max_turns;
    if (!endpoint.empty()) config.backend_spec.endpoint = endpoint;
    if (!api_key_env.empty()) config.backend_spec.api_key_env = api_key_env;
    if (!label.empty()) config.backend_spec.label = label;
    if (!selector_arg.empty()) {
        auto policy = parse_selector_policy(selector_arg);
        if (!policy) {
            std::cerr << "error: unknown selector policy '" << selector_arg << "'\n";
            return 1;
        }
        config.selector_policy = *policy;
    }
    if (!rho_arg.empty()) {
        auto policy = parse_rho_policy(rho_arg);
        if (!policy) {
            std::cerr << "error: unknown rho policy '" << rho_arg << "'\n";
            return 1;
        }
        config.rho_undefined_policy = *policy;
    }

    if (!show_prompt.empty()) {
        auto juror = JurorId::parse(show_prompt);
        if (!juror) {
            std::cerr << "error: bad juror id '" << show_prompt << "'\n";
            return 1;
        }
        auto conditioned = condition_personas(data.personas, config.condition);
        for (const auto& persona : conditioned) {
            if (persona.id != *juror) continue;
            auto bundle = assemble_system_prompt(persona, data.case_file, config.condition);
            std::cout << bundle.system_prompt;
            return 0;
        }
        std::cerr << "error: no persona for " << juror->name() << "\n";
        return 1;
    }

    config = resolve_config(std::move(config), data);
    auto violations = validate_config(config);
    if (!violations.empty()) {
        for (const auto& v : violations) std::cerr << "config error: " << v << "\n";
        return 1;
    }

    RunPaths paths;
    paths.dir = out_dir;
    paths.events = paths.dir / "events.jsonl";
    paths.manifest = paths.dir / "manifest.json";
    RunResult result = execute_and_persist(config, data, paths);

    if (result.aborted) {
        std::cerr << "ABORTED: " << result.abort_reason << "\n";
        std::cerr << "partial record preserved in " << paths.dir.string() << "\n";
        return 2;
    }
    std::cout << "verdict=" << to_string(result.record.verdict)
              << " turns=" << result.record.total_turns
              << " flips=" << result.record.vote_changes.size() << "\n";
    std::cout << "record written to " << paths.dir.string() << "\n";
    return 0;
}

int cmd_matrix(const std::filesystem::path& data_dir, const std::string& matrix_file, int jobs) {
    DataBundle data = load_data_bundle(data_dir);
    MatrixSpec spec = load_matrix_file(matrix_file);
    auto violations = validate_matrix(spec);
    if (!violations.empty()) {
        for (const auto& v : violations) std::cerr << "matrix error: " << v << "\n";
        return 1;
    }
    MatrixOutcome outcome =
        run_matrix(spec, data, jobs, [](const std::string& line) { std::cout << line << "\n"; });
    for (const auto& w : outcome.warnings) std::cerr << "warning: " << w << "\n";
    std::cout << "\n" << outcome.table;
    std::cout << "outputs written to " << spec.output_dir.string() << "\n";
    return 0;
}

int cmd_metrics(const std::filesystem::path& data_dir, const std::string& run_dir) {
    DataBundle data = load_data_bundle(data_dir);
    LoadedRun run;
    try {
        run = load_run(run_dir);
    } catch (const CodecError& e) {
        std::cerr << "error: " << run_dir << "/events.jsonl:" << e.line << ": " << e.what() << "\n";
        return 1;
    }
    if (run.aborted) {
        std::cerr << "aborted run (" << run.abort_reason << "); no metrics\n";
        return 2;
    }
    RunMetrics recomputed = recompute_metrics(run, data);
    std::cout << metrics_to_json(recomputed).dump(2) << "\n";
    if (run.stored_metrics && !(*run.stored_metrics == recomputed)) {
        std::cerr << "drift: recomputed metrics differ from the stored manifest\n";
        return 3;
    }
    return 0;
}

int cmd_aggregate(const std::filesystem::path& runs_dir, const std::string& out_dir) {
    std::vector<std::string> warnings;
    auto runs = collect_cell_runs(runs_dir, &warnings);
    for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
    if (runs.empty()) {
        std::cerr << "no completed runs under " << runs_dir.string() << "\n";
        return 1;
    }
    auto rows = aggregate(runs);
    std::cout << format_aggregate_table(rows);
    if (!out_dir.empty()) {
        write_aggregate_outputs(rows, out_dir);
        std::cout << "outputs written to " << out_dir << "\n";
    }
    return 0;
}

int cmd_prompts_show(const std::filesystem::path& data_dir, const std::string& juror_arg,
                     const std::string& condition_arg, bool vote) {
    DataBundle data = load_data_bundle(data_dir);
    if (vote) {
        std::cout << assemble_vote_prompt() << "\n";
        return 0;
    }
    auto juror = JurorId::parse(juror_arg);
    if (!juror) {
        std::cerr << "error: bad juror id '" << juror_arg << "'\n";
        return 1;
    }
    auto condition = parse_condition(condition_arg);
    if (!condition) {
        std::cerr << "error: unknown condition '" << condition_arg << "'\n";
        return 1;
    }
    auto conditioned = condition_personas(data.personas, *condition);
    for (const auto& persona : conditioned) {
        if (persona.id != *juror) continue;
        std::cout << assemble_system_prompt(persona, data.case_file, *condition).system_prompt;
        return 0;
    }
    std::cerr << "error: no persona for " << juror->name() << "\n";
    return 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Twelve-juror deliberation simulator"};
    app.require_subcommand(1);

    std::filesystem::path data_dir = default_data_dir();
    app.add_option("--data-dir", data_dir, "Directory with personas/case file/presets")
        ->envname("JURYSIM_DATA_DIR");

    // run
    auto* run = app.add_subcommand("run", "Execute a single deliberation run");
    std::string run_config, run_backend, run_condition, run_out = "run_out";
    std::string run_endpoint, run_api_key_env, run_label, run_selector, run_rho, run_show_prompt;
    std::uint64_t run_seed = 0;
    double run_temperature = 0.9;
    int run_max_turns = 150;
    run->add_option("--config", run_config, "Run config JSON file");
    run->add_option("--backend", run_backend, "scripted:<preset> | llm:<model> | replay:<path>");
    run->add_option("--condition", run_condition, "baseline | no_initial_vote | open_minded");
    auto* seed_opt = run->add_option("--seed", run_seed, "Run seed");
    run->add_option("--out", run_out, "Output directory for events.jsonl + manifest.json");
    auto* temp_opt = run->add_option("--temperature", run_temperature, "Sampling temperature");
    auto* turns_opt = run->add_option("--max-turns", run_max_turns, "Turn budget");
    run->add_option("--endpoint", run_endpoint, "Chat endpoint base URL (llm backends)");
    run->add_option("--api-key-env", run_api_key_env, "Env var holding the API key");
    run->add_option("--label", run_label, "Backend label used in outputs");
    run->add_option("--selector", run_selector,
                    "dissent_priority_rotation | round_robin | model_driven");
    run->add_option("--rho-policy", run_rho, "skip | report_one");
    run->add_option("--show-prompt", run_show_prompt,
                    "Print the juror's system prompt and exit (e.g. juror_3)");

    // matrix
    auto* matrix = app.add_subcommand("matrix", "Execute an experiment matrix");
    std::string matrix_file;
    int matrix_jobs = 1;
    matrix->add_option("--file", matrix_file, "Matrix JSON file")->required();
    matrix->add_option("--jobs", matrix_jobs, "Parallel runs");

    // metrics
    auto* metrics = app.add_subcommand("metrics", "Recompute metrics from a persisted run");
    std::string metrics_run;
    metrics->add_option("--run", metrics_run, "Run directory")->required();

    // aggregate
    auto* agg = app.add_subcommand("aggregate", "Aggregate persisted runs into the results table");
    std::string agg_runs, agg_out;
    agg->add_option("--runs", agg_runs, "Directory of persisted runs")->required();
    agg->add_option("--out", agg_out, "Where to write the table and CSVs");

    // prompts show
    auto* prompts = app.add_subcommand("prompts", "Prompt inspection");
    auto* show = prompts->add_subcommand("show", "Print an assembled prompt");
    std::string show_juror = "8", show_condition = "baseline";
    bool show_vote = false;
    show->add_option("--juror", show_juror, "Juror id (e.g. 8 or Juror_8)");
    show->add_option("--condition", show_condition, "Condition");
    show->add_flag("--vote", show_vote, "Print the vote prompt instead");

    // export-figures
    auto* figures = app.add_subcommand("export-figures", "Write plot-ready CSVs from runs");
    std::string fig_runs, fig_out;
    figures->add_option("--runs", fig_runs, "Directory of persisted runs")->required();
    figures->add_option("--out", fig_out, "Output directory")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed())
            return cmd_run(data_dir, run_config, run_backend, run_condition, run_seed,
                           seed_opt->count() > 0, run_out, run_temperature,
                           temp_opt->count() > 0, run_max_turns, turns_opt->count() > 0,
                           run_endpoint, run_api_key_env, run_label, run_selector, run_rho,
                           run_show_prompt);
        if (matrix->parsed()) return cmd_matrix(data_dir, matrix_file, matrix_jobs);
        if (metrics->parsed()) return cmd_metrics(data_dir, metrics_run);
        if (agg->parsed()) return cmd_aggregate(agg_runs, agg_out);
        if (prompts->parsed()) {
            if (!show->parsed()) {
                std::cerr << "usage: jurysim prompts show --juror N --condition C\n";
                return 1;
            }
            return cmd_prompts_show(data_dir, show_juror, show_condition, show_vote);
        }
        if (figures->parsed()) return cmd_aggregate(fig_runs, fig_out);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
