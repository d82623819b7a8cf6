#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>

#include "jurysim/harness.hpp"
#include "jurysim/json_codec.hpp"
#include "test_support.hpp"

using namespace jurysim;
using namespace jurysim::test;

namespace {

namespace fs = std::filesystem;

fs::path fresh_dir(const std::string& name) {
    fs::path dir = fs::temp_directory_path() / "jurysim_harness" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

MatrixSpec small_matrix(const fs::path& out) {
    MatrixSpec spec;
    spec.output_dir = out;
    for (const char* preset : {"rigid", "flexible"}) {
        for (auto condition :
             {Condition::Baseline, Condition::NoInitialVote, Condition::OpenMinded}) {
            MatrixCell cell;
            cell.backend.kind = BackendKind::Scripted;
            cell.backend.preset = preset;
            cell.condition = condition;
            cell.replications = 3;
            cell.base_seed = 100;
            spec.cells.push_back(cell);
        }
    }
    return spec;
}

} // namespace

TEST_CASE("matrix of 2 backends x 3 conditions x 3 reps yields 18 run directories") {
    auto out = fresh_dir("matrix18");
    MatrixOutcome outcome = run_matrix(small_matrix(out), bundle());
    CHECK(outcome.completed == 18);
    CHECK(outcome.aborted == 0);

    int run_dirs = 0;
    for (const char* preset : {"scripted_rigid", "scripted_flexible"})
        for (const char* condition : {"baseline", "no_initial_vote", "open_minded"})
            for (int k = 1; k <= 3; ++k) {
                fs::path dir = out / preset / condition / ("run_" + std::to_string(k));
                REQUIRE(fs::exists(dir / "events.jsonl"));
                REQUIRE(fs::exists(dir / "manifest.json"));
                ++run_dirs;
            }
    CHECK(run_dirs == 18);

    CHECK(fs::exists(out / "aggregate_table.txt"));
    CHECK(fs::exists(out / "verdicts_by_cell.csv"));
    CHECK(fs::exists(out / "mean_changes_by_cell.csv"));
    CHECK(fs::exists(out / "mean_turns_by_cell.csv"));
    CHECK(fs::exists(out / "ablation_comparison.csv"));

    // the rigid preset hangs in all nine of its runs
    for (const auto& row : outcome.rows) {
        if (row.model == "scripted_rigid") {
            CHECK(row.hung == row.n);
            CHECK(row.avg_turns == 36.0);
            CHECK(row.avg_flips == 0.0);
        }
    }
}

TEST_CASE("rerunning an identical matrix reproduces every byte") {
    auto out1 = fresh_dir("det_a");
    auto out2 = fresh_dir("det_b");
    run_matrix(small_matrix(out1), bundle());
    run_matrix(small_matrix(out2), bundle());

    int compared = 0;
    for (auto& entry : fs::recursive_directory_iterator(out1)) {
        if (!entry.is_regular_file()) continue;
        fs::path rel = fs::relative(entry.path(), out1);
        REQUIRE(slurp(entry.path()) == slurp(out2 / rel));
        ++compared;
    }
    CHECK(compared >= 18 * 2 + 5);
}

TEST_CASE("worker-pool execution does not change any per-run record") {
    auto seq = fresh_dir("jobs1");
    auto par = fresh_dir("jobs2");
    run_matrix(small_matrix(seq), bundle(), 1);
    run_matrix(small_matrix(par), bundle(), 2);
    for (auto& entry : fs::recursive_directory_iterator(seq)) {
        if (!entry.is_regular_file()) continue;
        fs::path rel = fs::relative(entry.path(), seq);
        REQUIRE(slurp(entry.path()) == slurp(par / rel));
    }
}

TEST_CASE("persisted runs round-trip and pass the metrics drift check") {
    auto out = fresh_dir("roundtrip");
    RunConfig config = scripted_config("flexible", Condition::Baseline, 55);
    RunPaths paths = run_paths(out, "scripted_flexible", Condition::Baseline, 1);
    RunResult result = execute_and_persist(config, bundle(), paths);
    REQUIRE(!result.aborted);

    LoadedRun loaded = load_run(paths.dir);
    CHECK(loaded.record == result.record);
    REQUIRE(loaded.stored_metrics);
    CHECK(recompute_metrics(loaded, bundle()) == *loaded.stored_metrics);
}

TEST_CASE("collect_cell_runs rebuilds the same aggregate rows from disk") {
    auto out = fresh_dir("collect");
    MatrixOutcome outcome = run_matrix(small_matrix(out), bundle());
    auto collected = collect_cell_runs(out);
    CHECK(collected.size() == 18);
    auto rows = aggregate(collected);

    // same cells, same numbers (row order may differ: disk scan is sorted)
    REQUIRE(rows.size() == outcome.rows.size());
    for (const auto& row : rows) {
        bool matched = false;
        for (const auto& original : outcome.rows)
            if (original == row) matched = true;
        REQUIRE(matched);
    }
}

TEST_CASE("matrix file parsing honors defaults and derives seeds") {
    auto dir = fresh_dir("matrixfile");
    fs::path file = dir / "matrix.json";
    {
        std::ofstream o(file);
        o << R"({
  "output_dir": ")" << (dir / "out").string() << R"(",
  "defaults": {"temperature": 0.9, "max_turns": 150, "vote_interval": 12,
               "patience_rounds": 3, "rho_undefined_policy": "report_one"},
  "cells": [
    {"backend": {"kind": "scripted", "preset": "rigid"},
     "condition": "baseline", "replications": 2, "base_seed": 40}
  ]
})";
    }
    MatrixSpec spec = load_matrix_file(file);
    CHECK(spec.defaults.rho_undefined_policy == RhoUndefinedPolicy::ReportOne);
    REQUIRE(spec.cells.size() == 1);
    CHECK(spec.cells[0].replications == 2);

    MatrixOutcome outcome = run_matrix(spec, bundle());
    CHECK(outcome.completed == 2);

    // replication k runs with seed base_seed + (k - 1)
    auto run1 = load_run(dir / "out/scripted_rigid/baseline/run_1");
    auto run2 = load_run(dir / "out/scripted_rigid/baseline/run_2");
    CHECK(run1.record.config.seed == 40);
    CHECK(run2.record.config.seed == 41);
}

TEST_CASE("aborted runs persist a usable prefix and are excluded from aggregates") {
    auto out = fresh_dir("aborted");
    // llm backend pointed at a dead port, with the key present
    setenv("JURYSIM_TEST_KEY", "k", 1);
    RunConfig config;
    config.backend_spec.kind = BackendKind::LlmChat;
    config.backend_spec.model_name = "mock";
    config.backend_spec.endpoint = "http://127.0.0.1:1";
    config.backend_spec.api_key_env = "JURYSIM_TEST_KEY";
    config.seed = 1;

    RunPaths paths = run_paths(out, "mock", Condition::Baseline, 1);
    RunResult result = execute_and_persist(config, bundle(), paths);
    REQUIRE(result.aborted);
    REQUIRE(fs::exists(paths.manifest));

    LoadedRun loaded = load_run(paths.dir);
    CHECK(loaded.aborted);
    CHECK(!loaded.abort_reason.empty());
    CHECK(!loaded.stored_metrics);

    std::vector<std::string> warnings;
    auto runs = collect_cell_runs(out, &warnings);
    CHECK(runs.empty());
    REQUIRE(warnings.size() == 1);
    CHECK(warnings.front().find("aborted") != std::string::npos);
    unsetenv("JURYSIM_TEST_KEY");
}

TEST_CASE("unknown preset is a config error naming the preset") {
    auto out = fresh_dir("badpreset");
    RunConfig config;
    config.backend_spec.kind = BackendKind::Scripted;
    config.backend_spec.preset = "wobbly";
    CHECK_THROWS_WITH_AS(
        execute_and_persist(config, bundle(), run_paths(out, "x", Condition::Baseline, 1)),
        doctest::Contains("wobbly"), std::runtime_error);
}

TEST_CASE("LLM_BASE_URL overrides the configured endpoint at resolve time") {
    RunConfig config;
    config.backend_spec.kind = BackendKind::LlmChat;
    config.backend_spec.model_name = "m";
    config.backend_spec.endpoint = "https://configured.example/v1";

    setenv("LLM_BASE_URL", "http://127.0.0.1:9999/v1", 1);
    RunConfig resolved = resolve_config(config, bundle());
    CHECK(resolved.backend_spec.endpoint == "http://127.0.0.1:9999/v1");
    unsetenv("LLM_BASE_URL");

    RunConfig untouched = resolve_config(config, bundle());
    CHECK(untouched.backend_spec.endpoint == "https://configured.example/v1");
}

TEST_CASE("a cell with a bad config does not take down the rest of the matrix") {
    auto out = fresh_dir("badcell");
    MatrixSpec spec;
    spec.output_dir = out;

    MatrixCell good;
    good.backend.kind = BackendKind::Scripted;
    good.backend.preset = "rigid";
    good.condition = Condition::Baseline;
    good.replications = 1;
    good.base_seed = 1;
    spec.cells.push_back(good);

    MatrixCell bad = good;
    bad.backend.preset = "no_such_preset";
    bad.condition = Condition::OpenMinded;
    spec.cells.push_back(bad);

    MatrixOutcome outcome = run_matrix(spec, bundle());
    CHECK(outcome.completed == 1);
    CHECK(outcome.aborted == 1);
    REQUIRE(outcome.warnings.size() == 1);
    CHECK(outcome.warnings.front().find("no_such_preset") != std::string::npos);
    REQUIRE(outcome.rows.size() == 1);
    CHECK(outcome.rows.front().n == 1);
}
