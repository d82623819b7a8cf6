#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "jurysim/data_files.hpp"
#include "jurysim/domain.hpp"
#include "jurysim/engine.hpp"
#include "jurysim/metrics.hpp"

namespace jurysim {

// One cell of the experiment matrix. Replication k (1-based) runs with seed
// base_seed + (k - 1), so any published table is re-derivable from the file.
struct MatrixCell {
    BackendSpec backend;
    Condition condition = Condition::Baseline;
    int replications = 1;
    std::uint64_t base_seed = 0;
};

struct MatrixSpec {
    std::vector<MatrixCell> cells;
    std::filesystem::path output_dir;
    RunConfig defaults; // backend/condition/seed overridden per cell
};

std::vector<std::string> validate_matrix(const MatrixSpec& spec);

// <out>/<model>/<condition>/run_<k>/{events.jsonl, manifest.json}
struct RunPaths {
    std::filesystem::path dir;
    std::filesystem::path events;
    std::filesystem::path manifest;
};

RunPaths run_paths(const std::filesystem::path& output_dir, const std::string& model_label,
                   Condition condition, int replication);

// Executes one run: resolves the backend (scripted presets, replay sources),
// streams events to events.jsonl as they happen, writes the manifest
// (config + verdict + metrics; abort info for aborted runs) at the end.
RunResult execute_and_persist(RunConfig config, const DataBundle& data, const RunPaths& paths);

// Resolves preset names and replay source paths into a self-contained config.
RunConfig resolve_config(RunConfig config, const DataBundle& data);

struct LoadedRun {
    DeliberationRecord record;
    std::optional<RunMetrics> stored_metrics;
    bool aborted = false;
    std::string abort_reason;
};

LoadedRun load_run(const std::filesystem::path& run_dir);

// Recomputes metrics from the stored transcript (the cli `metrics` drift check).
RunMetrics recompute_metrics(const LoadedRun& run, const DataBundle& data);

struct MatrixOutcome {
    std::vector<AggregateRow> rows;
    std::string table;
    int completed = 0;
    int aborted = 0;
    std::vector<std::string> warnings;
};

using ProgressFn = std::function<void(const std::string&)>;

// Runs every cell (runs are independent; jobs > 1 executes them on a worker
// pool), aggregates completed runs, and writes aggregate_table.txt plus the
// figure CSVs into the output directory.
MatrixOutcome run_matrix(const MatrixSpec& spec, const DataBundle& data, int jobs = 1,
                         const ProgressFn& progress = {});

// Aggregation over already-persisted runs (the cli `aggregate` path): scans
// <dir>/<model>/<condition>/run_*/ and rebuilds rows from the manifests.
std::vector<CellRun> collect_cell_runs(const std::filesystem::path& output_dir,
                                       std::vector<std::string>* warnings = nullptr);

void write_aggregate_outputs(const std::vector<AggregateRow>& rows,
                             const std::filesystem::path& output_dir);

MatrixSpec load_matrix_file(const std::filesystem::path& path);
RunConfig load_run_config_file(const std::filesystem::path& path);

} // namespace jurysim
