#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "jurysim/domain.hpp"

namespace jurysim {

// Keyword tables driving the transcript detectors; loaded from
// data/metric_config.json (see data_files.hpp). Matching is case-insensitive.
struct ClosurePattern {
    std::string name;
    std::string kind; // "regex" | "unanimity_claim"
    std::string pattern;

    bool operator==(const ClosurePattern&) const = default;
};

struct MetricConfig {
    std::map<int, std::vector<std::string>> evidence_aliases;
    // per juror, one alias list per key argument (index-aligned); the full
    // argument text always counts as a match on its own
    std::map<JurorId, std::vector<std::vector<std::string>>> key_argument_aliases;
    std::vector<ClosurePattern> closure_patterns;

    bool operator==(const MetricConfig&) const = default;
};

struct ClosureFlag {
    int turn = 0;
    std::string pattern;

    bool operator==(const ClosureFlag&) const = default;
};

struct RunMetrics {
    Verdict verdict = Verdict::HungJury;
    int total_turns = 0;
    std::vector<VoteChangeEvent> vote_changes;
    int num_changes = 0;
    double cascade_velocity = 0.0; // changes per turn
    std::vector<JurorId> first_flip_order;
    std::optional<double> spearman_rho;
    std::vector<JurorId> rho_excluded; // observed jurors missing from the canonical order
    std::set<int> evidence_coverage;
    std::map<JurorId, double> key_argument_coverage;
    int cross_reference_count = 0;
    std::vector<ClosureFlag> narrative_closure_flags;

    bool operator==(const RunMetrics&) const = default;
};

// Ordered (turn, juror, from, to) diff of consecutive vote rounds, starting
// from the record's conditioning baseline; under NoInitialVote the first
// round defines the baseline and registers zero changes. Ordered by turn,
// then juror id.
std::vector<VoteChangeEvent> extract_vote_changes(const DeliberationRecord& record);

// Sequence of jurors' first GUILTY -> NOT_GUILTY flips. A juror whose first
// recorded change is NOT_GUILTY -> GUILTY started NOT_GUILTY and never
// appears; flipping back later does not remove membership.
std::vector<JurorId> first_flip_order(const std::vector<VoteChangeEvent>& changes);

struct SpearmanResult {
    std::optional<double> rho;
    std::vector<JurorId> excluded; // observed jurors absent from the canonical list
};

// Rank correlation between the observed first-flip order and the canonical
// order, restricted to jurors present in both lists. Defined only for n >= 2;
// below that, Skip reports absent and ReportOne reports 1.0.
SpearmanResult spearman_rho(const std::vector<JurorId>& observed,
                            const std::vector<JurorId>& canonical,
                            RhoUndefinedPolicy policy);

double cascade_velocity(int num_changes, int total_turns); // throws std::domain_error on turns <= 0

std::set<int> evidence_coverage(const DeliberationRecord& record, const CaseFile& case_file,
                                const MetricConfig& config);

std::map<JurorId, double> key_argument_coverage(const DeliberationRecord& record,
                                                const std::vector<Persona>& personas,
                                                const MetricConfig& config);

int cross_reference_count(const DeliberationRecord& record);

std::vector<ClosureFlag> detect_narrative_closure(const DeliberationRecord& record,
                                                  const MetricConfig& config);

RunMetrics compute_run_metrics(const DeliberationRecord& record, const CaseFile& case_file,
                               const std::vector<Persona>& personas, const MetricConfig& config);

// One row of the per-cell results table.
struct AggregateRow {
    std::string model;
    std::string condition;
    int n = 0;
    int hung = 0;
    int not_guilty = 0;
    int guilty = 0;
    double avg_turns = 0.0;
    double avg_flips = 0.0;
    double sd_turns = 0.0;
    double sd_flips = 0.0;
    std::optional<double> avg_rho; // mean over runs where rho is defined

    bool operator==(const AggregateRow&) const = default;
};

struct CellRun {
    std::string model;
    std::string condition;
    RunMetrics metrics;
};

// Groups runs by (model, condition), preserving first-appearance order.
std::vector<AggregateRow> aggregate(const std::vector<CellRun>& runs);

// Aligned text table: Model | Condition | N | Hung | NG | G | Avg turns |
// Avg flips | rho. Turns/flips one decimal, rho two decimals, "n/a" when
// undefined.
std::string format_aggregate_table(const std::vector<AggregateRow>& rows);

std::string format_double(double value, int decimals);

// Plot-ready CSV exports: verdict counts, mean vote changes (with SD), mean
// turns, and the baseline-vs-open-minded ablation comparison per model.
std::string verdicts_csv(const std::vector<AggregateRow>& rows);
std::string mean_changes_csv(const std::vector<AggregateRow>& rows);
std::string mean_turns_csv(const std::vector<AggregateRow>& rows);
std::string ablation_csv(const std::vector<AggregateRow>& rows);

} // namespace jurysim
