#include "jurysim/metrics.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <regex>
#include <sstream>
#include <stdexcept>

namespace jurysim {

namespace {

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

bool contains_ci(const std::string& haystack_lower, std::string_view needle) {
    return haystack_lower.find(lower(needle)) != std::string::npos;
}

std::vector<const VoteRound*> rounds_of(const DeliberationRecord& record) {
    std::vector<const VoteRound*> rounds;
    for (const auto& e : record.events)
        if (const auto* r = std::get_if<VoteRound>(&e)) rounds.push_back(r);
    return rounds;
}

std::vector<const Utterance*> utterances_of(const DeliberationRecord& record) {
    std::vector<const Utterance*> out;
    for (const auto& e : record.events)
        if (const auto* u = std::get_if<Utterance>(&e)) out.push_back(u);
    return out;
}

} // namespace

std::vector<VoteChangeEvent> extract_vote_changes(const DeliberationRecord& record) {
    std::vector<VoteChangeEvent> changes;
    std::map<JurorId, Vote> prior = record.initial_votes;
    for (const VoteRound* round : rounds_of(record)) {
        std::map<JurorId, Vote> current;
        for (const auto& b : round->ballots) current[b.juror] = b.vote;
        if (!prior.empty()) {
            for (const auto& [juror, vote] : current) { // map iterates in juror-id order
                auto it = prior.find(juror);
                if (it != prior.end() && it->second != vote)
                    changes.push_back({round->turn, juror, it->second, vote});
            }
        }
        prior = std::move(current);
    }
    return changes;
}

std::vector<JurorId> first_flip_order(const std::vector<VoteChangeEvent>& changes) {
    std::vector<JurorId> order;
    std::set<JurorId> seen;
    for (const auto& c : changes) {
        if (!seen.insert(c.juror).second) continue;
        if (c.from_vote == Vote::Guilty && c.to_vote == Vote::NotGuilty)
            order.push_back(c.juror);
        // first event NOT_GUILTY -> GUILTY: juror started NOT_GUILTY, excluded
    }
    return order;
}

SpearmanResult spearman_rho(const std::vector<JurorId>& observed,
                            const std::vector<JurorId>& canonical,
                            RhoUndefinedPolicy policy) {
    SpearmanResult result;
    std::set<JurorId> canon_set(canonical.begin(), canonical.end());

    std::vector<JurorId> obs;
    for (const auto& j : observed) {
        if (canon_set.count(j))
            obs.push_back(j);
        else
            result.excluded.push_back(j);
    }
    std::set<JurorId> obs_set(obs.begin(), obs.end());
    std::vector<JurorId> canon;
    for (const auto& j : canonical)
        if (obs_set.count(j)) canon.push_back(j);

    const long long n = static_cast<long long>(obs.size());
    if (n < 2) {
        if (policy == RhoUndefinedPolicy::ReportOne) result.rho = 1.0;
        return result;
    }

    std::map<JurorId, long long> canon_rank;
    for (std::size_t i = 0; i < canon.size(); ++i) canon_rank[canon[i]] = static_cast<long long>(i);

    long long sum_d2 = 0;
    for (std::size_t i = 0; i < obs.size(); ++i) {
        long long d = static_cast<long long>(i) - canon_rank[obs[i]];
        sum_d2 += d * d;
    }

    // rho = 1 - 6*sum_d2 / (n(n^2-1)), evaluated as a single exact-integer
    // division so it agrees bit-for-bit with a rank-Pearson oracle.
    const long long m = n * (n * n - 1);
    result.rho = static_cast<double>(m - 6 * sum_d2) / static_cast<double>(m);
    return result;
}

double cascade_velocity(int num_changes, int total_turns) {
    if (total_turns <= 0) throw std::domain_error("cascade velocity undefined for zero turns");
    return static_cast<double>(num_changes) / static_cast<double>(total_turns);
}

std::set<int> evidence_coverage(const DeliberationRecord& record, const CaseFile& case_file,
                                const MetricConfig& config) {
    std::set<int> cited;
    auto utterances = utterances_of(record);
    for (const Utterance* u : utterances) {
        std::string text = lower(u->text);
        for (const auto& item : case_file.evidence) {
            if (cited.count(item.id)) continue;
            auto it = config.evidence_aliases.find(item.id);
            if (it == config.evidence_aliases.end()) continue;
            for (const auto& alias : it->second) {
                if (contains_ci(text, alias)) {
                    cited.insert(item.id);
                    break;
                }
            }
        }
    }
    return cited;
}

std::map<JurorId, double> key_argument_coverage(const DeliberationRecord& record,
                                                const std::vector<Persona>& personas,
                                                const MetricConfig& config) {
    // own utterances per juror, lowercased and concatenated
    std::map<JurorId, std::string> spoken;
    for (const Utterance* u : utterances_of(record)) {
        auto& s = spoken[u->speaker];
        s += lower(u->text);
        s += '\n';
    }

    std::map<JurorId, double> coverage;
    for (const auto& persona : personas) {
        const auto& args = persona.key_arguments;
        if (args.empty()) {
            coverage[persona.id] = 0.0;
            continue;
        }
        const std::string& text = spoken[persona.id];
        const auto alias_it = config.key_argument_aliases.find(persona.id);
        int matched = 0;
        for (std::size_t i = 0; i < args.size(); ++i) {
            bool hit = contains_ci(text, args[i]);
            if (!hit && alias_it != config.key_argument_aliases.end() &&
                i < alias_it->second.size()) {
                for (const auto& alias : alias_it->second[i])
                    if (contains_ci(text, alias)) { hit = true; break; }
            }
            if (hit) ++matched;
        }
        coverage[persona.id] = static_cast<double>(matched) / static_cast<double>(args.size());
    }
    return coverage;
}

int cross_reference_count(const DeliberationRecord& record) {
    static const std::regex designator("\\bjuror[_ ]?(1[0-2]|[1-9])\\b",
                                       std::regex::ECMAScript | std::regex::icase);
    int count = 0;
    for (const Utterance* u : utterances_of(record)) {
        auto begin = std::sregex_iterator(u->text.begin(), u->text.end(), designator);
        for (auto it = begin; it != std::sregex_iterator(); ++it) {
            int idx = std::stoi((*it)[1].str());
            if (idx != u->speaker.index()) {
                ++count;
                break; // one count per utterance
            }
        }
    }
    return count;
}

std::vector<ClosureFlag> detect_narrative_closure(const DeliberationRecord& record,
                                                  const MetricConfig& config) {
    std::vector<std::pair<ClosurePattern, std::regex>> compiled;
    for (const auto& p : config.closure_patterns)
        compiled.emplace_back(p, std::regex(p.pattern, std::regex::ECMAScript | std::regex::icase));

    // vote state as of each turn, advanced while walking the event list
    std::map<JurorId, Vote> votes = record.initial_votes;
    auto unanimous = [&votes]() {
        if (votes.size() != static_cast<std::size_t>(kJurySize)) return false;
        const Vote first = votes.begin()->second;
        for (const auto& [_, v] : votes)
            if (v != first) return false;
        return true;
    };

    std::vector<ClosureFlag> flags;
    for (const auto& event : record.events) {
        if (const auto* r = std::get_if<VoteRound>(&event)) {
            for (const auto& b : r->ballots) votes[b.juror] = b.vote;
            continue;
        }
        const auto* u = std::get_if<Utterance>(&event);
        if (!u) continue;
        for (const auto& [pattern, re] : compiled) {
            if (!std::regex_search(u->text, re)) continue;
            if (pattern.kind == "unanimity_claim" && unanimous())
                continue; // a true unanimity declaration is not closure
            flags.push_back({u->turn, pattern.name});
        }
    }
    return flags;
}

RunMetrics compute_run_metrics(const DeliberationRecord& record, const CaseFile& case_file,
                               const std::vector<Persona>& personas, const MetricConfig& config) {
    RunMetrics m;
    m.verdict = record.verdict;
    m.total_turns = record.total_turns;
    m.vote_changes = extract_vote_changes(record);
    m.num_changes = static_cast<int>(m.vote_changes.size());
    m.cascade_velocity = record.total_turns > 0
                             ? cascade_velocity(m.num_changes, record.total_turns)
                             : 0.0;
    m.first_flip_order = first_flip_order(m.vote_changes);
    auto rho = spearman_rho(m.first_flip_order, record.config.canonical_flip_order,
                            record.config.rho_undefined_policy);
    m.spearman_rho = rho.rho;
    m.rho_excluded = std::move(rho.excluded);
    m.evidence_coverage = evidence_coverage(record, case_file, config);
    m.key_argument_coverage = key_argument_coverage(record, personas, config);
    m.cross_reference_count = cross_reference_count(record);
    m.narrative_closure_flags = detect_narrative_closure(record, config);
    return m;
}

namespace {

struct CellAccumulator {
    AggregateRow row;
    std::vector<double> turns;
    std::vector<double> flips;
    std::vector<double> rhos;
};

double mean(const std::vector<double>& xs) {
    if (xs.empty()) return 0.0;
    double sum = 0.0;
    for (double x : xs) sum += x;
    return sum / static_cast<double>(xs.size());
}

double sample_sd(const std::vector<double>& xs) {
    if (xs.size() < 2) return 0.0;
    const double mu = mean(xs);
    double ss = 0.0;
    for (double x : xs) ss += (x - mu) * (x - mu);
    return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

} // namespace

std::string format_double(double value, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", decimals, value);
    return buf;
}

std::vector<AggregateRow> aggregate(const std::vector<CellRun>& runs) {
    std::vector<CellAccumulator> cells;
    auto find_cell = [&](const std::string& model, const std::string& condition) -> CellAccumulator& {
        for (auto& c : cells)
            if (c.row.model == model && c.row.condition == condition) return c;
        cells.push_back({});
        cells.back().row.model = model;
        cells.back().row.condition = condition;
        return cells.back();
    };

    for (const auto& run : runs) {
        auto& cell = find_cell(run.model, run.condition);
        auto& row = cell.row;
        ++row.n;
        switch (run.metrics.verdict) {
        case Verdict::HungJury: ++row.hung; break;
        case Verdict::NotGuilty: ++row.not_guilty; break;
        case Verdict::Guilty: ++row.guilty; break;
        }
        cell.turns.push_back(static_cast<double>(run.metrics.total_turns));
        cell.flips.push_back(static_cast<double>(run.metrics.num_changes));
        if (run.metrics.spearman_rho) cell.rhos.push_back(*run.metrics.spearman_rho);
    }

    std::vector<AggregateRow> rows;
    rows.reserve(cells.size());
    for (auto& cell : cells) {
        cell.row.avg_turns = mean(cell.turns);
        cell.row.avg_flips = mean(cell.flips);
        cell.row.sd_turns = sample_sd(cell.turns);
        cell.row.sd_flips = sample_sd(cell.flips);
        if (!cell.rhos.empty()) cell.row.avg_rho = mean(cell.rhos);
        rows.push_back(cell.row);
    }
    return rows;
}

std::string format_aggregate_table(const std::vector<AggregateRow>& rows) {
    const std::vector<std::string> header = {"Model",     "Condition", "N",
                                             "Hung",      "NG",        "G",
                                             "Avg turns", "Avg flips", "rho"};
    std::vector<std::vector<std::string>> table;
    table.push_back(header);
    for (const auto& r : rows) {
        table.push_back({r.model, r.condition, std::to_string(r.n), std::to_string(r.hung),
                         std::to_string(r.not_guilty), std::to_string(r.guilty),
                         format_double(r.avg_turns, 1), format_double(r.avg_flips, 1),
                         r.avg_rho ? format_double(*r.avg_rho, 2) : "n/a"});
    }

    std::vector<std::size_t> widths(header.size(), 0);
    for (const auto& row : table)
        for (std::size_t i = 0; i < row.size(); ++i) widths[i] = std::max(widths[i], row[i].size());

    std::ostringstream out;
    for (const auto& row : table) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            out << row[i];
            if (i + 1 < row.size()) out << std::string(widths[i] - row[i].size() + 2, ' ');
        }
        out << '\n';
    }
    return out.str();
}

std::string verdicts_csv(const std::vector<AggregateRow>& rows) {
    std::ostringstream out;
    out << "model,condition,n,hung,not_guilty,guilty\n";
    for (const auto& r : rows)
        out << r.model << ',' << r.condition << ',' << r.n << ',' << r.hung << ','
            << r.not_guilty << ',' << r.guilty << '\n';
    return out.str();
}

std::string mean_changes_csv(const std::vector<AggregateRow>& rows) {
    std::ostringstream out;
    out << "model,condition,mean_changes,sd_changes\n";
    for (const auto& r : rows)
        out << r.model << ',' << r.condition << ',' << format_double(r.avg_flips, 4) << ','
            << format_double(r.sd_flips, 4) << '\n';
    return out.str();
}

std::string mean_turns_csv(const std::vector<AggregateRow>& rows) {
    std::ostringstream out;
    out << "model,condition,mean_turns\n";
    for (const auto& r : rows)
        out << r.model << ',' << r.condition << ',' << format_double(r.avg_turns, 4) << '\n';
    return out.str();
}

std::string ablation_csv(const std::vector<AggregateRow>& rows) {
    // baseline vs open_minded mean vote changes, per model
    std::vector<std::string> models;
    for (const auto& r : rows)
        if (std::find(models.begin(), models.end(), r.model) == models.end())
            models.push_back(r.model);

    auto lookup = [&rows](const std::string& model, const std::string& condition) -> const AggregateRow* {
        for (const auto& r : rows)
            if (r.model == model && r.condition == condition) return &r;
        return nullptr;
    };

    std::ostringstream out;
    out << "model,baseline_mean_changes,open_minded_mean_changes\n";
    for (const auto& model : models) {
        const auto* base = lookup(model, "baseline");
        const auto* open = lookup(model, "open_minded");
        if (!base && !open) continue;
        out << model << ',' << (base ? format_double(base->avg_flips, 4) : "") << ','
            << (open ? format_double(open->avg_flips, 4) : "") << '\n';
    }
    return out.str();
}

} // namespace jurysim
