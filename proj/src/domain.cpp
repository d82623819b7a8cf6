#include "jurysim/domain.hpp"
#include "jurysim/metrics.hpp"

#include <algorithm>
#include <cctype>
#include <set>

namespace jurysim {

namespace {

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

} // namespace

std::optional<JurorId> JurorId::parse(std::string_view text) {
    std::string t = lower(text);
    // strip an optional "juror" prefix with '_' / ' ' separator
    if (t.rfind("juror", 0) == 0) {
        t = t.substr(5);
        if (!t.empty() && (t[0] == '_' || t[0] == ' ')) t = t.substr(1);
    }
    if (t.empty() || t.size() > 2) return std::nullopt;
    int value = 0;
    for (char c : t) {
        if (!std::isdigit(static_cast<unsigned char>(c))) return std::nullopt;
        value = value * 10 + (c - '0');
    }
    if (value < 1 || value > kJurySize) return std::nullopt;
    return JurorId::from_index(value);
}

std::vector<JurorId> all_jurors() {
    std::vector<JurorId> out;
    out.reserve(kJurySize);
    for (int i = 1; i <= kJurySize; ++i) out.push_back(JurorId::from_index(i));
    return out;
}

std::string to_string(Vote v) { return v == Vote::Guilty ? "GUILTY" : "NOT_GUILTY"; }

std::string to_string(Verdict v) {
    switch (v) {
    case Verdict::Guilty: return "GUILTY";
    case Verdict::NotGuilty: return "NOT_GUILTY";
    case Verdict::HungJury: return "HUNG_JURY";
    }
    return "HUNG_JURY";
}

std::string to_string(Condition c) {
    switch (c) {
    case Condition::Baseline: return "baseline";
    case Condition::NoInitialVote: return "no_initial_vote";
    case Condition::OpenMinded: return "open_minded";
    }
    return "baseline";
}

std::string to_string(SelectorPolicy p) {
    switch (p) {
    case SelectorPolicy::DissentPriorityRotation: return "dissent_priority_rotation";
    case SelectorPolicy::RoundRobin: return "round_robin";
    case SelectorPolicy::ModelDriven: return "model_driven";
    }
    return "dissent_priority_rotation";
}

std::string to_string(RhoUndefinedPolicy p) {
    return p == RhoUndefinedPolicy::Skip ? "skip" : "report_one";
}

std::string to_string(EvidenceCategory c) {
    switch (c) {
    case EvidenceCategory::Testimony: return "Testimony";
    case EvidenceCategory::Physical: return "Physical";
    case EvidenceCategory::Circumstantial: return "Circumstantial";
    }
    return "Testimony";
}

std::string to_string(BackendKind k) {
    switch (k) {
    case BackendKind::LlmChat: return "llm_chat";
    case BackendKind::Scripted: return "scripted";
    case BackendKind::Replay: return "replay";
    }
    return "scripted";
}

std::optional<Vote> parse_vote(std::string_view s) {
    std::string t = lower(s);
    std::replace(t.begin(), t.end(), ' ', '_');
    if (t == "guilty") return Vote::Guilty;
    if (t == "not_guilty") return Vote::NotGuilty;
    return std::nullopt;
}

std::optional<Verdict> parse_verdict(std::string_view s) {
    std::string t = lower(s);
    std::replace(t.begin(), t.end(), ' ', '_');
    if (t == "guilty") return Verdict::Guilty;
    if (t == "not_guilty") return Verdict::NotGuilty;
    if (t == "hung_jury") return Verdict::HungJury;
    return std::nullopt;
}

std::optional<Condition> parse_condition(std::string_view s) {
    std::string t = lower(s);
    std::replace(t.begin(), t.end(), '-', '_');
    std::replace(t.begin(), t.end(), ' ', '_');
    if (t == "baseline") return Condition::Baseline;
    if (t == "no_initial_vote") return Condition::NoInitialVote;
    if (t == "open_minded") return Condition::OpenMinded;
    return std::nullopt;
}

std::optional<SelectorPolicy> parse_selector_policy(std::string_view s) {
    std::string t = lower(s);
    std::replace(t.begin(), t.end(), '-', '_');
    if (t == "dissent_priority_rotation" || t == "dissent_priority")
        return SelectorPolicy::DissentPriorityRotation;
    if (t == "round_robin") return SelectorPolicy::RoundRobin;
    if (t == "model_driven") return SelectorPolicy::ModelDriven;
    return std::nullopt;
}

std::optional<RhoUndefinedPolicy> parse_rho_policy(std::string_view s) {
    std::string t = lower(s);
    std::replace(t.begin(), t.end(), '-', '_');
    if (t == "skip") return RhoUndefinedPolicy::Skip;
    if (t == "report_one") return RhoUndefinedPolicy::ReportOne;
    return std::nullopt;
}

std::optional<EvidenceCategory> parse_evidence_category(std::string_view s) {
    std::string t = lower(s);
    if (t == "testimony") return EvidenceCategory::Testimony;
    if (t == "physical") return EvidenceCategory::Physical;
    if (t == "circumstantial") return EvidenceCategory::Circumstantial;
    return std::nullopt;
}

std::optional<BackendKind> parse_backend_kind(std::string_view s) {
    std::string t = lower(s);
    std::replace(t.begin(), t.end(), '-', '_');
    if (t == "llm_chat" || t == "llm") return BackendKind::LlmChat;
    if (t == "scripted") return BackendKind::Scripted;
    if (t == "replay") return BackendKind::Replay;
    return std::nullopt;
}

std::string BackendSpec::effective_label() const {
    if (!label.empty()) return label;
    switch (kind) {
    case BackendKind::LlmChat: return model_name.empty() ? "llm" : model_name;
    case BackendKind::Scripted: return preset.empty() ? "scripted" : "scripted_" + preset;
    case BackendKind::Replay: return "replay";
    }
    return "backend";
}

// The order in which the eleven guilty voters change their minds in the 1957
// film. The film is the external source for this sequence; it is a config
// default, overridable per run.
std::vector<JurorId> default_canonical_flip_order() {
    std::vector<JurorId> order;
    for (int i : {9, 5, 11, 2, 6, 7, 12, 1, 10, 4, 3})
        order.push_back(JurorId::from_index(i));
    return order;
}

std::vector<std::string> validate_config(const RunConfig& config) {
    std::vector<std::string> v;
    if (config.max_turns < 1) v.push_back("max_turns must be positive");
    if (config.vote_interval < 1) v.push_back("vote_interval must be positive");
    if (config.vote_interval > config.max_turns)
        v.push_back("vote_interval must not exceed max_turns");
    if (config.patience_rounds < 1) v.push_back("patience_rounds must be >= 1");
    if (config.temperature < 0.0) v.push_back("temperature must be >= 0");

    std::set<JurorId> seen;
    for (const auto& j : config.canonical_flip_order) {
        if (!seen.insert(j).second)
            v.push_back("canonical_flip_order contains duplicate " + j.name());
        if (j == dissenter_juror())
            v.push_back("canonical_flip_order must exclude " + dissenter_juror().name());
    }

    const auto& b = config.backend_spec;
    switch (b.kind) {
    case BackendKind::LlmChat:
        if (b.model_name.empty()) v.push_back("llm backend requires model_name");
        if (b.endpoint.empty()) v.push_back("llm backend requires endpoint");
        break;
    case BackendKind::Scripted:
        if (!b.scripted_params)
            v.push_back("scripted backend requires scripted_params");
        else {
            const auto& p = *b.scripted_params;
            if (p.jurors.size() != static_cast<std::size_t>(kJurySize))
                v.push_back("scripted profile must parameterize all 12 jurors");
            for (const auto& [id, jp] : p.jurors) {
                if (jp.openness < 0.0 || jp.openness > 1.0)
                    v.push_back(id.name() + ": openness must be in [0,1]");
                if (jp.anchor_strength < 0.0)
                    v.push_back(id.name() + ": anchor_strength must be >= 0");
                if (jp.persuasiveness < 0.0)
                    v.push_back(id.name() + ": persuasiveness must be >= 0");
                if (jp.conviction_init < 0.0 || jp.conviction_init > 1.0)
                    v.push_back(id.name() + ": conviction_init must be in [0,1]");
            }
            if (p.noise_scale < 0.0) v.push_back("noise_scale must be >= 0");
        }
        break;
    case BackendKind::Replay:
        if (b.source_path.empty() && !b.source_record)
            v.push_back("replay backend requires a source record");
        break;
    }
    if (config.selector_policy == SelectorPolicy::ModelDriven && b.kind != BackendKind::LlmChat)
        v.push_back("model_driven selector requires an llm_chat backend");
    return v;
}

std::vector<std::string> validate_personas(const std::vector<Persona>& personas, Condition condition) {
    std::vector<std::string> v;
    if (personas.size() != static_cast<std::size_t>(kJurySize))
        v.push_back("expected 12 personas, found " + std::to_string(personas.size()));

    std::set<JurorId> seen;
    int guilty = 0, not_guilty = 0, missing = 0;
    for (const auto& p : personas) {
        if (!seen.insert(p.id).second) v.push_back("duplicate persona for " + p.id.name());
        if (p.occupation.empty()) v.push_back(p.id.name() + ": missing occupation");
        if (p.personality.empty()) v.push_back(p.id.name() + ": missing personality");
        if (p.speaking_style.empty()) v.push_back(p.id.name() + ": missing speaking style");
        if (p.key_arguments.empty()) v.push_back(p.id.name() + ": missing key arguments");
        if (!p.initial_vote) {
            ++missing;
        } else if (*p.initial_vote == Vote::Guilty) {
            ++guilty;
        } else {
            ++not_guilty;
            if (p.id != dissenter_juror())
                v.push_back(p.id.name() + ": NOT_GUILTY initial vote belongs to " +
                            dissenter_juror().name() + " only");
        }
    }
    if (condition == Condition::NoInitialVote) {
        if (missing != static_cast<int>(personas.size()))
            v.push_back("no_initial_vote condition requires all initial votes absent");
    } else {
        if (guilty != 11 || not_guilty != 1)
            v.push_back("conditioned personas must split 11 GUILTY / 1 NOT_GUILTY, found " +
                        std::to_string(guilty) + "/" + std::to_string(not_guilty));
    }
    return v;
}

std::vector<std::string> validate_case_file(const CaseFile& case_file) {
    std::vector<std::string> v;
    if (case_file.scene_setting.empty()) v.push_back("missing scene setting");
    if (case_file.case_summary.empty()) v.push_back("missing case summary");
    if (case_file.evidence.size() != static_cast<std::size_t>(kEvidenceCount))
        v.push_back("expected 8 evidence items, found " + std::to_string(case_file.evidence.size()));
    for (std::size_t i = 0; i < case_file.evidence.size(); ++i) {
        const auto& e = case_file.evidence[i];
        if (e.id != static_cast<int>(i) + 1)
            v.push_back("evidence ids must be contiguous 1..8; slot " + std::to_string(i + 1) +
                        " holds id " + std::to_string(e.id));
        if (e.name.empty()) v.push_back("evidence " + std::to_string(e.id) + ": missing name");
        if (e.description.empty())
            v.push_back("evidence " + std::to_string(e.id) + ": missing description");
        if (e.prosecution_argument.empty())
            v.push_back("evidence " + std::to_string(e.id) + ": missing prosecution argument");
    }
    return v;
}

std::vector<Persona> condition_personas(std::vector<Persona> personas, Condition condition) {
    if (condition == Condition::NoInitialVote)
        for (auto& p : personas) p.initial_vote.reset();
    return personas;
}

std::map<JurorId, Vote> initial_vote_map(const std::vector<Persona>& conditioned) {
    std::map<JurorId, Vote> votes;
    for (const auto& p : conditioned)
        if (p.initial_vote) votes[p.id] = *p.initial_vote;
    return votes;
}

std::vector<std::string> validate_record(const DeliberationRecord& record) {
    std::vector<std::string> v = validate_config(record.config);

    const int interval = record.config.vote_interval;
    int last_utterance_turn = 0;
    int termination_count = 0;
    bool after_termination = false;
    std::vector<int> round_turns;

    for (const auto& event : record.events) {
        if (after_termination) {
            v.push_back("event after termination");
            after_termination = false; // report once
        }
        if (const auto* u = std::get_if<Utterance>(&event)) {
            if (u->turn != last_utterance_turn + 1)
                v.push_back("utterance turns must increase by one; saw turn " +
                            std::to_string(u->turn) + " after " + std::to_string(last_utterance_turn));
            last_utterance_turn = u->turn;
        } else if (const auto* r = std::get_if<VoteRound>(&event)) {
            round_turns.push_back(r->turn);
            if (interval > 0 && r->turn % interval != 0)
                v.push_back("vote round at turn " + std::to_string(r->turn) +
                            " is not a multiple of vote_interval");
            if (r->turn != last_utterance_turn)
                v.push_back("vote round at turn " + std::to_string(r->turn) +
                            " does not follow the turn's utterance");
            std::set<JurorId> seen;
            for (const auto& b : r->ballots) {
                if (!seen.insert(b.juror).second)
                    v.push_back("duplicate ballot for " + b.juror.name() + " at turn " +
                                std::to_string(r->turn));
                if (b.reasoning.empty())
                    v.push_back("empty ballot reasoning for " + b.juror.name() + " at turn " +
                                std::to_string(r->turn));
            }
            for (const auto& j : all_jurors())
                if (!seen.count(j))
                    v.push_back("missing ballot for " + j.name() + " at turn " +
                                std::to_string(r->turn));
        } else if (const auto* t = std::get_if<Termination>(&event)) {
            ++termination_count;
            after_termination = true;
            if (t->turn != record.total_turns)
                v.push_back("termination turn does not match total_turns");
            if (t->verdict != record.verdict)
                v.push_back("termination verdict does not match record verdict");
        }
    }

    if (termination_count == 0) v.push_back("missing termination event");
    if (termination_count > 1) v.push_back("multiple termination events");
    if (record.total_turns > record.config.max_turns)
        v.push_back("total_turns exceeds max_turns");
    if (last_utterance_turn != record.total_turns)
        v.push_back("utterance count does not match total_turns");

    // Vote rounds must occur exactly at multiples of vote_interval up to
    // total_turns: no gaps, no extras.
    if (interval > 0) {
        std::set<int> seen_rounds(round_turns.begin(), round_turns.end());
        for (int t = interval; t <= record.total_turns; t += interval)
            if (!seen_rounds.count(t))
                v.push_back("missing vote round at turn " + std::to_string(t));
        for (int t : round_turns)
            if (t > record.total_turns)
                v.push_back("vote round at turn " + std::to_string(t) + " beyond total_turns");
        if (seen_rounds.size() != round_turns.size())
            v.push_back("duplicate vote round turns");
    }

    for (const auto& c : record.vote_changes)
        if (c.from_vote == c.to_vote)
            v.push_back("vote change with identical from/to votes at turn " + std::to_string(c.turn));

    if (record.vote_changes != extract_vote_changes(record))
        v.push_back("stored vote_changes do not match recomputation from the vote rounds");

    std::size_t expected_initial =
        record.config.condition == Condition::NoInitialVote ? 0u : static_cast<std::size_t>(kJurySize);
    if (record.initial_votes.size() != expected_initial)
        v.push_back("initial_votes size does not match condition");

    return v;
}

} // namespace jurysim
