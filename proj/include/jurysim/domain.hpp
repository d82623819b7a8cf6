#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace jurysim {

inline constexpr int kJurySize = 12;

// Juror identity, index 1..12, rendered "Juror_1".."Juror_12".
class JurorId {
public:
    JurorId() = default; // Juror_1; real ids come from from_index()/parse()

    static JurorId from_index(int index) {
        if (index < 1 || index > kJurySize)
            throw std::invalid_argument("juror index out of range: " + std::to_string(index));
        return JurorId(index);
    }

    // Accepts "Juror_8", "juror 8", "Juror_08", or a bare number.
    static std::optional<JurorId> parse(std::string_view text);

    int index() const { return index_; }
    std::string name() const { return "Juror_" + std::to_string(index_); }

    auto operator<=>(const JurorId&) const = default;

private:
    explicit JurorId(int i) : index_(i) {}
    int index_ = 1;
};

std::vector<JurorId> all_jurors();

// Juror_8 holds out alone at the start of the scenario.
inline JurorId dissenter_juror() { return JurorId::from_index(8); }

enum class Vote { Guilty, NotGuilty };
enum class Verdict { Guilty, NotGuilty, HungJury };
enum class Condition { Baseline, NoInitialVote, OpenMinded };
enum class SelectorPolicy { DissentPriorityRotation, RoundRobin, ModelDriven };
enum class RhoUndefinedPolicy { Skip, ReportOne };
enum class EvidenceCategory { Testimony, Physical, Circumstantial };

inline Vote opposite(Vote v) { return v == Vote::Guilty ? Vote::NotGuilty : Vote::Guilty; }

std::string to_string(Vote v);
std::string to_string(Verdict v);
std::string to_string(Condition c);
std::string to_string(SelectorPolicy p);
std::string to_string(RhoUndefinedPolicy p);
std::string to_string(EvidenceCategory c);

std::optional<Vote> parse_vote(std::string_view s);
std::optional<Verdict> parse_verdict(std::string_view s);
std::optional<Condition> parse_condition(std::string_view s);
std::optional<SelectorPolicy> parse_selector_policy(std::string_view s);
std::optional<RhoUndefinedPolicy> parse_rho_policy(std::string_view s);
std::optional<EvidenceCategory> parse_evidence_category(std::string_view s);

struct Persona {
    JurorId id;
    std::string occupation;
    std::string personality;
    std::string speaking_style;
    std::vector<std::string> key_arguments;
    std::vector<std::string> emotional_triggers;
    std::optional<Vote> initial_vote;

    bool operator==(const Persona&) const = default;
};

struct EvidenceItem {
    int id = 0; // 1..8
    std::string name;
    EvidenceCategory category = EvidenceCategory::Testimony;
    std::string description;
    std::string prosecution_argument;

    bool operator==(const EvidenceItem&) const = default;
};

inline constexpr int kEvidenceCount = 8;

struct CaseFile {
    std::string scene_setting;
    std::string case_summary;
    std::vector<EvidenceItem> evidence;

    bool operator==(const CaseFile&) const = default;
};

// Per-juror parameters of the scripted backend. initial_lean is the vote the
// juror opens with when the condition removes initial-vote conditioning.
struct ScriptedJurorParams {
    double openness = 0.0;        // [0,1]
    double anchor_strength = 0.0; // >= 0
    double persuasiveness = 0.0;  // >= 0
    double conviction_init = 0.0; // [0,1]
    Vote initial_lean = Vote::Guilty;

    bool operator==(const ScriptedJurorParams&) const = default;
};

struct ScriptedProfile {
    std::map<JurorId, ScriptedJurorParams> jurors; // all 12 entries
    double noise_scale = 0.9;                      // set from RunConfig.temperature
    double pressure_decay = 0.9;                   // per-turn decay of accumulated pressure

    bool operator==(const ScriptedProfile&) const = default;
};

enum class BackendKind { LlmChat, Scripted, Replay };

std::string to_string(BackendKind k);
std::optional<BackendKind> parse_backend_kind(std::string_view s);

struct DeliberationRecord;

// Which agent implementation sits behind the twelve jurors. Model identity
// is configuration, never code.
struct BackendSpec {
    BackendKind kind = BackendKind::Scripted;
    std::string label; // grouping key in outputs; defaults derived from kind

    // LlmChat
    std::string model_name;
    std::string endpoint;    // base URL, e.g. "http://localhost:8080/v1"
    std::string api_key_env; // env var holding the key (default LLM_API_KEY)

    // Scripted
    std::string preset; // preset name the profile was resolved from, if any
    std::optional<ScriptedProfile> scripted_params;

    // Replay
    std::string source_path; // events.jsonl (or run dir) of the source record
    std::shared_ptr<const DeliberationRecord> source_record;

    // source_record is a loaded cache; identity is the path.
    bool operator==(const BackendSpec& o) const {
        return kind == o.kind && label == o.label && model_name == o.model_name &&
               endpoint == o.endpoint && api_key_env == o.api_key_env &&
               preset == o.preset && scripted_params == o.scripted_params &&
               source_path == o.source_path;
    }

    std::string effective_label() const;
};

std::vector<JurorId> default_canonical_flip_order();

struct RunConfig {
    BackendSpec backend_spec;
    Condition condition = Condition::Baseline;
    std::uint64_t seed = 0;
    double temperature = 0.9;
    int max_turns = 150;
    int vote_interval = 12;
    int patience_rounds = 3;
    SelectorPolicy selector_policy = SelectorPolicy::DissentPriorityRotation;
    std::vector<JurorId> canonical_flip_order = default_canonical_flip_order();
    RhoUndefinedPolicy rho_undefined_policy = RhoUndefinedPolicy::Skip;

    bool operator==(const RunConfig&) const = default;
};

struct Ballot {
    JurorId juror;
    Vote vote = Vote::Guilty;
    std::string reasoning; // one sentence, non-empty

    bool operator==(const Ballot&) const = default;
};

struct VoteRound {
    int turn = 0; // multiple of vote_interval
    std::vector<Ballot> ballots; // exactly one per juror, id order

    bool operator==(const VoteRound&) const = default;
};

struct VoteChangeEvent {
    int turn = 0;
    JurorId juror;
    Vote from_vote = Vote::Guilty;
    Vote to_vote = Vote::NotGuilty;

    bool operator==(const VoteChangeEvent&) const = default;
};

struct Utterance {
    int turn = 0;
    JurorId speaker;
    std::string text;

    bool operator==(const Utterance&) const = default;
};

struct Termination {
    int turn = 0;
    Verdict verdict = Verdict::HungJury;
    std::string reason; // "unanimous" | "early_stop" | "budget_exhausted"

    bool operator==(const Termination&) const = default;
};

using Event = std::variant<Utterance, VoteRound, Termination>;

// Full event log of one run. initial_votes is the conditioning baseline the
// first vote round is diffed against; empty under NoInitialVote, where the
// first round defines the baseline itself.
struct DeliberationRecord {
    RunConfig config;
    std::map<JurorId, Vote> initial_votes;
    std::vector<Event> events;
    Verdict verdict = Verdict::HungJury;
    int total_turns = 0;
    std::vector<VoteChangeEvent> vote_changes;

    bool operator==(const DeliberationRecord&) const = default;
};

// Validation. Violations are data, not failures: an empty report means valid.
std::vector<std::string> validate_config(const RunConfig& config);
std::vector<std::string> validate_personas(const std::vector<Persona>& personas, Condition condition);
std::vector<std::string> validate_case_file(const CaseFile& case_file);
std::vector<std::string> validate_record(const DeliberationRecord& record);

// Applies the condition to the loaded persona set (NoInitialVote strips the
// initial votes; the other conditions keep them).
std::vector<Persona> condition_personas(std::vector<Persona> personas, Condition condition);

// The conditioning baseline vote map (empty under NoInitialVote).
std::map<JurorId, Vote> initial_vote_map(const std::vector<Persona>& conditioned);

} // namespace jurysim
