#pragma once

#include <functional>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "jurysim/agents.hpp"
#include "jurysim/domain.hpp"

namespace jurysim {

struct EngineState {
    int turn = 0;
    std::map<JurorId, Vote> current_votes; // empty before round 1 under NoInitialVote
    std::vector<VoteRound> vote_rounds;
    int unchanged_round_streak = 0;
    std::set<JurorId> spoken_since_last_round;
};

// Model-driven speaker selection hook; the raw reply is recorded for audit.
class SpeakerSelector {
public:
    virtual ~SpeakerSelector() = default;
    virtual std::pair<std::string, std::optional<JurorId>> select(
        std::span<const Utterance> transcript, int turn) = 0;
};

struct SelectorAuditEntry {
    int turn = 0;
    std::string raw;
    std::string chosen;
    bool fallback = false; // invalid selection, fell back to rotation
};

// Pure rotation: juror (turn mod 12) + 1.
JurorId rotation_speaker(int turn);

// Jurors currently on the losing side of the vote split; empty when there are
// no votes yet, on a tie, or when the room is unanimous.
std::vector<JurorId> minority_jurors(const std::map<JurorId, Vote>& votes);

// Speaker for the given turn. DissentPriorityRotation follows the rotation
// but diverts to a not-yet-heard minority juror once the remaining slots in
// the current vote window would not otherwise fit them all, which guarantees
// every start-of-window minority juror speaks within the window.
JurorId select_next_speaker(const EngineState& state, const RunConfig& config,
                            std::span<const Utterance> transcript,
                            SpeakerSelector* model_driven,
                            std::vector<SelectorAuditEntry>* audit);

// Termination checks in order: unanimity, early stop (patience_rounds
// consecutive unchanged rounds), turn budget.
std::optional<std::pair<Verdict, std::string>> check_termination(const EngineState& state,
                                                                 const RunConfig& config);

struct RunResult {
    DeliberationRecord record; // complete, or the persisted prefix when aborted
    bool aborted = false;
    std::string abort_reason;
    std::vector<SelectorAuditEntry> selector_audit;
};

// Called with each event as it is produced, so interrupted runs leave a
// usable prefix in the persistence layer.
using EventSink = std::function<void(const Event&)>;

// Runs the full deliberation protocol: one utterance per turn, a vote round
// every vote_interval turns, termination by unanimity, early stop, or budget.
// An AgentError aborts the run; the partial record is returned, not a verdict.
class DeliberationEngine {
public:
    DeliberationEngine(RunConfig config, std::vector<Persona> conditioned_personas,
                       CaseFile case_file);

    RunResult run(JurorBackend& backend, SpeakerSelector* model_driven = nullptr,
                  const EventSink& sink = {});

private:
    RunConfig config_;
    std::vector<Persona> personas_; // conditioned, sorted by juror id
    CaseFile case_file_;
};

// Convenience wrapper: builds the backend from the config and runs.
RunResult run_deliberation(const RunConfig& config, const std::vector<Persona>& personas,
                           const CaseFile& case_file, const EventSink& sink = {});

} // namespace jurysim
