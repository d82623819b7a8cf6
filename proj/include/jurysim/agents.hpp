#pragma once

#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>

#include "jurysim/domain.hpp"

namespace jurysim {

enum class AgentErrorKind { Transport, StructuredOutput };

// Raised by a backend when a juror cannot produce a usable message or ballot.
// The engine turns this into an aborted-run record, never into a verdict.
struct AgentError : std::runtime_error {
    AgentError(AgentErrorKind kind_, int attempts_, const std::string& what_)
        : std::runtime_error(what_), kind(kind_), attempts(attempts_) {}

    AgentErrorKind kind;
    int attempts;
};

// What one juror sees when asked to act: the utterances so far, its own
// persona, its own current vote (absent before the first round under
// NoInitialVote), and the turn number.
struct AgentContext {
    std::span<const Utterance> transcript;
    const Persona* persona = nullptr;
    std::optional<Vote> current_vote;
    int turn = 0;
};

// One backend instance is owned by one run and serves all twelve jurors;
// the context says which juror is acting. on_utterance/on_vote_round are fed
// every event by the engine so stateful backends can track the room.
class JurorBackend {
public:
    virtual ~JurorBackend() = default;

    virtual std::string speak(const AgentContext& ctx) = 0;
    virtual Ballot cast_ballot(const AgentContext& ctx, const std::string& vote_prompt) = 0;

    virtual void on_utterance(const Utterance&) {}
    virtual void on_vote_round(const VoteRound&) {}

    // Replay pins the speaker sequence to its source record; other backends
    // leave speaker selection to the engine's policy.
    virtual std::optional<JurorId> replay_speaker(int /*turn*/) const { return std::nullopt; }
};

// Flip probability of the scripted juror model:
//   p = openness * logistic(pressure - anchor_strength * conviction)
// Zero openness pins p to exactly 0; p is nondecreasing in pressure.
double scripted_flip_probability(double pressure, double conviction,
                                 const ScriptedJurorParams& params);

// Seeded parametric stand-in for an LLM juror. Utterances walk the persona's
// key arguments in order; ballots flip based on accumulated persuasion
// pressure from the opposite camp, with the run temperature as the only
// stochastic source.
class ScriptedBackend final : public JurorBackend {
public:
    ScriptedBackend(ScriptedProfile profile, const std::vector<Persona>& conditioned_personas,
                    std::uint64_t seed);

    std::string speak(const AgentContext& ctx) override;
    Ballot cast_ballot(const AgentContext& ctx, const std::string& vote_prompt) override;
    void on_utterance(const Utterance& utterance) override;
    void on_vote_round(const VoteRound& round) override;

    double pressure_on(JurorId juror) const { return state_of(juror).pressure; }
    Vote vote_of(JurorId juror) const { return state_of(juror).vote; }

private:
    struct JurorState {
        Vote vote = Vote::Guilty;
        double pressure = 0.0;
        double conviction = 0.0;
    };

    const JurorState& state_of(JurorId juror) const { return states_.at(juror); }

    ScriptedProfile profile_;
    std::uint64_t seed_;
    std::map<JurorId, JurorState> states_;
};

// Replays a recorded run verbatim through the engine.
class ReplayBackend final : public JurorBackend {
public:
    explicit ReplayBackend(std::shared_ptr<const DeliberationRecord> source);

    std::string speak(const AgentContext& ctx) override;
    Ballot cast_ballot(const AgentContext& ctx, const std::string& vote_prompt) override;
    std::optional<JurorId> replay_speaker(int turn) const override;

private:
    std::shared_ptr<const DeliberationRecord> source_;
    std::map<int, const Utterance*> utterances_by_turn_;
    std::map<int, const VoteRound*> rounds_by_turn_;
};

// Builds the backend for a run. For scripted backends, noise_scale is set
// from config.temperature. LlmChat construction reads the API key from the
// configured environment variable and fails fast when it is missing.
std::unique_ptr<JurorBackend> make_backend(const RunConfig& config,
                                           const std::vector<Persona>& conditioned_personas,
                                           const CaseFile& case_file);

} // namespace jurysim
