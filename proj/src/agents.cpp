#include "jurysim/agents.hpp"

#include <algorithm>
#include <cmath>

#include "jurysim/llm_client.hpp"
#include "jurysim/rng.hpp"

namespace jurysim {

namespace {

constexpr std::uint64_t kSaltBallot = 0x42414c4cULL; // draw stream tags
constexpr std::uint64_t kSaltStyle = 0x5354594cULL;

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

} // namespace

double scripted_flip_probability(double pressure, double conviction,
                                 const ScriptedJurorParams& params) {
    if (params.openness <= 0.0) return 0.0;
    return params.openness * logistic(pressure - params.anchor_strength * conviction);
}

ScriptedBackend::ScriptedBackend(ScriptedProfile profile,
                                 const std::vector<Persona>& conditioned_personas,
                                 std::uint64_t seed)
    : profile_(std::move(profile)), seed_(seed) {
    for (const auto& [juror, params] : profile_.jurors) {
        JurorState state;
        state.vote = params.initial_lean;
        state.conviction = params.conviction_init;
        states_[juror] = state;
    }
    // Conditioned initial votes override the preset leans where present.
    for (const auto& persona : conditioned_personas)
        if (persona.initial_vote && states_.count(persona.id))
            states_[persona.id].vote = *persona.initial_vote;
}

std::string ScriptedBackend::speak(const AgentContext& ctx) {
    const Persona& persona = *ctx.persona;
    const auto& args = persona.key_arguments;

    // Next unused key argument; cycle once exhausted. The count of own past
    // utterances comes from the visible transcript, so speak() is a pure
    // function of (seed, turn, juror, context).
    std::size_t spoken = 0;
    const Utterance* previous = nullptr;
    for (const auto& u : ctx.transcript) {
        if (u.speaker == persona.id) ++spoken;
        previous = &u;
    }
    const std::string argument =
        args.empty() ? "I have nothing to add beyond my vote." : args[spoken % args.size()];

    const std::uint64_t style =
        keyed_u64(seed_, static_cast<std::uint64_t>(ctx.turn), persona.id.index(), kSaltStyle);

    std::string text;
    switch (style % 4) {
    case 0:
        text = argument;
        break;
    case 1:
        text = "I keep coming back to one thing: " + argument;
        break;
    case 2:
        text = "Look at the case file again. " + argument;
        break;
    default:
        if (previous && previous->speaker != persona.id)
            text = previous->speaker.name() + ", I hear you, but consider this: " + argument;
        else
            text = "Consider this: " + argument;
        break;
    }
    return text;
}

Ballot ScriptedBackend::cast_ballot(const AgentContext& ctx, const std::string& /*vote_prompt*/) {
    const JurorId juror = ctx.persona->id;
    const JurorState& state = state_of(juror);
    const ScriptedJurorParams& params = profile_.jurors.at(juror);

    const double p = scripted_flip_probability(state.pressure, state.conviction, params);

    // Temperature interpolates between a deterministic threshold decision
    // (noise_scale 0) and a full Bernoulli(p) draw (noise_scale 1).
    const double u = keyed_unit(seed_, static_cast<std::uint64_t>(ctx.turn), juror.index(), kSaltBallot);
    double threshold = 0.5 + profile_.noise_scale * (u - 0.5);
    threshold = std::clamp(threshold, 0.0, 1.0);
    const bool flip = p > threshold;

    const Vote vote = flip ? opposite(state.vote) : state.vote;

    std::string reasoning;
    if (flip) {
        reasoning = vote == Vote::NotGuilty
                        ? "The doubts raised in this room have gotten to me; I can no longer call it certain."
                        : "On reflection, the case against the boy weighs heavier than the doubts.";
    } else {
        reasoning = vote == Vote::NotGuilty
                        ? "Reasonable doubt still stands for me."
                        : "The evidence still points to guilt as I see it.";
    }
    return {juror, vote, reasoning};
}

void ScriptedBackend::on_utterance(const Utterance& utterance) {
    const auto speaker_it = states_.find(utterance.speaker);
    if (speaker_it == states_.end()) return;
    const Vote speaker_vote = speaker_it->second.vote;
    const double push = profile_.jurors.at(utterance.speaker).persuasiveness;

    for (auto& [juror, state] : states_) {
        state.pressure *= profile_.pressure_decay;
        if (juror != utterance.speaker && state.vote != speaker_vote)
            state.pressure += push;
    }
}

void ScriptedBackend::on_vote_round(const VoteRound& round) {
    for (const auto& ballot : round.ballots) {
        auto it = states_.find(ballot.juror);
        if (it == states_.end()) continue;
        if (it->second.vote != ballot.vote) {
            // Joined the other camp: the pressure that was pushing the juror
            // there no longer applies.
            it->second.vote = ballot.vote;
            it->second.pressure = 0.0;
        }
    }
}

ReplayBackend::ReplayBackend(std::shared_ptr<const DeliberationRecord> source)
    : source_(std::move(source)) {
    if (!source_) throw std::invalid_argument("replay backend requires a source record");
    for (const auto& event : source_->events) {
        if (const auto* u = std::get_if<Utterance>(&event)) utterances_by_turn_[u->turn] = u;
        else if (const auto* r = std::get_if<VoteRound>(&event)) rounds_by_turn_[r->turn] = r;
    }
}

std::string ReplayBackend::speak(const AgentContext& ctx) {
    auto it = utterances_by_turn_.find(ctx.turn);
    if (it == utterances_by_turn_.end())
        throw AgentError(AgentErrorKind::Transport, 1,
                         "replay source has no utterance at turn " + std::to_string(ctx.turn));
    if (it->second->speaker != ctx.persona->id)
        throw AgentError(AgentErrorKind::Transport, 1,
                         "replay divergence at turn " + std::to_string(ctx.turn) + ": source speaker " +
                             it->second->speaker.name() + ", engine selected " + ctx.persona->id.name());
    return it->second->text;
}

Ballot ReplayBackend::cast_ballot(const AgentContext& ctx, const std::string& /*vote_prompt*/) {
    auto it = rounds_by_turn_.find(ctx.turn);
    if (it == rounds_by_turn_.end())
        throw AgentError(AgentErrorKind::Transport, 1,
                         "replay source has no vote round at turn " + std::to_string(ctx.turn));
    for (const auto& ballot : it->second->ballots)
        if (ballot.juror == ctx.persona->id) return ballot;
    throw AgentError(AgentErrorKind::Transport, 1,
                     "replay source round at turn " + std::to_string(ctx.turn) +
                         " has no ballot for " + ctx.persona->id.name());
}

std::optional<JurorId> ReplayBackend::replay_speaker(int turn) const {
    auto it = utterances_by_turn_.find(turn);
    if (it == utterances_by_turn_.end()) return std::nullopt;
    return it->second->speaker;
}

std::unique_ptr<JurorBackend> make_backend(const RunConfig& config,
                                           const std::vector<Persona>& conditioned_personas,
                                           const CaseFile& case_file) {
    const BackendSpec& spec = config.backend_spec;
    switch (spec.kind) {
    case BackendKind::Scripted: {
        if (!spec.scripted_params)
            throw std::invalid_argument("scripted backend requires scripted_params");
        ScriptedProfile profile = *spec.scripted_params;
        profile.noise_scale = config.temperature;
        return std::make_unique<ScriptedBackend>(std::move(profile), conditioned_personas,
                                                 config.seed);
    }
    case BackendKind::Replay:
        return std::make_unique<ReplayBackend>(spec.source_record);
    case BackendKind::LlmChat:
        return make_llm_backend(config, conditioned_personas, case_file);
    }
    throw std::invalid_argument("unknown backend kind");
}

} // namespace jurysim
