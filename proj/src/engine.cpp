#include "jurysim/engine.hpp"

#include <algorithm>

#include "jurysim/prompts.hpp"

namespace jurysim {

JurorId rotation_speaker(int turn) { return JurorId::from_index(turn % kJurySize + 1); }

std::vector<JurorId> minority_jurors(const std::map<JurorId, Vote>& votes) {
    if (votes.empty()) return {};
    int guilty = 0, not_guilty = 0;
    for (const auto& [_, v] : votes) (v == Vote::Guilty ? guilty : not_guilty)++;
    if (guilty == not_guilty || guilty == 0 || not_guilty == 0) return {};
    const Vote minority_vote = guilty < not_guilty ? Vote::Guilty : Vote::NotGuilty;
    std::vector<JurorId> out;
    for (const auto& [juror, v] : votes)
        if (v == minority_vote) out.push_back(juror);
    return out;
}

JurorId select_next_speaker(const EngineState& state, const RunConfig& config,
                            std::span<const Utterance> transcript,
                            SpeakerSelector* model_driven,
                            std::vector<SelectorAuditEntry>* audit) {
    const int turn = state.turn;

    if (config.selector_policy == SelectorPolicy::ModelDriven && model_driven) {
        auto [raw, juror] = model_driven->select(transcript, turn);
        SelectorAuditEntry entry;
        entry.turn = turn;
        entry.raw = raw;
        if (juror) {
            entry.chosen = juror->name();
        } else {
            entry.fallback = true;
            entry.chosen = rotation_speaker(turn).name();
        }
        if (audit) audit->push_back(entry);
        return juror ? *juror : rotation_speaker(turn);
    }

    if (config.selector_policy == SelectorPolicy::DissentPriorityRotation) {
        std::vector<JurorId> unheard;
        for (const auto& j : minority_jurors(state.current_votes))
            if (!state.spoken_since_last_round.count(j)) unheard.push_back(j);
        if (!unheard.empty()) {
            const int interval = config.vote_interval;
            const int slots_left = interval - (turn - 1) % interval; // including this turn
            if (slots_left <= static_cast<int>(unheard.size()))
                return *std::min_element(unheard.begin(), unheard.end());
        }
    }

    return rotation_speaker(turn);
}

std::optional<std::pair<Verdict, std::string>> check_termination(const EngineState& state,
                                                                 const RunConfig& config) {
    if (state.current_votes.size() == static_cast<std::size_t>(kJurySize)) {
        const Vote first = state.current_votes.begin()->second;
        bool unanimous = true;
        for (const auto& [_, v] : state.current_votes)
            if (v != first) { unanimous = false; break; }
        if (unanimous)
            return std::make_pair(first == Vote::Guilty ? Verdict::Guilty : Verdict::NotGuilty,
                                  std::string("unanimous"));
    }
    if (state.unchanged_round_streak >= config.patience_rounds)
        return std::make_pair(Verdict::HungJury, std::string("early_stop"));
    if (state.turn >= config.max_turns)
        return std::make_pair(Verdict::HungJury, std::string("budget_exhausted"));
    return std::nullopt;
}

DeliberationEngine::DeliberationEngine(RunConfig config, std::vector<Persona> conditioned_personas,
                                       CaseFile case_file)
    : config_(std::move(config)), personas_(std::move(conditioned_personas)),
      case_file_(std::move(case_file)) {
    std::sort(personas_.begin(), personas_.end(),
              [](const Persona& a, const Persona& b) { return a.id < b.id; });
    if (personas_.size() != static_cast<std::size_t>(kJurySize))
        throw std::invalid_argument("engine needs exactly 12 personas");
    for (int i = 0; i < kJurySize; ++i)
        if (personas_[static_cast<std::size_t>(i)].id.index() != i + 1)
            throw std::invalid_argument("persona set must cover Juror_1..Juror_12");
}

RunResult DeliberationEngine::run(JurorBackend& backend, SpeakerSelector* model_driven,
                                  const EventSink& sink) {
    RunResult result;
    DeliberationRecord& record = result.record;
    record.config = config_;
    record.initial_votes = initial_vote_map(personas_);

    EngineState state;
    state.current_votes = record.initial_votes;

    std::vector<Utterance> transcript;
    const std::string vote_prompt = assemble_vote_prompt();

    auto persona_of = [this](JurorId id) -> const Persona& {
        return personas_[static_cast<std::size_t>(id.index() - 1)];
    };

    auto emit = [&record, &sink](Event event) {
        record.events.push_back(event);
        if (sink) sink(record.events.back());
    };

    auto context_for = [&](JurorId juror) {
        AgentContext ctx;
        ctx.transcript = transcript;
        ctx.persona = &persona_of(juror);
        ctx.turn = state.turn;
        if (auto it = state.current_votes.find(juror); it != state.current_votes.end())
            ctx.current_vote = it->second;
        return ctx;
    };

    try {
        for (int turn = 1; turn <= config_.max_turns; ++turn) {
            state.turn = turn;
            record.total_turns = turn;

            JurorId speaker = select_next_speaker(state, config_, transcript, model_driven,
                                                  &result.selector_audit);
            if (auto pinned = backend.replay_speaker(turn)) speaker = *pinned;

            Utterance utterance{turn, speaker, backend.speak(context_for(speaker))};
            transcript.push_back(utterance);
            state.spoken_since_last_round.insert(speaker);
            emit(utterance);
            backend.on_utterance(utterance);

            if (turn % config_.vote_interval == 0) {
                // Vote collection is out of band: it does not consume turns.
                VoteRound round;
                round.turn = turn;
                for (const auto& juror : all_jurors())
                    round.ballots.push_back(backend.cast_ballot(context_for(juror), vote_prompt));

                int changes_this_round = 0;
                if (!state.current_votes.empty()) {
                    for (const auto& ballot : round.ballots) {
                        auto it = state.current_votes.find(ballot.juror);
                        if (it != state.current_votes.end() && it->second != ballot.vote) {
                            record.vote_changes.push_back(
                                {turn, ballot.juror, it->second, ballot.vote});
                            ++changes_this_round;
                        }
                    }
                }
                for (const auto& ballot : round.ballots)
                    state.current_votes[ballot.juror] = ballot.vote;

                state.vote_rounds.push_back(round);
                state.unchanged_round_streak =
                    changes_this_round == 0 ? state.unchanged_round_streak + 1 : 0;
                state.spoken_since_last_round.clear();
                emit(round);
                backend.on_vote_round(round);

                if (auto term = check_termination(state, config_)) {
                    record.verdict = term->first;
                    emit(Termination{turn, term->first, term->second});
                    return result;
                }
            }

            if (turn == config_.max_turns) {
                auto term = check_termination(state, config_);
                Verdict verdict = term ? term->first : Verdict::HungJury;
                std::string reason = term ? term->second : "budget_exhausted";
                record.verdict = verdict;
                emit(Termination{turn, verdict, reason});
                return result;
            }
        }
    } catch (const AgentError& e) {
        result.aborted = true;
        result.abort_reason = e.what();
        record.total_turns = static_cast<int>(transcript.size());
        return result;
    }
    return result; // unreachable: the loop always terminates at max_turns
}

RunResult run_deliberation(const RunConfig& config, const std::vector<Persona>& personas,
                           const CaseFile& case_file, const EventSink& sink) {
    auto conditioned = condition_personas(personas, config.condition);
    auto backend = make_backend(config, conditioned, case_file);
    DeliberationEngine engine(config, std::move(conditioned), case_file);
    return engine.run(*backend, nullptr, sink);
}

} // namespace jurysim
