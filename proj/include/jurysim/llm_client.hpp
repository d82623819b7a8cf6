#pragma once

#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "jurysim/agents.hpp"
#include "jurysim/domain.hpp"

namespace jurysim {

struct ChatMessage {
    std::string role; // "system" | "user" | "assistant"
    std::string content;
};

// Minimal chat-completions client. Works against any endpoint speaking the
// common /chat/completions wire protocol, so model identity stays pure
// configuration. Transport failures (connect errors, 5xx, 429) are retried;
// exhausted retries raise AgentError{Transport} with the attempt count.
class ChatClient {
public:
    ChatClient(std::string endpoint, std::string model_name, std::string api_key,
               int transport_attempts = 3);
    ~ChatClient();
    ChatClient(ChatClient&&) noexcept;
    ChatClient& operator=(ChatClient&&) noexcept;

    std::string complete(const std::vector<ChatMessage>& messages, double temperature);

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

// Parses a raw model reply into a ballot: the first {...} block must be a
// JSON object with a valid "vote" and a non-empty "reasoning".
std::optional<Ballot> parse_ballot_reply(const std::string& raw, JurorId juror);

// Juror backend over a chat endpoint. Each juror keeps its own system prompt;
// the visible transcript is rendered into the user message. Malformed ballot
// replies trigger up to reask_limit corrective re-asks before the run aborts
// with a structured-output failure.
class LlmBackend final : public JurorBackend {
public:
    LlmBackend(ChatClient client, std::map<JurorId, std::string> system_prompts,
               double temperature, int reask_limit = 2);

    std::string speak(const AgentContext& ctx) override;
    Ballot cast_ballot(const AgentContext& ctx, const std::string& vote_prompt) override;

private:
    ChatClient client_;
    std::map<JurorId, std::string> system_prompts_;
    double temperature_;
    int reask_limit_;
};

std::unique_ptr<JurorBackend> make_llm_backend(const RunConfig& config,
                                               const std::vector<Persona>& conditioned_personas,
                                               const CaseFile& case_file);

// Model-driven speaker selection: the raw reply is kept verbatim for audit;
// juror is absent when the reply names no valid juror.
struct SelectorReply {
    std::string raw;
    std::optional<JurorId> juror;
};

class LlmSpeakerSelector {
public:
    LlmSpeakerSelector(ChatClient client, double temperature);

    SelectorReply select(std::span<const Utterance> transcript, int turn);

private:
    ChatClient client_;
    double temperature_;
};

} // namespace jurysim
