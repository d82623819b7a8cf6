#include "jurysim/llm_client.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cstdlib>
#include <regex>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "jurysim/prompts.hpp"

namespace jurysim {

namespace {

using nlohmann::json;

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::string render_transcript(std::span<const Utterance> transcript) {
    if (transcript.empty()) return "No one has spoken yet.";
    std::ostringstream ss;
    for (const auto& u : transcript) ss << u.speaker.name() << ": " << u.text << '\n';
    return ss.str();
}

} // namespace

struct ChatClient::Impl {
    std::string host;        // scheme://authority
    std::string path_prefix; // e.g. "/v1"
    std::string model_name;
    std::string api_key;
    int transport_attempts;
    std::unique_ptr<httplib::Client> http;
};

ChatClient::ChatClient(std::string endpoint, std::string model_name, std::string api_key,
                       int transport_attempts)
    : impl_(std::make_unique<Impl>()) {
    // split "scheme://authority/prefix" into client host and path prefix
    std::string host = endpoint;
    std::string prefix;
    auto scheme_end = endpoint.find("://");
    std::size_t path_start =
        endpoint.find('/', scheme_end == std::string::npos ? 0 : scheme_end + 3);
    if (path_start != std::string::npos) {
        host = endpoint.substr(0, path_start);
        prefix = endpoint.substr(path_start);
        while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
    }
    impl_->host = host;
    impl_->path_prefix = prefix;
    impl_->model_name = std::move(model_name);
    impl_->api_key = std::move(api_key);
    impl_->transport_attempts = std::max(1, transport_attempts);
    impl_->http = std::make_unique<httplib::Client>(impl_->host);
    impl_->http->set_connection_timeout(30);
    impl_->http->set_read_timeout(120);
}

ChatClient::~ChatClient() = default;
ChatClient::ChatClient(ChatClient&&) noexcept = default;
ChatClient& ChatClient::operator=(ChatClient&&) noexcept = default;

std::string ChatClient::complete(const std::vector<ChatMessage>& messages, double temperature) {
    json body;
    body["model"] = impl_->model_name;
    body["temperature"] = temperature;
    body["messages"] = json::array();
    for (const auto& m : messages)
        body["messages"].push_back({{"role", m.role}, {"content", m.content}});

    httplib::Headers headers = {{"Authorization", "Bearer " + impl_->api_key}};
    const std::string path = impl_->path_prefix + "/chat/completions";
    const std::string payload = body.dump();

    std::string last_error;
    for (int attempt = 1; attempt <= impl_->transport_attempts; ++attempt) {
        auto res = impl_->http->Post(path, headers, payload, "application/json");
        if (!res) {
            last_error = "connection failed: " + httplib::to_string(res.error());
        } else if (res->status == 429 || res->status >= 500) {
            last_error = "HTTP " + std::to_string(res->status);
        } else if (res->status != 200) {
            throw AgentError(AgentErrorKind::Transport, attempt,
                             "chat endpoint returned HTTP " + std::to_string(res->status));
        } else {
            try {
                json reply = json::parse(res->body);
                return reply.at("choices").at(0).at("message").at("content").get<std::string>();
            } catch (const json::exception& e) {
                last_error = std::string("bad completion envelope: ") + e.what();
            }
        }
        if (attempt < impl_->transport_attempts)
            std::this_thread::sleep_for(std::chrono::milliseconds(100 * attempt));
    }
    throw AgentError(AgentErrorKind::Transport, impl_->transport_attempts,
                     "chat endpoint unreachable after " +
                         std::to_string(impl_->transport_attempts) + " attempts: " + last_error);
}

std::optional<Ballot> parse_ballot_reply(const std::string& raw, JurorId juror) {
    auto open = raw.find('{');
    auto close = raw.rfind('}');
    if (open == std::string::npos || close == std::string::npos || close < open)
        return std::nullopt;

    json object = json::parse(raw.substr(open, close - open + 1), nullptr, false);
    if (object.is_discarded() || !object.is_object()) return std::nullopt;
    if (!object.contains("vote") || !object["vote"].is_string()) return std::nullopt;
    if (!object.contains("reasoning") || !object["reasoning"].is_string()) return std::nullopt;

    auto vote = parse_vote(trim(object["vote"].get<std::string>()));
    if (!vote) return std::nullopt;
    std::string reasoning = trim(object["reasoning"].get<std::string>());
    if (reasoning.empty()) return std::nullopt;

    return Ballot{juror, *vote, reasoning};
}

LlmBackend::LlmBackend(ChatClient client, std::map<JurorId, std::string> system_prompts,
                       double temperature, int reask_limit)
    : client_(std::move(client)), system_prompts_(std::move(system_prompts)),
      temperature_(temperature), reask_limit_(std::max(0, reask_limit)) {}

std::string LlmBackend::speak(const AgentContext& ctx) {
    const JurorId juror = ctx.persona->id;
    std::ostringstream user;
    user << "Deliberation transcript so far:\n"
         << render_transcript(ctx.transcript) << "\nIt is turn " << ctx.turn << ". You are "
         << juror.name()
         << ". Give your next statement to the room, staying in character. "
            "Respond with the statement only.";

    std::vector<ChatMessage> messages = {{"system", system_prompts_.at(juror)},
                                         {"user", user.str()}};
    std::string reply = trim(client_.complete(messages, temperature_));
    if (reply.empty())
        throw AgentError(AgentErrorKind::StructuredOutput, 1,
                         "empty utterance from " + juror.name());
    return reply;
}

Ballot LlmBackend::cast_ballot(const AgentContext& ctx, const std::string& vote_prompt) {
    const JurorId juror = ctx.persona->id;
    std::ostringstream user;
    user << "Deliberation transcript so far:\n"
         << render_transcript(ctx.transcript) << '\n'
         << vote_prompt;

    std::vector<ChatMessage> messages = {{"system", system_prompts_.at(juror)},
                                         {"user", user.str()}};

    const int attempts_allowed = 1 + reask_limit_;
    for (int attempt = 1; attempt <= attempts_allowed; ++attempt) {
        std::string raw = client_.complete(messages, temperature_);
        if (auto ballot = parse_ballot_reply(raw, juror)) return *ballot;
        if (attempt < attempts_allowed) {
            messages.push_back({"assistant", raw});
            messages.push_back({"user",
                                "Your reply could not be parsed as a ballot. Respond with exactly "
                                "one JSON object and nothing else: {\"vote\": \"GUILTY\" or "
                                "\"NOT_GUILTY\", \"reasoning\": \"<one sentence>\"}"});
        }
    }
    throw AgentError(AgentErrorKind::StructuredOutput, attempts_allowed,
                     "structured-output failure: " + juror.name() + " produced no parseable ballot in " +
                         std::to_string(attempts_allowed) + " attempts");
}

std::unique_ptr<JurorBackend> make_llm_backend(const RunConfig& config,
                                               const std::vector<Persona>& conditioned_personas,
                                               const CaseFile& case_file) {
    const BackendSpec& spec = config.backend_spec;
    const std::string env = spec.api_key_env.empty() ? "LLM_API_KEY" : spec.api_key_env;
    const char* key = std::getenv(env.c_str());
    if (!key || !*key)
        throw std::runtime_error("missing API key: environment variable " + env + " is not set");

    std::map<JurorId, std::string> prompts;
    for (const auto& persona : conditioned_personas)
        prompts[persona.id] =
            assemble_system_prompt(persona, case_file, config.condition).system_prompt;

    ChatClient client(spec.endpoint, spec.model_name, key);
    return std::make_unique<LlmBackend>(std::move(client), std::move(prompts),
                                        config.temperature);
}

LlmSpeakerSelector::LlmSpeakerSelector(ChatClient client, double temperature)
    : client_(std::move(client)), temperature_(temperature) {}

SelectorReply LlmSpeakerSelector::select(std::span<const Utterance> transcript, int turn) {
    std::ostringstream user;
    user << "Deliberation transcript so far:\n"
         << render_transcript(transcript) << "\nIt is turn " << turn
         << ". Choose which juror speaks next. Reply with exactly one juror id, "
            "Juror_1 through Juror_12.";

    std::vector<ChatMessage> messages = {
        {"system", "You moderate a deliberation between twelve jurors named Juror_1 to "
                   "Juror_12. You only ever answer with the id of the next speaker."},
        {"user", user.str()}};

    SelectorReply reply;
    reply.raw = client_.complete(messages, temperature_);

    static const std::regex designator("juror[_ ]?(1[0-2]|[1-9])",
                                       std::regex::ECMAScript | std::regex::icase);
    std::smatch match;
    if (std::regex_search(reply.raw, match, designator))
        reply.juror = JurorId::from_index(std::stoi(match[1].str()));
    return reply;
}

} // namespace jurysim
