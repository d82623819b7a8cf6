#include "jurysim/json_codec.hpp"

#include <sstream>

namespace jurysim {

namespace {

using nlohmann::json;

[[noreturn]] void bad(int line, const std::string& what) { throw CodecError(line, what); }

JurorId juror_from(const json& j, int line = 0) {
    auto id = JurorId::parse(j.get<std::string>());
    if (!id) bad(line, "bad juror id '" + j.get<std::string>() + "'");
    return *id;
}

Vote vote_from(const json& j, int line = 0) {
    auto v = parse_vote(j.get<std::string>());
    if (!v) bad(line, "bad vote '" + j.get<std::string>() + "'");
    return *v;
}

json ballot_to_json(const Ballot& b) {
    return {{"juror", b.juror.name()}, {"vote", to_string(b.vote)}, {"reasoning", b.reasoning}};
}

Ballot ballot_from_json(const json& j, int line) {
    return {juror_from(j.at("juror"), line), vote_from(j.at("vote"), line),
            j.at("reasoning").get<std::string>()};
}

json change_to_json(const VoteChangeEvent& c) {
    return {{"turn", c.turn},
            {"juror", c.juror.name()},
            {"from", to_string(c.from_vote)},
            {"to", to_string(c.to_vote)}};
}

VoteChangeEvent change_from_json(const json& j) {
    return {j.at("turn").get<int>(), juror_from(j.at("juror")), vote_from(j.at("from")),
            vote_from(j.at("to"))};
}

} // namespace

json event_to_json(const Event& event) {
    json j;
    if (const auto* u = std::get_if<Utterance>(&event)) {
        j["type"] = "utterance";
        j["turn"] = u->turn;
        j["speaker"] = u->speaker.name();
        j["text"] = u->text;
    } else if (const auto* r = std::get_if<VoteRound>(&event)) {
        j["type"] = "vote_round";
        j["turn"] = r->turn;
        j["ballots"] = json::array();
        for (const auto& b : r->ballots) j["ballots"].push_back(ballot_to_json(b));
    } else if (const auto* t = std::get_if<Termination>(&event)) {
        j["type"] = "termination";
        j["turn"] = t->turn;
        j["verdict"] = to_string(t->verdict);
        j["reason"] = t->reason;
    }
    return j;
}

Event event_from_json(const json& j) { // throws json exceptions; wrapped by callers
    const std::string type = j.at("type").get<std::string>();
    if (type == "utterance") {
        return Utterance{j.at("turn").get<int>(), juror_from(j.at("speaker")),
                         j.at("text").get<std::string>()};
    }
    if (type == "vote_round") {
        VoteRound r;
        r.turn = j.at("turn").get<int>();
        for (const auto& b : j.at("ballots")) r.ballots.push_back(ballot_from_json(b, 0));
        return r;
    }
    if (type == "termination") {
        auto verdict = parse_verdict(j.at("verdict").get<std::string>());
        if (!verdict) bad(0, "bad verdict in termination event");
        return Termination{j.at("turn").get<int>(), *verdict, j.at("reason").get<std::string>()};
    }
    bad(0, "unknown event type '" + type + "'");
}

std::string encode_events_jsonl(const std::vector<Event>& events) {
    std::ostringstream out;
    for (const auto& event : events) out << event_to_json(event).dump() << '\n';
    return out.str();
}

std::vector<Event> decode_events_jsonl(const std::string& text) {
    std::vector<Event> events;
    std::istringstream in(text);
    std::string line;
    int number = 0;
    while (std::getline(in, line)) {
        ++number;
        if (line.empty()) continue;
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded()) bad(number, "malformed JSON");
        try {
            events.push_back(event_from_json(j));
        } catch (const json::exception& e) {
            bad(number, e.what());
        } catch (const CodecError& e) {
            bad(number, e.what());
        }
    }
    return events;
}

json config_to_json(const RunConfig& config) {
    const BackendSpec& b = config.backend_spec;
    json backend;
    backend["kind"] = to_string(b.kind);
    backend["label"] = b.label;
    switch (b.kind) {
    case BackendKind::LlmChat:
        backend["model_name"] = b.model_name;
        backend["endpoint"] = b.endpoint;
        backend["api_key_env"] = b.api_key_env;
        break;
    case BackendKind::Scripted: {
        backend["preset"] = b.preset;
        if (b.scripted_params) {
            json profile;
            profile["noise_scale"] = b.scripted_params->noise_scale;
            profile["pressure_decay"] = b.scripted_params->pressure_decay;
            json jurors = json::object();
            for (const auto& [id, p] : b.scripted_params->jurors) {
                jurors[id.name()] = {{"openness", p.openness},
                                     {"anchor_strength", p.anchor_strength},
                                     {"persuasiveness", p.persuasiveness},
                                     {"conviction_init", p.conviction_init},
                                     {"initial_lean", to_string(p.initial_lean)}};
            }
            profile["jurors"] = jurors;
            backend["profile"] = profile;
        }
        break;
    }
    case BackendKind::Replay:
        backend["source_path"] = b.source_path;
        break;
    }

    json flip_order = json::array();
    for (const auto& j : config.canonical_flip_order) flip_order.push_back(j.name());

    return {{"backend", backend},
            {"condition", to_string(config.condition)},
            {"seed", config.seed},
            {"temperature", config.temperature},
            {"max_turns", config.max_turns},
            {"vote_interval", config.vote_interval},
            {"patience_rounds", config.patience_rounds},
            {"selector_policy", to_string(config.selector_policy)},
            {"canonical_flip_order", flip_order},
            {"rho_undefined_policy", to_string(config.rho_undefined_policy)}};
}

RunConfig config_from_json(const json& j) {
    RunConfig config;
    const json& backend = j.at("backend");
    auto kind = parse_backend_kind(backend.at("kind").get<std::string>());
    if (!kind) bad(0, "bad backend kind");
    BackendSpec& b = config.backend_spec;
    b.kind = *kind;
    b.label = backend.value("label", std::string{});
    switch (b.kind) {
    case BackendKind::LlmChat:
        b.model_name = backend.value("model_name", std::string{});
        b.endpoint = backend.value("endpoint", std::string{});
        b.api_key_env = backend.value("api_key_env", std::string{});
        break;
    case BackendKind::Scripted:
        b.preset = backend.value("preset", std::string{});
        if (backend.contains("profile")) {
            const json& profile = backend.at("profile");
            ScriptedProfile p;
            p.noise_scale = profile.value("noise_scale", 0.9);
            p.pressure_decay = profile.value("pressure_decay", 0.9);
            for (const auto& [key, v] : profile.at("jurors").items()) {
                auto id = JurorId::parse(key);
                if (!id) bad(0, "bad juror id in scripted profile");
                ScriptedJurorParams params;
                params.openness = v.at("openness").get<double>();
                params.anchor_strength = v.at("anchor_strength").get<double>();
                params.persuasiveness = v.at("persuasiveness").get<double>();
                params.conviction_init = v.at("conviction_init").get<double>();
                params.initial_lean = vote_from(v.at("initial_lean"));
                p.jurors[*id] = params;
            }
            b.scripted_params = std::move(p);
        }
        break;
    case BackendKind::Replay:
        b.source_path = backend.value("source_path", std::string{});
        break;
    }

    auto condition = parse_condition(j.at("condition").get<std::string>());
    if (!condition) bad(0, "bad condition");
    config.condition = *condition;
    config.seed = j.at("seed").get<std::uint64_t>();
    config.temperature = j.at("temperature").get<double>();
    config.max_turns = j.at("max_turns").get<int>();
    config.vote_interval = j.at("vote_interval").get<int>();
    config.patience_rounds = j.at("patience_rounds").get<int>();
    auto selector = parse_selector_policy(j.at("selector_policy").get<std::string>());
    if (!selector) bad(0, "bad selector policy");
    config.selector_policy = *selector;
    config.canonical_flip_order.clear();
    for (const auto& name : j.at("canonical_flip_order"))
        config.canonical_flip_order.push_back(juror_from(name));
    auto rho = parse_rho_policy(j.at("rho_undefined_policy").get<std::string>());
    if (!rho) bad(0, "bad rho policy");
    config.rho_undefined_policy = *rho;
    return config;
}

json metrics_to_json(const RunMetrics& m) {
    json j;
    j["verdict"] = to_string(m.verdict);
    j["total_turns"] = m.total_turns;
    j["vote_changes"] = json::array();
    for (const auto& c : m.vote_changes) j["vote_changes"].push_back(change_to_json(c));
    j["num_changes"] = m.num_changes;
    j["cascade_velocity"] = m.cascade_velocity;
    j["first_flip_order"] = json::array();
    for (const auto& id : m.first_flip_order) j["first_flip_order"].push_back(id.name());
    if (m.spearman_rho)
        j["spearman_rho"] = *m.spearman_rho;
    else
        j["spearman_rho"] = nullptr;
    j["rho_excluded"] = json::array();
    for (const auto& id : m.rho_excluded) j["rho_excluded"].push_back(id.name());
    j["evidence_coverage"] = json::array();
    for (int id : m.evidence_coverage) j["evidence_coverage"].push_back(id);
    j["key_argument_coverage"] = json::object();
    for (const auto& [id, f] : m.key_argument_coverage) j["key_argument_coverage"][id.name()] = f;
    j["cross_reference_count"] = m.cross_reference_count;
    j["narrative_closure_flags"] = json::array();
    for (const auto& flag : m.narrative_closure_flags)
        j["narrative_closure_flags"].push_back({{"turn", flag.turn}, {"pattern", flag.pattern}});
    return j;
}

RunMetrics metrics_from_json(const json& j) {
    RunMetrics m;
    auto verdict = parse_verdict(j.at("verdict").get<std::string>());
    if (!verdict) bad(0, "bad verdict in metrics");
    m.verdict = *verdict;
    m.total_turns = j.at("total_turns").get<int>();
    for (const auto& c : j.at("vote_changes")) m.vote_changes.push_back(change_from_json(c));
    m.num_changes = j.at("num_changes").get<int>();
    m.cascade_velocity = j.at("cascade_velocity").get<double>();
    for (const auto& id : j.at("first_flip_order")) m.first_flip_order.push_back(juror_from(id));
    if (!j.at("spearman_rho").is_null()) m.spearman_rho = j.at("spearman_rho").get<double>();
    for (const auto& id : j.at("rho_excluded")) m.rho_excluded.push_back(juror_from(id));
    for (const auto& id : j.at("evidence_coverage")) m.evidence_coverage.insert(id.get<int>());
    for (const auto& [key, f] : j.at("key_argument_coverage").items())
        m.key_argument_coverage[*JurorId::parse(key)] = f.get<double>();
    m.cross_reference_count = j.at("cross_reference_count").get<int>();
    for (const auto& flag : j.at("narrative_closure_flags"))
        m.narrative_closure_flags.push_back(
            {flag.at("turn").get<int>(), flag.at("pattern").get<std::string>()});
    return m;
}

json record_manifest_json(const DeliberationRecord& record) {
    json j;
    j["config"] = config_to_json(record.config);
    json initial = json::object();
    for (const auto& [id, v] : record.initial_votes) initial[id.name()] = to_string(v);
    j["initial_votes"] = initial;
    j["verdict"] = to_string(record.verdict);
    j["total_turns"] = record.total_turns;
    j["vote_changes"] = json::array();
    for (const auto& c : record.vote_changes) j["vote_changes"].push_back(change_to_json(c));
    return j;
}

EncodedRecord encode_record(const DeliberationRecord& record) {
    return {encode_events_jsonl(record.events), record_manifest_json(record)};
}

DeliberationRecord decode_record(const json& manifest, const std::string& events_jsonl) {
    DeliberationRecord record;
    try {
        record.config = config_from_json(manifest.at("config"));
        for (const auto& [key, v] : manifest.at("initial_votes").items()) {
            auto id = JurorId::parse(key);
            if (!id) bad(0, "bad juror id in initial_votes");
            record.initial_votes[*id] = vote_from(v);
        }
        auto verdict = parse_verdict(manifest.at("verdict").get<std::string>());
        if (!verdict) bad(0, "bad verdict in manifest");
        record.verdict = *verdict;
        record.total_turns = manifest.at("total_turns").get<int>();
        for (const auto& c : manifest.at("vote_changes"))
            record.vote_changes.push_back(change_from_json(c));
    } catch (const json::exception& e) {
        bad(0, std::string("bad manifest: ") + e.what());
    }
    record.events = decode_events_jsonl(events_jsonl);
    return record;
}

} // namespace jurysim
