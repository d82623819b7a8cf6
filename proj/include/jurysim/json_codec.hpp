#pragma once

#include <stdexcept>
#include <string>

#include <json.hpp>

#include "jurysim/domain.hpp"
#include "jurysim/metrics.hpp"

namespace jurysim {

// Parse failure in a persisted stream or manifest; line is 0 for manifests.
struct CodecError : std::runtime_error {
    CodecError(int line_, const std::string& what_) : std::runtime_error(what_), line(line_) {}
    int line;
};

nlohmann::json event_to_json(const Event& event);
Event event_from_json(const nlohmann::json& j);

// One JSON object per line, in event order.
std::string encode_events_jsonl(const std::vector<Event>& events);
std::vector<Event> decode_events_jsonl(const std::string& text); // CodecError with line number

nlohmann::json config_to_json(const RunConfig& config);
RunConfig config_from_json(const nlohmann::json& j);

nlohmann::json metrics_to_json(const RunMetrics& metrics);
RunMetrics metrics_from_json(const nlohmann::json& j);

// Manifest core: config, initial votes, verdict, total turns, vote changes.
// The harness adds metrics / abort info on top.
nlohmann::json record_manifest_json(const DeliberationRecord& record);

struct EncodedRecord {
    std::string events_jsonl;
    nlohmann::json manifest;
};

EncodedRecord encode_record(const DeliberationRecord& record);
DeliberationRecord decode_record(const nlohmann::json& manifest, const std::string& events_jsonl);

} // namespace jurysim
