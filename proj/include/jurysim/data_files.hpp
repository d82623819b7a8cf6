#pragma once

#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "jurysim/domain.hpp"
#include "jurysim/metrics.hpp"

namespace jurysim {

struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Persona and case-file data ship as human-editable structured text
// ("Key: value" fields, "- item" lists, [Section] headers); the keyword
// tables and scripted presets ship as JSON. Loaders validate on the way in
// and throw DataError with the offending file and line.
std::vector<Persona> load_personas(const std::filesystem::path& path);
CaseFile load_case_file(const std::filesystem::path& path);
MetricConfig load_metric_config(const std::filesystem::path& path);

struct ScriptedPresets {
    double pressure_decay = 0.9;
    std::map<std::string, ScriptedProfile> presets; // profile noise_scale left at default
};

ScriptedPresets load_scripted_presets(const std::filesystem::path& path);

// Everything the harness needs from the data directory.
struct DataBundle {
    std::vector<Persona> personas; // unconditioned, as shipped
    CaseFile case_file;
    MetricConfig metric_config;
    ScriptedPresets scripted_presets;
};

DataBundle load_data_bundle(const std::filesystem::path& data_dir);

} // namespace jurysim
