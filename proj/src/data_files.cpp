#include "jurysim/data_files.hpp"

#include <fstream>
#include <json.hpp>
#include <sstream>

namespace jurysim {

namespace {

using nlohmann::json;

std::string trim(std::string_view s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

[[noreturn]] void fail(const std::filesystem::path& path, int line, const std::string& what) {
    throw DataError(path.string() + ":" + std::to_string(line) + ": " + what);
}

// Shared line-format parser: [Section] headers, "Key: value" fields,
// "- item" list entries, '#' comments.
struct Line {
    int number;
    enum Kind { Section, Field, ListItem, Text } kind;
    std::string a; // section name / field key / item / text
    std::string b; // field value
};

std::vector<Line> parse_lines(const std::filesystem::path& path) {
    std::istringstream in(read_file(path));
    std::vector<Line> out;
    std::string raw;
    int number = 0;
    while (std::getline(in, raw)) {
        ++number;
        std::string line = trim(raw);
        if (line.empty() || line[0] == '#') continue;
        if (line.front() == '[') {
            if (line.back() != ']') fail(path, number, "unterminated section header");
            out.push_back({number, Line::Section, trim(line.substr(1, line.size() - 2)), ""});
        } else if (line.rfind("- ", 0) == 0) {
            out.push_back({number, Line::ListItem, trim(line.substr(2)), ""});
        } else if (auto colon = line.find(':'); colon != std::string::npos) {
            out.push_back({number, Line::Field, trim(line.substr(0, colon)),
                           trim(line.substr(colon + 1))});
        } else {
            out.push_back({number, Line::Text, line, ""});
        }
    }
    return out;
}

} // namespace

std::vector<Persona> load_personas(const std::filesystem::path& path) {
    auto lines = parse_lines(path);
    std::vector<Persona> personas;
    Persona* current = nullptr;
    std::vector<std::string>* current_list = nullptr;

    for (const auto& line : lines) {
        switch (line.kind) {
        case Line::Section: {
            auto id = JurorId::parse(line.a);
            if (!id) fail(path, line.number, "unknown juror section [" + line.a + "]");
            personas.push_back({});
            current = &personas.back();
            current->id = *id;
            current_list = nullptr;
            break;
        }
        case Line::Field: {
            if (!current) fail(path, line.number, "field before any [Juror_N] section");
            current_list = nullptr;
            if (line.a == "Occupation") current->occupation = line.b;
            else if (line.a == "Personality") current->personality = line.b;
            else if (line.a == "Speaking style") current->speaking_style = line.b;
            else if (line.a == "Key arguments") current_list = &current->key_arguments;
            else if (line.a == "Emotional triggers") current_list = &current->emotional_triggers;
            else if (line.a == "Initial vote") {
                auto vote = parse_vote(line.b);
                if (!vote) fail(path, line.number, "bad vote '" + line.b + "'");
                current->initial_vote = vote;
            } else {
                fail(path, line.number, "unknown persona field '" + line.a + "'");
            }
            break;
        }
        case Line::ListItem:
            if (!current_list) fail(path, line.number, "list item outside a list field");
            current_list->push_back(line.a);
            break;
        case Line::Text:
            fail(path, line.number, "unexpected free text in persona file");
        }
    }

    std::sort(personas.begin(), personas.end(),
              [](const Persona& a, const Persona& b) { return a.id < b.id; });
    auto violations = validate_personas(personas, Condition::Baseline);
    if (!violations.empty())
        throw DataError(path.string() + ": " + violations.front() +
                        (violations.size() > 1
                             ? " (+" + std::to_string(violations.size() - 1) + " more)"
                             : ""));
    return personas;
}

CaseFile load_case_file(const std::filesystem::path& path) {
    auto lines = parse_lines(path);
    CaseFile cf;
    enum class Where { None, Scene, Summary, Evidence } where = Where::None;
    EvidenceItem* item = nullptr;

    auto append_text = [](std::string& dest, const std::string& text) {
        if (!dest.empty()) dest += ' ';
        dest += text;
    };

    for (const auto& line : lines) {
        switch (line.kind) {
        case Line::Section: {
            item = nullptr;
            if (line.a == "Scene Setting") { where = Where::Scene; break; }
            if (line.a == "Case Summary") { where = Where::Summary; break; }
            if (line.a.rfind("Evidence #", 0) == 0) {
                where = Where::Evidence;
                std::string rest = line.a.substr(10);
                auto colon = rest.find(':');
                if (colon == std::string::npos)
                    fail(path, line.number, "evidence header needs '#N: name'");
                cf.evidence.push_back({});
                item = &cf.evidence.back();
                try {
                    item->id = std::stoi(rest.substr(0, colon));
                } catch (const std::exception&) {
                    fail(path, line.number, "bad evidence id");
                }
                item->name = trim(rest.substr(colon + 1));
                break;
            }
            fail(path, line.number, "unknown section [" + line.a + "]");
        }
        case Line::Field: {
            if (where != Where::Evidence || !item) {
                // A colon inside scene/summary prose is just text.
                std::string text = line.a + ": " + line.b;
                if (where == Where::Scene) append_text(cf.scene_setting, text);
                else if (where == Where::Summary) append_text(cf.case_summary, text);
                else fail(path, line.number, "field outside any section");
                break;
            }
            if (line.a == "Category") {
                auto cat = parse_evidence_category(line.b);
                if (!cat) fail(path, line.number, "bad category '" + line.b + "'");
                item->category = *cat;
            } else if (line.a == "Description") {
                item->description = line.b;
            } else if (line.a == "Prosecution argues") {
                item->prosecution_argument = line.b;
            } else {
                fail(path, line.number, "unknown evidence field '" + line.a + "'");
            }
            break;
        }
        case Line::Text:
            if (where == Where::Scene) append_text(cf.scene_setting, line.a);
            else if (where == Where::Summary) append_text(cf.case_summary, line.a);
            else fail(path, line.number, "unexpected free text");
            break;
        case Line::ListItem:
            fail(path, line.number, "unexpected list item in case file");
        }
    }

    auto violations = validate_case_file(cf);
    if (!violations.empty()) throw DataError(path.string() + ": " + violations.front());
    return cf;
}

MetricConfig load_metric_config(const std::filesystem::path& path) {
    json doc;
    try {
        doc = json::parse(read_file(path));
    } catch (const json::exception& e) {
        throw DataError(path.string() + ": " + e.what());
    }

    MetricConfig config;
    for (const auto& [key, aliases] : doc.at("evidence_aliases").items()) {
        int id = std::stoi(key);
        config.evidence_aliases[id] = aliases.get<std::vector<std::string>>();
    }
    if (doc.contains("key_argument_aliases")) {
        for (const auto& [key, lists] : doc.at("key_argument_aliases").items()) {
            auto id = JurorId::parse(key);
            if (!id) throw DataError(path.string() + ": bad juror key '" + key + "'");
            config.key_argument_aliases[*id] =
                lists.get<std::vector<std::vector<std::string>>>();
        }
    }
    for (const auto& p : doc.at("closure_patterns")) {
        config.closure_patterns.push_back({p.at("name").get<std::string>(),
                                           p.at("kind").get<std::string>(),
                                           p.at("pattern").get<std::string>()});
    }
    return config;
}

ScriptedPresets load_scripted_presets(const std::filesystem::path& path) {
    json doc;
    try {
        doc = json::parse(read_file(path));
    } catch (const json::exception& e) {
        throw DataError(path.string() + ": " + e.what());
    }

    ScriptedPresets out;
    out.pressure_decay = doc.value("pressure_decay", 0.9);

    auto parse_params = [&path](const json& j, ScriptedJurorParams base) {
        ScriptedJurorParams p = base;
        if (j.contains("openness")) p.openness = j.at("openness").get<double>();
        if (j.contains("anchor_strength")) p.anchor_strength = j.at("anchor_strength").get<double>();
        if (j.contains("persuasiveness")) p.persuasiveness = j.at("persuasiveness").get<double>();
        if (j.contains("conviction_init")) p.conviction_init = j.at("conviction_init").get<double>();
        if (j.contains("initial_lean")) {
            auto vote = parse_vote(j.at("initial_lean").get<std::string>());
            if (!vote) throw DataError(path.string() + ": bad initial_lean");
            p.initial_lean = *vote;
        }
        return p;
    };

    for (const auto& [name, body] : doc.at("presets").items()) {
        ScriptedProfile profile;
        profile.pressure_decay = out.pressure_decay;
        ScriptedJurorParams defaults = parse_params(body.at("default"), {});
        for (const auto& j : all_jurors()) profile.jurors[j] = defaults;
        if (body.contains("jurors")) {
            for (const auto& [key, override] : body.at("jurors").items()) {
                auto id = JurorId::parse(key);
                if (!id) throw DataError(path.string() + ": bad juror key '" + key + "'");
                profile.jurors[*id] = parse_params(override, defaults);
            }
        }
        out.presets[name] = std::move(profile);
    }
    return out;
}

DataBundle load_data_bundle(const std::filesystem::path& data_dir) {
    DataBundle bundle;
    bundle.personas = load_personas(data_dir / "personas.txt");
    bundle.case_file = load_case_file(data_dir / "case_file.txt");
    bundle.metric_config = load_metric_config(data_dir / "metric_config.json");
    bundle.scripted_presets = load_scripted_presets(data_dir / "scripted_presets.json");
    return bundle;
}

} // namespace jurysim
