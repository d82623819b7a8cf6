#include "jurysim/prompts.hpp"

#include <sstream>

namespace jurysim {

const std::string& open_minded_rule() {
    static const std::string rule =
        "Weigh ALL evidence fairly. Do not cling to your first instinct; if a "
        "counter-argument is sound, update your position.";
    return rule;
}

PromptBundle assemble_system_prompt(const Persona& persona, const CaseFile& case_file,
                                    Condition condition) {
    auto require = [&persona](const std::string& value, const char* field) -> const std::string& {
        if (value.empty())
            throw PromptError(persona.id.name() + ": missing persona field '" + field + "'");
        return value;
    };
    if (persona.key_arguments.empty())
        throw PromptError(persona.id.name() + ": missing persona field 'key_arguments'");

    const bool wants_initial_vote = condition != Condition::NoInitialVote;
    if (wants_initial_vote && !persona.initial_vote)
        throw PromptError(persona.id.name() + ": missing persona field 'initial_vote'");

    std::ostringstream ss;
    ss << "You are " << persona.id.name()
       << ", one of twelve jurors deliberating a first-degree murder case.\n";

    ss << "\n## Character profile\n";
    ss << "Occupation: " << require(persona.occupation, "occupation") << '\n';
    ss << "Personality: " << require(persona.personality, "personality") << '\n';
    ss << "Speaking style: " << require(persona.speaking_style, "speaking_style") << '\n';
    ss << "Key arguments you are expected to raise:\n";
    for (const auto& arg : persona.key_arguments) ss << "- " << arg << '\n';
    if (!persona.emotional_triggers.empty()) {
        ss << "Emotional triggers:\n";
        for (const auto& trigger : persona.emotional_triggers) ss << "- " << trigger << '\n';
    }

    ss << "\n## Case file\n";
    ss << "Scene setting: " << case_file.scene_setting << '\n';
    ss << "Case summary: " << case_file.case_summary << '\n';
    for (const auto& item : case_file.evidence) {
        ss << "Evidence #" << item.id << ": " << item.name << '\n';
        ss << "Category: " << to_string(item.category) << '\n';
        ss << "Description: " << item.description << '\n';
        ss << "Prosecution argues: " << item.prosecution_argument << '\n';
    }

    ss << "\n## Deliberation rules\n";
    ss << "Stay in character as " << persona.id.name() << " at all times.\n";
    ss << "Exactly one juror speaks per turn; when selected, address the room with one statement.\n";
    ss << "Argue from the evidence in the case file and engage with what the other jurors have said.\n";
    ss << "When a vote is called, answer the vote prompt in the exact format it requests.\n";
    if (condition == Condition::OpenMinded) ss << open_minded_rule() << '\n';
    if (wants_initial_vote)
        ss << "Initial vote: " << to_string(*persona.initial_vote) << '\n';

    PromptBundle bundle;
    bundle.system_prompt = ss.str();
    bundle.vote_prompt = assemble_vote_prompt();
    bundle.open_minded_rule_present = condition == Condition::OpenMinded;
    bundle.initial_vote_line_present = wants_initial_vote;
    return bundle;
}

std::string assemble_vote_prompt() {
    return "The foreman calls a vote. State your current vote on the defendant's guilt.\n"
           "Respond with exactly one JSON object and nothing else:\n"
           "{\"vote\": \"GUILTY\" or \"NOT_GUILTY\", \"reasoning\": \"<one sentence explaining your vote>\"}\n"
           "GUILTY and NOT_GUILTY are the only valid votes; there is no abstention. "
           "Keep the reasoning to a single sentence.";
}

} // namespace jurysim
