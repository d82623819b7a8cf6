#pragma once

#include <stdexcept>
#include <string>

#include "jurysim/domain.hpp"

namespace jurysim {

struct PromptError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct PromptBundle {
    std::string system_prompt;
    std::string vote_prompt;
    bool open_minded_rule_present = false;
    bool initial_vote_line_present = false;
};

// The single rule sentence the open-minded condition appends to the
// deliberation rules. Kept byte-stable; prompt diffs are asserted against it.
const std::string& open_minded_rule();

// Builds the juror's system prompt: character profile, full case file,
// deliberation rules, then (Baseline/OpenMinded only) the initial-vote line.
// Conditions differ by exactly one line each: OpenMinded appends
// open_minded_rule() to the rules, NoInitialVote drops the initial-vote line.
// Throws PromptError naming the first missing persona field.
PromptBundle assemble_system_prompt(const Persona& persona, const CaseFile& case_file,
                                    Condition condition);

// The structured-output vote prompt issued at every vote round.
std::string assemble_vote_prompt();

} // namespace jurysim
