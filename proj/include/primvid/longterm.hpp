#pragma once

// State-transition engine for the long-term scenario families.

#include <span>
#include <string>
#include <vector>

#include "primvid/model.hpp"
#include "primvid/rng.hpp"
#include "primvid/state.hpp"

namespace primvid::longterm {

/// Returns the successor state. Throws InapplicableOperation naming the op
/// index and the violated precondition.
StateSnapshot apply(const StateSnapshot& state, const Operation& op);
StateSnapshot apply(const StateSnapshot& state, const Action& action, int op_index = 0);

bool applicable(const StateSnapshot& state, const Action& action);

/// apply(apply(s, op), invert(op)) == s for every applicable s.
Action invert(const Action& action);
Operation invert(const Operation& op);

/// fold(apply, initial, ops)
StateSnapshot replay(const StateSnapshot& initial, std::span<const Operation> ops);
/// fold(apply, final, reverse(map(invert, ops)))
StateSnapshot retrodict(const StateSnapshot& final_state, std::span<const Operation> ops);
/// S_k: the initial state with the first k operations applied.
StateSnapshot state_at(const ScenarioScript& script, int k);

/// Every forward-vocabulary action applicable to `state`.
std::vector<Action> applicable_actions(const StateSnapshot& state);

StateSnapshot random_initial_state(Family family, Rng& rng, Difficulty difficulty = Difficulty::standard);

struct ScriptOptions {
    Difficulty difficulty = Difficulty::standard;
    double reveal_duration_s = 2.0;
    int retry_limit = 20;
};

/// Op count for a profile: uniform in [4, 10]; doubled for the hard profile.
int draw_op_count(Rng& rng, Difficulty difficulty);

/// Throws InvalidSpec for op_count < 1, RetryExhausted if no valid script is
/// found within the retry bound.
ScenarioScript generate_script(Family family, QuestionMode mode, int op_count, Rng& rng,
                               const ScriptOptions& options = {});

/// k pairwise-distinct states, each different from `correct`, produced by
/// perturbing `correct` with 1-2 random applicable operations. Throws
/// GenerationError when the state space cannot supply k of them.
std::vector<StateSnapshot> make_distractors(const StateSnapshot& correct, const ScenarioScript& script, int k,
                                            Rng& rng);

/// Historical-query analogue: distinct wrong property values read from
/// perturbed copies of the queried state.
std::vector<std::string> make_query_distractors(const ScenarioScript& script, int k, Rng& rng);

/// Property of S_{op_index} (or of operation op_index for "operation").
/// Throws Error if op_index is outside [0, T].
std::string answer_historical_query(const ScenarioScript& script, int op_index, const QueryProperty& property);

/// Properties that can be asked about a state of this family.
std::vector<QueryProperty> query_properties(const StateSnapshot& state);

/// Canonical answer for the script's question mode.
std::string canonical_answer(const ScenarioScript& script);

/// The state that must never appear on screen or in question text.
const StateSnapshot& hidden_state(const ScenarioScript& script);

struct LongTermSample {
    ScenarioScript script;
    std::string answer;
    std::vector<std::string> distractors;
    int retries = 0;
};

/// Script plus canonical answer and k distractors; regenerates internally
/// until distractors can be built.
LongTermSample generate_longterm_sample(Family family, QuestionMode mode, Rng& rng, const ScriptOptions& options = {},
                                        int distractor_count = 3);

// ---- timing -----------------------------------------------------------------

struct PhaseLayout {
    int reveal_frames = 0;
    std::vector<int> op_start;   // first frame of each operation animation
    std::vector<int> op_frames;  // frames per operation
    int final_start = 0;         // first frame of the final reveal
    int total = 0;
};

PhaseLayout phase_layout(const ScenarioScript& script, int fps);

/// Phase boundaries and operation_applied events, sorted.
std::vector<EventRecord> timeline_events(const ScenarioScript& script, int fps);

}  // namespace primvid::longterm
