#pragma once

// Long-term scenario types: family states, operations, and scripts.

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace primvid {

enum class Family { card_stack, chip_containers, file_system, symbol_arithmetic, shell_game, sliding_puzzle };
inline constexpr std::array kAllFamilies{Family::card_stack,        Family::chip_containers, Family::file_system,
                                         Family::symbol_arithmetic, Family::shell_game,      Family::sliding_puzzle};
std::string_view to_string(Family f);
Family family_from_string(std::string_view s);

enum class QuestionMode { forward_prediction, retrodictive_inference, historical_query };
inline constexpr std::array kAllQuestionModes{QuestionMode::forward_prediction, QuestionMode::retrodictive_inference,
                                              QuestionMode::historical_query};
std::string_view to_string(QuestionMode m);
QuestionMode question_mode_from_string(std::string_view s);

enum class Visibility { initial_only, final_only };
std::string_view to_string(Visibility v);
Visibility visibility_from_string(std::string_view s);

// ---- states ----------------------------------------------------------------

/// Stacks listed bottom to top.
struct CardStacks {
    std::vector<std::vector<std::string>> stacks;
    friend bool operator==(const CardStacks&, const CardStacks&) = default;
};

struct ChipContainers {
    std::vector<int> counts;
    friend bool operator==(const ChipContainers&, const ChipContainers&) = default;
};

/// Directory tree as a sorted set of absolute paths (root "/" implicit).
struct FileTree {
    std::vector<std::string> dirs;
    std::string cwd = "/";
    friend bool operator==(const FileTree&, const FileTree&) = default;
};

struct SymbolRegister {
    std::int64_t value = 0;
    friend bool operator==(const SymbolRegister&, const SymbolRegister&) = default;
};

/// Grid of cups; cells[i] is the object hidden under cell i (row-major).
struct ShellGrid {
    int rows = 1;
    int cols = 3;
    std::vector<std::string> cells;
    friend bool operator==(const ShellGrid&, const ShellGrid&) = default;
};

/// Row-major tiles; 0 is the blank.
struct SlidingPuzzle {
    int rows = 3;
    int cols = 3;
    std::vector<int> tiles;
    friend bool operator==(const SlidingPuzzle&, const SlidingPuzzle&) = default;
};

using StateSnapshot = std::variant<CardStacks, ChipContainers, FileTree, SymbolRegister, ShellGrid, SlidingPuzzle>;

Family family_of(const StateSnapshot& s);

/// Throws InvalidSpec if the state is structurally invalid for its family.
void validate_state(const StateSnapshot& s);

/// Canonical, injective text rendering used for answers and equality in QA.
std::string render_state(const StateSnapshot& s);

// ---- operations ------------------------------------------------------------

struct CardOp {
    enum class Kind { push, pop, move } kind = Kind::move;
    int from = 0;      // pop, move
    int to = 0;        // push, move
    std::string card;  // push, pop
    friend bool operator==(const CardOp&, const CardOp&) = default;
};

struct ChipOp {
    int amount = 1;
    int from = 0;
    int to = 1;
    friend bool operator==(const ChipOp&, const ChipOp&) = default;
};

/// `remove` exists only as the inverse of `create` and is never generated.
struct FsOp {
    enum class Kind { enter, leave, create, remove } kind = Kind::enter;
    std::string name;
    friend bool operator==(const FsOp&, const FsOp&) = default;
};

struct SymbolOp {
    enum class Kind { add, sub, mul, div } kind = Kind::add;
    std::int64_t k = 1;
    friend bool operator==(const SymbolOp&, const SymbolOp&) = default;
};

struct SwapOp {
    int a = 0;
    int b = 1;
    friend bool operator==(const SwapOp&, const SwapOp&) = default;
};

enum class Direction { up, down, left, right };
std::string_view to_string(Direction d);
Direction direction_from_string(std::string_view s);

/// The tile next to the blank moves one cell in `dir` into the blank.
struct SlideOp {
    Direction dir = Direction::up;
    friend bool operator==(const SlideOp&, const SlideOp&) = default;
};

using Action = std::variant<CardOp, ChipOp, FsOp, SymbolOp, SwapOp, SlideOp>;

struct Operation {
    int op_index = 0;  // 1-based position in the sequence
    double duration_s = 0.5;
    Action action;
    friend bool operator==(const Operation&, const Operation&) = default;
};

Family family_of(const Action& a);

/// Short human-readable text for an operation, as shown on screen.
std::string describe(const Action& a);

// ---- scripts ---------------------------------------------------------------

/// Historical query target. Property names per family:
///   top_card:<stack>, chip_count:<container>, cwd, value,
///   cell_object:<cell>, blank_position, operation
struct QueryProperty {
    std::string name;
    int target = 0;
    friend bool operator==(const QueryProperty&, const QueryProperty&) = default;
};

struct HistoricalQuery {
    int op_index = 0;
    QueryProperty property;
    friend bool operator==(const HistoricalQuery&, const HistoricalQuery&) = default;
};

enum class Difficulty { standard, hard };
std::string_view to_string(Difficulty d);
Difficulty difficulty_from_string(std::string_view s);

struct ScenarioScript {
    std::uint64_t seed = 0;
    Family family = Family::shell_game;
    StateSnapshot initial;
    std::vector<Operation> operations;
    StateSnapshot final_state;
    Visibility visible_state = Visibility::initial_only;
    double per_op_duration_s = 0.5;
    double reveal_duration_s = 2.0;
    QuestionMode question_mode = QuestionMode::forward_prediction;
    std::optional<HistoricalQuery> query;
    Difficulty difficulty = Difficulty::standard;

    friend bool operator==(const ScenarioScript&, const ScenarioScript&) = default;
};

/// Throws InvalidSpec on the first violated script invariant, including replay.
void validate_script(const ScenarioScript& script);

/// Letter label for a stack / container / cell index: 0 -> "A".
std::string index_label(int i);
/// "first", "second", ... for 1-based ordinals (falls back to "number N").
std::string ordinal_word(int n);

}  // namespace primvid
