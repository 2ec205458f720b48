#include "primvid/state.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "enum_names.hpp"
#include "primvid/error.hpp"

namespace primvid {

namespace {

constexpr std::pair<Family, std::string_view> kFamilyNames[] = {
    {Family::card_stack, "card_stack"},
    {Family::chip_containers, "chip_containers"},
    {Family::file_system, "file_system"},
    {Family::symbol_arithmetic, "symbol_arithmetic"},
    {Family::shell_game, "shell_game"},
    {Family::sliding_puzzle, "sliding_puzzle"},
};
constexpr std::pair<QuestionMode, std::string_view> kModeNames[] = {
    {QuestionMode::forward_prediction, "forward_prediction"},
    {QuestionMode::retrodictive_inference, "retrodictive_inference"},
    {QuestionMode::historical_query, "historical_query"},
};
constexpr std::pair<Visibility, std::string_view> kVisibilityNames[] = {
    {Visibility::initial_only, "initial_only"}, {Visibility::final_only, "final_only"}};
constexpr std::pair<Direction, std::string_view> kDirectionNames[] = {
    {Direction::up, "up"}, {Direction::down, "down"}, {Direction::left, "left"}, {Direction::right, "right"}};
constexpr std::pair<Difficulty, std::string_view> kDifficultyNames[] = {{Difficulty::standard, "standard"},
                                                                         {Difficulty::hard, "hard"}};

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i) out += sep;
        out += parts[i];
    }
    return out;
}

}  // namespace

std::string_view to_string(Family f) { return detail::name_of(kFamilyNames, f); }
Family family_from_string(std::string_view s) { return detail::value_of(kFamilyNames, s, "family"); }
std::string_view to_string(QuestionMode m) { return detail::name_of(kModeNames, m); }
QuestionMode question_mode_from_string(std::string_view s) { return detail::value_of(kModeNames, s, "question mode"); }
std::string_view to_string(Visibility v) { return detail::name_of(kVisibilityNames, v); }
Visibility visibility_from_string(std::string_view s) { return detail::value_of(kVisibilityNames, s, "visibility"); }
std::string_view to_string(Direction d) { return detail::name_of(kDirectionNames, d); }
Direction direction_from_string(std::string_view s) { return detail::value_of(kDirectionNames, s, "direction"); }
std::string_view to_string(Difficulty d) { return detail::name_of(kDifficultyNames, d); }
Difficulty difficulty_from_string(std::string_view s) { return detail::value_of(kDifficultyNames, s, "difficulty"); }

Family family_of(const StateSnapshot& s) { return static_cast<Family>(s.index()); }
Family family_of(const Action& a) { return static_cast<Family>(a.index()); }

std::string index_label(int i) { return std::string(1, static_cast<char>('A' + i)); }

std::string ordinal_word(int n) {
    static const char* kWords[] = {"zeroth",     "first",      "second",      "third",      "fourth",
                                   "fifth",      "sixth",      "seventh",     "eighth",     "ninth",
                                   "tenth",      "eleventh",   "twelfth",     "thirteenth", "fourteenth",
                                   "fifteenth",  "sixteenth",  "seventeenth", "eighteenth", "nineteenth",
                                   "twentieth"};
    if (n >= 0 && n <= 20) return kWords[n];
    return "number " + std::to_string(n);
}

void validate_state(const StateSnapshot& state) {
    auto fail = [](const std::string& m) { throw InvalidSpec("state: " + m); };
    std::visit(overloaded{
                   [&](const CardStacks& s) {
                       if (s.stacks.empty()) fail("no card stacks");
                       std::set<std::string> seen;
                       for (const auto& st : s.stacks)
                           for (const auto& c : st)
                               if (!seen.insert(c).second) fail("duplicate card " + c);
                   },
                   [&](const ChipContainers& s) {
                       if (s.counts.size() < 2) fail("need at least two chip containers");
                       for (int c : s.counts)
                           if (c < 0) fail("negative chip count");
                   },
                   [&](const FileTree& s) {
                       if (!std::is_sorted(s.dirs.begin(), s.dirs.end())) fail("directory list not sorted");
                       std::set<std::string> set(s.dirs.begin(), s.dirs.end());
                       if (set.size() != s.dirs.size()) fail("duplicate directory");
                       for (const auto& d : s.dirs) {
                           if (d.empty() || d[0] != '/' || d == "/" || d.back() == '/') fail("bad path " + d);
                           auto parent = d.substr(0, d.rfind('/'));
                           if (!parent.empty() && !set.count(parent)) fail("orphan directory " + d);
                       }
                       if (s.cwd != "/" && !set.count(s.cwd)) fail("cwd does not exist");
                   },
                   [&](const SymbolRegister& s) {
                       if (s.value < 0) fail("negative register");
                   },
                   [&](const ShellGrid& s) {
                       if (s.rows < 1 || s.cols < 1) fail("bad grid shape");
                       if (static_cast<int>(s.cells.size()) != s.rows * s.cols) fail("cell count != rows*cols");
                       std::set<std::string> set(s.cells.begin(), s.cells.end());
                       if (set.size() != s.cells.size()) fail("shell-game map is not a bijection");
                   },
                   [&](const SlidingPuzzle& s) {
                       if (s.rows < 2 || s.cols < 2) fail("bad puzzle shape");
                       const int n = s.rows * s.cols;
                       if (static_cast<int>(s.tiles.size()) != n) fail("tile count != rows*cols");
                       std::vector<int> sorted = s.tiles;
                       std::sort(sorted.begin(), sorted.end());
                       for (int i = 0; i < n; ++i)
                           if (sorted[static_cast<std::size_t>(i)] != i) fail("tiles are not a permutation with one blank");
                   },
               },
               state);
}

std::string render_state(const StateSnapshot& state) {
    return std::visit(
        overloaded{
            [](const CardStacks& s) {
                std::vector<std::string> parts;
                for (std::size_t i = 0; i < s.stacks.size(); ++i)
                    parts.push_back("stack " + index_label(static_cast<int>(i)) + ": [" + join(s.stacks[i], ", ") + "]");
                return join(parts, "; ");
            },
            [](const ChipContainers& s) {
                std::vector<std::string> parts;
                for (std::size_t i = 0; i < s.counts.size(); ++i)
                    parts.push_back(index_label(static_cast<int>(i)) + "=" + std::to_string(s.counts[i]));
                return join(parts, ", ");
            },
            [](const FileTree& s) { return "cwd " + s.cwd + " in {" + join(s.dirs, ", ") + "}"; },
            [](const SymbolRegister& s) { return std::to_string(s.value); },
            [](const ShellGrid& s) {
                std::vector<std::string> parts;
                for (std::size_t i = 0; i < s.cells.size(); ++i)
                    parts.push_back(index_label(static_cast<int>(i)) + ": " + s.cells[i]);
                return join(parts, ", ");
            },
            [](const SlidingPuzzle& s) {
                std::vector<std::string> rows;
                for (int r = 0; r < s.rows; ++r) {
                    std::vector<std::string> cells;
                    for (int c = 0; c < s.cols; ++c) {
                        int t = s.tiles[static_cast<std::size_t>(r * s.cols + c)];
                        cells.push_back(t == 0 ? "_" : std::to_string(t));
                    }
                    rows.push_back(join(cells, " "));
                }
                return join(rows, " / ");
            },
        },
        state);
}

std::string describe(const Action& action) {
    return std::visit(
        overloaded{
            [](const CardOp& op) -> std::string {
                switch (op.kind) {
                    case CardOp::Kind::push: return "push " + op.card + " onto stack " + index_label(op.to);
                    case CardOp::Kind::pop: return "pop from stack " + index_label(op.from);
                    case CardOp::Kind::move:
                        return "move top card from stack " + index_label(op.from) + " to stack " + index_label(op.to);
                }
                return "?";
            },
            [](const ChipOp& op) {
                return "move " + std::to_string(op.amount) + (op.amount == 1 ? " chip" : " chips") + " from " +
                       index_label(op.from) + " to " + index_label(op.to);
            },
            [](const FsOp& op) -> std::string {
                switch (op.kind) {
                    case FsOp::Kind::enter: return "cd " + op.name;
                    case FsOp::Kind::leave: return "cd ..";
                    case FsOp::Kind::create: return "mkdir " + op.name;
                    case FsOp::Kind::remove: return "rmdir " + op.name;
                }
                return "?";
            },
            [](const SymbolOp& op) -> std::string {
                const char* sym = "+";
                switch (op.kind) {
                    case SymbolOp::Kind::add: sym = "+"; break;
                    case SymbolOp::Kind::sub: sym = "-"; break;
                    case SymbolOp::Kind::mul: sym = "x"; break;
                    case SymbolOp::Kind::div: sym = "/"; break;
                }
                return std::string(sym) + std::to_string(op.k);
            },
            [](const SwapOp& op) { return "swap " + index_label(op.a) + " and " + index_label(op.b); },
            [](const SlideOp& op) { return "slide " + std::string(to_string(op.dir)); },
        },
        action);
}

}  // namespace primvid
