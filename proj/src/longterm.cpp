#include "primvid/longterm.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>

#include "primvid/error.hpp"

namespace primvid::longterm {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

constexpr int kMaxStackHeight = 5;
constexpr int kMaxChipMove = 3;
constexpr int kMaxDirDepth = 3;
constexpr std::int64_t kMaxRegister = 9999;

const std::vector<std::string> kCardPool{"ace", "king", "queen", "jack", "ten", "nine", "eight", "seven"};
const std::vector<std::string> kShellObjects{"ball", "coin", "key", "ring", "gem", "bell"};
const std::vector<std::string> kDirNames{"docs", "music", "photos", "notes", "games", "work", "data", "logs"};

[[noreturn]] void inapplicable(int op_index, const std::string& what) { throw InapplicableOperation(op_index, what); }

std::string parent_of(const std::string& path) {
    auto pos = path.rfind('/');
    return pos == 0 ? "/" : path.substr(0, pos);
}
std::string basename_of(const std::string& path) { return path.substr(path.rfind('/') + 1); }
std::string child_path(const std::string& dir, const std::string& name) {
    return dir == "/" ? "/" + name : dir + "/" + name;
}
int depth_of(const std::string& path) {
    return path == "/" ? 0 : static_cast<int>(std::count(path.begin(), path.end(), '/'));
}
std::vector<std::string> children_of(const FileTree& t, const std::string& dir) {
    std::vector<std::string> out;
    for (const auto& d : t.dirs)
        if (parent_of(d) == dir) out.push_back(basename_of(d));
    return out;
}
bool has_dir(const FileTree& t, const std::string& p) { return std::binary_search(t.dirs.begin(), t.dirs.end(), p); }

struct Offset {
    int dr, dc;
};
Offset offset_of(Direction d) {
    switch (d) {
        case Direction::up: return {-1, 0};
        case Direction::down: return {1, 0};
        case Direction::left: return {0, -1};
        case Direction::right: return {0, 1};
    }
    return {0, 0};
}
Direction opposite(Direction d) {
    switch (d) {
        case Direction::up: return Direction::down;
        case Direction::down: return Direction::up;
        case Direction::left: return Direction::right;
        case Direction::right: return Direction::left;
    }
    return d;
}
int blank_index(const SlidingPuzzle& p) {
    return static_cast<int>(std::find(p.tiles.begin(), p.tiles.end(), 0) - p.tiles.begin());
}

// Index of the tile that would slide, or -1 if it would come from outside the grid.
int sliding_tile_index(const SlidingPuzzle& p, Direction d) {
    const int b = blank_index(p);
    const auto [dr, dc] = offset_of(d);
    const int r = b / p.cols - dr, c = b % p.cols - dc;
    if (r < 0 || r >= p.rows || c < 0 || c >= p.cols) return -1;
    return r * p.cols + c;
}

StateSnapshot apply_card(CardStacks s, const CardOp& op, int idx) {
    const int n = static_cast<int>(s.stacks.size());
    auto in_range = [&](int i) { return i >= 0 && i < n; };
    switch (op.kind) {
        case CardOp::Kind::push: {
            if (!in_range(op.to)) inapplicable(idx, "push target stack out of range");
            for (const auto& st : s.stacks)
                if (std::find(st.begin(), st.end(), op.card) != st.end())
                    inapplicable(idx, "card " + op.card + " already on the table");
            if (static_cast<int>(s.stacks[static_cast<std::size_t>(op.to)].size()) >= kMaxStackHeight)
                inapplicable(idx, "stack full");
            s.stacks[static_cast<std::size_t>(op.to)].push_back(op.card);
            break;
        }
        case CardOp::Kind::pop: {
            if (!in_range(op.from)) inapplicable(idx, "pop source stack out of range");
            auto& st = s.stacks[static_cast<std::size_t>(op.from)];
            if (st.empty()) inapplicable(idx, "pop from empty stack");
            if (st.back() != op.card) inapplicable(idx, "top card is " + st.back() + ", not " + op.card);
            st.pop_back();
            break;
        }
        case CardOp::Kind::move: {
            if (!in_range(op.from) || !in_range(op.to) || op.from == op.to) inapplicable(idx, "bad move stacks");
            auto& src = s.stacks[static_cast<std::size_t>(op.from)];
            auto& dst = s.stacks[static_cast<std::size_t>(op.to)];
            if (src.empty()) inapplicable(idx, "move from empty stack");
            if (static_cast<int>(dst.size()) >= kMaxStackHeight) inapplicable(idx, "stack full");
            dst.push_back(src.back());
            src.pop_back();
            break;
        }
    }
    return s;
}

StateSnapshot apply_chip(ChipContainers s, const ChipOp& op, int idx) {
    const int n = static_cast<int>(s.counts.size());
    if (op.from < 0 || op.from >= n || op.to < 0 || op.to >= n || op.from == op.to)
        inapplicable(idx, "bad transfer containers");
    if (op.amount < 1) inapplicable(idx, "transfer amount must be positive");
    if (s.counts[static_cast<std::size_t>(op.from)] < op.amount) inapplicable(idx, "insufficient chips");
    s.counts[static_cast<std::size_t>(op.from)] -= op.amount;
    s.counts[static_cast<std::size_t>(op.to)] += op.amount;
    return s;
}

StateSnapshot apply_fs(FileTree s, const FsOp& op, int idx) {
    switch (op.kind) {
        case FsOp::Kind::enter: {
            auto p = child_path(s.cwd, op.name);
            if (!has_dir(s, p)) inapplicable(idx, "no directory " + p);
            s.cwd = p;
            break;
        }
        case FsOp::Kind::leave:
            if (s.cwd == "/") inapplicable(idx, "already at root");
            if (basename_of(s.cwd) != op.name) inapplicable(idx, "cwd is not " + op.name);
            s.cwd = parent_of(s.cwd);
            break;
        case FsOp::Kind::create: {
            auto p = child_path(s.cwd, op.name);
            if (has_dir(s, p)) inapplicable(idx, "directory " + p + " exists");
            s.dirs.insert(std::upper_bound(s.dirs.begin(), s.dirs.end(), p), p);
            break;
        }
        case FsOp::Kind::remove: {
            auto p = child_path(s.cwd, op.name);
            if (!has_dir(s, p)) inapplicable(idx, "no directory " + p);
            if (!children_of(s, p).empty()) inapplicable(idx, "directory " + p + " not empty");
            s.dirs.erase(std::find(s.dirs.begin(), s.dirs.end(), p));
            break;
        }
    }
    return s;
}

StateSnapshot apply_symbol(SymbolRegister s, const SymbolOp& op, int idx) {
    if (op.k < 1) inapplicable(idx, "operand must be positive");
    switch (op.kind) {
        case SymbolOp::Kind::add: s.value += op.k; break;
        case SymbolOp::Kind::sub:
            if (s.value < op.k) inapplicable(idx, "register would go negative");
            s.value -= op.k;
            break;
        case SymbolOp::Kind::mul:
            if (op.k < 2) inapplicable(idx, "multiplier must be >= 2");
            s.value *= op.k;
            break;
        case SymbolOp::Kind::div:
            if (op.k < 2) inapplicable(idx, "divisor must be >= 2");
            if (s.value % op.k != 0) inapplicable(idx, "register not divisible");
            s.value /= op.k;
            break;
    }
    return s;
}

StateSnapshot apply_swap(ShellGrid s, const SwapOp& op, int idx) {
    const int n = static_cast<int>(s.cells.size());
    if (op.a < 0 || op.a >= n || op.b < 0 || op.b >= n || op.a == op.b) inapplicable(idx, "bad swap cells");
    std::swap(s.cells[static_cast<std::size_t>(op.a)], s.cells[static_cast<std::size_t>(op.b)]);
    return s;
}

StateSnapshot apply_slide(SlidingPuzzle s, const SlideOp& op, int idx) {
    const int t = sliding_tile_index(s, op.dir);
    if (t < 0) inapplicable(idx, "no tile can slide " + std::string(to_string(op.dir)));
    std::swap(s.tiles[static_cast<std::size_t>(t)], s.tiles[static_cast<std::size_t>(blank_index(s))]);
    return s;
}

// Group key so random choice is uniform over kinds first, then instances.
int action_kind(const Action& a) {
    return std::visit(overloaded{
                          [](const CardOp& op) { return static_cast<int>(op.kind); },
                          [](const FsOp& op) { return static_cast<int>(op.kind); },
                          [](const SymbolOp& op) { return static_cast<int>(op.kind); },
                          [](const auto&) { return 0; },
                      },
                      a);
}

Action random_action(const StateSnapshot& state, Rng& rng, const Action* avoid) {
    auto actions = applicable_actions(state);
    if (avoid && actions.size() > 1)
        actions.erase(std::remove(actions.begin(), actions.end(), *avoid), actions.end());
    if (actions.empty()) throw GenerationError("no applicable action");
    std::map<int, std::vector<Action>> groups;
    for (auto& a : actions) groups[action_kind(a)].push_back(std::move(a));
    std::vector<int> keys;
    for (const auto& [k, v] : groups) keys.push_back(k);
    return rng.pick(groups[rng.pick(keys)]);
}

}  // namespace

StateSnapshot apply(const StateSnapshot& state, const Action& action, int op_index) {
    if (family_of(state) != family_of(action)) inapplicable(op_index, "operation family does not match state");
    return std::visit(
        overloaded{
            [&](const CardStacks& s) { return apply_card(s, std::get<CardOp>(action), op_index); },
            [&](const ChipContainers& s) { return apply_chip(s, std::get<ChipOp>(action), op_index); },
            [&](const FileTree& s) { return apply_fs(s, std::get<FsOp>(action), op_index); },
            [&](const SymbolRegister& s) { return apply_symbol(s, std::get<SymbolOp>(action), op_index); },
            [&](const ShellGrid& s) { return apply_swap(s, std::get<SwapOp>(action), op_index); },
            [&](const SlidingPuzzle& s) { return apply_slide(s, std::get<SlideOp>(action), op_index); },
        },
        state);
}

StateSnapshot apply(const StateSnapshot& state, const Operation& op) { return longterm::apply(state, op.action, op.op_index); }

bool applicable(const StateSnapshot& state, const Action& action) {
    try {
        longterm::apply(state, action);
        return true;
    } catch (const InapplicableOperation&) {
        return false;
    }
}

Action invert(const Action& action) {
    return std::visit(overloaded{
                          [](const CardOp& op) -> Action {
                              switch (op.kind) {
                                  case CardOp::Kind::push: return CardOp{CardOp::Kind::pop, op.to, 0, op.card};
                                  case CardOp::Kind::pop: return CardOp{CardOp::Kind::push, 0, op.from, op.card};
                                  case CardOp::Kind::move: return CardOp{CardOp::Kind::move, op.to, op.from, {}};
                              }
                              return op;
                          },
                          [](const ChipOp& op) -> Action { return ChipOp{op.amount, op.to, op.from}; },
                          [](const FsOp& op) -> Action {
                              switch (op.kind) {
                                  case FsOp::Kind::enter: return FsOp{FsOp::Kind::leave, op.name};
                                  case FsOp::Kind::leave: return FsOp{FsOp::Kind::enter, op.name};
                                  case FsOp::Kind::create: return FsOp{FsOp::Kind::remove, op.name};
                                  case FsOp::Kind::remove: return FsOp{FsOp::Kind::create, op.name};
                              }
                              return op;
                          },
                          [](const SymbolOp& op) -> Action {
                              switch (op.kind) {
                                  case SymbolOp::Kind::add: return SymbolOp{SymbolOp::Kind::sub, op.k};
                                  case SymbolOp::Kind::sub: return SymbolOp{SymbolOp::Kind::add, op.k};
                                  case SymbolOp::Kind::mul: return SymbolOp{SymbolOp::Kind::div, op.k};
                                  case SymbolOp::Kind::div: return SymbolOp{SymbolOp::Kind::mul, op.k};
                              }
                              return op;
                          },
                          [](const SwapOp& op) -> Action { return op; },
                          [](const SlideOp& op) -> Action { return SlideOp{opposite(op.dir)}; },
                      },
                      action);
}

Operation invert(const Operation& op) { return Operation{op.op_index, op.duration_s, invert(op.action)}; }

StateSnapshot replay(const StateSnapshot& initial, std::span<const Operation> ops) {
    StateSnapshot s = initial;
    for (const auto& op : ops) s = longterm::apply(s, op);
    return s;
}

StateSnapshot retrodict(const StateSnapshot& final_state, std::span<const Operation> ops) {
    StateSnapshot s = final_state;
    for (auto it = ops.rbegin(); it != ops.rend(); ++it) s = longterm::apply(s, invert(*it));
    return s;
}

StateSnapshot state_at(const ScenarioScript& script, int k) {
    const int n = static_cast<int>(script.operations.size());
    if (k < 0 || k > n) throw Error("op_index " + std::to_string(k) + " outside [0, " + std::to_string(n) + "]");
    return replay(script.initial, std::span<const Operation>(script.operations).first(static_cast<std::size_t>(k)));
}

std::vector<Action> applicable_actions(const StateSnapshot& state) {
    std::vector<Action> out;
    std::visit(
        overloaded{
            [&](const CardStacks& s) {
                const int n = static_cast<int>(s.stacks.size());
                std::set<std::string> present;
                for (const auto& st : s.stacks) present.insert(st.begin(), st.end());
                for (const auto& card : kCardPool) {
                    if (present.count(card)) continue;
                    for (int to = 0; to < n; ++to)
                        if (static_cast<int>(s.stacks[static_cast<std::size_t>(to)].size()) < kMaxStackHeight)
                            out.push_back(CardOp{CardOp::Kind::push, 0, to, card});
                }
                for (int from = 0; from < n; ++from) {
                    const auto& src = s.stacks[static_cast<std::size_t>(from)];
                    if (src.empty()) continue;
                    out.push_back(CardOp{CardOp::Kind::pop, from, 0, src.back()});
                    for (int to = 0; to < n; ++to)
                        if (to != from && static_cast<int>(s.stacks[static_cast<std::size_t>(to)].size()) < kMaxStackHeight)
                            out.push_back(CardOp{CardOp::Kind::move, from, to, {}});
                }
            },
            [&](const ChipContainers& s) {
                const int n = static_cast<int>(s.counts.size());
                for (int from = 0; from < n; ++from)
                    for (int to = 0; to < n; ++to) {
                        if (from == to) continue;
                        const int max_amount = std::min(kMaxChipMove, s.counts[static_cast<std::size_t>(from)]);
                        for (int a = 1; a <= max_amount; ++a) out.push_back(ChipOp{a, from, to});
                    }
            },
            [&](const FileTree& s) {
                const auto kids = children_of(s, s.cwd);
                for (const auto& k : kids) out.push_back(FsOp{FsOp::Kind::enter, k});
                if (s.cwd != "/") out.push_back(FsOp{FsOp::Kind::leave, basename_of(s.cwd)});
                if (depth_of(s.cwd) < kMaxDirDepth)
                    for (const auto& name : kDirNames)
                        if (std::find(kids.begin(), kids.end(), name) == kids.end())
                            out.push_back(FsOp{FsOp::Kind::create, name});
            },
            [&](const SymbolRegister& s) {
                for (std::int64_t k = 1; k <= 9; ++k) {
                    out.push_back(SymbolOp{SymbolOp::Kind::add, k});
                    if (s.value >= k) out.push_back(SymbolOp{SymbolOp::Kind::sub, k});
                }
                for (std::int64_t k : {2, 3})
                    if (s.value > 0 && s.value * k <= kMaxRegister) out.push_back(SymbolOp{SymbolOp::Kind::mul, k});
                for (std::int64_t k : {2, 3, 5})
                    if (s.value > 0 && s.value % k == 0) out.push_back(SymbolOp{SymbolOp::Kind::div, k});
            },
            [&](const ShellGrid& s) {
                const int n = static_cast<int>(s.cells.size());
                for (int a = 0; a < n; ++a)
                    for (int b = a + 1; b < n; ++b) out.push_back(SwapOp{a, b});
            },
            [&](const SlidingPuzzle& s) {
                for (auto d : {Direction::up, Direction::down, Direction::left, Direction::right})
                    if (sliding_tile_index(s, d) >= 0) out.push_back(SlideOp{d});
            },
        },
        state);
    return out;
}

StateSnapshot random_initial_state(Family family, Rng& rng, Difficulty difficulty) {
    const bool hard = difficulty == Difficulty::hard;
    switch (family) {
        case Family::card_stack: {
            CardStacks s;
            s.stacks.resize(3);
            auto pool = kCardPool;
            rng.shuffle(pool);
            const auto n = static_cast<std::size_t>(rng.uniform_int(3, 6));
            for (std::size_t i = 0; i < n; ++i) {
                std::vector<int> open;
                for (int k = 0; k < 3; ++k)
                    if (s.stacks[static_cast<std::size_t>(k)].size() < kMaxStackHeight) open.push_back(k);
                s.stacks[static_cast<std::size_t>(rng.pick(open))].push_back(pool[i]);
            }
            return s;
        }
        case Family::chip_containers: {
            ChipContainers s;
            s.counts.resize(hard ? 4 : 3);
            do {
                for (auto& c : s.counts) c = static_cast<int>(rng.uniform_int(0, 6));
            } while (std::accumulate(s.counts.begin(), s.counts.end(), 0) < 3);
            return s;
        }
        case Family::file_system: {
            FileTree s;
            auto names = kDirNames;
            rng.shuffle(names);
            const auto top = static_cast<std::size_t>(rng.uniform_int(2, 3));
            for (std::size_t i = 0; i < top; ++i) {
                s.dirs.push_back("/" + names[i]);
                if (rng.bernoulli(0.5)) s.dirs.push_back("/" + names[i] + "/" + names[top + i]);
            }
            std::sort(s.dirs.begin(), s.dirs.end());
            const auto pick = rng.uniform_int(0, static_cast<std::int64_t>(s.dirs.size()));
            s.cwd = pick == 0 ? "/" : s.dirs[static_cast<std::size_t>(pick - 1)];
            return s;
        }
        case Family::symbol_arithmetic:
            return SymbolRegister{rng.uniform_int(1, hard ? 99 : 50)};
        case Family::shell_game: {
            ShellGrid s;
            if (hard) {
                s.rows = 2, s.cols = 3;
            } else if (rng.bernoulli(0.5)) {
                s.rows = 1, s.cols = 3;
            } else {
                s.rows = 2, s.cols = 2;
            }
            auto pool = kShellObjects;
            rng.shuffle(pool);
            s.cells.assign(pool.begin(), pool.begin() + s.rows * s.cols);
            return s;
        }
        case Family::sliding_puzzle: {
            SlidingPuzzle s;
            s.rows = 3, s.cols = 3;
            s.tiles = {1, 2, 3, 4, 5, 6, 7, 8, 0};
            StateSnapshot st = s;
            for (int i = 0; i < 30; ++i) st = longterm::apply(st, random_action(st, rng, nullptr));
            return st;
        }
    }
    throw InvalidSpec("unknown family");
}

int draw_op_count(Rng& rng, Difficulty difficulty) {
    const auto t = static_cast<int>(rng.uniform_int(4, 10));
    return difficulty == Difficulty::hard ? 2 * t : t;
}

ScenarioScript generate_script(Family family, QuestionMode mode, int op_count, Rng& rng, const ScriptOptions& options) {
    if (op_count < 1) throw InvalidSpec("op count must be >= 1 (got " + std::to_string(op_count) + ")");
    for (int attempt = 0; attempt < options.retry_limit; ++attempt) {
        ScenarioScript script;
        script.family = family;
        script.question_mode = mode;
        script.difficulty = options.difficulty;
        script.reveal_duration_s = options.reveal_duration_s;
        // Whole frames at 30 fps: 15..30 frames per operation.
        script.per_op_duration_s = static_cast<double>(rng.uniform_int(15, 30)) / 30.0;
        script.initial = random_initial_state(family, rng, options.difficulty);

        StateSnapshot s = script.initial;
        std::optional<Action> undo;
        for (int i = 1; i <= op_count; ++i) {
            Action a = random_action(s, rng, undo ? &*undo : nullptr);
            s = longterm::apply(s, a, i);
            undo = invert(a);
            script.operations.push_back(Operation{i, script.per_op_duration_s, std::move(a)});
        }
        script.final_state = s;
        if (script.final_state == script.initial) continue;

        switch (mode) {
            case QuestionMode::forward_prediction: script.visible_state = Visibility::initial_only; break;
            case QuestionMode::retrodictive_inference: script.visible_state = Visibility::final_only; break;
            case QuestionMode::historical_query: {
                script.visible_state = rng.bernoulli(0.5) ? Visibility::initial_only : Visibility::final_only;
                const int k = op_count >= 2 ? static_cast<int>(rng.uniform_int(1, op_count - 1)) : 1;
                auto props = query_properties(state_at(script, k));
                script.query = HistoricalQuery{k, rng.pick(props)};
                break;
            }
        }
        return script;
    }
    throw RetryExhausted("generate_script: no non-trivial " + std::string(to_string(family)) + " script after " +
                         std::to_string(options.retry_limit) + " attempts");
}

std::vector<StateSnapshot> make_distractors(const StateSnapshot& correct, const ScenarioScript& /*script*/, int k,
                                            Rng& rng) {
    if (k < 1) throw InvalidSpec("distractor count must be >= 1");
    std::vector<StateSnapshot> out;
    const int budget = 40 * k;
    for (int attempt = 0; attempt < budget && static_cast<int>(out.size()) < k; ++attempt) {
        StateSnapshot s = correct;
        const auto steps = rng.uniform_int(1, 2);
        for (std::int64_t i = 0; i < steps; ++i) s = longterm::apply(s, random_action(s, rng, nullptr));
        if (s == correct) continue;
        if (std::find(out.begin(), out.end(), s) != out.end()) continue;
        out.push_back(std::move(s));
    }
    if (static_cast<int>(out.size()) < k)
        throw GenerationError("could only build " + std::to_string(out.size()) + " of " + std::to_string(k) +
                              " distinct distractors");
    return out;
}

namespace {

std::string read_property(const StateSnapshot& state, const QueryProperty& p) {
    auto bad = [&]() -> std::string {
        throw Error("property '" + p.name + "' not defined for " + std::string(to_string(family_of(state))));
    };
    return std::visit(overloaded{
                          [&](const CardStacks& s) -> std::string {
                              if (p.name != "top_card" || p.target < 0 ||
                                  p.target >= static_cast<int>(s.stacks.size()))
                                  return bad();
                              const auto& st = s.stacks[static_cast<std::size_t>(p.target)];
                              return st.empty() ? "empty" : st.back();
                          },
                          [&](const ChipContainers& s) -> std::string {
                              if (p.name != "chip_count" || p.target < 0 ||
                                  p.target >= static_cast<int>(s.counts.size()))
                                  return bad();
                              return std::to_string(s.counts[static_cast<std::size_t>(p.target)]);
                          },
                          [&](const FileTree& s) -> std::string { return p.name == "cwd" ? s.cwd : bad(); },
                          [&](const SymbolRegister& s) -> std::string {
                              return p.name == "value" ? std::to_string(s.value) : bad();
                          },
                          [&](const ShellGrid& s) -> std::string {
                              if (p.name != "cell_object" || p.target < 0 ||
                                  p.target >= static_cast<int>(s.cells.size()))
                                  return bad();
                              return s.cells[static_cast<std::size_t>(p.target)];
                          },
                          [&](const SlidingPuzzle& s) -> std::string {
                              if (p.name != "blank_position") return bad();
                              const int b = blank_index(s);
                              return "row " + std::to_string(b / s.cols + 1) + ", column " +
                                     std::to_string(b % s.cols + 1);
                          },
                      },
                      state);
}

}  // namespace

std::vector<QueryProperty> query_properties(const StateSnapshot& state) {
    std::vector<QueryProperty> out;
    std::visit(overloaded{
                   [&](const CardStacks& s) {
                       for (int i = 0; i < static_cast<int>(s.stacks.size()); ++i) out.push_back({"top_card", i});
                   },
                   [&](const ChipContainers& s) {
                       for (int i = 0; i < static_cast<int>(s.counts.size()); ++i) out.push_back({"chip_count", i});
                   },
                   [&](const FileTree&) { out.push_back({"cwd", 0}); },
                   [&](const SymbolRegister&) { out.push_back({"value", 0}); },
                   [&](const ShellGrid& s) {
                       for (int i = 0; i < static_cast<int>(s.cells.size()); ++i) out.push_back({"cell_object", i});
                   },
                   [&](const SlidingPuzzle&) { out.push_back({"blank_position", 0}); },
               },
               state);
    return out;
}

std::string answer_historical_query(const ScenarioScript& script, int op_index, const QueryProperty& property) {
    const int n = static_cast<int>(script.operations.size());
    if (op_index < 0 || op_index > n)
        throw Error("op_index " + std::to_string(op_index) + " outside [0, " + std::to_string(n) + "]");
    if (property.name == "operation") {
        if (op_index == 0) throw Error("operation property needs op_index >= 1");
        return describe(script.operations[static_cast<std::size_t>(op_index - 1)].action);
    }
    return read_property(state_at(script, op_index), property);
}

std::vector<std::string> make_query_distractors(const ScenarioScript& script, int k, Rng& rng) {
    if (!script.query) throw InvalidSpec("script has no historical query");
    if (k < 1) throw InvalidSpec("distractor count must be >= 1");
    const auto& q = *script.query;
    const StateSnapshot base = state_at(script, q.op_index);
    const std::string correct = read_property(base, q.property);
    std::vector<std::string> out;
    const int budget = 60 * k;
    for (int attempt = 0; attempt < budget && static_cast<int>(out.size()) < k; ++attempt) {
        StateSnapshot s = base;
        const auto steps = rng.uniform_int(1, 2);
        for (std::int64_t i = 0; i < steps; ++i) s = longterm::apply(s, random_action(s, rng, nullptr));
        auto v = read_property(s, q.property);
        if (v == correct || std::find(out.begin(), out.end(), v) != out.end()) continue;
        out.push_back(std::move(v));
    }
    if (static_cast<int>(out.size()) < k)
        throw GenerationError("could only build " + std::to_string(out.size()) + " of " + std::to_string(k) +
                              " distinct property distractors");
    return out;
}

std::string canonical_answer(const ScenarioScript& script) {
    switch (script.question_mode) {
        case QuestionMode::forward_prediction: return render_state(script.final_state);
        case QuestionMode::retrodictive_inference: return render_state(script.initial);
        case QuestionMode::historical_query:
            if (!script.query) throw InvalidSpec("historical script without query");
            return answer_historical_query(script, script.query->op_index, script.query->property);
    }
    return {};
}

const StateSnapshot& hidden_state(const ScenarioScript& script) {
    return script.visible_state == Visibility::initial_only ? script.final_state : script.initial;
}

LongTermSample generate_longterm_sample(Family family, QuestionMode mode, Rng& rng, const ScriptOptions& options,
                                        int distractor_count) {
    for (int attempt = 0; attempt < options.retry_limit; ++attempt) {
        const int t = draw_op_count(rng, options.difficulty);
        ScenarioScript script = generate_script(family, mode, t, rng, options);
        try {
            LongTermSample out;
            out.answer = canonical_answer(script);
            if (mode == QuestionMode::historical_query) {
                out.distractors = make_query_distractors(script, distractor_count, rng);
            } else {
                const auto& correct = mode == QuestionMode::forward_prediction ? script.final_state : script.initial;
                for (auto& d : make_distractors(correct, script, distractor_count, rng))
                    out.distractors.push_back(render_state(d));
            }
            out.script = std::move(script);
            out.retries = attempt;
            return out;
        } catch (const GenerationError&) {
            continue;
        }
    }
    throw RetryExhausted("generate_longterm_sample: " + std::string(to_string(family)) + "/" +
                         std::string(to_string(mode)) + " exceeded " + std::to_string(options.retry_limit) +
                         " retries");
}

PhaseLayout phase_layout(const ScenarioScript& script, int fps) {
    PhaseLayout l;
    l.reveal_frames = static_cast<int>(std::lround(script.reveal_duration_s * fps));
    int f = l.reveal_frames;
    for (const auto& op : script.operations) {
        const int n = static_cast<int>(std::lround(op.duration_s * fps));
        l.op_start.push_back(f);
        l.op_frames.push_back(n);
        f += n;
    }
    l.final_start = f;
    l.total = f + l.reveal_frames;
    return l;
}

std::vector<EventRecord> timeline_events(const ScenarioScript& script, int fps) {
    const auto l = phase_layout(script, fps);
    std::vector<EventRecord> ev;
    ev.push_back(make_event(0, fps, EventKind::phase_boundary, -1, "initial_reveal"));
    ev.push_back(make_event(l.reveal_frames, fps, EventKind::phase_boundary, -1, "operation"));
    for (std::size_t i = 0; i < script.operations.size(); ++i) {
        const auto& op = script.operations[i];
        ev.push_back(make_event(l.op_start[i], fps, EventKind::operation_applied, op.op_index, describe(op.action)));
    }
    ev.push_back(make_event(l.final_start, fps, EventKind::phase_boundary, -1, "final_reveal"));
    sort_events(ev);
    return ev;
}

}  // namespace primvid::longterm

namespace primvid {

void validate_script(const ScenarioScript& script) {
    auto fail = [](const std::string& m) { throw InvalidSpec("ScenarioScript: " + m); };
    validate_state(script.initial);
    validate_state(script.final_state);
    if (family_of(script.initial) != script.family || family_of(script.final_state) != script.family)
        fail("state family mismatch");
    if (script.operations.empty()) fail("no operations");
    if (!(script.per_op_duration_s >= 0.5 && script.per_op_duration_s <= 1.0))
        fail("per_op_duration_s outside [0.5, 1.0]");
    if (!(script.reveal_duration_s > 0)) fail("reveal_duration_s must be > 0");
    for (std::size_t i = 0; i < script.operations.size(); ++i) {
        const auto& op = script.operations[i];
        if (op.op_index != static_cast<int>(i) + 1) fail("op indices must run 1..T");
        if (!(op.duration_s >= 0.5 && op.duration_s <= 1.0)) fail("operation duration outside [0.5, 1.0]");
        if (family_of(op.action) != script.family) fail("operation family mismatch");
    }
    if (longterm::replay(script.initial, script.operations) != script.final_state)
        fail("replaying operations does not reproduce the final state");
    if (script.visible_state == Visibility::final_only && script.question_mode == QuestionMode::forward_prediction)
        fail("final_only visibility requires a retrodictive or historical question");
    if (script.question_mode == QuestionMode::historical_query) {
        if (!script.query) fail("historical query missing target");
        const int t = static_cast<int>(script.operations.size());
        if (script.query->op_index < 0 || script.query->op_index > t) fail("query op_index out of range");
    } else if (script.query) {
        fail("query present for non-historical mode");
    }
}

}  // namespace primvid
