#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "primvid/model.hpp"
#include "primvid/state.hpp"

namespace primvid {

enum class Purpose { rl, cot };
std::string_view to_string(Purpose p);
Purpose purpose_from_string(std::string_view s);

/// Seed-range convention keeping CoT and RL data disjoint.
struct SeedRange {
    std::uint64_t lo;
    std::uint64_t hi;  // exclusive
    bool contains(std::uint64_t s) const { return s >= lo && s < hi; }
};
SeedRange seed_range_for(Purpose p);

struct Provenance {
    std::uint64_t seed = 0;
    std::string generator_version;
    Purpose purpose = Purpose::rl;
    std::string difficulty = "standard";
    std::string params;  // compact parameter summary
    friend bool operator==(const Provenance&, const Provenance&) = default;
};

/// One question-answer record. `target` is a task type for short-term
/// samples or a family name for long-term ones.
struct QASample {
    std::string id;
    std::string video_path;
    std::string metadata_path;
    std::string target;
    bool long_term = false;
    std::optional<QuestionMode> question_mode;
    std::string question;
    std::string answer;
    std::vector<std::string> choices;  // empty for free-form
    std::optional<int> answer_index;
    std::optional<std::string> cot;
    std::string template_id;
    Provenance provenance;

    bool is_mcq() const { return !choices.empty(); }
    friend bool operator==(const QASample&, const QASample&) = default;
};

/// Throws InvalidSpec if the choice/answer invariants fail.
void validate_sample(const QASample& s);

/// "A", "B", ... for a choice index.
char choice_letter(int index);

}  // namespace primvid
