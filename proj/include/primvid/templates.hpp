#pragma once

// Question templates and QA-sample instantiation.

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "primvid/longterm.hpp"
#include "primvid/qa.hpp"
#include "primvid/rng.hpp"
#include "primvid/shortterm.hpp"

namespace primvid {

struct QuestionTemplate {
    std::string id;
    std::string target;                // task type or family name
    std::optional<QuestionMode> mode;  // long-term only
    std::string text;                  // with {field} placeholders
    std::vector<std::string> fields;   // placeholders in order of appearance
};

/// Placeholder names in `text`; throws InvalidSpec on an unbalanced brace.
std::vector<std::string> placeholders(const std::string& text);
/// Replaces every {field}; throws InvalidSpec for a missing value.
std::string fill(const std::string& text, const std::map<std::string, std::string>& values);

/// Fields a template may reference for a short-term task or long-term mode.
const std::set<std::string>& allowed_fields(TaskType task);
const std::set<std::string>& allowed_fields(QuestionMode mode);

class TemplateStore {
public:
    /// Parses JSONL; validates every template's placeholders against the
    /// fields available for its target. Throws InvalidSpec naming the
    /// template on any problem.
    static TemplateStore load(const std::filesystem::path& path);
    static TemplateStore load_default();
    static std::filesystem::path default_path();

    void add(QuestionTemplate t);
    std::vector<const QuestionTemplate*> find(const std::string& target, std::optional<QuestionMode> mode) const;
    const QuestionTemplate& by_id(const std::string& id) const;
    std::size_t size() const { return templates_.size(); }

    /// Throws InvalidSpec unless every task type and every family x mode
    /// has at least `min_per_target` templates.
    void check_coverage(int min_per_target = 2) const;

private:
    std::vector<QuestionTemplate> templates_;
};

struct InstantiateOptions {
    double mcq_fraction = 0.7;  // for counting tasks; others are always MCQ
    int max_choices = 4;
};

/// Question, choices and answer for a short-term sample. The id, paths and
/// provenance are left for the caller.
QASample instantiate_shortterm(const TemplateStore& store, const SceneSpec& spec, const shortterm::GroundTruth& truth,
                               Rng& rng, const InstantiateOptions& options = {});
QASample instantiate_longterm(const TemplateStore& store, const longterm::LongTermSample& sample, Rng& rng);

/// Question text followed by lettered options (for MCQ) and an answer-format
/// instruction, as given to a model.
std::string format_prompt(const QASample& s);

}  // namespace primvid
