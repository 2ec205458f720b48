#include "primvid/templates.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>

#include "primvid/error.hpp"
#include "primvid/serialize.hpp"

namespace primvid {

std::vector<std::string> placeholders(const std::string& text) {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < text.size(); ++i) {
        if (text[i] == '}') throw InvalidSpec("unbalanced '}' in template: " + text);
        if (text[i] != '{') continue;
        const auto close = text.find('}', i);
        if (close == std::string::npos) throw InvalidSpec("unbalanced '{' in template: " + text);
        const std::string name = text.substr(i + 1, close - i - 1);
        if (name.empty() || name.find('{') != std::string::npos) throw InvalidSpec("bad placeholder in template: " + text);
        out.push_back(name);
        i = close;
    }
    return out;
}

std::string fill(const std::string& text, const std::map<std::string, std::string>& values) {
    std::string out;
    std::size_t i = 0;
    while (i < text.size()) {
        const auto open = text.find('{', i);
        if (open == std::string::npos) {
            out += text.substr(i);
            break;
        }
        out += text.substr(i, open - i);
        const auto close = text.find('}', open);
        if (close == std::string::npos) throw InvalidSpec("unbalanced '{' in template: " + text);
        const std::string name = text.substr(open + 1, close - open - 1);
        auto it = values.find(name);
        if (it == values.end()) throw InvalidSpec("no value for template field '" + name + "'");
        out += it->second;
        i = close + 1;
    }
    return out;
}

const std::set<std::string>& allowed_fields(TaskType task) {
    static const std::set<std::string> one{"object"};
    static const std::set<std::string> two{"object_a", "object_b"};
    static const std::set<std::string> three{"object_a", "object_b", "object_c"};
    static const std::set<std::string> distance{"reference", "time"};
    switch (task) {
        case TaskType::speed_perception:
        case TaskType::relative_position: return two;
        case TaskType::velocity_comparison:
        case TaskType::event_ordering: return three;
        case TaskType::distance_estimation: return distance;
        default: return one;
    }
}

const std::set<std::string>& allowed_fields(QuestionMode mode) {
    static const std::set<std::string> none;
    static const std::set<std::string> historical{"step", "target"};
    return mode == QuestionMode::historical_query ? historical : none;
}

TemplateStore TemplateStore::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read templates " + path.string());
    TemplateStore store;
    std::string line;
    int n = 0;
    while (std::getline(in, line)) {
        ++n;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            const auto j = Json::parse(line);
            QuestionTemplate t;
            t.id = j.at("id").get<std::string>();
            t.target = j.at("target").get<std::string>();
            if (auto it = j.find("mode"); it != j.end() && !it->is_null())
                t.mode = question_mode_from_string(it->get<std::string>());
            t.text = j.at("text").get<std::string>();
            store.add(std::move(t));
        } catch (const Json::exception& e) {
            throw InvalidSpec(path.string() + ":" + std::to_string(n) + ": " + e.what());
        } catch (const InvalidSpec& e) {
            throw InvalidSpec(path.string() + ":" + std::to_string(n) + ": " + e.what());
        }
    }
    return store;
}

std::filesystem::path TemplateStore::default_path() {
    if (const char* env = std::getenv("PRIMVID_DATA_DIR")) return std::filesystem::path(env) / "templates.jsonl";
    return std::filesystem::path(PRIMVID_DATA_DIR) / "templates.jsonl";
}

TemplateStore TemplateStore::load_default() { return load(default_path()); }

void TemplateStore::add(QuestionTemplate t) {
    auto fail = [&](const std::string& m) { throw InvalidSpec("template '" + t.id + "': " + m); };
    if (t.id.empty()) fail("empty id");
    for (const auto& other : templates_)
        if (other.id == t.id) fail("duplicate id");
    t.fields = placeholders(t.text);
    const std::set<std::string>* allowed = nullptr;
    bool long_term = false;
    try {
        allowed = &allowed_fields(task_from_string(t.target));
    } catch (const InvalidSpec&) {
        family_from_string(t.target);  // throws for an unknown target
        long_term = true;
    }
    if (long_term) {
        if (!t.mode) fail("long-term templates need a question mode");
        allowed = &allowed_fields(*t.mode);
        if (std::any_of(t.text.begin(), t.text.end(), [](unsigned char c) { return std::isdigit(c); }))
            fail("long-term question text must not contain digits");
    } else if (t.mode) {
        fail("short-term templates take no question mode");
    }
    for (const auto& f : t.fields)
        if (!allowed->count(f)) fail("field '{" + f + "}' is not available for " + t.target);
    templates_.push_back(std::move(t));
}

std::vector<const QuestionTemplate*> TemplateStore::find(const std::string& target,
                                                          std::optional<QuestionMode> mode) const {
    std::vector<const QuestionTemplate*> out;
    for (const auto& t : templates_)
        if (t.target == target && t.mode == mode) out.push_back(&t);
    return out;
}

const QuestionTemplate& TemplateStore::by_id(const std::string& id) const {
    for (const auto& t : templates_)
        if (t.id == id) return t;
    throw InvalidSpec("no template '" + id + "'");
}

void TemplateStore::check_coverage(int min_per_target) const {
    std::vector<std::string> missing;
    for (auto task : kAllTaskTypes)
        if (static_cast<int>(find(std::string(to_string(task)), std::nullopt).size()) < min_per_target)
            missing.emplace_back(to_string(task));
    for (auto fam : kAllFamilies)
        for (auto mode : kAllQuestionModes)
            if (static_cast<int>(find(std::string(to_string(fam)), mode).size()) < min_per_target)
                missing.push_back(std::string(to_string(fam)) + "/" + std::string(to_string(mode)));
    if (!missing.empty()) {
        std::string msg = "fewer than " + std::to_string(min_per_target) + " templates for:";
        for (const auto& m : missing) msg += " " + m;
        throw InvalidSpec(msg);
    }
}

namespace {

const QuestionTemplate& pick_template(const TemplateStore& store, const std::string& target,
                                      std::optional<QuestionMode> mode, Rng& rng) {
    const auto options = store.find(target, mode);
    if (options.empty()) throw InvalidSpec("no templates for " + target);
    return *options[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(options.size()) - 1))];
}

// The caller assigns the id, so the invariants are checked on a labelled copy.
void check_choices(const QASample& s, const std::string& label) {
    QASample copy = s;
    copy.id = label;
    validate_sample(copy);
}

void set_choices(QASample& s, std::vector<std::string> choices, Rng& rng) {
    rng.shuffle(choices);
    s.choices = std::move(choices);
    const auto it = std::find(s.choices.begin(), s.choices.end(), s.answer);
    s.answer_index = static_cast<int>(it - s.choices.begin());
}

}  // namespace

QASample instantiate_shortterm(const TemplateStore& store, const SceneSpec& spec, const shortterm::GroundTruth& truth,
                               Rng& rng, const InstantiateOptions& options) {
    const std::string target(to_string(spec.task_type));
    const auto& t = pick_template(store, target, std::nullopt, rng);
    QASample s;
    s.target = target;
    s.long_term = false;
    s.template_id = t.id;
    s.question = fill(t.text, truth.fields);
    s.answer = truth.answer;
    const bool mcq = !truth.numeric || rng.bernoulli(options.mcq_fraction);
    if (mcq) {
        std::vector<std::string> pool;
        for (const auto& a : truth.answer_space)
            if (a != truth.answer) pool.push_back(a);
        rng.shuffle(pool);
        const auto k = std::min(pool.size(), static_cast<std::size_t>(std::max(1, options.max_choices - 1)));
        std::vector<std::string> choices(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(k));
        choices.push_back(truth.answer);
        set_choices(s, std::move(choices), rng);
    }
    check_choices(s, t.id);
    return s;
}

QASample instantiate_longterm(const TemplateStore& store, const longterm::LongTermSample& sample, Rng& rng) {
    const auto& script = sample.script;
    const std::string target(to_string(script.family));
    const auto& t = pick_template(store, target, script.question_mode, rng);
    std::map<std::string, std::string> values;
    if (script.query) {
        values["step"] = ordinal_word(script.query->op_index);
        values["target"] = index_label(script.query->property.target);
    }
    QASample s;
    s.target = target;
    s.long_term = true;
    s.question_mode = script.question_mode;
    s.template_id = t.id;
    s.question = fill(t.text, values);
    s.answer = sample.answer;
    std::vector<std::string> choices = sample.distractors;
    choices.push_back(sample.answer);
    set_choices(s, std::move(choices), rng);
    check_choices(s, t.id);
    return s;
}

std::string format_prompt(const QASample& s) {
    std::string out = s.question;
    if (s.is_mcq()) {
        out += "\nOptions:";
        for (std::size_t i = 0; i < s.choices.size(); ++i)
            out += std::string("\n") + choice_letter(static_cast<int>(i)) + ". " + s.choices[i];
        out += "\nAnswer with the option letter inside <answer></answer> tags.";
    } else {
        out += "\nAnswer with a single number inside <answer></answer> tags.";
    }
    return out;
}

}  // namespace primvid
