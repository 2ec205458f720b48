#include "primvid/metrics.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <regex>

#include "primvid/error.hpp"

namespace primvid {

namespace {

std::string lower(std::string_view s) {
    std::string out(s);
    for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

// Content of the last <answer>...</answer> span, if any.
std::optional<std::string> tagged_span(std::string_view text) {
    const std::string low = lower(text);
    const auto open = low.rfind("<answer>");
    if (open == std::string::npos) return std::nullopt;
    const auto start = open + 8;
    const auto close = low.find("</answer>", start);
    return std::string(text.substr(start, close == std::string::npos ? std::string_view::npos : close - start));
}

std::optional<std::string> extract_letter(const std::string& span) {
    static const std::regex kBare(R"(^\(?([A-Ja-j])\)?[.:)]?$)");
    std::smatch m;
    const std::string t = trim(span);
    if (std::regex_match(t, m, kBare))
        return std::string(1, static_cast<char>(std::toupper(static_cast<unsigned char>(m.str(1)[0]))));
    static const std::regex kKeyword(R"((?:[Aa]nswer|[Oo]ption|[Cc]hoice)(?:\s+is)?\s*:?\s*\(?([A-J])\)?(?![A-Za-z]))");
    static const std::regex kParen(R"(\(([A-J])\))");
    std::optional<std::string> best;
    std::ptrdiff_t best_pos = -1;
    for (const auto* re : {&kKeyword, &kParen})
        for (auto it = std::sregex_iterator(t.begin(), t.end(), *re); it != std::sregex_iterator(); ++it)
            if (it->position(1) > best_pos) {
                best_pos = it->position(1);
                best = it->str(1);
            }
    return best;
}

std::optional<std::string> extract_free(std::string_view output) {
    if (auto span = tagged_span(output)) {
        auto t = trim(*span);
        if (t.empty()) return std::nullopt;
        return t;
    }
    const std::string text(output);
    const std::string low = lower(text);
    std::size_t best = std::string::npos, len = 0;
    for (const char* key : {"answer is", "answer:"}) {
        const auto p = low.rfind(key);
        if (p != std::string::npos && (best == std::string::npos || p > best)) {
            best = p;
            len = std::char_traits<char>::length(key);
        }
    }
    if (best != std::string::npos) {
        auto rest = text.substr(best + len);
        rest = rest.substr(0, rest.find('\n'));
        auto t = trim(rest);
        if (!t.empty()) return t;
    }
    static const std::regex kNumber(R"([-+]?\d+(?:\.\d+)?)");
    std::optional<std::string> last;
    for (auto it = std::sregex_iterator(text.begin(), text.end(), kNumber); it != std::sregex_iterator(); ++it)
        last = it->str();
    return last;
}

double parse_time(const std::string& s) {
    const auto colon = s.find(':');
    if (colon == std::string::npos) return std::stod(s);
    return std::stod(s.substr(0, colon)) * 60.0 + std::stod(s.substr(colon + 1));
}

}  // namespace

std::string normalize_answer(std::string_view text) {
    std::string out;
    bool space = false;
    for (char c : trim(text)) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            space = true;
            continue;
        }
        if (space && !out.empty()) out += ' ';
        space = false;
        out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
    while (!out.empty() && (out.back() == '.' || out.back() == '!' || out.back() == '?')) out.pop_back();
    out = trim(out);
    static const std::regex kNumeric(R"(^[-+]?\d+(?:\.\d+)?$)");
    if (std::regex_match(out, kNumeric)) {
        const double v = std::stod(out);
        char buf[64];
        if (v == std::floor(v) && std::abs(v) < 1e15)
            std::snprintf(buf, sizeof buf, "%lld", static_cast<long long>(v));
        else
            std::snprintf(buf, sizeof buf, "%.12g", v);
        out = buf;
        if (out == "-0") out = "0";
    }
    return out;
}

std::optional<Interval> extract_interval(std::string_view output) {
    const std::string text = tagged_span(output).value_or(std::string(output));
    static const std::string N = R"((\d+:\d{2}(?:\.\d+)?|\d+(?:\.\d+)?))";
    static const std::string U = R"(\s*(?:s|secs?|seconds)?\s*)";
    static const std::regex kPatterns[] = {
        std::regex(R"([\[(]\s*)" + N + U + "," + U + N + U + R"([\])])", std::regex::icase),
        std::regex("from\\s+" + N + U + "(?:to|until|-)\\s*" + N, std::regex::icase),
        std::regex("between\\s+" + N + U + "and\\s+" + N, std::regex::icase),
        std::regex(N + U + "(?:-|to|\xE2\x80\x93)\\s*" + N, std::regex::icase),
    };
    std::optional<Interval> best;
    std::ptrdiff_t best_end = -1, best_start = 0;
    for (const auto& re : kPatterns)
        for (auto it = std::sregex_iterator(text.begin(), text.end(), re); it != std::sregex_iterator(); ++it) {
            const auto end = it->position(0) + it->length(0);
            const auto start = it->position(0);
            if (end > best_end || (end == best_end && start < best_start)) {
                best_end = end;
                best_start = start;
                best = Interval{parse_time(it->str(1)), parse_time(it->str(2))};
            }
        }
    return best;
}

std::optional<std::string> extract_answer(std::string_view output, AnswerKind kind) {
    switch (kind) {
        case AnswerKind::mcq_letter: return extract_letter(tagged_span(output).value_or(std::string(output)));
        case AnswerKind::free_text: {
            auto t = extract_free(output);
            if (!t) return std::nullopt;
            auto n = normalize_answer(*t);
            if (n.empty()) return std::nullopt;
            return n;
        }
        case AnswerKind::interval: {
            const auto iv = extract_interval(output);
            if (!iv) return std::nullopt;
            char buf[96];
            std::snprintf(buf, sizeof buf, "%.12g,%.12g", iv->start, iv->end);
            return std::string(buf);
        }
    }
    return std::nullopt;
}

double accuracy_reward(std::string_view output, const QASample& sample) {
    const std::string truth = normalize_answer(sample.answer);
    const auto text = extract_answer(output, AnswerKind::free_text);
    if (!sample.is_mcq()) return text && *text == truth ? 1.0 : 0.0;
    if (text)
        for (const auto& c : sample.choices)
            if (normalize_answer(c) == *text) return c == sample.answer ? 1.0 : 0.0;
    const auto letter = extract_answer(output, AnswerKind::mcq_letter);
    if (!letter || !sample.answer_index) return 0.0;
    return (*letter)[0] == choice_letter(*sample.answer_index) ? 1.0 : 0.0;
}

double interval_iou(Interval pred, Interval gt) {
    if (pred.end < pred.start || gt.end < gt.start) throw InvalidSpec("malformed interval: end before start");
    const double inter = std::max(0.0, std::min(pred.end, gt.end) - std::max(pred.start, gt.start));
    const double uni = (pred.end - pred.start) + (gt.end - gt.start) - inter;
    return uni > 0 ? inter / uni : 0.0;
}

double interval_iop(Interval pred, Interval gt) {
    if (pred.end < pred.start || gt.end < gt.start) throw InvalidSpec("malformed interval: end before start");
    const double len = pred.end - pred.start;
    if (len <= 0) return 0.0;
    const double inter = std::max(0.0, std::min(pred.end, gt.end) - std::max(pred.start, gt.start));
    return inter / len;
}

GroundingReport grounding_report(std::span<const std::pair<Interval, Interval>> pairs) {
    if (pairs.empty()) throw InvalidSpec("grounding_report needs at least one pair");
    GroundingReport r;
    r.count = static_cast<int>(pairs.size());
    std::vector<double> ious;
    ious.reserve(pairs.size());
    double iop_sum = 0.0;
    for (const auto& [pred, gt] : pairs) {
        ious.push_back(interval_iou(pred, gt));
        iop_sum += interval_iop(pred, gt);
    }
    const double n = static_cast<double>(pairs.size());
    auto recall = [&](double theta) {
        return static_cast<double>(std::count_if(ious.begin(), ious.end(), [&](double v) { return v >= theta; })) / n;
    };
    r.r_at_03 = recall(0.3);
    r.r_at_05 = recall(0.5);
    r.r_at_07 = recall(0.7);
    double sum = 0.0;
    for (double v : ious) sum += v;
    r.miou = sum / n;
    r.miop = iop_sum / n;
    return r;
}

}  // namespace primvid
