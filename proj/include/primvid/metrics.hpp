#pragma once

// Answer extraction, accuracy reward, and temporal-grounding metrics.

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>

#include "primvid/qa.hpp"

namespace primvid {

enum class AnswerKind { mcq_letter, free_text, interval };

struct Interval {
    double start = 0.0;
    double end = 0.0;
    friend bool operator==(const Interval&, const Interval&) = default;
};

/// Lowercase, trim, collapse whitespace, drop trailing sentence punctuation,
/// and canonicalize a purely numeric answer ("03", "3.0", "+3" -> "3").
std::string normalize_answer(std::string_view text);

/// Final answer from a tagged <answer> span when present, otherwise the last
/// matching pattern in the text. Returns nullopt when nothing parses.
/// For mcq_letter the result is an uppercase letter; for interval it is
/// "start,end" (see extract_interval for the numeric form).
std::optional<std::string> extract_answer(std::string_view output, AnswerKind kind);
std::optional<Interval> extract_interval(std::string_view output);

/// 1 iff the extracted answer matches the sample's canonical answer. MCQ
/// samples accept either the option letter or the option text.
double accuracy_reward(std::string_view output, const QASample& sample);

/// |pred ∩ gt| / |pred ∪ gt|, 0 for a zero-length union. Throws InvalidSpec
/// when end < start.
double interval_iou(Interval pred, Interval gt);
/// |pred ∩ gt| / |pred|, 0 for a zero-length prediction.
double interval_iop(Interval pred, Interval gt);

struct GroundingReport {
    double r_at_03 = 0.0;
    double r_at_05 = 0.0;
    double r_at_07 = 0.0;
    double miou = 0.0;
    double miop = 0.0;
    int count = 0;
};

/// Recall at IoU >= 0.3 / 0.5 / 0.7 (inclusive), mean IoU and mean IoP.
/// Throws InvalidSpec for an empty list.
GroundingReport grounding_report(std::span<const std::pair<Interval, Interval>> pairs);

}  // namespace primvid
