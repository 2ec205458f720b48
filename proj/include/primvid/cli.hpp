#pragma once

// Batch workflows behind the command-line tool: dataset generation, CoT
// augmentation, validation, statistics and scoring.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "primvid/cot.hpp"
#include "primvid/exporter.hpp"
#include "primvid/metrics.hpp"
#include "primvid/qa.hpp"
#include "primvid/render.hpp"
#include "primvid/serialize.hpp"
#include "primvid/templates.hpp"

namespace primvid::cli {

namespace fs = std::filesystem;

// ---- generate ----------------------------------------------------------------

struct GenerateConfig {
    Purpose purpose = Purpose::rl;
    /// First seed; defaults to the start of the purpose's seed range.
    std::optional<std::uint64_t> seed_base;
    Difficulty difficulty = Difficulty::standard;
    std::map<TaskType, int> shortterm;                          // samples per task type
    std::map<std::pair<Family, QuestionMode>, int> longterm;    // samples per family x mode
    render::RenderConfig render;
    EncoderConfig encoder;
    InstantiateOptions qa;
    int distractors = 3;
    int retry_limit = 20;
    int workers = 0;  // 0: hardware concurrency

    std::uint64_t first_seed() const;
    int total() const;
};

/// Accepted layout:
///   {"purpose": "rl", "seed_base": 0, "difficulty": "standard", "workers": 4,
///    "shortterm": {"collision_counting": 10, ...} | {"all": 10},
///    "longterm": {"shell_game": {"forward_prediction": 2, ...} | 5, ...} | {"all": 5},
///    "render": {...}, "encoder": {...}, "qa": {"mcq_fraction": 0.7, "max_choices": 4},
///    "distractors": 3, "retry_limit": 20}
/// Throws InvalidSpec naming the offending key.
GenerateConfig config_from_json(const Json& j);
Json config_to_json(const GenerateConfig& c);
GenerateConfig load_config(const fs::path& path);

/// One unit of work: sample `index` of the run, generated from `seed`.
struct Job {
    int index = 0;
    std::uint64_t seed = 0;
    std::optional<TaskType> task;
    Family family = Family::shell_game;
    QuestionMode mode = QuestionMode::forward_prediction;
    std::string target() const;
    std::string sample_id() const;
};

/// Short-term tasks in declaration order, then families x modes; seeds are
/// consecutive from first_seed().
std::vector<Job> plan_jobs(const GenerateConfig& c);

/// Everything derived from one seed, before anything touches the disk.
struct BuiltSample {
    QASample sample;
    Sidecar sidecar;
    render::FramePlan plan;
    int retries = 0;
};

/// Deterministic in (job, config). Video paths are "videos/<id>.<ext>".
BuiltSample build_sample(const Job& job, const GenerateConfig& c, const TemplateStore& templates);

struct GenerateFailure {
    int index = 0;
    std::uint64_t seed = 0;
    std::string target;
    std::string error;
};

struct GenerateSummary {
    int requested = 0;
    int produced = 0;
    std::map<std::string, int> per_target;
    long total_retries = 0;
    int max_retries = 0;
    double wall_time_s = 0.0;
    std::vector<GenerateFailure> failures;
    ManifestWriteReport manifest;
    bool ok() const { return failures.empty() && produced == requested; }
};
Json summary_to_json(const GenerateSummary& s);

/// Writes <out>/videos/*, <out>/manifest.jsonl, <out>/config.json and
/// <out>/summary.json. Progress lines go to `progress` when non-null.
GenerateSummary cmd_generate(const GenerateConfig& c, const fs::path& out_dir, std::ostream* progress = nullptr);

// ---- augment-cot -------------------------------------------------------------

/// Backend choice for one stage: {"mock": "<name>"} or {"http": {...}}.
struct BackendSpec {
    std::string mock;
    std::optional<cot::HttpBackendConfig> http;
};

struct CotConfig {
    BackendSpec generator{"echo-timeline", std::nullopt};
    BackendSpec judge{"strict-judge", std::nullopt};
    BackendSpec polisher{"always-pass", std::nullopt};
    cot::PipelineOptions pipeline;
    std::optional<fs::path> prompts_dir;
};
CotConfig cot_config_from_json(const Json& j);
CotConfig load_cot_config(const fs::path& path);
std::unique_ptr<cot::ChatBackend> make_backend(const BackendSpec& spec);

struct AugmentResult {
    cot::PipelineStats stats;
    int skipped = 0;  // already completed in an earlier run
    int processed = 0;
};

/// Reads the manifest and its sidecars, runs the pipeline on samples not yet
/// recorded in <out>/cot_records.jsonl, and rewrites <out>/manifest_cot.jsonl
/// (verified samples with their polished CoT) and <out>/cot_stats.json.
/// Records with a backend error are retried on the next run.
AugmentResult cmd_augment_cot(const fs::path& manifest, const CotConfig& cfg, const fs::path& out_dir,
                              std::ostream* progress = nullptr);

// ---- validate ----------------------------------------------------------------

struct Violation {
    std::string sample_id;
    std::string rule;
    std::string detail;
};

struct ValidateOptions {
    bool probe_videos = true;
    bool replay = true;
    /// Manifests whose seeds must not overlap with this one.
    std::vector<fs::path> disjoint_from;
    EncoderConfig encoder;
};

struct ValidateReport {
    int records = 0;
    std::vector<Violation> violations;
    bool clean() const { return violations.empty(); }
    int count(const std::string& rule) const;
};
Json report_to_json(const ValidateReport& r);

/// Rules: schema, duplicate-id, choices, missing-video, missing-sidecar,
/// sidecar-mismatch, replay-mismatch, video-integrity, seed-range, seed-overlap.
ValidateReport cmd_validate(const fs::path& manifest, const ValidateOptions& opts = {});

// ---- stats / score -----------------------------------------------------------

Json cmd_stats(const fs::path& manifest);

/// One prediction: model output text and/or a predicted interval, with an
/// optional ground-truth interval for grounding evaluation.
struct Prediction {
    std::string sample_id;
    std::optional<std::string> output;
    std::optional<Interval> interval;
    std::optional<Interval> gt_interval;
};

/// JSONL of {"sample_id", "output"?, "interval"?: [s, e], "gt_interval"?: [s, e]},
/// or a single JSON object mapping sample_id to output text.
std::vector<Prediction> read_predictions(const fs::path& path);

/// Accuracy over predictions with output text (overall and per target),
/// missing/unknown ids, and a grounding report when any prediction carries a
/// ground-truth interval.
Json cmd_score(const fs::path& predictions, const fs::path& manifest);

}  // namespace primvid::cli
