#pragma once

// Chain-of-thought augmentation: generate, verify, reflect, polish.

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "primvid/exporter.hpp"
#include "primvid/qa.hpp"
#include "primvid/serialize.hpp"

namespace primvid::cot {

enum class Stage { generate, verify, reflect, polish };
std::string_view to_string(Stage s);

struct ChatRequest {
    Stage stage = Stage::generate;
    std::string prompt;
    std::optional<std::string> video_path;  // path mode
    std::vector<std::string> frame_paths;   // frame-attachment mode
    /// Structured copy of the sample and its sidecar. Remote backends ignore
    /// it; mocks read it to stay deterministic.
    Json context;
};

class ChatBackend {
public:
    virtual ~ChatBackend() = default;
    /// Returns the model's text. Throws BackendError on transport failure.
    virtual std::string send(const ChatRequest& request) = 0;
    virtual std::string name() const = 0;
};

/// Backend driven by a function; the building block for the mocks.
class FunctionBackend : public ChatBackend {
public:
    using Fn = std::function<std::string(const ChatRequest&)>;
    FunctionBackend(std::string name, Fn fn) : name_(std::move(name)), fn_(std::move(fn)) {}
    std::string send(const ChatRequest& r) override { return fn_(r); }
    std::string name() const override { return name_; }

private:
    std::string name_;
    Fn fn_;
};

/// Mock names accepted by make_mock:
///   echo-timeline   generator narrating every event, ending in the answer
///   wrong-answer    generator whose final answer is never correct
///   empty           generator returning ""
///   always-pass     judge approving everything; polisher returning its input
///   always-fail     judge rejecting everything with feedback
///   strict-judge    judge cross-checking cited timestamps against the timeline
///   flip-polisher   polisher that swaps the final answer for a wrong choice
///   unreachable     any stage; throws BackendError
std::unique_ptr<ChatBackend> make_mock(const std::string& name);

struct HttpBackendConfig {
    std::string endpoint = "http://localhost:8000";  // scheme://host[:port]
    std::string path = "/v1/chat/completions";
    std::string model;
    std::string api_key_env = "PRIMVID_API_KEY";
    int timeout_s = 120;
    int max_tokens = 2048;
    double temperature = 0.7;
};
void to_json(Json& j, const HttpBackendConfig& c);
void from_json(const Json& j, HttpBackendConfig& c);

/// OpenAI-compatible chat-completions client.
std::unique_ptr<ChatBackend> make_http_backend(const HttpBackendConfig& cfg);

/// Prompt templates with {field} placeholders, one file per stage.
struct PromptSet {
    std::string generate;
    std::string verify;
    std::string reflect;
    std::string polish;
    static PromptSet load(const std::filesystem::path& dir);
    static PromptSet load_default();
};

/// One line per event: "[MM:SS.mmm] kind subject: payload".
std::string format_timeline(const std::vector<EventRecord>& events, int fps);

enum class VideoMode { path, frames };

struct PipelineOptions {
    int max_iters = 5;
    int concurrency = 1;
    int backend_retries = 2;  // extra attempts per backend call
    VideoMode video_mode = VideoMode::path;
    int frame_stride = 15;
    std::filesystem::path dataset_root;  // resolves relative video paths
};

struct CotInput {
    QASample sample;
    Sidecar sidecar;
};

struct CotIteration {
    std::string candidate;
    std::string verdict;  // "pass", "fail", "inconclusive"
    std::string feedback;
    bool judge_called = false;
    friend bool operator==(const CotIteration&, const CotIteration&) = default;
};

enum class CotStatus { verified, filtered, backend_error };
std::string_view to_string(CotStatus s);
CotStatus cot_status_from_string(std::string_view s);

struct CotRecord {
    std::string sample_id;
    std::vector<CotIteration> iterations;
    CotStatus final_status = CotStatus::filtered;
    std::optional<std::string> polished_cot;  // present iff verified
    bool polish_rejected = false;             // polisher changed the answer
    std::string error;                        // backend_error detail
    friend bool operator==(const CotRecord&, const CotRecord&) = default;
};
Json record_to_json(const CotRecord& r);
CotRecord record_from_json(const Json& j);

/// Candidate reasoning for one sample (stage 1 or, with feedback, stage 3).
std::string generate_cot(const CotInput& in, ChatBackend& backend, const PromptSet& prompts,
                         const PipelineOptions& opts, const std::optional<CotIteration>& previous = std::nullopt);

/// Local answer pre-check, then the judge. Judge transport failures yield
/// an "inconclusive" verdict after the retry policy is spent.
CotIteration verify_cot(const std::string& candidate, const CotInput& in, ChatBackend& judge, const PromptSet& prompts,
                        const PipelineOptions& opts);

/// Full loop for one sample.
CotRecord process_sample(const CotInput& in, ChatBackend& gen, ChatBackend& judge, ChatBackend& polish,
                         const PromptSet& prompts, const PipelineOptions& opts);

/// Runs samples with bounded concurrency; results are in input order.
/// `on_record` is called (serialized) as each record completes.
std::vector<CotRecord> run_pipeline(const std::vector<CotInput>& inputs, ChatBackend& gen, ChatBackend& judge,
                                    ChatBackend& polish, const PromptSet& prompts, const PipelineOptions& opts,
                                    const std::function<void(const CotRecord&)>& on_record = {});

struct PipelineStats {
    int total = 0;
    int verified = 0;
    int filtered = 0;
    int backend_errors = 0;
    int polish_rejections = 0;
    double verified_rate = 0.0;
    double filter_rate = 0.0;
    double mean_iterations = 0.0;
};
PipelineStats summarize(const std::vector<CotRecord>& records);
Json stats_to_json(const PipelineStats& s);

}  // namespace primvid::cot
