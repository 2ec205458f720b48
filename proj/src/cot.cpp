#include "primvid/cot.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <fstream>
#include <mutex>
#include <regex>
#include <set>
#include <sstream>
#include <thread>

#include "primvid/error.hpp"
#include "primvid/metrics.hpp"
#include "primvid/templates.hpp"

namespace primvid::cot {

namespace fs = std::filesystem;

std::string_view to_string(Stage s) {
    switch (s) {
        case Stage::generate: return "generate";
        case Stage::verify: return "verify";
        case Stage::reflect: return "reflect";
        case Stage::polish: return "polish";
    }
    return "?";
}

std::string_view to_string(CotStatus s) {
    switch (s) {
        case CotStatus::verified: return "verified";
        case CotStatus::filtered: return "filtered";
        case CotStatus::backend_error: return "backend_error";
    }
    return "?";
}

CotStatus cot_status_from_string(std::string_view s) {
    if (s == "verified") return CotStatus::verified;
    if (s == "filtered") return CotStatus::filtered;
    if (s == "backend_error") return CotStatus::backend_error;
    throw InvalidSpec("unknown CoT status '" + std::string(s) + "'");
}

std::string format_timeline(const std::vector<EventRecord>& events, int fps) {
    std::string out;
    for (const auto& e : events) {
        out += "[" + format_timestamp(e.frame_index, fps) + "] " + std::string(to_string(e.kind));
        if (e.subject >= 0) out += " " + std::to_string(e.subject);
        if (!e.payload.empty()) out += ": " + e.payload;
        out += "\n";
    }
    return out;
}

// ---- mocks -------------------------------------------------------------------

namespace {

std::string tag_answer(const std::string& a) { return "<answer>" + a + "</answer>"; }

std::string wrong_answer(const Json& ctx) {
    const auto answer = ctx.at("answer").get<std::string>();
    for (const auto& c : ctx.at("choices"))
        if (c.get<std::string>() != answer) return c.get<std::string>();
    try {
        return std::to_string(std::stoll(answer) + 1);
    } catch (const std::exception&) {
        return answer + " (not)";
    }
}

std::string echo_timeline(const ChatRequest& r) {
    const auto& ctx = r.context;
    std::string out = "I watch the video from the beginning.\n";
    for (const auto& e : ctx.at("events")) {
        out += "At " + e.at("timestamp").get<std::string>() + ", I see " + e.at("kind").get<std::string>();
        if (e.at("subject").get<int>() >= 0) out += " for " + std::to_string(e.at("subject").get<int>());
        if (!e.at("payload").get<std::string>().empty()) out += " (" + e.at("payload").get<std::string>() + ")";
        out += ".\n";
    }
    out += "Putting this together, the answer is " + tag_answer(ctx.at("answer").get<std::string>()) + ".";
    return out;
}

// Cited timestamps must coincide with logged events.
std::string strict_judge(const ChatRequest& r) {
    const auto& ctx = r.context;
    std::set<std::string> full, coarse;
    for (const auto& e : ctx.at("events")) {
        const auto ts = e.at("timestamp").get<std::string>();
        full.insert(ts);
        coarse.insert(ts.substr(0, 5));
    }
    const auto candidate = ctx.at("candidate").get<std::string>();
    static const std::regex kStamp(R"((\d{2}:\d{2})(\.\d{3})?)");
    for (auto it = std::sregex_iterator(candidate.begin(), candidate.end(), kStamp); it != std::sregex_iterator(); ++it) {
        const std::string cited = it->str(0);
        const bool ok = (*it)[2].matched ? full.count(cited) > 0 : coarse.count(cited) > 0;
        if (!ok) return "FAIL: the reasoning cites an event at " + cited + " but the timeline has no event at that time";
    }
    return "PASS";
}

std::string flip_polish(const ChatRequest& r) {
    const auto candidate = r.context.at("candidate").get<std::string>();
    const auto open = candidate.rfind("<answer>");
    const auto close = candidate.rfind("</answer>");
    const std::string flipped = tag_answer(wrong_answer(r.context));
    if (open == std::string::npos || close == std::string::npos || close < open) return candidate + "\n" + flipped;
    return candidate.substr(0, open) + flipped + candidate.substr(close + 9);
}

}  // namespace

std::unique_ptr<ChatBackend> make_mock(const std::string& name) {
    using F = FunctionBackend;
    if (name == "echo-timeline") return std::make_unique<F>(name, echo_timeline);
    if (name == "wrong-answer")
        return std::make_unique<F>(name, [](const ChatRequest& r) {
            return "I followed the motion closely. The answer is " + tag_answer(wrong_answer(r.context)) + ".";
        });
    if (name == "empty") return std::make_unique<F>(name, [](const ChatRequest&) { return std::string(); });
    if (name == "always-pass")
        return std::make_unique<F>(name, [](const ChatRequest& r) -> std::string {
            if (r.stage == Stage::polish) return r.context.at("candidate").get<std::string>();
            if (r.stage == Stage::verify) return "PASS";
            return echo_timeline(r);
        });
    if (name == "always-fail")
        return std::make_unique<F>(name, [](const ChatRequest&) {
            return std::string("FAIL: the reasoning does not follow the event sequence");
        });
    if (name == "strict-judge") return std::make_unique<F>(name, strict_judge);
    if (name == "flip-polisher") return std::make_unique<F>(name, flip_polish);
    if (name == "unreachable")
        return std::make_unique<F>(name, [](const ChatRequest&) -> std::string {
            throw BackendError("mock backend unreachable");
        });
    throw InvalidSpec("unknown mock backend '" + name + "'");
}

// ---- prompts -----------------------------------------------------------------

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    if (!in) throw IoError("cannot read prompt template " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

PromptSet PromptSet::load(const fs::path& dir) {
    PromptSet p{slurp(dir / "generate.txt"), slurp(dir / "verify.txt"), slurp(dir / "reflect.txt"),
                slurp(dir / "polish.txt")};
    static const std::set<std::string> allowed{"video", "question", "answer", "timeline", "candidate", "feedback"};
    for (const auto* t : {&p.generate, &p.verify, &p.reflect, &p.polish})
        for (const auto& f : placeholders(*t))
            if (!allowed.count(f)) throw InvalidSpec("prompt template in " + dir.string() + " uses unknown field {" + f + "}");
    return p;
}

PromptSet PromptSet::load_default() {
    if (const char* env = std::getenv("PRIMVID_DATA_DIR")) return load(fs::path(env) / "prompts");
    return load(fs::path(PRIMVID_DATA_DIR) / "prompts");
}

// ---- pipeline ----------------------------------------------------------------

namespace {

Json make_context(const CotInput& in) {
    Json events = Json::array();
    for (const auto& e : in.sidecar.events) events.push_back(event_to_json(e, in.sidecar.video.fps));
    return {{"sample_id", in.sample.id},
            {"question", in.sample.question},
            {"answer", in.sample.answer},
            {"choices", in.sample.choices},
            {"fps", in.sidecar.video.fps},
            {"events", std::move(events)}};
}

std::map<std::string, std::string> prompt_fields(const CotInput& in, const PipelineOptions& opts) {
    return {{"video", (opts.dataset_root / in.sample.video_path).string()},
            {"question", format_prompt(in.sample)},
            {"answer", in.sample.is_mcq() ? std::string(1, choice_letter(*in.sample.answer_index)) + ". " + in.sample.answer
                                          : in.sample.answer},
            {"timeline", format_timeline(in.sidecar.events, in.sidecar.video.fps)}};
}

void attach_video(ChatRequest& req, const CotInput& in, const PipelineOptions& opts) {
    const fs::path video = opts.dataset_root / in.sample.video_path;
    if (opts.video_mode == VideoMode::frames && fs::is_directory(video)) {
        const int stride = std::max(1, opts.frame_stride);
        for (int i = 0; i < in.sidecar.video.frame_count; i += stride) {
            char name[32];
            std::snprintf(name, sizeof name, "frame_%05d.png", i);
            req.frame_paths.push_back((video / name).string());
        }
    } else {
        req.video_path = video.string();
    }
}

std::string send_with_retries(ChatBackend& backend, const ChatRequest& req, int retries) {
    for (int attempt = 0;; ++attempt) {
        try {
            return backend.send(req);
        } catch (const BackendError&) {
            if (attempt >= retries) throw;
        }
    }
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    return s.substr(b, s.find_last_not_of(" \t\r\n") - b + 1);
}

}  // namespace

std::string generate_cot(const CotInput& in, ChatBackend& backend, const PromptSet& prompts, const PipelineOptions& opts,
                         const std::optional<CotIteration>& previous) {
    auto fields = prompt_fields(in, opts);
    ChatRequest req;
    req.context = make_context(in);
    if (previous) {
        fields["candidate"] = previous->candidate;
        fields["feedback"] = previous->feedback;
        req.stage = Stage::reflect;
        req.prompt = fill(prompts.reflect, fields);
        req.context["previous"] = previous->candidate;
        req.context["feedback"] = previous->feedback;
    } else {
        req.stage = Stage::generate;
        req.prompt = fill(prompts.generate, fields);
    }
    attach_video(req, in, opts);
    return send_with_retries(backend, req, opts.backend_retries);
}

CotIteration verify_cot(const std::string& candidate, const CotInput& in, ChatBackend& judge, const PromptSet& prompts,
                        const PipelineOptions& opts) {
    CotIteration it;
    it.candidate = candidate;
    if (trim(candidate).empty()) {
        it.verdict = "fail";
        it.feedback = "empty output";
        return it;
    }
    if (accuracy_reward(candidate, in.sample) != 1.0) {
        it.verdict = "fail";
        const auto got = extract_answer(candidate, AnswerKind::free_text);
        it.feedback = "the final answer (" + got.value_or("none") + ") does not match the ground truth (" +
                      in.sample.answer + "); end with the correct answer inside <answer></answer> tags";
        return it;
    }
    auto fields = prompt_fields(in, opts);
    fields["candidate"] = candidate;
    ChatRequest req;
    req.stage = Stage::verify;
    req.prompt = fill(prompts.verify, fields);
    req.context = make_context(in);
    req.context["candidate"] = candidate;
    it.judge_called = true;
    std::string reply;
    try {
        reply = trim(send_with_retries(judge, req, opts.backend_retries));
    } catch (const BackendError& e) {
        it.verdict = "inconclusive";
        it.feedback = std::string("judge unavailable: ") + e.what();
        return it;
    }
    std::string head = reply.substr(0, 4);
    for (auto& c : head) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    if (head == "PASS") {
        it.verdict = "pass";
    } else if (head == "FAIL") {
        it.verdict = "fail";
        auto rest = trim(reply.substr(4));
        if (!rest.empty() && rest[0] == ':') rest = trim(rest.substr(1));
        it.feedback = rest.empty() ? "rejected by judge" : rest;
    } else {
        it.verdict = "inconclusive";
        it.feedback = "unparseable judge verdict: " + reply.substr(0, 200);
    }
    return it;
}

CotRecord process_sample(const CotInput& in, ChatBackend& gen, ChatBackend& judge, ChatBackend& polish,
                         const PromptSet& prompts, const PipelineOptions& opts) {
    if (opts.max_iters < 1) throw InvalidSpec("max_iters must be >= 1");
    CotRecord rec;
    rec.sample_id = in.sample.id;
    std::optional<CotIteration> previous;
    for (int i = 0; i < opts.max_iters; ++i) {
        std::string candidate;
        try {
            candidate = generate_cot(in, gen, prompts, opts, previous);
        } catch (const BackendError& e) {
            rec.final_status = CotStatus::backend_error;
            rec.error = e.what();
            return rec;
        }
        auto it = verify_cot(candidate, in, judge, prompts, opts);
        rec.iterations.push_back(it);
        if (it.verdict == "pass") {
            rec.final_status = CotStatus::verified;
            break;
        }
        previous = std::move(it);
    }
    if (rec.final_status != CotStatus::verified) {
        rec.final_status = CotStatus::filtered;
        return rec;
    }

    const std::string& verified = rec.iterations.back().candidate;
    auto fields = prompt_fields(in, opts);
    fields["candidate"] = verified;
    ChatRequest req;
    req.stage = Stage::polish;
    req.prompt = fill(prompts.polish, fields);
    req.context = make_context(in);
    req.context["candidate"] = verified;
    std::string polished;
    try {
        polished = send_with_retries(polish, req, opts.backend_retries);
    } catch (const BackendError& e) {
        rec.error = std::string("polish skipped: ") + e.what();
    }
    if (!trim(polished).empty() && accuracy_reward(polished, in.sample) == 1.0) {
        rec.polished_cot = polished;
    } else {
        rec.polish_rejected = rec.error.empty();
        rec.polished_cot = verified;
    }
    return rec;
}

std::vector<CotRecord> run_pipeline(const std::vector<CotInput>& inputs, ChatBackend& gen, ChatBackend& judge,
                                    ChatBackend& polish, const PromptSet& prompts, const PipelineOptions& opts,
                                    const std::function<void(const CotRecord&)>& on_record) {
    if (opts.max_iters < 1) throw InvalidSpec("max_iters must be >= 1");
    std::vector<CotRecord> out(inputs.size());
    std::atomic<std::size_t> next{0};
    std::mutex mu;
    auto worker = [&] {
        for (std::size_t i = next++; i < inputs.size(); i = next++) {
            out[i] = process_sample(inputs[i], gen, judge, polish, prompts, opts);
            if (on_record) {
                std::lock_guard lock(mu);
                on_record(out[i]);
            }
        }
    };
    const int n = std::max(1, std::min<int>(opts.concurrency, static_cast<int>(inputs.size())));
    if (n == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < n; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    return out;
}

PipelineStats summarize(const std::vector<CotRecord>& records) {
    PipelineStats s;
    s.total = static_cast<int>(records.size());
    long iters = 0;
    for (const auto& r : records) {
        iters += static_cast<long>(r.iterations.size());
        if (r.polish_rejected) ++s.polish_rejections;
        switch (r.final_status) {
            case CotStatus::verified: ++s.verified; break;
            case CotStatus::filtered: ++s.filtered; break;
            case CotStatus::backend_error: ++s.backend_errors; break;
        }
    }
    if (s.total > 0) {
        s.verified_rate = static_cast<double>(s.verified) / s.total;
        s.filter_rate = static_cast<double>(s.filtered) / s.total;
        s.mean_iterations = static_cast<double>(iters) / s.total;
    }
    return s;
}

Json stats_to_json(const PipelineStats& s) {
    return {{"total", s.total},
            {"verified", s.verified},
            {"filtered", s.filtered},
            {"backend_errors", s.backend_errors},
            {"polish_rejections", s.polish_rejections},
            {"verified_rate", s.verified_rate},
            {"filter_rate", s.filter_rate},
            {"mean_iterations", s.mean_iterations}};
}

Json record_to_json(const CotRecord& r) {
    Json its = Json::array();
    for (const auto& it : r.iterations)
        its.push_back({{"candidate", it.candidate},
                       {"verdict", it.verdict},
                       {"feedback", it.feedback},
                       {"judge_called", it.judge_called}});
    return {{"sample_id", r.sample_id},
            {"iterations", std::move(its)},
            {"final_status", to_string(r.final_status)},
            {"polished_cot", r.polished_cot ? Json(*r.polished_cot) : Json(nullptr)},
            {"polish_rejected", r.polish_rejected},
            {"error", r.error}};
}

CotRecord record_from_json(const Json& j) {
    CotRecord r;
    r.sample_id = j.at("sample_id").get<std::string>();
    for (const auto& it : j.at("iterations"))
        r.iterations.push_back({it.at("candidate").get<std::string>(), it.at("verdict").get<std::string>(),
                                it.at("feedback").get<std::string>(), it.at("judge_called").get<bool>()});
    r.final_status = cot_status_from_string(j.at("final_status").get<std::string>());
    if (!j.at("polished_cot").is_null()) r.polished_cot = j.at("polished_cot").get<std::string>();
    r.polish_rejected = j.value("polish_rejected", false);
    r.error = j.value("error", "");
    return r;
}

void to_json(Json& j, const HttpBackendConfig& c) {
    j = {{"endpoint", c.endpoint},   {"path", c.path},           {"model", c.model},
         {"api_key_env", c.api_key_env}, {"timeout_s", c.timeout_s}, {"max_tokens", c.max_tokens},
         {"temperature", c.temperature}};
}

void from_json(const Json& j, HttpBackendConfig& c) {
    c = {};
    c.endpoint = j.value("endpoint", c.endpoint);
    c.path = j.value("path", c.path);
    c.model = j.value("model", c.model);
    c.api_key_env = j.value("api_key_env", c.api_key_env);
    c.timeout_s = j.value("timeout_s", c.timeout_s);
    c.max_tokens = j.value("max_tokens", c.max_tokens);
    c.temperature = j.value("temperature", c.temperature);
}

}  // namespace primvid::cot
