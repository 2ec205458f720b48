#include <gtest/gtest.h>

#include <atomic>
#include <sstream>

#include "primvid/cli.hpp"
#include "primvid/cot.hpp"
#include "primvid/error.hpp"
#include "primvid/metrics.hpp"

using namespace primvid;
using namespace primvid::cot;

namespace {

const PromptSet& prompts() {
    static const auto p = PromptSet::load_default();
    return p;
}

CotInput generated_input(std::uint64_t seed = 42, TaskType task = TaskType::collision_counting) {
    static const auto templates = TemplateStore::load_default();
    const cli::GenerateConfig cfg;
    const auto b = cli::build_sample({0, seed, task, {}, {}}, cfg, templates);
    return {b.sample, b.sidecar};
}

// One wall contact at 2 s; three choices with "2" correct.
CotInput handmade_input() {
    CotInput in;
    in.sample.id = "hand-1";
    in.sample.question = "How many times does the red circle hit the walls?";
    in.sample.answer = "2";
    in.sample.choices = {"1", "2", "3"};
    in.sample.answer_index = 1;
    in.sidecar.events = {make_event(60, 30, EventKind::wall_contact, 0, "left")};
    return in;
}

struct Recorder : ChatBackend {
    std::vector<ChatRequest> requests;
    std::function<std::string(const ChatRequest&)> reply;
    std::string send(const ChatRequest& r) override {
        requests.push_back(r);
        return reply(r);
    }
    std::string name() const override { return "recorder"; }
};

}  // namespace

TEST(Mocks, EchoTimelineCitesEveryEventAndTheAnswer) {
    const auto in = generated_input();
    ASSERT_FALSE(in.sidecar.events.empty());
    auto gen = make_mock("echo-timeline");
    const auto out = generate_cot(in, *gen, prompts(), {});
    for (const auto& e : in.sidecar.events) EXPECT_NE(out.find(format_timestamp(e.frame_index, 30)), std::string::npos);
    EXPECT_EQ(accuracy_reward(out, in.sample), 1.0);
}

TEST(Mocks, UnknownMockNameRaises) { EXPECT_THROW(make_mock("nope"), InvalidSpec); }

TEST(Timeline, OneLinePerSidecarEvent) {
    const auto in = generated_input(7, TaskType::event_ordering);
    const auto text = format_timeline(in.sidecar.events, 30);
    std::istringstream lines(text);
    std::string line;
    std::size_t n = 0;
    while (std::getline(lines, line))
        if (!line.empty()) ++n;
    EXPECT_EQ(n, in.sidecar.events.size());
    EXPECT_EQ(format_timeline({make_event(60, 30, EventKind::wall_contact, 2, "left")}, 30),
              "[00:02.000] wall_contact 2: left\n");
}

TEST(Verify, EmptyCandidateFailsWithoutTheJudge) {
    Recorder judge;
    judge.reply = [](const ChatRequest&) { return std::string("PASS"); };
    const auto it = verify_cot("   ", handmade_input(), judge, prompts(), {});
    EXPECT_EQ(it.verdict, "fail");
    EXPECT_EQ(it.feedback, "empty output");
    EXPECT_FALSE(it.judge_called);
    EXPECT_TRUE(judge.requests.empty());
}

TEST(Verify, WrongAnswerNeverReachesTheJudge) {
    Recorder judge;
    judge.reply = [](const ChatRequest&) { return std::string("PASS"); };
    const auto it = verify_cot("It bounced once. <answer>1</answer>", handmade_input(), judge, prompts(), {});
    EXPECT_EQ(it.verdict, "fail");
    EXPECT_FALSE(it.judge_called);
    EXPECT_TRUE(judge.requests.empty());
}

TEST(Verify, JudgePromptCarriesTheGroundTruth) {
    Recorder judge;
    judge.reply = [](const ChatRequest&) { return std::string("PASS"); };
    const auto it = verify_cot("At 00:02.000 it hits the left wall. <answer>B</answer>", handmade_input(), judge,
                               prompts(), {});
    EXPECT_EQ(it.verdict, "pass");
    ASSERT_EQ(judge.requests.size(), 1u);
    EXPECT_EQ(judge.requests[0].stage, Stage::verify);
    EXPECT_NE(judge.requests[0].prompt.find("B. 2"), std::string::npos);
    EXPECT_NE(judge.requests[0].prompt.find("00:02.000"), std::string::npos);
}

TEST(Verify, StrictJudgeRejectsCitationsOffTheTimeline) {
    auto judge = make_mock("strict-judge");
    const auto in = handmade_input();
    const auto bad = verify_cot("At 00:05 it hits the wall. <answer>2</answer>", in, *judge, prompts(), {});
    EXPECT_EQ(bad.verdict, "fail");
    EXPECT_NE(bad.feedback.find("00:05"), std::string::npos);
    const auto good = verify_cot("At 00:02 it hits the wall. <answer>2</answer>", in, *judge, prompts(), {});
    EXPECT_EQ(good.verdict, "pass");
}

TEST(Verify, UnparseableVerdictIsInconclusive) {
    Recorder judge;
    judge.reply = [](const ChatRequest&) { return std::string("Looks fine to me"); };
    const auto it = verify_cot("<answer>2</answer>", handmade_input(), judge, prompts(), {});
    EXPECT_EQ(it.verdict, "inconclusive");
}

TEST(Pipeline, AlwaysFailJudgeFiltersAfterMaxIterations) {
    auto gen = make_mock("echo-timeline");
    auto judge = make_mock("always-fail");
    auto polish = make_mock("always-pass");
    const auto rec = process_sample(generated_input(), *gen, *judge, *polish, prompts(), {});
    EXPECT_EQ(rec.final_status, CotStatus::filtered);
    EXPECT_EQ(rec.iterations.size(), 5u);
    EXPECT_FALSE(rec.polished_cot);
    for (const auto& it : rec.iterations) EXPECT_TRUE(it.judge_called);
}

TEST(Pipeline, AlwaysPassVerifiesOnTheFirstIteration) {
    auto gen = make_mock("echo-timeline");
    auto judge = make_mock("always-pass");
    auto polish = make_mock("always-pass");
    const auto in = generated_input();
    const auto rec = process_sample(in, *gen, *judge, *polish, prompts(), {});
    EXPECT_EQ(rec.final_status, CotStatus::verified);
    EXPECT_EQ(rec.iterations.size(), 1u);
    ASSERT_TRUE(rec.polished_cot);
    EXPECT_EQ(accuracy_reward(*rec.polished_cot, in.sample), 1.0);
}

TEST(Pipeline, WrongAnswerGeneratorIsFilteredWithoutJudgeCalls) {
    auto gen = make_mock("wrong-answer");
    Recorder judge;
    judge.reply = [](const ChatRequest&) { return std::string("PASS"); };
    auto polish = make_mock("always-pass");
    PipelineOptions opts;
    opts.max_iters = 3;
    const auto rec = process_sample(generated_input(), *gen, judge, *polish, prompts(), opts);
    EXPECT_EQ(rec.final_status, CotStatus::filtered);
    EXPECT_EQ(rec.iterations.size(), 3u);
    EXPECT_TRUE(judge.requests.empty());
}

TEST(Pipeline, ReflectionReceivesThePreviousFeedback) {
    Recorder gen;
    gen.reply = [](const ChatRequest& r) {
        return r.stage == Stage::generate ? std::string("<answer>1</answer>") : std::string("<answer>2</answer>");
    };
    auto judge = make_mock("always-pass");
    auto polish = make_mock("always-pass");
    const auto rec = process_sample(handmade_input(), gen, *judge, *polish, prompts(), {});
    EXPECT_EQ(rec.final_status, CotStatus::verified);
    ASSERT_EQ(gen.requests.size(), 2u);
    EXPECT_EQ(gen.requests[1].stage, Stage::reflect);
    EXPECT_NE(gen.requests[1].prompt.find(rec.iterations[0].feedback), std::string::npos);
}

TEST(Pipeline, FlippedPolishFallsBackToTheVerifiedChain) {
    auto gen = make_mock("echo-timeline");
    auto judge = make_mock("always-pass");
    auto polish = make_mock("flip-polisher");
    const auto in = generated_input();
    const auto rec = process_sample(in, *gen, *judge, *polish, prompts(), {});
    EXPECT_EQ(rec.final_status, CotStatus::verified);
    EXPECT_TRUE(rec.polish_rejected);
    ASSERT_TRUE(rec.polished_cot);
    EXPECT_EQ(*rec.polished_cot, rec.iterations.back().candidate);
    EXPECT_EQ(accuracy_reward(*rec.polished_cot, in.sample), 1.0);
}

TEST(Pipeline, UnreachableGeneratorIsABackendError) {
    auto gen = make_mock("unreachable");
    auto judge = make_mock("always-pass");
    const auto rec = process_sample(generated_input(), *gen, *judge, *judge, prompts(), {});
    EXPECT_EQ(rec.final_status, CotStatus::backend_error);
    EXPECT_FALSE(rec.error.empty());
}

TEST(Pipeline, UnreachableJudgeNeverVerifies) {
    auto gen = make_mock("echo-timeline");
    auto judge = make_mock("unreachable");
    auto polish = make_mock("always-pass");
    PipelineOptions opts;
    opts.max_iters = 2;
    const auto rec = process_sample(generated_input(), *gen, *judge, *polish, prompts(), opts);
    EXPECT_EQ(rec.final_status, CotStatus::filtered);
    for (const auto& it : rec.iterations) EXPECT_EQ(it.verdict, "inconclusive");
}

TEST(Pipeline, TransientFailuresAreRetried) {
    int calls = 0;
    FunctionBackend flaky("flaky", [&](const ChatRequest& r) -> std::string {
        if (++calls < 3) throw BackendError("connection reset");
        return "At " + r.context.at("events")[0].at("timestamp").get<std::string>() + " <answer>2</answer>";
    });
    auto judge = make_mock("always-pass");
    PipelineOptions opts;
    opts.backend_retries = 2;
    const auto rec = process_sample(handmade_input(), flaky, *judge, *judge, prompts(), opts);
    EXPECT_EQ(rec.final_status, CotStatus::verified);
    EXPECT_EQ(calls, 3);
}

TEST(Pipeline, ConcurrentRunKeepsInputOrder) {
    std::vector<CotInput> inputs;
    for (std::uint64_t s = 0; s < 8; ++s) {
        auto in = generated_input(s);
        in.sample.id = "s" + std::to_string(s);
        inputs.push_back(std::move(in));
    }
    auto gen = make_mock("echo-timeline");
    auto judge = make_mock("strict-judge");
    auto polish = make_mock("always-pass");
    PipelineOptions opts;
    opts.concurrency = 3;
    std::atomic<int> seen{0};
    const auto recs = run_pipeline(inputs, *gen, *judge, *polish, prompts(), opts, [&](const CotRecord&) { ++seen; });
    ASSERT_EQ(recs.size(), 8u);
    EXPECT_EQ(seen, 8);
    for (std::size_t i = 0; i < 8; ++i) {
        EXPECT_EQ(recs[i].sample_id, inputs[i].sample.id);
        EXPECT_EQ(recs[i].final_status, CotStatus::verified);
    }
    const auto st = summarize(recs);
    EXPECT_EQ(st.total, 8);
    EXPECT_EQ(st.verified, 8);
    EXPECT_DOUBLE_EQ(st.verified_rate, 1.0);
    EXPECT_DOUBLE_EQ(st.mean_iterations, 1.0);
}

TEST(Records, JsonRoundTrip) {
    CotRecord r;
    r.sample_id = "x";
    r.iterations = {{"c1", "fail", "bad", true}, {"c2", "pass", "", true}};
    r.final_status = CotStatus::verified;
    r.polished_cot = "c2";
    EXPECT_EQ(record_from_json(record_to_json(r)), r);
}

TEST(Prompts, MissingPlaceholderDirectoryRaises) {
    EXPECT_THROW(PromptSet::load("/nonexistent/prompts"), Error);
}

TEST(Http, ConfigIsValidated) {
    HttpBackendConfig cfg;
    cfg.model = "";
    EXPECT_THROW(make_http_backend(cfg), InvalidSpec);
    cfg.model = "m";
    cfg.endpoint = "ftp://host";
    EXPECT_THROW(make_http_backend(cfg), InvalidSpec);
}

TEST(Http, UnreachableServerIsABackendError) {
    HttpBackendConfig cfg;
    cfg.model = "m";
    cfg.endpoint = "http://127.0.0.1:9";
    cfg.timeout_s = 2;
    auto b = make_http_backend(cfg);
    ChatRequest r;
    r.prompt = "hi";
    EXPECT_THROW(b->send(r), BackendError);
}
