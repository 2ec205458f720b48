#include <gtest/gtest.h>

#include <sys/wait.h>

#include <fstream>
#include <sstream>

#include "primvid/cli.hpp"
#include "primvid/error.hpp"

using namespace primvid;
using namespace primvid::cli;

namespace {

fs::path scratch(const std::string& name) {
    auto p = fs::temp_directory_path() / ("primvid_cli_" + name);
    fs::remove_all(p);
    return p;
}

// Aliased frames written as PNG sequences, which keeps generation fast.
GenerateConfig small_config() {
    GenerateConfig c;
    c.render.antialias = false;
    c.encoder.image_sequence = true;
    c.workers = 2;
    return c;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

std::vector<std::string> lines_of(const fs::path& p) {
    std::vector<std::string> out;
    std::ifstream in(p);
    for (std::string l; std::getline(in, l);)
        if (!l.empty()) out.push_back(l);
    return out;
}

void write_lines(const fs::path& p, const std::vector<std::string>& lines) {
    std::ofstream out(p, std::ios::trunc);
    for (const auto& l : lines) out << l << "\n";
}

int run_cli(const std::string& args) {
    const int status = std::system((std::string(PRIMVID_CLI) + " " + args + " >/dev/null 2>&1").c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

// Generated once and shared by the read-only tests below.
const fs::path& shared_dataset() {
    static const fs::path dir = [] {
        auto d = scratch("shared");
        auto c = small_config();
        c.shortterm = {{TaskType::collision_counting, 2}, {TaskType::event_ordering, 2}};
        c.longterm = {{{Family::shell_game, QuestionMode::forward_prediction}, 1},
                      {{Family::chip_containers, QuestionMode::historical_query}, 1}};
        const auto s = cmd_generate(c, d);
        if (!s.ok()) throw std::runtime_error("shared dataset generation failed");
        return d;
    }();
    return dir;
}

fs::path copy_dataset(const std::string& name) {
    const auto dst = scratch(name);
    fs::copy(shared_dataset(), dst, fs::copy_options::recursive);
    return dst;
}

ValidateReport validate_images(const fs::path& manifest) { return cmd_validate(manifest); }

}  // namespace

TEST(Config, AcceptsAllShorthandAndRejectsUnknownKeys) {
    const auto c = config_from_json(Json::parse(R"({"shortterm": {"all": 3}, "longterm": {"shell_game": 2}})"));
    EXPECT_EQ(c.total(), 12 * 3 + 3 * 2);
    EXPECT_EQ(c.first_seed(), 0u);
    EXPECT_THROW(config_from_json(Json::parse(R"({"shortterm": {"all": 1}, "colour": 1})")), InvalidSpec);
    EXPECT_THROW(config_from_json(Json::parse(R"({"shortterm": {"bogus_task": 1}})")), InvalidSpec);
    EXPECT_THROW(config_from_json(Json::parse(R"({"shortterm": {"all": 1}, "render": {"width": 101}})")),
                 InvalidSpec);
}

TEST(Config, SpecificKeysOverrideAllRegardlessOfOrder) {
    const auto c = config_from_json(Json::parse(
        R"({"shortterm": {"acceleration_detection": 3, "all": 1}, "longterm": {"card_stack": 2, "all": 1}})"));
    EXPECT_EQ(c.shortterm.at(TaskType::acceleration_detection), 3);
    EXPECT_EQ(c.shortterm.at(TaskType::collision_counting), 1);
    EXPECT_EQ(c.longterm.at({Family::card_stack, QuestionMode::forward_prediction}), 2);
    EXPECT_EQ(c.longterm.at({Family::shell_game, QuestionMode::forward_prediction}), 1);
    EXPECT_EQ(c.total(), 11 + 3 + 15 + 6);
}

TEST(Config, SeedsMustStayInsideThePurposeRange) {
    EXPECT_THROW(config_from_json(Json::parse(R"({"purpose": "rl", "seed_base": 1500000000, "shortterm": {"all": 1}})")),
                 InvalidSpec);
    const auto c = config_from_json(Json::parse(R"({"purpose": "cot", "shortterm": {"all": 1}})"));
    EXPECT_EQ(c.first_seed(), 1000000000u);
    EXPECT_EQ(config_from_json(config_to_json(c)).first_seed(), c.first_seed());
}

TEST(Jobs, IdsAndSeedsAreConsecutive) {
    auto c = small_config();
    c.seed_base = 40;
    c.shortterm = {{TaskType::collision_counting, 2}};
    c.longterm = {{{Family::shell_game, QuestionMode::forward_prediction}, 1}};
    const auto jobs = plan_jobs(c);
    ASSERT_EQ(jobs.size(), 3u);
    EXPECT_EQ(jobs[0].sample_id(), "collision_counting-0000000040");
    EXPECT_EQ(jobs[1].seed, 41u);
    EXPECT_EQ(jobs[2].sample_id(), "shell_game.forward_prediction-0000000042");
}

TEST(Generate, TwelveTasksTimesTenGivesOneHundredTwentyRecords) {
    auto c = small_config();
    for (auto t : kAllTaskTypes) c.shortterm[t] = 10;
    const auto dir = scratch("full");
    const auto s = cmd_generate(c, dir);
    EXPECT_TRUE(s.ok());
    EXPECT_EQ(s.produced, 120);
    const auto samples = read_manifest(dir / "manifest.jsonl");
    ASSERT_EQ(samples.size(), 120u);
    std::map<std::string, int> per;
    for (const auto& x : samples) ++per[x.target];
    EXPECT_EQ(per.size(), 12u);
    for (const auto& [t, n] : per) EXPECT_EQ(n, 10) << t;
    ValidateOptions opts;
    opts.probe_videos = false;
    const auto rep = cmd_validate(dir / "manifest.jsonl", opts);
    EXPECT_EQ(rep.records, 120);
    for (const auto& v : rep.violations) ADD_FAILURE() << v.sample_id << " " << v.rule << " " << v.detail;
}

TEST(Generate, SameConfigGivesByteIdenticalOutput) {
    auto c = small_config();
    c.shortterm = {{TaskType::trajectory_shape, 2}, {TaskType::distance_estimation, 1}};
    c.longterm = {{{Family::sliding_puzzle, QuestionMode::retrodictive_inference}, 1}};
    const auto a = scratch("det_a"), b = scratch("det_b");
    c.workers = 1;
    cmd_generate(c, a);
    c.workers = 3;
    cmd_generate(c, b);
    EXPECT_EQ(slurp(a / "manifest.jsonl"), slurp(b / "manifest.jsonl"));
    int sidecars = 0;
    for (const auto& e : fs::directory_iterator(a / "videos")) {
        if (e.path().extension() != ".json") continue;
        ++sidecars;
        EXPECT_EQ(slurp(e.path()), slurp(b / "videos" / e.path().filename())) << e.path();
        const auto frames = fs::path(e.path()).replace_extension(".frames");
        EXPECT_EQ(slurp(frames / "frame_00000.png"), slurp(b / "videos" / frames.filename() / "frame_00000.png"));
    }
    EXPECT_EQ(sidecars, 4);
}

TEST(Validate, SharedDatasetIsClean) {
    const auto rep = validate_images(shared_dataset() / "manifest.jsonl");
    EXPECT_EQ(rep.records, 6);
    for (const auto& v : rep.violations) ADD_FAILURE() << v.sample_id << " " << v.rule << " " << v.detail;
}

TEST(Validate, DetectsDuplicateIds) {
    const auto d = copy_dataset("dup");
    auto lines = lines_of(d / "manifest.jsonl");
    lines.push_back(lines[1]);
    write_lines(d / "manifest.jsonl", lines);
    EXPECT_EQ(validate_images(d / "manifest.jsonl").count("duplicate-id"), 1);
}

TEST(Validate, DetectsMissingVideo) {
    const auto d = copy_dataset("missing");
    const auto samples = read_manifest(d / "manifest.jsonl");
    fs::remove_all(d / samples[2].video_path);
    const auto rep = validate_images(d / "manifest.jsonl");
    EXPECT_EQ(rep.count("missing-video"), 1);
    EXPECT_EQ(rep.violations.size(), 1u);
}

TEST(Validate, DetectsTamperedAnswer) {
    const auto d = copy_dataset("answer");
    auto lines = lines_of(d / "manifest.jsonl");
    auto j = Json::parse(lines[4]);
    ASSERT_TRUE(j["long_term"].get<bool>());
    const auto& choices = j["choices"];
    const int idx = j["answer_index"].get<int>();
    const int other = (idx + 1) % static_cast<int>(choices.size());
    j["answer"] = choices[static_cast<std::size_t>(other)];
    j["answer_index"] = other;
    lines[4] = j.dump();
    write_lines(d / "manifest.jsonl", lines);
    const auto rep = validate_images(d / "manifest.jsonl");
    EXPECT_GE(rep.count("sidecar-mismatch") + rep.count("replay-mismatch"), 1);
    for (const auto& v : rep.violations) EXPECT_EQ(v.sample_id, j["id"].get<std::string>());
}

TEST(Validate, DetectsBrokenReplay) {
    const auto d = copy_dataset("replay");
    const auto samples = read_manifest(d / "manifest.jsonl");
    ASSERT_TRUE(samples[4].long_term);
    const auto meta = d / samples[4].metadata_path;
    auto j = Json::parse(std::ifstream(meta));
    auto& ops = j["script"]["operations"];
    ops.erase(ops.size() - 1);
    std::ofstream(meta, std::ios::trunc) << j.dump(2) << "\n";
    const auto rep = validate_images(d / "manifest.jsonl");
    EXPECT_GE(rep.count("replay-mismatch"), 1);
    for (const auto& v : rep.violations) EXPECT_EQ(v.sample_id, samples[4].id);
}

TEST(Validate, DetectsBadChoices) {
    const auto d = copy_dataset("choices");
    auto lines = lines_of(d / "manifest.jsonl");
    auto j = Json::parse(lines[5]);
    j["choices"][0] = j["choices"][1];
    lines[5] = j.dump();
    write_lines(d / "manifest.jsonl", lines);
    EXPECT_GE(validate_images(d / "manifest.jsonl").count("choices"), 1);
}

TEST(Validate, DetectsSeedOutsideThePurposeRange) {
    const auto d = copy_dataset("seed");
    auto lines = lines_of(d / "manifest.jsonl");
    auto j = Json::parse(lines[0]);
    j["provenance"]["seed"] = 1500000000ULL;
    lines[0] = j.dump();
    write_lines(d / "manifest.jsonl", lines);
    EXPECT_EQ(validate_images(d / "manifest.jsonl").count("seed-range"), 1);
}

TEST(Validate, DetectsOneCorruptedVideoAmongMany) {
    const auto d = copy_dataset("corrupt");
    const auto samples = read_manifest(d / "manifest.jsonl");
    fs::remove(d / samples[3].video_path / "frame_00010.png");
    const auto rep = validate_images(d / "manifest.jsonl");
    EXPECT_EQ(rep.violations.size(), 1u);
    EXPECT_EQ(rep.count("video-integrity"), 1);
    if (!rep.violations.empty()) EXPECT_EQ(rep.violations[0].sample_id, samples[3].id);
}

TEST(Validate, DetectsMalformedRecord) {
    const auto d = copy_dataset("schema");
    auto lines = lines_of(d / "manifest.jsonl");
    lines.insert(lines.begin() + 2, "{\"id\": 3}");
    write_lines(d / "manifest.jsonl", lines);
    EXPECT_GE(validate_images(d / "manifest.jsonl").count("schema"), 1);
}

TEST(Validate, DetectsSeedOverlapBetweenSplits) {
    ValidateOptions opts;
    opts.probe_videos = false;
    opts.replay = false;
    opts.disjoint_from = {shared_dataset() / "manifest.jsonl"};
    const auto rep = cmd_validate(shared_dataset() / "manifest.jsonl", opts);
    EXPECT_EQ(rep.count("seed-overlap"), 6);
}

TEST(Augment, AlwaysFailJudgeVerifiesNothing) {
    CotConfig cfg;
    cfg.judge = {"always-fail", std::nullopt};
    const auto out = scratch("aug_fail");
    const auto res = cmd_augment_cot(shared_dataset() / "manifest.jsonl", cfg, out);
    EXPECT_EQ(res.stats.total, 6);
    EXPECT_EQ(res.stats.verified, 0);
    EXPECT_EQ(res.stats.filtered, 6);
    EXPECT_TRUE(lines_of(out / "manifest_cot.jsonl").empty());
    for (const auto& r : read_jsonl(out / "cot_records.jsonl")) EXPECT_EQ(r["iterations"].size(), 5u);
}

TEST(Augment, AlwaysPassJudgeVerifiesEverything) {
    CotConfig cfg;
    cfg.judge = {"always-pass", std::nullopt};
    const auto out = scratch("aug_pass");
    const auto res = cmd_augment_cot(shared_dataset() / "manifest.jsonl", cfg, out);
    EXPECT_EQ(res.stats.verified, 6);
    const auto samples = read_manifest(out / "manifest_cot.jsonl");
    ASSERT_EQ(samples.size(), 6u);
    for (const auto& s : samples) {
        ASSERT_TRUE(s.cot);
        EXPECT_EQ(accuracy_reward(*s.cot, s), 1.0);
        EXPECT_TRUE(fs::exists(out / s.video_path)) << s.video_path;
    }
}

TEST(Augment, InterruptedRunResumes) {
    const auto out = scratch("aug_resume");
    CotConfig down;
    down.generator = {"unreachable", std::nullopt};
    down.pipeline.backend_retries = 0;
    const auto first = cmd_augment_cot(shared_dataset() / "manifest.jsonl", down, out);
    EXPECT_EQ(first.stats.backend_errors, 6);

    const CotConfig up;
    const auto second = cmd_augment_cot(shared_dataset() / "manifest.jsonl", up, out);
    EXPECT_EQ(second.skipped, 0);
    EXPECT_EQ(second.processed, 6);
    EXPECT_EQ(second.stats.verified, 6);

    // A writer killed mid-line leaves a partial record behind.
    std::ofstream(out / "cot_records.jsonl", std::ios::app) << "{\"sample_id\": \"collision_co";
    const auto third = cmd_augment_cot(shared_dataset() / "manifest.jsonl", up, out);
    EXPECT_EQ(third.skipped, 6);
    EXPECT_EQ(third.processed, 0);
    EXPECT_EQ(read_jsonl(out / "cot_records.jsonl").size(), 6u);
    EXPECT_EQ(lines_of(out / "manifest_cot.jsonl").size(), 6u);
}

TEST(Stats, CountsTargetsAndModes) {
    const auto j = cmd_stats(shared_dataset() / "manifest.jsonl");
    EXPECT_EQ(j["records"], 6);
    EXPECT_EQ(j["short_term"], 4);
    EXPECT_EQ(j["long_term"], 2);
    EXPECT_EQ(j["per_target"]["collision_counting"], 2);
    EXPECT_EQ(j["per_question_mode"]["historical_query"], 1);
}

TEST(Score, AccuracyAndGrounding) {
    const auto samples = read_manifest(shared_dataset() / "manifest.jsonl");
    const auto p = scratch("score.jsonl");
    {
        std::ofstream out(p);
        out << Json{{"sample_id", samples[0].id}, {"output", "<answer>" + samples[0].answer + "</answer>"}}.dump()
            << "\n";
        out << Json{{"sample_id", samples[1].id}, {"output", "<answer>nothing</answer>"}}.dump() << "\n";
        out << Json{{"sample_id", samples[2].id}, {"output", "from 1 to 3"}, {"gt_interval", {2, 3}}}.dump() << "\n";
        out << Json{{"sample_id", "ghost"}, {"output", "x"}}.dump() << "\n";
    }
    const auto j = cmd_score(p, shared_dataset() / "manifest.jsonl");
    // Grounding predictions feed the interval metrics, not answer accuracy.
    EXPECT_EQ(j["scored"], 2);
    EXPECT_NEAR(j["accuracy"].get<double>(), 0.5, 1e-12);
    EXPECT_EQ(j["missing"], 4);
    EXPECT_EQ(j["unknown_ids"].size(), 1u);
    EXPECT_NEAR(j["grounding"]["miou"].get<double>(), 0.5, 1e-12);
}

TEST(Binary, ExitCodes) {
    const auto m = (shared_dataset() / "manifest.jsonl").string();
    EXPECT_EQ(run_cli("stats " + m), 0);
    EXPECT_EQ(run_cli("validate --no-probe " + m), 0);
    const auto bad = scratch("bad_config.json");
    std::ofstream(bad) << R"({"shortterm": {"all": 1}, "unknown": true})";
    EXPECT_EQ(run_cli("generate " + bad.string() + " -o " + scratch("never").string()), 2);
    const auto d = copy_dataset("bin_dup");
    auto lines = lines_of(d / "manifest.jsonl");
    lines.push_back(lines[0]);
    write_lines(d / "manifest.jsonl", lines);
    EXPECT_EQ(run_cli("validate --no-probe " + (d / "manifest.jsonl").string()), 1);
}
