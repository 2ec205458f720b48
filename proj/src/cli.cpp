#include "primvid/cli.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <condition_variable>
#include <fstream>
#include <mutex>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>

#include "primvid/error.hpp"
#include "primvid/longterm.hpp"
#include "primvid/metrics.hpp"
#include "primvid/shortterm.hpp"

namespace primvid::cli {

namespace {

template <typename E, typename F>
E parse_enum(const std::string& key, const std::string& value, F from_string) {
    try {
        return from_string(value);
    } catch (const InvalidSpec& e) {
        throw InvalidSpec("config key '" + key + "': " + e.what());
    }
}

int count_value(const std::string& key, const Json& v) {
    if (!v.is_number_integer() || v.get<int>() < 0)
        throw InvalidSpec("config key '" + key + "' must be a non-negative integer");
    return v.get<int>();
}

void write_text(const fs::path& path, const std::string& text) {
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot write " + tmp.string());
        out << text;
        if (!out) throw IoError("write failed for " + tmp.string());
    }
    fs::rename(tmp, path);
}

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Json parse_file(const fs::path& path) {
    try {
        return Json::parse(read_text(path));
    } catch (const Json::exception& e) {
        throw InvalidSpec(path.string() + ": " + e.what());
    }
}

}  // namespace

// ---- config ------------------------------------------------------------------

std::uint64_t GenerateConfig::first_seed() const { return seed_base.value_or(seed_range_for(purpose).lo); }

int GenerateConfig::total() const {
    int n = 0;
    for (const auto& [k, v] : shortterm) n += v;
    for (const auto& [k, v] : longterm) n += v;
    return n;
}

GenerateConfig config_from_json(const Json& j) {
    if (!j.is_object()) throw InvalidSpec("config must be a JSON object");
    static const std::set<std::string> known{"purpose",  "seed_base", "difficulty",  "workers",     "shortterm",
                                             "longterm", "render",    "encoder",     "qa",          "distractors",
                                             "retry_limit"};
    for (const auto& [k, v] : j.items())
        if (!known.count(k)) throw InvalidSpec("unknown config key '" + k + "'");
    GenerateConfig c;
    try {
        if (j.contains("purpose")) c.purpose = parse_enum<Purpose>("purpose", j.at("purpose").get<std::string>(), purpose_from_string);
        if (j.contains("seed_base")) c.seed_base = j.at("seed_base").get<std::uint64_t>();
        if (j.contains("difficulty"))
            c.difficulty = parse_enum<Difficulty>("difficulty", j.at("difficulty").get<std::string>(), difficulty_from_string);
        c.workers = j.value("workers", 0);
        c.distractors = j.value("distractors", c.distractors);
        c.retry_limit = j.value("retry_limit", c.retry_limit);
        if (j.contains("render")) c.render = render_config_from_json(j.at("render"));
        if (j.contains("encoder")) c.encoder = j.at("encoder").get<EncoderConfig>();
        if (j.contains("qa")) {
            c.qa.mcq_fraction = j.at("qa").value("mcq_fraction", c.qa.mcq_fraction);
            c.qa.max_choices = j.at("qa").value("max_choices", c.qa.max_choices);
        }
        if (j.contains("shortterm")) {
            const auto& st = j.at("shortterm");
            if (st.contains("all"))
                for (auto t : kAllTaskTypes) c.shortterm[t] = count_value("shortterm.all", st.at("all"));
            for (const auto& [k, v] : st.items()) {
                if (k == "all") continue;
                const std::string key = "shortterm." + k;
                c.shortterm[parse_enum<TaskType>(key, k, task_from_string)] = count_value(key, v);
            }
        }
        if (j.contains("longterm")) {
            // "all" first so that named families override it.
            std::vector<std::pair<std::string, Json>> entries;
            for (const auto& [k, v] : j.at("longterm").items()) entries.emplace_back(k, v);
            std::stable_partition(entries.begin(), entries.end(), [](const auto& e) { return e.first == "all"; });
            for (const auto& [k, v] : entries) {
                std::vector<Family> fams;
                if (k == "all")
                    fams.assign(kAllFamilies.begin(), kAllFamilies.end());
                else
                    fams.push_back(parse_enum<Family>("longterm." + k, k, family_from_string));
                for (auto f : fams) {
                    if (v.is_object()) {
                        for (const auto& [mk, mv] : v.items()) {
                            const std::string key = "longterm." + k + "." + mk;
                            c.longterm[{f, parse_enum<QuestionMode>(key, mk, question_mode_from_string)}] = count_value(key, mv);
                        }
                    } else {
                        for (auto m : kAllQuestionModes) c.longterm[{f, m}] = count_value("longterm." + k, v);
                    }
                }
            }
        }
    } catch (const Json::exception& e) {
        throw InvalidSpec(std::string("config: ") + e.what());
    }
    if (c.workers < 0) throw InvalidSpec("config key 'workers' must be >= 0");
    if (c.distractors < 1) throw InvalidSpec("config key 'distractors' must be >= 1");
    if (c.retry_limit < 1) throw InvalidSpec("config key 'retry_limit' must be >= 1");
    if (c.qa.max_choices < 2) throw InvalidSpec("config key 'qa.max_choices' must be >= 2");
    if (c.qa.mcq_fraction < 0 || c.qa.mcq_fraction > 1) throw InvalidSpec("config key 'qa.mcq_fraction' must be in [0, 1]");
    if (c.render.width < 16 || c.render.height < 16 || c.render.width % 2 || c.render.height % 2)
        throw InvalidSpec("render width and height must be even and at least 16");
    if (c.render.fps < 1) throw InvalidSpec("render fps must be >= 1");
    const auto range = seed_range_for(c.purpose);
    const auto n = static_cast<std::uint64_t>(c.total());
    if (!range.contains(c.first_seed()) || (n > 0 && !range.contains(c.first_seed() + n - 1)))
        throw InvalidSpec("seeds " + std::to_string(c.first_seed()) + ".." + std::to_string(c.first_seed() + n) +
                          " leave the " + std::string(to_string(c.purpose)) + " seed range [" +
                          std::to_string(range.lo) + ", " + std::to_string(range.hi) + ")");
    if (c.total() == 0) throw InvalidSpec("config requests no samples");
    return c;
}

Json config_to_json(const GenerateConfig& c) {
    Json st = Json::object();
    for (const auto& [t, n] : c.shortterm) st[std::string(to_string(t))] = n;
    Json lt = Json::object();
    for (const auto& [k, n] : c.longterm) lt[std::string(to_string(k.first))][std::string(to_string(k.second))] = n;
    return {{"purpose", to_string(c.purpose)},
            {"seed_base", c.first_seed()},
            {"difficulty", to_string(c.difficulty)},
            {"workers", c.workers},
            {"shortterm", st},
            {"longterm", lt},
            {"render", render_config_to_json(c.render)},
            {"encoder", c.encoder},
            {"qa", {{"mcq_fraction", c.qa.mcq_fraction}, {"max_choices", c.qa.max_choices}}},
            {"distractors", c.distractors},
            {"retry_limit", c.retry_limit}};
}

GenerateConfig load_config(const fs::path& path) { return config_from_json(parse_file(path)); }

// ---- jobs --------------------------------------------------------------------

std::string Job::target() const { return task ? std::string(to_string(*task)) : std::string(to_string(family)); }

std::string Job::sample_id() const {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%010llu", static_cast<unsigned long long>(seed));
    std::string id = target();
    if (!task) id += "." + std::string(to_string(mode));
    return id + "-" + buf;
}

std::vector<Job> plan_jobs(const GenerateConfig& c) {
    std::vector<Job> jobs;
    auto push = [&](Job j) {
        j.index = static_cast<int>(jobs.size());
        j.seed = c.first_seed() + static_cast<std::uint64_t>(j.index);
        jobs.push_back(j);
    };
    for (auto t : kAllTaskTypes)
        if (auto it = c.shortterm.find(t); it != c.shortterm.end())
            for (int i = 0; i < it->second; ++i) push(Job{0, 0, t, {}, {}});
    for (auto f : kAllFamilies)
        for (auto m : kAllQuestionModes)
            if (auto it = c.longterm.find({f, m}); it != c.longterm.end())
                for (int i = 0; i < it->second; ++i) push(Job{0, 0, std::nullopt, f, m});
    return jobs;
}

BuiltSample build_sample(const Job& job, const GenerateConfig& c, const TemplateStore& templates) {
    const Rng root = new_rng(job.seed);
    Rng scene_rng = root.fork(1);
    Rng qa_rng = root.fork(2);
    BuiltSample b;
    auto& sc = b.sidecar;
    sc.seed = job.seed;
    sc.encoder = c.encoder;
    sc.render = c.render;
    std::string params;
    if (job.task) {
        shortterm::ShortTermOptions opts;
        opts.canvas = Canvas{c.render.width, c.render.height};
        opts.fps = c.render.fps;
        opts.retry_limit = c.retry_limit;
        auto st = shortterm::generate_shortterm_sample(*job.task, scene_rng, opts);
        st.spec.seed = job.seed;
        b.sample = instantiate_shortterm(templates, st.spec, st.truth, qa_rng, c.qa);
        b.plan = render::plan_shortterm(st.trace, c.render);
        b.retries = st.retries;
        sc.events = st.trace.events;
        sc.answer = st.truth.answer;
        sc.answer_space = st.truth.answer_space;
        sc.fields = st.truth.fields;
        char buf[96];
        std::snprintf(buf, sizeof buf, "objects=%zu duration=%gs", st.spec.objects.size(), st.spec.duration_s);
        params = buf;
        sc.scene = std::move(st.spec);
    } else {
        longterm::ScriptOptions opts;
        opts.difficulty = c.difficulty;
        opts.retry_limit = c.retry_limit;
        auto lt = longterm::generate_longterm_sample(job.family, job.mode, scene_rng, opts, c.distractors);
        lt.script.seed = job.seed;
        b.sample = instantiate_longterm(templates, lt, qa_rng);
        b.plan = render::plan_longterm(lt.script, c.render);
        b.retries = lt.retries;
        sc.events = longterm::timeline_events(lt.script, c.render.fps);
        sc.answer = lt.answer;
        sc.answer_space = b.sample.choices;
        if (lt.script.query) {
            sc.fields["step"] = ordinal_word(lt.script.query->op_index);
            sc.fields["target"] = index_label(lt.script.query->property.target);
        }
        params = "ops=" + std::to_string(lt.script.operations.size()) +
                 " visible=" + std::string(to_string(lt.script.visible_state));
        sc.script = std::move(lt.script);
    }
    const auto format = c.encoder.image_sequence ? VideoFormat::image_sequence : VideoFormat::mp4;
    const fs::path video = video_path_for(fs::path("videos") / job.sample_id(), format);
    sc.video = VideoInfo{video.generic_string(), format, b.plan.frame_count(), c.render.fps, c.render.width,
                         c.render.height};
    b.sample.id = job.sample_id();
    b.sample.video_path = video.generic_string();
    b.sample.metadata_path = sidecar_path_for(video).generic_string();
    b.sample.provenance = Provenance{job.seed, std::string(kGeneratorVersion), c.purpose,
                                     std::string(to_string(c.difficulty)), params};
    validate_sample(b.sample);
    return b;
}

Json summary_to_json(const GenerateSummary& s) {
    Json failures = Json::array();
    for (const auto& f : s.failures)
        failures.push_back({{"index", f.index}, {"seed", f.seed}, {"target", f.target}, {"error", f.error}});
    return {{"requested", s.requested},
            {"produced", s.produced},
            {"per_target", s.per_target},
            {"retries", {{"total", s.total_retries},
                         {"max", s.max_retries},
                         {"mean", s.produced ? static_cast<double>(s.total_retries) / s.produced : 0.0}}},
            {"wall_time_s", s.wall_time_s},
            {"failures", failures},
            {"manifest_records", s.manifest.records},
            {"dangling", s.manifest.dangling}};
}

GenerateSummary cmd_generate(const GenerateConfig& c, const fs::path& out_dir, std::ostream* progress) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto templates = TemplateStore::load_default();
    templates.check_coverage(2);
    const auto jobs = plan_jobs(c);
    fs::create_directories(out_dir / "videos");
    write_text(out_dir / "config.json", config_to_json(c).dump(2) + "\n");

    std::vector<std::optional<QASample>> results(jobs.size());
    std::vector<int> retries(jobs.size(), 0);
    std::vector<std::optional<GenerateFailure>> failures(jobs.size());
    std::atomic<std::size_t> next{0};
    std::mutex mu;
    std::condition_variable cv;
    std::size_t done = 0;

    auto run_job = [&](const Job& job) {
        try {
            auto b = build_sample(job, c, templates);
            VideoWriter writer(out_dir / "videos" / job.sample_id(), c.render.width, c.render.height, c.render.fps,
                               c.encoder);
            for (int f = 0; f < b.plan.frame_count(); ++f) writer.write(render::rasterize_frame(b.plan, f, c.render));
            const fs::path written = writer.finish();
            const fs::path rel = fs::path("videos") / written.filename();
            b.sidecar.video.format = writer.format();
            b.sidecar.video.path = rel.generic_string();
            b.sample.video_path = rel.generic_string();
            b.sample.metadata_path = sidecar_path_for(rel).generic_string();
            write_metadata(b.sidecar, out_dir / b.sample.metadata_path);
            retries[static_cast<std::size_t>(job.index)] = b.retries;
            results[static_cast<std::size_t>(job.index)] = std::move(b.sample);
        } catch (const std::exception& e) {
            failures[static_cast<std::size_t>(job.index)] = GenerateFailure{job.index, job.seed, job.target(), e.what()};
        }
    };
    auto worker = [&] {
        for (std::size_t i = next++; i < jobs.size(); i = next++) {
            run_job(jobs[i]);
            std::lock_guard lock(mu);
            ++done;
            cv.notify_one();
        }
    };

    int n_workers = c.workers > 0 ? c.workers : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    n_workers = std::max(1, std::min<int>(n_workers, static_cast<int>(jobs.size())));
    std::vector<std::thread> pool;
    for (int i = 0; i < n_workers; ++i) pool.emplace_back(worker);
    {
        std::unique_lock lock(mu);
        std::size_t reported = 0;
        while (done < jobs.size()) {
            cv.wait_for(lock, std::chrono::seconds(2));
            if (progress && done != reported) {
                reported = done;
                const double el = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
                *progress << "[" << done << "/" << jobs.size() << "] " << static_cast<int>(el) << "s elapsed\n"
                          << std::flush;
            }
        }
    }
    for (auto& t : pool) t.join();

    GenerateSummary s;
    s.requested = static_cast<int>(jobs.size());
    std::vector<QASample> samples;
    for (std::size_t i = 0; i < jobs.size(); ++i) {
        if (failures[i]) {
            s.failures.push_back(*failures[i]);
            continue;
        }
        ++s.per_target[jobs[i].target()];
        s.total_retries += retries[i];
        s.max_retries = std::max(s.max_retries, retries[i]);
        samples.push_back(std::move(*results[i]));
    }
    s.produced = static_cast<int>(samples.size());
    s.manifest = write_manifest(samples, out_dir / "manifest.jsonl", false);
    s.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    write_text(out_dir / "summary.json", summary_to_json(s).dump(2) + "\n");
    return s;
}

// ---- augment-cot -------------------------------------------------------------

namespace {

BackendSpec backend_from_json(const std::string& key, const Json& j) {
    BackendSpec b;
    if (j.contains("mock")) {
        b.mock = j.at("mock").get<std::string>();
        cot::make_mock(b.mock);  // rejects unknown names
    } else if (j.contains("http")) {
        b.http = j.at("http").get<cot::HttpBackendConfig>();
    } else {
        throw InvalidSpec("backend '" + key + "' needs a \"mock\" or \"http\" entry");
    }
    return b;
}

}  // namespace

std::unique_ptr<cot::ChatBackend> make_backend(const BackendSpec& spec) {
    if (spec.http) return cot::make_http_backend(*spec.http);
    return cot::make_mock(spec.mock);
}

CotConfig cot_config_from_json(const Json& j) {
    CotConfig c;
    try {
        if (j.contains("generator")) c.generator = backend_from_json("generator", j.at("generator"));
        if (j.contains("judge")) c.judge = backend_from_json("judge", j.at("judge"));
        if (j.contains("polisher")) c.polisher = backend_from_json("polisher", j.at("polisher"));
        auto& p = c.pipeline;
        p.max_iters = j.value("max_iters", p.max_iters);
        p.concurrency = j.value("concurrency", p.concurrency);
        p.backend_retries = j.value("backend_retries", p.backend_retries);
        p.frame_stride = j.value("frame_stride", p.frame_stride);
        const auto mode = j.value("video_mode", std::string("path"));
        if (mode == "path")
            p.video_mode = cot::VideoMode::path;
        else if (mode == "frames")
            p.video_mode = cot::VideoMode::frames;
        else
            throw InvalidSpec("video_mode must be \"path\" or \"frames\"");
        if (j.contains("prompts_dir")) c.prompts_dir = j.at("prompts_dir").get<std::string>();
    } catch (const Json::exception& e) {
        throw InvalidSpec(std::string("CoT config: ") + e.what());
    }
    if (c.pipeline.max_iters < 1) throw InvalidSpec("max_iters must be >= 1");
    if (c.pipeline.concurrency < 1) throw InvalidSpec("concurrency must be >= 1");
    if (c.pipeline.backend_retries < 0) throw InvalidSpec("backend_retries must be >= 0");
    return c;
}

CotConfig load_cot_config(const fs::path& path) { return cot_config_from_json(parse_file(path)); }

AugmentResult cmd_augment_cot(const fs::path& manifest, const CotConfig& cfg, const fs::path& out_dir,
                              std::ostream* progress) {
    const fs::path base = manifest.parent_path();
    const auto samples = read_manifest(manifest);
    fs::create_directories(out_dir);
    const fs::path out_manifest = out_dir / "manifest_cot.jsonl";
    if (fs::exists(out_manifest) && fs::equivalent(out_manifest, manifest))
        throw InvalidSpec("augmented manifest would overwrite its input " + manifest.string());

    const fs::path records_path = out_dir / "cot_records.jsonl";
    std::map<std::string, cot::CotRecord> done;
    if (fs::exists(records_path))
        for (const auto& j : read_jsonl(records_path)) {
            auto r = cot::record_from_json(j);
            if (r.final_status != cot::CotStatus::backend_error) done[r.sample_id] = std::move(r);
        }

    std::vector<cot::CotInput> inputs;
    for (const auto& s : samples)
        if (!done.count(s.id)) inputs.push_back({s, read_metadata(base / s.metadata_path)});

    AugmentResult result;
    result.skipped = static_cast<int>(samples.size() - inputs.size());
    auto opts = cfg.pipeline;
    if (opts.dataset_root.empty()) opts.dataset_root = base;
    const auto prompts = cfg.prompts_dir ? cot::PromptSet::load(*cfg.prompts_dir) : cot::PromptSet::load_default();
    auto gen = make_backend(cfg.generator);
    auto judge = make_backend(cfg.judge);
    auto polish = make_backend(cfg.polisher);

    {
        JsonlAppender out(records_path, true);
        for (const auto& s : samples)
            if (auto it = done.find(s.id); it != done.end()) out.append(cot::record_to_json(it->second));
        int finished = 0;
        const auto fresh = cot::run_pipeline(inputs, *gen, *judge, *polish, prompts, opts, [&](const cot::CotRecord& r) {
            out.append(cot::record_to_json(r));
            ++finished;
            if (progress) {
                *progress << "[" << finished << "/" << inputs.size() << "] " << r.sample_id << ": "
                          << cot::to_string(r.final_status);
                if (!r.error.empty()) *progress << " (" << r.error << ")";
                *progress << "\n" << std::flush;
            }
        });
        for (const auto& r : fresh) done[r.sample_id] = r;
        result.processed = static_cast<int>(fresh.size());
    }

    std::vector<cot::CotRecord> all;
    std::vector<QASample> augmented;
    Json errors = Json::array();
    for (const auto& s : samples) {
        const auto& r = done.at(s.id);
        all.push_back(r);
        if (r.final_status == cot::CotStatus::backend_error) errors.push_back({{"sample_id", s.id}, {"error", r.error}});
        if (r.final_status != cot::CotStatus::verified) continue;
        QASample a = s;
        a.cot = r.polished_cot;
        a.video_path = fs::relative(base / s.video_path, out_dir).generic_string();
        a.metadata_path = fs::relative(base / s.metadata_path, out_dir).generic_string();
        augmented.push_back(std::move(a));
    }
    write_manifest(augmented, out_manifest, false);
    result.stats = cot::summarize(all);
    Json stats = cot::stats_to_json(result.stats);
    stats["skipped"] = result.skipped;
    stats["processed"] = result.processed;
    stats["backend_error_samples"] = errors;
    stats["generator"] = gen->name();
    stats["judge"] = judge->name();
    stats["polisher"] = polish->name();
    write_text(out_dir / "cot_stats.json", stats.dump(2) + "\n");
    return result;
}

// ---- validate ----------------------------------------------------------------

int ValidateReport::count(const std::string& rule) const {
    return static_cast<int>(
        std::count_if(violations.begin(), violations.end(), [&](const Violation& v) { return v.rule == rule; }));
}

Json report_to_json(const ValidateReport& r) {
    Json v = Json::array();
    for (const auto& x : r.violations) v.push_back({{"sample_id", x.sample_id}, {"rule", x.rule}, {"detail", x.detail}});
    std::map<std::string, int> by_rule;
    for (const auto& x : r.violations) ++by_rule[x.rule];
    return {{"records", r.records}, {"clean", r.clean()}, {"by_rule", by_rule}, {"violations", v}};
}

namespace {

std::set<std::uint64_t> manifest_seeds(const fs::path& path) {
    std::set<std::uint64_t> out;
    for (const auto& j : read_jsonl(path))
        if (j.contains("provenance")) out.insert(j.at("provenance").at("seed").get<std::uint64_t>());
    return out;
}

void check_replay(const QASample& s, const Sidecar& sc, std::vector<Violation>& out) {
    auto bad = [&](const std::string& d) { out.push_back({s.id, "replay-mismatch", d}); };
    std::string answer;
    try {
        if (sc.scene) {
            const auto trace = shortterm::simulate(*sc.scene);
            const auto truth = shortterm::derive_answer(*sc.scene, trace);
            answer = truth.answer;
            if (trace.events != sc.events) bad("re-simulated event timeline differs from the sidecar");
        } else if (sc.script) {
            const auto& script = *sc.script;
            validate_script(script);
            if (longterm::replay(script.initial, script.operations) != script.final_state)
                bad("forward replay does not reach the recorded final state");
            if (longterm::retrodict(script.final_state, script.operations) != script.initial)
                bad("inverse replay does not reach the recorded initial state");
            if (longterm::timeline_events(script, sc.video.fps) != sc.events)
                bad("replayed event timeline differs from the sidecar");
            answer = longterm::canonical_answer(script);
        } else {
            bad("sidecar has neither a scene nor a script");
            return;
        }
    } catch (const std::exception& e) {
        bad(std::string("replay failed: ") + e.what());
        return;
    }
    if (answer != sc.answer) bad("replayed answer '" + answer + "' != sidecar answer '" + sc.answer + "'");
    if (answer != s.answer) bad("replayed answer '" + answer + "' != manifest answer '" + s.answer + "'");
}

}  // namespace

ValidateReport cmd_validate(const fs::path& manifest, const ValidateOptions& opts) {
    ValidateReport rep;
    auto& out = rep.violations;
    const fs::path base = manifest.parent_path();
    std::vector<Json> lines;
    try {
        lines = read_jsonl(manifest);
    } catch (const std::exception& e) {
        out.push_back({"", "schema", e.what()});
        return rep;
    }
    std::set<std::uint64_t> foreign;
    for (const auto& p : opts.disjoint_from) {
        try {
            const auto seeds = manifest_seeds(p);
            foreign.insert(seeds.begin(), seeds.end());
        } catch (const std::exception& e) {
            out.push_back({"", "schema", "cannot read " + p.string() + ": " + e.what()});
        }
    }

    std::set<std::string> ids;
    rep.records = static_cast<int>(lines.size());
    for (std::size_t n = 0; n < lines.size(); ++n) {
        const auto& j = lines[n];
        QASample s;
        try {
            if (j.value("format_version", -1) != kManifestFormatVersion)
                throw InvalidSpec("unsupported format_version");
            s = sample_from_record(j);
        } catch (const std::exception& e) {
            const std::string id = j.is_object() && j.contains("id") && j.at("id").is_string()
                                       ? j.at("id").get<std::string>()
                                       : "line " + std::to_string(n + 1);
            out.push_back({id, "schema", e.what()});
            continue;
        }
        if (!ids.insert(s.id).second) out.push_back({s.id, "duplicate-id", "id appears more than once"});
        try {
            validate_sample(s);
        } catch (const InvalidSpec& e) {
            out.push_back({s.id, "choices", e.what()});
        }

        const auto& prov = s.provenance;
        if (!seed_range_for(prov.purpose).contains(prov.seed))
            out.push_back({s.id, "seed-range",
                           "seed " + std::to_string(prov.seed) + " outside the " + std::string(to_string(prov.purpose)) +
                               " range"});
        if (foreign.count(prov.seed))
            out.push_back({s.id, "seed-overlap", "seed " + std::to_string(prov.seed) + " also used by another dataset"});

        const fs::path video = base / s.video_path;
        const bool have_video = fs::exists(video);
        if (!have_video) out.push_back({s.id, "missing-video", video.string()});
        const fs::path meta = base / s.metadata_path;
        if (!fs::exists(meta)) {
            out.push_back({s.id, "missing-sidecar", meta.string()});
            continue;
        }
        Sidecar sc;
        try {
            sc = read_metadata(meta);
        } catch (const std::exception& e) {
            out.push_back({s.id, "schema", std::string("sidecar: ") + e.what()});
            continue;
        }
        if (sc.seed != prov.seed) out.push_back({s.id, "sidecar-mismatch", "sidecar seed differs from provenance"});
        if (sc.answer != s.answer) out.push_back({s.id, "sidecar-mismatch", "sidecar answer differs from manifest"});
        for (const auto& c : s.choices)
            if (std::find(sc.answer_space.begin(), sc.answer_space.end(), c) == sc.answer_space.end())
                out.push_back({s.id, "choices", "choice '" + c + "' is outside the recorded answer space"});
        if (s.long_term != sc.long_term())
            out.push_back({s.id, "sidecar-mismatch", "manifest and sidecar disagree on short/long-term"});
        if (sc.long_term() && sc.script && s.question_mode != sc.script->question_mode)
            out.push_back({s.id, "sidecar-mismatch", "question mode differs from the script"});
        if (opts.replay) check_replay(s, sc, out);

        if (opts.probe_videos && have_video) {
            try {
                const auto p = probe_video(video, opts.encoder);
                if (p.frames != sc.video.frame_count || p.width != sc.video.width || p.height != sc.video.height ||
                    std::abs(p.fps - sc.video.fps) > 0.01) {
                    char buf[160];
                    std::snprintf(buf, sizeof buf, "probed %d frames %dx%d @%.2f, expected %d frames %dx%d @%d",
                                  p.frames, p.width, p.height, p.fps, sc.video.frame_count, sc.video.width,
                                  sc.video.height, sc.video.fps);
                    out.push_back({s.id, "video-integrity", buf});
                }
            } catch (const std::exception& e) {
                out.push_back({s.id, "video-integrity", e.what()});
            }
        }
    }
    return rep;
}

// ---- stats / score -----------------------------------------------------------

Json cmd_stats(const fs::path& manifest) {
    const auto samples = read_manifest(manifest);
    std::map<std::string, int> per_target, per_mode, per_purpose, choice_counts, answer_letters;
    std::map<std::string, std::map<std::string, int>> answers;
    int mcq = 0, free = 0, with_cot = 0, long_term = 0;
    std::uint64_t lo = UINT64_MAX, hi = 0;
    for (const auto& s : samples) {
        ++per_target[s.target];
        if (s.question_mode) ++per_mode[std::string(to_string(*s.question_mode))];
        ++per_purpose[std::string(to_string(s.provenance.purpose))];
        ++answers[s.target][s.answer];
        if (s.is_mcq()) {
            ++mcq;
            ++choice_counts[std::to_string(s.choices.size())];
            ++answer_letters[std::string(1, choice_letter(*s.answer_index))];
        } else {
            ++free;
        }
        if (s.cot) ++with_cot;
        if (s.long_term) ++long_term;
        lo = std::min(lo, s.provenance.seed);
        hi = std::max(hi, s.provenance.seed);
    }
    Json j = {{"records", samples.size()},
              {"short_term", static_cast<int>(samples.size()) - long_term},
              {"long_term", long_term},
              {"mcq", mcq},
              {"free_form", free},
              {"with_cot", with_cot},
              {"per_target", per_target},
              {"per_question_mode", per_mode},
              {"per_purpose", per_purpose},
              {"choice_counts", choice_counts},
              {"answer_letters", answer_letters},
              {"answers", answers}};
    j["seed_range"] = samples.empty() ? Json(nullptr) : Json::array({lo, hi});
    return j;
}

namespace {

std::optional<Interval> interval_from(const Json& j) {
    if (j.is_null()) return std::nullopt;
    return Interval{j.at(0).get<double>(), j.at(1).get<double>()};
}

}  // namespace

std::vector<Prediction> read_predictions(const fs::path& path) {
    const std::string text = read_text(path);
    std::vector<Prediction> out;
    Json whole;
    bool single = false;
    try {
        whole = Json::parse(text);
        single = whole.is_object() && !whole.contains("sample_id");
    } catch (const Json::exception&) {
    }
    if (single) {
        for (const auto& [id, v] : whole.items()) out.push_back({id, v.get<std::string>(), std::nullopt, std::nullopt});
        return out;
    }
    for (const auto& j : read_jsonl(path)) {
        try {
            Prediction p;
            p.sample_id = j.at("sample_id").get<std::string>();
            if (j.contains("output") && !j.at("output").is_null()) p.output = j.at("output").get<std::string>();
            if (j.contains("interval")) p.interval = interval_from(j.at("interval"));
            if (j.contains("gt_interval")) p.gt_interval = interval_from(j.at("gt_interval"));
            out.push_back(std::move(p));
        } catch (const Json::exception& e) {
            throw InvalidSpec(path.string() + ": bad prediction record: " + e.what());
        }
    }
    return out;
}

Json cmd_score(const fs::path& predictions, const fs::path& manifest) {
    const auto samples = read_manifest(manifest);
    std::map<std::string, const QASample*> by_id;
    for (const auto& s : samples) by_id[s.id] = &s;
    const auto preds = read_predictions(predictions);

    std::map<std::string, std::pair<double, int>> per_target;
    std::set<std::string> seen;
    std::vector<std::string> unknown;
    double total = 0.0;
    int scored = 0, unparsed = 0;
    std::vector<std::pair<Interval, Interval>> pairs;
    for (const auto& p : preds) {
        if (p.gt_interval) {
            auto pred = p.interval;
            if (!pred && p.output) pred = extract_interval(*p.output);
            if (!pred || pred->end < pred->start) {
                ++unparsed;
                pred = Interval{0.0, 0.0};
            }
            pairs.emplace_back(*pred, *p.gt_interval);
        }
        if (!p.output || p.gt_interval) continue;
        const auto it = by_id.find(p.sample_id);
        if (it == by_id.end()) {
            unknown.push_back(p.sample_id);
            continue;
        }
        if (!seen.insert(p.sample_id).second) continue;
        const double r = accuracy_reward(*p.output, *it->second);
        total += r;
        ++scored;
        auto& t = per_target[it->second->target];
        t.first += r;
        ++t.second;
    }
    Json targets = Json::object();
    for (const auto& [k, v] : per_target) targets[k] = {{"accuracy", v.first / v.second}, {"count", v.second}};
    Json j = {{"scored", scored},
              {"accuracy", scored ? total / scored : 0.0},
              {"per_target", targets},
              {"missing", static_cast<int>(samples.size() - seen.size())},
              {"unknown_ids", unknown}};
    if (!pairs.empty()) {
        const auto g = grounding_report(pairs);
        j["grounding"] = {{"count", g.count}, {"r@0.3", g.r_at_03}, {"r@0.5", g.r_at_05}, {"r@0.7", g.r_at_07},
                          {"miou", g.miou},   {"miop", g.miop},     {"unparsed", unparsed}};
    }
    return j;
}

}  // namespace primvid::cli
