#include "primvid/exporter.hpp"

#include <fcntl.h>
#include <png.h>
#include <signal.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <atomic>
#include <cerrno>
#include <cstring>
#include <fstream>
#include <regex>
#include <set>
#include <sstream>

#include "primvid/error.hpp"

extern char** environ;

namespace primvid {

namespace {

std::once_flag g_sigpipe_once;

void ignore_sigpipe() {
    std::call_once(g_sigpipe_once, [] { ::signal(SIGPIPE, SIG_IGN); });
}

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw IoError("cannot read " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string tail(const std::string& s, std::size_t n = 2000) { return s.size() <= n ? s : s.substr(s.size() - n); }

struct Spawned {
    int pid = -1;
    int stdin_fd = -1;
};

// Spawns argv with stdout/stderr redirected to `log` and stdin from a pipe
// (or /dev/null when `with_stdin` is false).
Spawned spawn(const std::vector<std::string>& args, const fs::path& log, bool with_stdin) {
    std::vector<char*> argv;
    for (const auto& a : args) argv.push_back(const_cast<char*>(a.c_str()));
    argv.push_back(nullptr);

    int pipefd[2] = {-1, -1};
    posix_spawn_file_actions_t fa;
    posix_spawn_file_actions_init(&fa);
    if (with_stdin) {
        if (::pipe2(pipefd, O_CLOEXEC) != 0) throw IoError(std::string("pipe failed: ") + std::strerror(errno));
        posix_spawn_file_actions_adddup2(&fa, pipefd[0], STDIN_FILENO);
    } else {
        posix_spawn_file_actions_addopen(&fa, STDIN_FILENO, "/dev/null", O_RDONLY, 0);
    }
    posix_spawn_file_actions_addopen(&fa, STDOUT_FILENO, log.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
    posix_spawn_file_actions_adddup2(&fa, STDOUT_FILENO, STDERR_FILENO);

    pid_t pid = -1;
    const int rc = posix_spawnp(&pid, argv[0], &fa, nullptr, argv.data(), environ);
    posix_spawn_file_actions_destroy(&fa);
    if (with_stdin) ::close(pipefd[0]);
    if (rc != 0) {
        if (with_stdin) ::close(pipefd[1]);
        throw EncoderError("failed to start " + args[0] + ": " + std::strerror(rc));
    }
    return {pid, with_stdin ? pipefd[1] : -1};
}

int wait_exit(int pid) {
    int status = 0;
    while (::waitpid(pid, &status, 0) < 0)
        if (errno != EINTR) return -1;
    if (WIFEXITED(status)) return WEXITSTATUS(status);
    return 128 + (WIFSIGNALED(status) ? WTERMSIG(status) : 0);
}

// Runs a command to completion and returns (exit code, combined output).
std::pair<int, std::string> run_capture(const std::vector<std::string>& args) {
    static std::atomic<int> counter{0};
    const fs::path log = fs::temp_directory_path() /
                         ("primvid-probe-" + std::to_string(::getpid()) + "-" + std::to_string(counter++) + ".log");
    const auto sp = spawn(args, log, false);
    const int code = wait_exit(sp.pid);
    std::string out = fs::exists(log) ? read_file(log) : "";
    std::error_code ec;
    fs::remove(log, ec);
    return {code, out};
}

Json rgb_json(Rgb c) { return Json::array({c.r, c.g, c.b}); }
Rgb rgb_from(const Json& j) { return {j.at(0).get<std::uint8_t>(), j.at(1).get<std::uint8_t>(), j.at(2).get<std::uint8_t>()}; }

Json render_json(const render::RenderConfig& c) {
    return {{"width", c.width},
            {"height", c.height},
            {"fps", c.fps},
            {"background", rgb_json(c.background)},
            {"antialias", c.antialias},
            {"supersample", c.supersample},
            {"timestamp_longterm", c.timestamp_longterm},
            {"timestamp_shortterm", c.timestamp_shortterm}};
}

render::RenderConfig render_from(const Json& j) {
    render::RenderConfig c;
    c.width = j.at("width").get<int>();
    c.height = j.at("height").get<int>();
    c.fps = j.at("fps").get<int>();
    c.background = rgb_from(j.at("background"));
    c.antialias = j.at("antialias").get<bool>();
    c.supersample = j.at("supersample").get<int>();
    c.timestamp_longterm = j.at("timestamp_longterm").get<bool>();
    c.timestamp_shortterm = j.at("timestamp_shortterm").get<bool>();
    return c;
}

std::string frame_name(int i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "frame_%05d.png", i);
    return buf;
}

constexpr const char* kSequenceIndex = "sequence.json";

}  // namespace

std::string_view to_string(VideoFormat f) { return f == VideoFormat::mp4 ? "mp4" : "image_sequence"; }
VideoFormat video_format_from_string(std::string_view s) {
    if (s == "mp4") return VideoFormat::mp4;
    if (s == "image_sequence") return VideoFormat::image_sequence;
    throw InvalidSpec("unknown video format '" + std::string(s) + "'");
}

void to_json(Json& j, const EncoderConfig& c) {
    j = {{"encoder", c.encoder},
         {"codec", c.codec},
         {"crf", c.crf},
         {"preset", c.preset},
         {"pixel_format", c.pixel_format},
         {"image_sequence", c.image_sequence},
         {"fallback_to_images", c.fallback_to_images},
         {"png_compression", c.png_compression}};
}
void from_json(const Json& j, EncoderConfig& c) {
    c = {};
    c.encoder = j.value("encoder", c.encoder);
    c.codec = j.value("codec", c.codec);
    c.crf = j.value("crf", c.crf);
    c.preset = j.value("preset", c.preset);
    c.pixel_format = j.value("pixel_format", c.pixel_format);
    c.image_sequence = j.value("image_sequence", c.image_sequence);
    c.fallback_to_images = j.value("fallback_to_images", c.fallback_to_images);
    c.png_compression = j.value("png_compression", c.png_compression);
}

std::optional<fs::path> find_executable(const std::string& name) {
    if (name.empty()) return std::nullopt;
    if (name.find('/') != std::string::npos)
        return ::access(name.c_str(), X_OK) == 0 ? std::optional<fs::path>(name) : std::nullopt;
    const char* path = std::getenv("PATH");
    std::stringstream ss(path ? path : "");
    std::string dir;
    while (std::getline(ss, dir, ':')) {
        if (dir.empty()) continue;
        const fs::path p = fs::path(dir) / name;
        if (::access(p.c_str(), X_OK) == 0 && !fs::is_directory(p)) return p;
    }
    return std::nullopt;
}

fs::path video_path_for(const fs::path& stem, VideoFormat format) {
    fs::path p = stem;
    p += format == VideoFormat::mp4 ? ".mp4" : ".frames";
    return p;
}

fs::path sidecar_path_for(const fs::path& video_path) {
    fs::path p = video_path;
    return p.replace_extension(".json");
}

// ---- VideoWriter -------------------------------------------------------------

VideoWriter::VideoWriter(const fs::path& stem, int width, int height, int fps, const EncoderConfig& cfg)
    : width_(width), height_(height), fps_(fps), png_level_(cfg.png_compression) {
    if (width <= 0 || height <= 0 || fps <= 0) throw InvalidSpec("video dimensions and fps must be positive");
    format_ = cfg.image_sequence ? VideoFormat::image_sequence : VideoFormat::mp4;
    if (format_ == VideoFormat::mp4 && !find_executable(cfg.encoder)) {
        if (!cfg.fallback_to_images)
            throw EncoderMissing("video encoder '" + cfg.encoder +
                                 "' not found on PATH; install ffmpeg or pass --image-sequence-fallback "
                                 "(fallback_to_images) to write PNG frame directories instead");
        format_ = VideoFormat::image_sequence;
    }
    path_ = video_path_for(stem, format_);
    if (!path_.parent_path().empty()) fs::create_directories(path_.parent_path());

    if (format_ == VideoFormat::image_sequence) {
        std::error_code ec;
        fs::remove_all(path_, ec);
        fs::create_directories(path_);
        return;
    }
    if (width % 2 || height % 2)
        throw InvalidSpec("H.264 output requires even dimensions, got " + std::to_string(width) + "x" +
                          std::to_string(height));
    ignore_sigpipe();
    log_path_ = path_;
    log_path_ += ".log";
    const std::string size = std::to_string(width) + "x" + std::to_string(height);
    const std::string rate = std::to_string(fps);
    const std::vector<std::string> args{cfg.encoder, "-hide_banner", "-loglevel", "error", "-y",
                                        "-f", "rawvideo", "-pix_fmt", "rgb24", "-s", size, "-r", rate,
                                        "-i", "-", "-an", "-c:v", cfg.codec, "-preset", cfg.preset,
                                        "-crf", std::to_string(cfg.crf), "-pix_fmt", cfg.pixel_format,
                                        "-r", rate, "-f", "mp4", path_.string()};
    const auto sp = spawn(args, log_path_, true);
    pid_ = sp.pid;
    fd_ = sp.stdin_fd;
}

VideoWriter::~VideoWriter() {
    if (!done_) abort();
}

void VideoWriter::write(const render::Image& frame) {
    if (done_) throw Error("write after finish");
    if (frame.width != width_ || frame.height != height_)
        throw InvalidSpec("frame dimensions differ from the video's");
    if (format_ == VideoFormat::image_sequence) {
        write_png(path_ / frame_name(frames_), frame, png_level_);
        ++frames_;
        return;
    }
    const auto* p = frame.rgb.data();
    std::size_t left = frame.rgb.size();
    while (left > 0) {
        const auto n = ::write(fd_, p, left);
        if (n < 0) {
            if (errno == EINTR) continue;
            const int err = errno;
            const std::string log = fs::exists(log_path_) ? tail(read_file(log_path_)) : "";
            abort();
            throw EncoderError("encoder stopped accepting frames (" + std::string(std::strerror(err)) + "): " + log);
        }
        p += n;
        left -= static_cast<std::size_t>(n);
    }
    ++frames_;
}

fs::path VideoWriter::finish() {
    if (done_) return path_;
    if (frames_ == 0) {
        abort();
        throw InvalidSpec("a video needs at least one frame");
    }
    if (format_ == VideoFormat::image_sequence) {
        std::ofstream idx(path_ / kSequenceIndex);
        idx << Json{{"frames", frames_}, {"fps", fps_}, {"width", width_}, {"height", height_}}.dump() << '\n';
        if (!idx) {
            abort();
            throw IoError("cannot write sequence index in " + path_.string());
        }
        done_ = true;
        return path_;
    }
    ::close(fd_);
    fd_ = -1;
    const int code = wait_exit(pid_);
    pid_ = -1;
    const std::string log = fs::exists(log_path_) ? read_file(log_path_) : "";
    std::error_code ec;
    fs::remove(log_path_, ec);
    if (code != 0) {
        fs::remove(path_, ec);
        done_ = true;
        throw EncoderError("encoder exited with status " + std::to_string(code) + ": " + tail(log));
    }
    done_ = true;
    return path_;
}

void VideoWriter::abort() noexcept {
    done_ = true;
    if (fd_ >= 0) {
        ::close(fd_);
        fd_ = -1;
    }
    if (pid_ > 0) {
        ::kill(pid_, SIGKILL);
        wait_exit(pid_);
        pid_ = -1;
    }
    std::error_code ec;
    if (!log_path_.empty()) fs::remove(log_path_, ec);
    fs::remove_all(path_, ec);
}

fs::path encode_video(const std::vector<render::Image>& frames, int fps, const EncoderConfig& cfg, const fs::path& stem) {
    if (frames.empty()) throw InvalidSpec("a video needs at least one frame");
    VideoWriter w(stem, frames.front().width, frames.front().height, fps, cfg);
    for (const auto& f : frames) w.write(f);
    return w.finish();
}

VideoProbe probe_video(const fs::path& path, const EncoderConfig& cfg) {
    if (!fs::exists(path)) throw IoError("video not found: " + path.string());
    VideoProbe p;
    if (fs::is_directory(path)) {
        p.format = VideoFormat::image_sequence;
        const fs::path idx = path / kSequenceIndex;
        if (!fs::exists(idx)) throw IoError("image sequence without index: " + path.string());
        Json j;
        try {
            j = Json::parse(read_file(idx));
        } catch (const Json::exception& e) {
            throw IoError("corrupt sequence index in " + path.string() + ": " + e.what());
        }
        p.fps = j.at("fps").get<double>();
        int n = 0;
        while (fs::exists(path / frame_name(n))) ++n;
        p.frames = n;
        if (n == 0) throw IoError("image sequence has no frames: " + path.string());
        const auto first = read_png(path / frame_name(0));
        p.width = first.width;
        p.height = first.height;
        return p;
    }
    if (!find_executable(cfg.encoder))
        throw EncoderMissing("probing mp4 files needs '" + cfg.encoder + "' on PATH");
    // Decode every frame so truncated or corrupt streams are caught.
    const auto [code, out] =
        run_capture({cfg.encoder, "-hide_banner", "-nostdin", "-v", "info", "-stats", "-i", path.string(), "-map",
                     "0:v:0", "-f", "null", "-"});
    if (code != 0) throw IoError("unreadable video " + path.string() + ": " + tail(out, 600));
    std::smatch m;
    static const std::regex kStream(R"(Video: [^\n]*?, (\d+)x(\d+)[^\n]*?, ([\d.]+) fps)");
    if (!std::regex_search(out, m, kStream)) throw IoError("no video stream in " + path.string());
    p.width = std::stoi(m[1]);
    p.height = std::stoi(m[2]);
    p.fps = std::stod(m[3]);
    static const std::regex kFrame(R"(frame=\s*(\d+))");
    for (auto it = std::sregex_iterator(out.begin(), out.end(), kFrame); it != std::sregex_iterator(); ++it)
        p.frames = std::stoi((*it)[1]);
    if (p.frames == 0) throw IoError("no decodable frames in " + path.string());
    return p;
}

void write_png(const fs::path& path, const render::Image& img, int compression) {
    std::FILE* f = std::fopen(path.c_str(), "wb");
    if (!f) throw IoError("cannot write " + path.string());
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info || setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        std::fclose(f);
        throw IoError("PNG encoding failed for " + path.string());
    }
    png_init_io(png, f);
    png_set_compression_level(png, compression);
    png_set_IHDR(png, info, static_cast<png_uint_32>(img.width), static_cast<png_uint_32>(img.height), 8,
                 PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (int y = 0; y < img.height; ++y)
        png_write_row(png, img.rgb.data() + static_cast<std::size_t>(y) * static_cast<std::size_t>(img.width) * 3);
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    if (std::fclose(f) != 0) throw IoError("cannot write " + path.string());
}

render::Image read_png(const fs::path& path) {
    png_image image{};
    image.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_file(&image, path.c_str())) throw IoError("cannot read PNG " + path.string());
    image.format = PNG_FORMAT_RGB;
    render::Image out{static_cast<int>(image.width), static_cast<int>(image.height), {}};
    out.rgb.resize(PNG_IMAGE_SIZE(image));
    if (!png_image_finish_read(&image, nullptr, out.rgb.data(), 0, nullptr)) {
        png_image_free(&image);
        throw IoError("corrupt PNG " + path.string());
    }
    return out;
}

// ---- sidecars ----------------------------------------------------------------

Json render_config_to_json(const render::RenderConfig& c) { return render_json(c); }

render::RenderConfig render_config_from_json(const Json& j) {
    render::RenderConfig c;
    c.width = j.value("width", c.width);
    c.height = j.value("height", c.height);
    c.fps = j.value("fps", c.fps);
    if (j.contains("background")) c.background = rgb_from(j.at("background"));
    c.antialias = j.value("antialias", c.antialias);
    c.supersample = j.value("supersample", c.supersample);
    c.timestamp_longterm = j.value("timestamp_longterm", c.timestamp_longterm);
    c.timestamp_shortterm = j.value("timestamp_shortterm", c.timestamp_shortterm);
    return c;
}

Json sidecar_to_json(const Sidecar& s) {
    Json events = Json::array();
    for (const auto& e : s.events) events.push_back(event_to_json(e, s.video.fps));
    Json j{{"schema_version", s.schema_version},
           {"generator_version", s.generator_version},
           {"seed", s.seed},
           {"kind", s.long_term() ? "long_term" : "short_term"},
           {"scene", s.scene ? Json(*s.scene) : Json(nullptr)},
           {"script", s.script ? Json(*s.script) : Json(nullptr)},
           {"events", std::move(events)},
           {"answer", s.answer},
           {"answer_space", s.answer_space},
           {"fields", s.fields},
           {"video",
            {{"path", s.video.path},
             {"format", to_string(s.video.format)},
             {"frame_count", s.video.frame_count},
             {"fps", s.video.fps},
             {"width", s.video.width},
             {"height", s.video.height}}},
           {"encoder", s.encoder},
           {"render", render_json(s.render)}};
    if (s.script) {
        j["initial_state"] = render_state(s.script->initial);
        j["final_state"] = render_state(s.script->final_state);
    }
    return j;
}

Sidecar sidecar_from_json(const Json& j) {
    try {
        Sidecar s;
        s.schema_version = j.at("schema_version").get<int>();
        if (s.schema_version != kSchemaVersion)
            throw InvalidSpec("unsupported sidecar schema version " + std::to_string(s.schema_version));
        s.generator_version = j.at("generator_version").get<std::string>();
        s.seed = j.at("seed").get<std::uint64_t>();
        if (!j.at("scene").is_null()) s.scene = j.at("scene").get<SceneSpec>();
        if (!j.at("script").is_null()) s.script = j.at("script").get<ScenarioScript>();
        s.events = j.at("events").get<std::vector<EventRecord>>();
        s.answer = j.at("answer").get<std::string>();
        s.answer_space = j.at("answer_space").get<std::vector<std::string>>();
        s.fields = j.at("fields").get<std::map<std::string, std::string>>();
        const auto& v = j.at("video");
        s.video = {v.at("path").get<std::string>(), video_format_from_string(v.at("format").get<std::string>()),
                   v.at("frame_count").get<int>(), v.at("fps").get<int>(), v.at("width").get<int>(),
                   v.at("height").get<int>()};
        s.encoder = j.at("encoder").get<EncoderConfig>();
        s.render = render_from(j.at("render"));
        return s;
    } catch (const Json::exception& e) {
        throw InvalidSpec(std::string("malformed sidecar: ") + e.what());
    }
}

void write_metadata(const Sidecar& s, const fs::path& path) {
    if (!events_sorted(s.events)) throw InvalidSpec("sidecar events must be sorted");
    if (!path.parent_path().empty()) {
        std::error_code ec;
        fs::create_directories(path.parent_path(), ec);
    }
    const fs::path tmp = fs::path(path.string() + ".tmp");
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot write metadata to " + path.string());
        out << sidecar_to_json(s).dump(2) << '\n';
        if (!out) throw IoError("cannot write metadata to " + path.string());
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) throw IoError("cannot write metadata to " + path.string() + ": " + ec.message());
}

Sidecar read_metadata(const fs::path& path) {
    Json j;
    try {
        j = Json::parse(read_file(path));
    } catch (const Json::exception& e) {
        throw IoError("cannot parse " + path.string() + ": " + e.what());
    }
    return sidecar_from_json(j);
}

// ---- manifests ---------------------------------------------------------------

Json manifest_record(const QASample& s) {
    Json j = s;
    j["format_version"] = kManifestFormatVersion;
    return j;
}

QASample sample_from_record(const Json& j) {
    const int v = j.value("format_version", 0);
    if (v != kManifestFormatVersion) throw InvalidSpec("unsupported manifest format_version " + std::to_string(v));
    return j.get<QASample>();
}

ManifestWriteReport write_manifest(const std::vector<QASample>& samples, const fs::path& path, bool strict) {
    std::set<std::string> ids;
    std::vector<std::string> dups;
    for (const auto& s : samples)
        if (!ids.insert(s.id).second) dups.push_back(s.id);
    if (!dups.empty()) {
        std::string msg = "duplicate sample ids:";
        for (const auto& d : dups) msg += " " + d;
        throw InvalidSpec(msg);
    }
    ManifestWriteReport report;
    const fs::path root = path.parent_path();
    for (const auto& s : samples)
        for (const auto* p : {&s.video_path, &s.metadata_path})
            if (p->empty() || !fs::exists(root / *p)) report.dangling.push_back(s.id + ": " + *p);
    if (strict && !report.dangling.empty())
        throw IoError("manifest references missing files: " + report.dangling.front() +
                      (report.dangling.size() > 1 ? " (+" + std::to_string(report.dangling.size() - 1) + " more)" : ""));

    if (!root.empty()) fs::create_directories(root);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write manifest " + path.string());
    for (const auto& s : samples) {
        out << manifest_record(s).dump() << '\n';
        ++report.records;
    }
    if (!out) throw IoError("cannot write manifest " + path.string());
    return report;
}

std::vector<QASample> read_manifest(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read manifest " + path.string());
    std::vector<QASample> out;
    std::string line;
    int n = 0;
    while (std::getline(in, line)) {
        ++n;
        if (line.empty()) continue;
        try {
            out.push_back(sample_from_record(Json::parse(line)));
        } catch (const std::exception& e) {
            throw IoError(path.string() + ":" + std::to_string(n) + ": " + e.what());
        }
    }
    return out;
}

JsonlAppender::JsonlAppender(const fs::path& path, bool truncate) {
    if (!path.parent_path().empty()) fs::create_directories(path.parent_path());
    f_ = std::fopen(path.c_str(), truncate ? "wb" : "ab");
    if (!f_) throw IoError("cannot open " + path.string());
}

JsonlAppender::~JsonlAppender() {
    if (f_) std::fclose(f_);
}

void JsonlAppender::append(const Json& record) {
    const std::string line = record.dump() + "\n";
    std::lock_guard lock(mu_);
    if (std::fwrite(line.data(), 1, line.size(), f_) != line.size() || std::fflush(f_) != 0)
        throw IoError("append failed");
}

std::vector<Json> read_jsonl(const fs::path& path) {
    std::vector<Json> out;
    if (!fs::exists(path)) return out;
    const std::string text = read_file(path);
    std::size_t pos = 0;
    int n = 0;
    while (pos < text.size()) {
        const auto nl = text.find('\n', pos);
        const bool last = nl == std::string::npos;
        const std::string line = text.substr(pos, last ? std::string::npos : nl - pos);
        pos = last ? text.size() : nl + 1;
        ++n;
        if (line.empty()) continue;
        try {
            out.push_back(Json::parse(line));
        } catch (const Json::exception& e) {
            if (last) break;  // interrupted final write
            throw IoError(path.string() + ":" + std::to_string(n) + ": " + e.what());
        }
    }
    return out;
}

}  // namespace primvid
