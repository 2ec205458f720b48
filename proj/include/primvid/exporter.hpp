#pragma once

// Video encoding through an external encoder process, image-sequence
// fallback, metadata sidecars and JSONL manifests.

#include <cstdio>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "primvid/qa.hpp"
#include "primvid/render.hpp"
#include "primvid/serialize.hpp"

namespace primvid {

namespace fs = std::filesystem;

enum class VideoFormat { mp4, image_sequence };
std::string_view to_string(VideoFormat f);
VideoFormat video_format_from_string(std::string_view s);

struct EncoderConfig {
    std::string encoder = "ffmpeg";
    std::string codec = "libx264";
    int crf = 18;
    std::string preset = "veryfast";
    std::string pixel_format = "yuv420p";
    /// Write PNG sequences instead of invoking the encoder.
    bool image_sequence = false;
    /// Fall back to PNG sequences when the encoder binary is missing.
    bool fallback_to_images = false;
    int png_compression = 1;

    friend bool operator==(const EncoderConfig&, const EncoderConfig&) = default;
};
void to_json(Json& j, const EncoderConfig& c);
void from_json(const Json& j, EncoderConfig& c);

/// Resolves `name` against PATH (or checks it directly if it has a slash).
std::optional<fs::path> find_executable(const std::string& name);

/// Path a video gets for a format: "<stem>.mp4" or "<stem>.frames".
fs::path video_path_for(const fs::path& stem, VideoFormat format);
/// Sidecar path: the video path with its extension replaced by ".json".
fs::path sidecar_path_for(const fs::path& video_path);

/// Streams frames into one output video. Frames are packed RGB24.
class VideoWriter {
public:
    /// `stem` is the output path without extension. Throws EncoderMissing
    /// (naming the tool and the fallback flag) when the encoder is absent
    /// and fallback is off.
    VideoWriter(const fs::path& stem, int width, int height, int fps, const EncoderConfig& cfg);
    ~VideoWriter();
    VideoWriter(const VideoWriter&) = delete;
    VideoWriter& operator=(const VideoWriter&) = delete;

    void write(const render::Image& frame);
    /// Waits for the encoder; throws EncoderError with its diagnostics on
    /// failure (after removing the partial output).
    fs::path finish();

    VideoFormat format() const { return format_; }
    const fs::path& path() const { return path_; }
    int frames_written() const { return frames_; }

private:
    void abort() noexcept;

    fs::path path_;
    fs::path log_path_;
    VideoFormat format_ = VideoFormat::mp4;
    int width_, height_, fps_;
    int png_level_ = 1;
    int frames_ = 0;
    int pid_ = -1;
    int fd_ = -1;
    bool done_ = false;
};

/// Encodes all frames; returns the written path.
fs::path encode_video(const std::vector<render::Image>& frames, int fps, const EncoderConfig& cfg, const fs::path& stem);

struct VideoProbe {
    VideoFormat format = VideoFormat::mp4;
    int frames = 0;
    double fps = 0.0;
    int width = 0;
    int height = 0;
};
/// Inspects an emitted video (decoding mp4 through the encoder binary).
/// Throws IoError if the file is missing or unreadable.
VideoProbe probe_video(const fs::path& path, const EncoderConfig& cfg = {});

/// PNG helpers for image sequences.
void write_png(const fs::path& path, const render::Image& img, int compression = 1);
render::Image read_png(const fs::path& path);

// ---- sidecars ----------------------------------------------------------------

Json render_config_to_json(const render::RenderConfig& c);
/// Missing keys keep their defaults.
render::RenderConfig render_config_from_json(const Json& j);


struct VideoInfo {
    std::string path;  // relative to the dataset root
    VideoFormat format = VideoFormat::mp4;
    int frame_count = 0;
    int fps = 30;
    int width = 448;
    int height = 448;
    friend bool operator==(const VideoInfo&, const VideoInfo&) = default;
};

/// Per-video metadata document.
struct Sidecar {
    int schema_version = kSchemaVersion;
    std::string generator_version{kGeneratorVersion};
    std::uint64_t seed = 0;
    std::optional<SceneSpec> scene;        // short-term
    std::optional<ScenarioScript> script;  // long-term
    std::vector<EventRecord> events;
    std::string answer;
    std::vector<std::string> answer_space;
    std::map<std::string, std::string> fields;
    VideoInfo video;
    EncoderConfig encoder;
    render::RenderConfig render;

    bool long_term() const { return script.has_value(); }
    friend bool operator==(const Sidecar&, const Sidecar&) = default;
};
Json sidecar_to_json(const Sidecar& s);
Sidecar sidecar_from_json(const Json& j);

/// Throws InvalidSpec if events are unsorted, IoError if unwritable.
void write_metadata(const Sidecar& s, const fs::path& path);
Sidecar read_metadata(const fs::path& path);

// ---- manifests ---------------------------------------------------------------

inline constexpr int kManifestFormatVersion = 1;

Json manifest_record(const QASample& s);
QASample sample_from_record(const Json& j);

struct ManifestWriteReport {
    int records = 0;
    std::vector<std::string> dangling;  // "<id>: <path>"
};

/// Writes one record per line. Paths are resolved against the manifest's
/// directory. Throws InvalidSpec on duplicate ids; dangling references are
/// reported (and fatal when `strict`).
ManifestWriteReport write_manifest(const std::vector<QASample>& samples, const fs::path& path, bool strict = false);
/// Throws IoError naming the line on malformed records.
std::vector<QASample> read_manifest(const fs::path& path);

/// Thread-safe line appender for JSONL files.
class JsonlAppender {
public:
    explicit JsonlAppender(const fs::path& path, bool truncate = false);
    ~JsonlAppender();
    JsonlAppender(const JsonlAppender&) = delete;
    JsonlAppender& operator=(const JsonlAppender&) = delete;
    void append(const Json& record);

private:
    std::mutex mu_;
    std::FILE* f_ = nullptr;
};

/// Reads a JSONL file; a truncated final line (from an interrupted writer)
/// is skipped, other malformed lines throw IoError.
std::vector<Json> read_jsonl(const fs::path& path);

}  // namespace primvid
