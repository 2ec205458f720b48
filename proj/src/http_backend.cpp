#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>
#include <openssl/evp.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "primvid/cot.hpp"
#include "primvid/error.hpp"

namespace primvid::cot {

namespace {

std::string base64_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read frame " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    const std::string raw = ss.str();
    std::string out(4 * ((raw.size() + 2) / 3) + 1, '\0');
    const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                                  reinterpret_cast<const unsigned char*>(raw.data()), static_cast<int>(raw.size()));
    out.resize(static_cast<std::size_t>(n));
    return out;
}

class HttpBackend : public ChatBackend {
public:
    explicit HttpBackend(HttpBackendConfig cfg) : cfg_(std::move(cfg)) {
        if (cfg_.endpoint.rfind("http://", 0) != 0 && cfg_.endpoint.rfind("https://", 0) != 0)
            throw InvalidSpec("backend endpoint must start with http:// or https://: " + cfg_.endpoint);
        if (cfg_.model.empty()) throw InvalidSpec("backend model name is empty");
    }

    std::string name() const override { return "http:" + cfg_.model; }

    std::string send(const ChatRequest& r) override {
        Json content = Json::array();
        content.push_back({{"type", "text"}, {"text", r.prompt}});
        if (r.video_path)
            content.push_back({{"type", "video_url"}, {"video_url", {{"url", "file://" + *r.video_path}}}});
        for (const auto& f : r.frame_paths)
            content.push_back(
                {{"type", "image_url"}, {"image_url", {{"url", "data:image/png;base64," + base64_file(f)}}}});
        const Json body = {{"model", cfg_.model},
                           {"max_tokens", cfg_.max_tokens},
                           {"temperature", cfg_.temperature},
                           {"messages", Json::array({{{"role", "user"}, {"content", content}}})}};

        httplib::Client client(cfg_.endpoint);
        client.set_connection_timeout(cfg_.timeout_s, 0);
        client.set_read_timeout(cfg_.timeout_s, 0);
        client.set_write_timeout(cfg_.timeout_s, 0);
        httplib::Headers headers;
        if (const char* key = std::getenv(cfg_.api_key_env.c_str()); key && *key)
            headers.emplace("Authorization", std::string("Bearer ") + key);

        auto res = client.Post(cfg_.path, headers, body.dump(), "application/json");
        if (!res) throw BackendError("request to " + cfg_.endpoint + " failed: " + httplib::to_string(res.error()));
        if (res->status == 401 || res->status == 403)
            throw BackendError("authentication rejected by " + cfg_.endpoint + " (HTTP " + std::to_string(res->status) +
                               "); check $" + cfg_.api_key_env);
        if (res->status != 200)
            throw BackendError("HTTP " + std::to_string(res->status) + " from " + cfg_.endpoint + ": " +
                               res->body.substr(0, 300));
        try {
            const auto j = Json::parse(res->body);
            const auto& msg = j.at("choices").at(0).at("message").at("content");
            return msg.is_null() ? std::string() : msg.get<std::string>();
        } catch (const Json::exception& e) {
            throw BackendError(std::string("malformed chat response: ") + e.what());
        }
    }

private:
    HttpBackendConfig cfg_;
};

}  // namespace

std::unique_ptr<ChatBackend> make_http_backend(const HttpBackendConfig& cfg) {
    return std::make_unique<HttpBackend>(cfg);
}

}  // namespace primvid::cot
