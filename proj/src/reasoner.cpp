#include "venus/reasoner.hpp"

#include <cstdio>
#include <cstring>
#include <thread>

#include <httplib.h>

#include "venus/embedding.hpp"
#include "venus/image_io.hpp"
#include "venus/rng.hpp"

namespace venus {

std::uint64_t payload_digest(const std::string& query, const std::vector<Frame>& keyframes) {
    std::uint64_t h = rng::fnv1a(query);
    auto mix = [&h](const void* p, std::size_t n) {
        h = rng::fnv1a(std::string_view(static_cast<const char*>(p), n), h);
    };
    for (const Frame& f : keyframes) {
        mix(&f.frame_id, sizeof f.frame_id);
        mix(&f.timestamp, sizeof f.timestamp);
        mix(&f.width, sizeof f.width);
        mix(&f.height, sizeof f.height);
        mix(f.pixels.data(), f.pixels.size());
    }
    return h;
}

std::string StubReasoner::reason(const std::string& query, const std::vector<Frame>& keyframes) {
    if (keyframes.empty()) throw std::invalid_argument("reasoner: no keyframes");
    ReasonerPayload p;
    p.query = query;
    for (const Frame& f : keyframes) {
        p.frame_ids.push_back(f.frame_id);
        p.timestamps.push_back(f.timestamp);
    }
    p.digest = payload_digest(query, keyframes);

    char hex[17];
    std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(p.digest));
    std::string answer =
        "answered with " + std::to_string(keyframes.size()) + " frames, digest " + hex;
    std::lock_guard lock(mutex_);
    payloads_.push_back(std::move(p));
    return answer;
}

std::vector<ReasonerPayload> StubReasoner::payloads() const {
    std::lock_guard lock(mutex_);
    return payloads_;
}

HttpReasoner::HttpReasoner(ReasonerDescriptor descriptor) : descriptor_(std::move(descriptor)) {
    if (descriptor_.endpoint.empty()) throw std::invalid_argument("http reasoner: empty endpoint");
    std::tie(base_url_, path_prefix_) = split_endpoint(descriptor_.endpoint);
}

nlohmann::json HttpReasoner::build_request(const std::string& model, const std::string& query,
                                           const std::vector<Frame>& keyframes) {
    nlohmann::json content = nlohmann::json::array();
    content.push_back({{"type", "text"}, {"text", query}});
    for (const Frame& f : keyframes) {
        content.push_back(
            {{"type", "image_url"},
             {"image_url",
              {{"url", "data:image/png;base64," + image::base64_encode(image::encode_png(f))}}}});
    }
    return {{"model", model},
            {"messages", nlohmann::json::array({{{"role", "user"}, {"content", content}}})}};
}

std::string HttpReasoner::parse_response(const std::string& body) {
    try {
        const auto j = nlohmann::json::parse(body);
        return j.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw TransportError(std::string("malformed chat completion response: ") + e.what(), 1);
    }
}

std::string HttpReasoner::reason(const std::string& query, const std::vector<Frame>& keyframes) {
    if (keyframes.empty()) throw std::invalid_argument("reasoner: no keyframes");
    const std::string body = build_request(descriptor_.model, query, keyframes).dump();

    httplib::Client client(base_url_);
    const auto timeout = std::chrono::duration_cast<std::chrono::microseconds>(
        std::chrono::duration<double>(descriptor_.timeout_s));
    client.set_connection_timeout(timeout);
    client.set_read_timeout(timeout);
    client.set_write_timeout(timeout);

    const int attempts = descriptor_.max_retries + 1;
    std::string last_error;
    for (int attempt = 1; attempt <= attempts; ++attempt) {
        auto res = client.Post(path_prefix_ + "/v1/chat/completions", body, "application/json");
        if (!res) {
            last_error = "chat completion request failed: " + httplib::to_string(res.error());
        } else if (res->status == 200) {
            return parse_response(res->body);
        } else {
            last_error = "chat completion returned HTTP " + std::to_string(res->status);
            if (res->status < 500 && res->status != 429) throw TransportError(last_error, attempt);
        }
        if (attempt < attempts) {
            std::this_thread::sleep_for(std::chrono::milliseconds(100 * attempt));
        }
    }
    throw TransportError(last_error, attempts);
}

std::unique_ptr<Reasoner> make_reasoner(const ReasonerDescriptor& descriptor) {
    if (descriptor.backend == ReasonerBackend::http) return std::make_unique<HttpReasoner>(descriptor);
    return std::make_unique<StubReasoner>();
}

}  // namespace venus
