#pragma once
// The cloud-side reasoner that receives the query and the selected keyframes.

#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include <json.hpp>

#include "venus/core_types.hpp"

namespace venus {

enum class ReasonerBackend { stub, http };

struct ReasonerDescriptor {
    ReasonerBackend backend = ReasonerBackend::stub;
    std::string endpoint;
    std::string model = "vlm";
    double timeout_s = 60.0;
    int max_retries = 2;
};

class Reasoner {
public:
    virtual ~Reasoner() = default;
    /// Throws std::invalid_argument for an empty keyframe list and
    /// TransportError for backend failures.
    virtual std::string reason(const std::string& query, const std::vector<Frame>& keyframes) = 0;
};

/// What the stub received for one call.
struct ReasonerPayload {
    std::string query;
    std::vector<FrameId> frame_ids;
    std::vector<double> timestamps;
    std::uint64_t digest = 0;
};

/// 64-bit FNV-1a over the query and every frame (id, timestamp, size, pixels).
std::uint64_t payload_digest(const std::string& query, const std::vector<Frame>& keyframes);

/// Answers "answered with <k> frames, digest <16 hex digits>" and keeps every payload.
class StubReasoner final : public Reasoner {
public:
    std::string reason(const std::string& query, const std::vector<Frame>& keyframes) override;
    std::vector<ReasonerPayload> payloads() const;

private:
    mutable std::mutex mutex_;
    std::vector<ReasonerPayload> payloads_;
};

/// OpenAI-compatible chat completion: POST <endpoint>/v1/chat/completions with a
/// single user message holding the query text followed by base64 PNG image parts
/// in the given order. The answer is choices[0].message.content.
class HttpReasoner final : public Reasoner {
public:
    explicit HttpReasoner(ReasonerDescriptor descriptor);
    std::string reason(const std::string& query, const std::vector<Frame>& keyframes) override;

    static nlohmann::json build_request(const std::string& model, const std::string& query,
                                        const std::vector<Frame>& keyframes);
    /// Extracts the answer text; throws TransportError on an unexpected shape.
    static std::string parse_response(const std::string& body);

private:
    ReasonerDescriptor descriptor_;
    std::string base_url_;
    std::string path_prefix_;
};

std::unique_ptr<Reasoner> make_reasoner(const ReasonerDescriptor& descriptor);

}  // namespace venus
