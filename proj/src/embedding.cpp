#include "venus/embedding.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <limits>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "venus/image_io.hpp"
#include "venus/rng.hpp"

namespace venus {

// ---------------------------------------------------------------------------
// Auxiliary prompt and detectors

std::string build_aux_prompt(std::span<const AuxDetection> detections) {
    std::vector<std::string> labels;
    std::vector<std::string> texts;
    for (const auto& d : detections) {
        if (d.confidence < kAuxConfidenceFloor || d.value.empty()) continue;
        (d.kind == AuxKind::object_label ? labels : texts).push_back(d.value);
    }
    if (labels.empty() && texts.empty()) return {};
    std::sort(labels.begin(), labels.end());

    std::string out = "objects: ";
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (i) out += ", ";
        out += labels[i];
    }
    out += "; text:";
    for (std::size_t i = 0; i < texts.size(); ++i) {
        out += i ? ", " : " ";
        out += texts[i];
    }
    return out;
}

namespace {

struct NamedColor {
    const char* name;
    std::uint8_t r, g, b;
};

// Palette order decides per-pixel ties; the reported label tie-break is by name.
constexpr std::array<NamedColor, 9> kPalette = {{
    {"black", 0, 0, 0},
    {"white", 255, 255, 255},
    {"gray", 128, 128, 128},
    {"red", 255, 0, 0},
    {"green", 0, 255, 0},
    {"blue", 0, 0, 255},
    {"yellow", 255, 255, 0},
    {"cyan", 0, 255, 255},
    {"magenta", 255, 0, 255},
}};

// Color words the mock text encoder aligns with solid-color images.
constexpr std::array<NamedColor, 5> kAlignedColors = {{
    {"red", 255, 0, 0},
    {"green", 0, 255, 0},
    {"blue", 0, 0, 255},
    {"black", 0, 0, 0},
    {"white", 255, 255, 255},
}};

Frame solid_frame(std::uint8_t r, std::uint8_t g, std::uint8_t b) {
    Frame f;
    f.width = f.height = 1;
    f.pixels = {r, g, b};
    return f;
}

std::vector<double> normalize(std::vector<double> v) {
    double sq = 0.0;
    for (double x : v) sq += x * x;
    const double n = std::sqrt(sq);
    if (n > 0.0) {
        for (double& x : v) x /= n;
    }
    return v;
}

}  // namespace

std::vector<AuxDetection> dominant_color_detector(const Frame& frame) {
    require_valid(frame);
    std::array<std::size_t, kPalette.size()> counts{};
    for (std::size_t i = 0; i < frame.pixel_count(); ++i) {
        const auto* px = &frame.pixels[i * 3];
        std::size_t best = 0;
        int best_d = std::numeric_limits<int>::max();
        for (std::size_t c = 0; c < kPalette.size(); ++c) {
            const int dr = px[0] - kPalette[c].r;
            const int dg = px[1] - kPalette[c].g;
            const int db = px[2] - kPalette[c].b;
            const int d = dr * dr + dg * dg + db * db;
            if (d < best_d) {
                best_d = d;
                best = c;
            }
        }
        ++counts[best];
    }
    std::size_t winner = 0;
    for (std::size_t c = 1; c < kPalette.size(); ++c) {
        if (counts[c] > counts[winner] ||
            (counts[c] == counts[winner] &&
             std::string_view(kPalette[c].name) < std::string_view(kPalette[winner].name))) {
            winner = c;
        }
    }
    const double confidence =
        static_cast<double>(counts[winner]) / static_cast<double>(frame.pixel_count());
    return {AuxDetection{AuxKind::object_label, kPalette[winner].name, confidence}};
}

AuxModels AuxModels::stub() {
    AuxModels m;
    m.add(dominant_color_detector);
    return m;
}

std::vector<AuxDetection> AuxModels::run(const Frame& frame) const {
    std::vector<AuxDetection> out;
    for (const auto& d : detectors_) {
        auto found = d(frame);
        out.insert(out.end(), found.begin(), found.end());
    }
    return out;
}

// ---------------------------------------------------------------------------
// Mock embedder

namespace {
constexpr std::uint64_t kProjectionSeed = 0x56454E5553'4D454DULL;  // "VENUSMEM"
constexpr std::uint64_t kTokenSeed = 0x544F4B454E'53ULL;

// Uniform in [-1, 1], exact in binary.
double signed_unit(std::uint64_t& state) {
    return static_cast<double>(rng::splitmix64(state) >> 11) * 0x1.0p-52 - 1.0;
}
}  // namespace

MockEmbedder::MockEmbedder(std::uint32_t dimension) : dimension_(dimension) {
    if (dimension_ < 8) throw std::invalid_argument("mock embedder: dimension must be at least 8");
    projection_.resize(static_cast<std::size_t>(dimension_) * kFeatureLength);
    std::uint64_t state = kProjectionSeed;
    for (double& x : projection_) x = signed_unit(state);
}

std::vector<double> MockEmbedder::image_features(const Frame& frame) {
    require_valid(frame);
    std::vector<double> f(kFeatureLength, 0.0);
    const std::size_t n = frame.pixel_count();
    double sum[3] = {0, 0, 0};
    double sq[3] = {0, 0, 0};
    for (std::size_t i = 0; i < n; ++i) {
        const auto* px = &frame.pixels[i * 3];
        const std::size_t bin = (px[0] >> 6) * 16 + (px[1] >> 6) * 4 + (px[2] >> 6);
        f[bin] += 1.0;
        for (int c = 0; c < 3; ++c) {
            const double v = px[c] / 255.0;
            sum[c] += v;
            sq[c] += v * v;
        }
    }
    const double inv = 1.0 / static_cast<double>(n);
    for (std::size_t b = 0; b < kHistogramBins; ++b) f[b] *= inv;
    for (int c = 0; c < 3; ++c) {
        const double mean = sum[c] * inv;
        f[kHistogramBins + c] = mean;
        f[kHistogramBins + 3 + c] = std::max(0.0, sq[c] * inv - mean * mean);
    }
    return f;
}

std::vector<std::string> MockEmbedder::tokenize(const std::string& text) {
    std::vector<std::string> tokens;
    std::string cur;
    for (char ch : text) {
        const auto c = static_cast<unsigned char>(ch);
        if (std::isalnum(c)) {
            cur.push_back(static_cast<char>(std::tolower(c)));
        } else if (!cur.empty()) {
            tokens.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) tokens.push_back(std::move(cur));
    return tokens;
}

std::vector<double> MockEmbedder::project(const std::vector<double>& features) const {
    std::vector<double> out(dimension_, 0.0);
    for (std::size_t r = 0; r < dimension_; ++r) {
        const double* row = &projection_[r * kFeatureLength];
        double acc = 0.0;
        for (std::size_t k = 0; k < kFeatureLength; ++k) acc += row[k] * features[k];
        out[r] = acc;
    }
    return out;
}

std::vector<double> MockEmbedder::token_vector(const std::string& token) const {
    for (const auto& c : kAlignedColors) {
        if (token == c.name) return normalize(project(image_features(solid_frame(c.r, c.g, c.b))));
    }
    std::uint64_t state = rng::fnv1a(token, kTokenSeed);
    std::vector<double> v(dimension_);
    for (double& x : v) x = signed_unit(state);
    return normalize(std::move(v));
}

std::vector<double> MockEmbedder::bag_of_tokens(const std::string& text) const {
    const auto tokens = tokenize(text);
    if (tokens.empty()) return {};
    std::vector<double> bag(dimension_, 0.0);
    for (const auto& t : tokens) {
        const auto v = token_vector(t);
        for (std::size_t i = 0; i < bag.size(); ++i) bag[i] += v[i];
    }
    return bag;
}

EmbeddingVector MockEmbedder::embed_image(const Frame& frame, const std::string& aux_prompt) const {
    std::vector<double> v = normalize(project(image_features(frame)));
    const auto bag = bag_of_tokens(aux_prompt);
    if (!bag.empty()) {
        const auto text = normalize(bag);
        for (std::size_t i = 0; i < v.size(); ++i) v[i] += kPromptWeight * text[i];
    }
    return EmbeddingVector::normalized(v);
}

EmbeddingVector MockEmbedder::embed_text(const std::string& query) const {
    const auto bag = bag_of_tokens(query);
    if (bag.empty()) throw std::invalid_argument("empty query");
    return EmbeddingVector::normalized(bag);
}

// ---------------------------------------------------------------------------
// HTTP embedder

std::pair<std::string, std::string> split_endpoint(const std::string& endpoint) {
    const auto scheme = endpoint.find("://");
    const auto host_start = scheme == std::string::npos ? 0 : scheme + 3;
    const auto slash = endpoint.find('/', host_start);
    if (slash == std::string::npos) return {endpoint, ""};
    std::string prefix = endpoint.substr(slash);
    while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
    return {endpoint.substr(0, slash), prefix};
}

HttpEmbedder::HttpEmbedder(EmbedderDescriptor descriptor)
    : descriptor_(std::move(descriptor)),
      in_flight_(std::max(1, descriptor_.max_in_flight)) {
    if (descriptor_.endpoint.empty()) throw std::invalid_argument("http embedder: empty endpoint");
    std::tie(base_url_, path_prefix_) = split_endpoint(descriptor_.endpoint);
}

EmbeddingVector HttpEmbedder::post(const std::string& body) const {
    in_flight_.acquire();
    struct Release {
        std::counting_semaphore<>& s;
        ~Release() { s.release(); }
    } release{in_flight_};

    httplib::Client client(base_url_);
    const auto timeout = std::chrono::duration<double>(descriptor_.timeout_s);
    client.set_connection_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
    client.set_read_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));
    client.set_write_timeout(std::chrono::duration_cast<std::chrono::microseconds>(timeout));

    const int attempts = descriptor_.max_retries + 1;
    std::string last_error;
    for (int attempt = 1; attempt <= attempts; ++attempt) {
        auto res = client.Post(path_prefix_ + "/embed", body, "application/json");
        if (!res) {
            last_error = "embedding request failed: " + httplib::to_string(res.error());
        } else if (res->status != 200) {
            last_error = "embedding service returned HTTP " + std::to_string(res->status);
            // Client errors will not improve on retry.
            if (res->status < 500) throw TransportError(last_error, attempt);
        } else {
            nlohmann::json reply;
            try {
                reply = nlohmann::json::parse(res->body);
            } catch (const nlohmann::json::exception& e) {
                throw TransportError(std::string("malformed embedding response: ") + e.what(),
                                     attempt);
            }
            if (!reply.contains("vector") || !reply["vector"].is_array()) {
                throw TransportError("embedding response lacks a vector", attempt);
            }
            const auto raw = reply["vector"].get<std::vector<double>>();
            if (raw.size() != descriptor_.dimension) {
                throw std::runtime_error("embedding dimension mismatch: got " +
                                         std::to_string(raw.size()) + ", expected " +
                                         std::to_string(descriptor_.dimension));
            }
            return EmbeddingVector::normalized(raw);
        }
        if (attempt < attempts) {
            std::this_thread::sleep_for(std::chrono::milliseconds(50 * attempt));
        }
    }
    throw TransportError(last_error, attempts);
}

EmbeddingVector HttpEmbedder::embed_image(const Frame& frame, const std::string& aux_prompt) const {
    const nlohmann::json body = {{"modality", "image"},
                                 {"data", image::base64_encode(image::encode_png(frame))},
                                 {"aux_prompt", aux_prompt}};
    return post(body.dump());
}

EmbeddingVector HttpEmbedder::embed_text(const std::string& query) const {
    if (std::all_of(query.begin(), query.end(),
                    [](unsigned char c) { return std::isspace(c); })) {
        throw std::invalid_argument("empty query");
    }
    const nlohmann::json body = {{"modality", "text"}, {"data", query}, {"aux_prompt", ""}};
    return post(body.dump());
}

std::unique_ptr<Embedder> make_embedder(const EmbedderDescriptor& descriptor) {
    switch (descriptor.backend) {
        case EmbedderBackend::mock: return std::make_unique<MockEmbedder>(descriptor.dimension);
        case EmbedderBackend::http: return std::make_unique<HttpEmbedder>(descriptor);
    }
    throw std::invalid_argument("unknown embedder backend");
}

}  // namespace venus
