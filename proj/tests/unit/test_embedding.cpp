#include <doctest.h>

#include <atomic>
#include <random>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "../support/fixtures.hpp"
#include "venus/embedding.hpp"
#include "venus/image_io.hpp"
#include "venus/rng.hpp"

using namespace venus;
using nlohmann::json;
using test::solid;

namespace {

Frame noisy_red_1pct() {
    Frame f = solid(16, 16, {255, 0, 0});
    rng::Engine e(1);
    for (auto& p : f.pixels) {
        const double v = p + (2.0 * rng::uniform01(e) - 1.0) * 2.55;
        p = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
    }
    return f;
}

/// Local embedding service for wire-level tests.
class FakeService {
public:
    explicit FakeService(std::uint32_t dim) : dim_(dim) {
        server_.Post("/v1/embed", [this](const httplib::Request& req, httplib::Response& res) {
            const int n = ++calls_;
            if (n <= fail_first_) {
                res.status = fail_status_;
                return;
            }
            last_body_ = json::parse(req.body);
            std::vector<double> v(reply_dim_ ? reply_dim_ : dim_, 0.0);
            v[static_cast<std::size_t>(n) % v.size()] = 2.0;
            res.set_content(json{{"vector", v}}.dump(), "application/json");
        });
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }
    ~FakeService() {
        server_.stop();
        thread_.join();
    }
    std::string endpoint() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1"; }

    std::atomic<int> calls_{0};
    int fail_first_ = 0;
    int fail_status_ = 503;
    std::uint32_t reply_dim_ = 0;
    json last_body_;

private:
    std::uint32_t dim_;
    httplib::Server server_;
    int port_ = 0;
    std::thread thread_;
};

EmbedderDescriptor http_descriptor(const std::string& endpoint, std::uint32_t dim) {
    EmbedderDescriptor d;
    d.backend = EmbedderBackend::http;
    d.endpoint = endpoint;
    d.dimension = dim;
    d.timeout_s = 2.0;
    d.max_retries = 2;
    return d;
}

}  // namespace

TEST_CASE("aux prompt template") {
    CHECK(build_aux_prompt({}) == "");
    const std::vector<AuxDetection> pets = {{AuxKind::object_label, "dog", 0.9},
                                            {AuxKind::object_label, "cat", 0.8}};
    CHECK(build_aux_prompt(pets) == "objects: cat, dog; text:");
    const std::vector<AuxDetection> exit = {{AuxKind::ocr_text, "EXIT", 0.95},
                                            {AuxKind::object_label, "door", 0.3}};
    CHECK(build_aux_prompt(exit) == "objects: ; text: EXIT");
    const std::vector<AuxDetection> ocr = {{AuxKind::ocr_text, "B", 0.5},
                                           {AuxKind::ocr_text, "A", 0.7},
                                           {AuxKind::object_label, "x", 0.49}};
    CHECK(build_aux_prompt(ocr) == "objects: ; text: B, A");
    const std::vector<AuxDetection> weak = {{AuxKind::object_label, "x", 0.1}};
    CHECK(build_aux_prompt(weak) == "");
}

TEST_CASE("stub detector reports the dominant color") {
    const auto red = dominant_color_detector(solid(4, 4, {255, 0, 0}));
    REQUIRE(red.size() == 1);
    CHECK(red[0].kind == AuxKind::object_label);
    CHECK(red[0].value == "red");
    CHECK(red[0].confidence == 1.0);

    Frame half = solid(4, 2, {255, 0, 0});
    for (std::size_t i = 4; i < 8; ++i) {
        half.pixels[i * 3] = 0;
        half.pixels[i * 3 + 2] = 255;
    }
    const auto tie = dominant_color_detector(half);
    CHECK(tie[0].value == "blue");
    CHECK(tie[0].confidence == 0.5);

    CHECK(AuxModels().run(solid(2, 2, {1, 2, 3})).empty());
    CHECK(AuxModels::stub().run(solid(2, 2, {250, 250, 250}))[0].value == "white");
}

TEST_CASE("mock embedder is deterministic and unit length") {
    const MockEmbedder m(256);
    std::mt19937_64 gen(2);
    for (int t = 0; t < 20; ++t) {
        const Frame f = test::random_frame(gen, 1 + gen() % 30, 1 + gen() % 30);
        const auto a = m.embed_image(f, "objects: red; text:");
        const auto b = MockEmbedder(256).embed_image(f, "objects: red; text:");
        CHECK(a == b);
        CHECK(a.dimension() == 256);
        CHECK(a.is_unit());
        CHECK(cosine(a, b) == doctest::Approx(1.0).epsilon(1e-12));
    }
    CHECK(m.embed_text("red") == m.embed_text("red"));
    CHECK(m.embed_text("  a  Dog ").is_unit());
    CHECK(MockEmbedder(8).embed_text("x").dimension() == 8);
    CHECK_THROWS_AS(MockEmbedder(4), std::invalid_argument);
}

TEST_CASE("mock embedder golden values") {
    const MockEmbedder m(256);
    const auto red = m.embed_image(solid(16, 16, {255, 0, 0}), "");
    const auto blue = m.embed_image(solid(16, 16, {0, 0, 255}), "");
    const auto noisy = m.embed_image(noisy_red_1pct(), "");
    const double rb = cosine(red, blue);
    const double rn = cosine(red, noisy);
    CHECK(rb == doctest::Approx(0.0120437108).epsilon(1e-6));
    CHECK(rn == doctest::Approx(0.9999966283).epsilon(1e-9));
    CHECK(rb < rn);
    CHECK(red.values[0] == doctest::Approx(0.00123075047).epsilon(1e-6));
    CHECK(m.embed_text("dog").values[0] == doctest::Approx(0.0424145982).epsilon(1e-6));
}

TEST_CASE("color words align with solid-color images") {
    const MockEmbedder m(256);
    const std::vector<std::pair<std::string, std::array<std::uint8_t, 3>>> words = {
        {"red", {255, 0, 0}}, {"green", {0, 255, 0}}, {"blue", {0, 0, 255}},
        {"black", {0, 0, 0}}, {"white", {255, 255, 255}}};
    for (const auto& [word, rgb] : words) {
        const double c = cosine(m.embed_text(word), m.embed_image(solid(9, 7, rgb), ""));
        CHECK(c >= 0.7);
        for (const auto& [other, rgb2] : words) {
            if (other == word) continue;
            CHECK(cosine(m.embed_text(word), m.embed_image(solid(9, 7, rgb2), "")) < c);
        }
    }
    CHECK(cosine(m.embed_text("RED"), m.embed_text("red")) == doctest::Approx(1.0));
}

TEST_CASE("empty queries are rejected") {
    const MockEmbedder m;
    CHECK_THROWS_WITH_AS(m.embed_text(""), "empty query", std::invalid_argument);
    CHECK_THROWS_WITH_AS(m.embed_text(" ,. "), "empty query", std::invalid_argument);
}

TEST_CASE("prompt influence is bounded by the mixing weight") {
    const MockEmbedder m(128);
    const double bound = std::sqrt(1.0 - MockEmbedder::kPromptWeight * MockEmbedder::kPromptWeight);
    std::mt19937_64 gen(31);
    const char* vocab[] = {"red", "blue", "dog", "exit", "car", "tree", "white", "sign", "door"};
    for (int t = 0; t < 50; ++t) {
        const Frame f = test::random_frame(gen, 8, 8);
        const auto base = m.embed_image(f, "");
        std::string prompt;
        for (std::size_t k = 0, n = 1 + gen() % 6; k < n; ++k) prompt += std::string(vocab[gen() % 9]) + " ";
        CHECK(cosine(base, m.embed_image(f, prompt)) >= bound - 1e-9);
    }
}

TEST_CASE("tokenizer") {
    CHECK(MockEmbedder::tokenize("objects: Red, dog; text: EXIT-2") ==
          std::vector<std::string>{"objects", "red", "dog", "text", "exit", "2"});
    CHECK(MockEmbedder::tokenize("").empty());
}

TEST_CASE("image features") {
    const auto f = MockEmbedder::image_features(solid(3, 3, {255, 0, 0}));
    REQUIRE(f.size() == MockEmbedder::kFeatureLength);
    CHECK(f[3 * 16] == 1.0);
    CHECK(f[64] == 1.0);
    CHECK(f[65] == 0.0);
    CHECK(f[67] == 0.0);
}

TEST_CASE("endpoint splitting") {
    CHECK(split_endpoint("http://h:80") == std::pair<std::string, std::string>{"http://h:80", ""});
    CHECK(split_endpoint("http://h:80/a/b/") ==
          std::pair<std::string, std::string>{"http://h:80", "/a/b"});
}

TEST_CASE("http embedder wire format") {
    FakeService svc(16);
    HttpEmbedder e(http_descriptor(svc.endpoint(), 16));
    const Frame f = solid(3, 2, {10, 20, 30});
    const auto v = e.embed_image(f, "objects: red; text:");
    CHECK(v.is_unit());
    CHECK(svc.last_body_["modality"] == "image");
    CHECK(svc.last_body_["aux_prompt"] == "objects: red; text:");
    const auto png = image::base64_decode(svc.last_body_["data"].get<std::string>());
    const Frame back = image::decode_png(png);
    CHECK(back.pixels == f.pixels);

    e.embed_text("where is the red car");
    CHECK(svc.last_body_["modality"] == "text");
    CHECK(svc.last_body_["data"] == "where is the red car");
    CHECK_THROWS_AS(e.embed_text("   "), std::invalid_argument);
}

TEST_CASE("http embedder retries server errors") {
    FakeService svc(16);
    svc.fail_first_ = 2;
    HttpEmbedder e(http_descriptor(svc.endpoint(), 16));
    CHECK(e.embed_text("red").is_unit());
    CHECK(svc.calls_ == 3);
}

TEST_CASE("http embedder gives up after the retry budget") {
    FakeService svc(16);
    svc.fail_first_ = 100;
    HttpEmbedder e(http_descriptor(svc.endpoint(), 16));
    try {
        e.embed_text("red");
        FAIL("expected TransportError");
    } catch (const TransportError& err) {
        CHECK(err.attempts() == 3);
    }
    CHECK(svc.calls_ == 3);
}

TEST_CASE("http embedder does not retry client errors") {
    FakeService svc(16);
    svc.fail_first_ = 100;
    svc.fail_status_ = 400;
    HttpEmbedder e(http_descriptor(svc.endpoint(), 16));
    try {
        e.embed_text("red");
        FAIL("expected TransportError");
    } catch (const TransportError& err) {
        CHECK(err.attempts() == 1);
    }
    CHECK(svc.calls_ == 1);
}

TEST_CASE("http embedder rejects a dimension mismatch") {
    FakeService svc(16);
    svc.reply_dim_ = 12;
    HttpEmbedder e(http_descriptor(svc.endpoint(), 16));
    CHECK_THROWS_AS(e.embed_text("red"), std::runtime_error);
}

TEST_CASE("http embedder reports unreachable services") {
    int port = 0;
    {
        httplib::Server probe;
        port = probe.bind_to_any_port("127.0.0.1");
    }
    auto d = http_descriptor("http://127.0.0.1:" + std::to_string(port), 16);
    d.max_retries = 1;
    d.timeout_s = 0.5;
    HttpEmbedder e(d);
    try {
        e.embed_text("red");
        FAIL("expected TransportError");
    } catch (const TransportError& err) {
        CHECK(err.attempts() == 2);
    }
}

TEST_CASE("make_embedder picks the backend") {
    EmbedderDescriptor d;
    d.dimension = 32;
    CHECK(make_embedder(d)->dimension() == 32);
    d.backend = EmbedderBackend::http;
    CHECK_THROWS_AS(make_embedder(d), std::invalid_argument);
    d.endpoint = "http://127.0.0.1:1";
    CHECK(make_embedder(d)->dimension() == 32);
}
