#include <catch2/catch_amalgamated.hpp>

#include <chrono>
#include <thread>

#include "oracles.hpp"
#include "splatgen/remote.hpp"

using namespace splatgen;

namespace {

// values are float32 on the wire; build images that survive the cast exactly
Image f32_image(int w, int h, int c, std::mt19937_64& rng) {
    Image img(w, h, c);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    for (double& v : img.data) v = double(float(u(rng)));
    return img;
}

ScoreRequest sample_request(std::mt19937_64& rng) {
    ScoreRequest req;
    req.t = 417;
    req.prompt = "a standing figure";
    req.negative_prompt = "blurry, extra limbs";
    req.x_t = f32_image(6, 5, 3, rng);
    req.d_t = f32_image(6, 5, 1, rng);
    req.pose_map = f32_image(6, 5, 3, rng);
    return req;
}

ScoreResponse sample_response(const ScoreRequest& req, std::mt19937_64& rng) {
    ScoreResponse resp;
    resp.eps_cond_rgb = f32_image(req.x_t.width, req.x_t.height, 3, rng);
    resp.eps_uncond_rgb = f32_image(req.x_t.width, req.x_t.height, 3, rng);
    resp.eps_neg_rgb = f32_image(req.x_t.width, req.x_t.height, 3, rng);
    resp.eps_cond_depth = f32_image(req.d_t.width, req.d_t.height, 1, rng);
    resp.eps_uncond_depth = f32_image(req.d_t.width, req.d_t.height, 1, rng);
    resp.eps_neg_depth = f32_image(req.d_t.width, req.d_t.height, 1, rng);
    return resp;
}

struct RunningServer {
    httplib::Server svr;
    int port = 0;
    std::thread th;

    explicit RunningServer(const std::function<void(httplib::Server&)>& setup) {
        setup(svr);
        port = svr.bind_to_any_port("127.0.0.1");
        REQUIRE(port > 0);
        th = std::thread([this] { svr.listen_after_bind(); });
        while (!svr.is_running()) std::this_thread::sleep_for(std::chrono::milliseconds(1));
    }
    ~RunningServer() {
        svr.stop();
        th.join();
    }
};

}  // namespace

TEST_CASE("request frames round trip byte-exactly") {
    std::mt19937_64 rng(61);
    ScoreRequest req = sample_request(rng);
    std::string frame = encode_score_request(req);
    ScoreRequest back = decode_score_request(frame);

    CHECK(back.t == req.t);
    CHECK(back.prompt == req.prompt);
    CHECK(back.negative_prompt == req.negative_prompt);
    CHECK(back.x_t.width == 6);
    CHECK(back.x_t.height == 5);
    CHECK(back.x_t.data == req.x_t.data);
    CHECK(back.d_t.data == req.d_t.data);
    CHECK(back.pose_map.data == req.pose_map.data);
    // re-encoding reproduces the identical frame
    CHECK(encode_score_request(back) == frame);
}

TEST_CASE("response frames round trip byte-exactly") {
    std::mt19937_64 rng(62);
    ScoreRequest req = sample_request(rng);
    ScoreResponse resp = sample_response(req, rng);
    std::string frame = encode_score_response(resp, req.t);
    ScoreResponse back = decode_score_response(frame, req);

    CHECK(back.eps_cond_rgb.data == resp.eps_cond_rgb.data);
    CHECK(back.eps_uncond_rgb.data == resp.eps_uncond_rgb.data);
    CHECK(back.eps_neg_rgb.data == resp.eps_neg_rgb.data);
    CHECK(back.eps_cond_depth.data == resp.eps_cond_depth.data);
    CHECK(back.eps_uncond_depth.data == resp.eps_uncond_depth.data);
    CHECK(back.eps_neg_depth.data == resp.eps_neg_depth.data);
    CHECK(encode_score_response(back, req.t) == frame);
}

TEST_CASE("malformed frames fail with the offending field") {
    std::mt19937_64 rng(63);
    ScoreRequest req = sample_request(rng);
    std::string reqframe = encode_score_request(req);
    std::string respframe = encode_score_response(sample_response(req, rng), req.t);

    SECTION("bad magic") {
        std::string bad = reqframe;
        bad[0] = 'X';
        CHECK_THROWS_WITH(decode_score_request(bad), Catch::Matchers::ContainsSubstring("magic"));
    }
    SECTION("unsupported version") {
        std::string bad = reqframe;
        bad[4] = 9;
        try {
            decode_score_request(bad);
            FAIL("expected ProviderError");
        } catch (const ProviderError& e) {
            CHECK_FALSE(e.retriable);
            CHECK(std::string(e.what()).find("version") != std::string::npos);
        }
    }
    SECTION("truncated request payload names the tensor") {
        std::string bad = reqframe.substr(0, reqframe.size() - 10);
        CHECK_THROWS_WITH(decode_score_request(bad),
                          Catch::Matchers::ContainsSubstring("pose_map"));
    }
    SECTION("truncated response payload names the tensor") {
        std::string bad = respframe.substr(0, respframe.size() - 10);
        CHECK_THROWS_WITH(decode_score_response(bad, req),
                          Catch::Matchers::ContainsSubstring("eps_neg_depth"));
    }
    SECTION("trailing bytes rejected") {
        std::string bad = respframe + "xx";
        CHECK_THROWS_WITH(decode_score_response(bad, req),
                          Catch::Matchers::ContainsSubstring("trailing bytes"));
    }
    SECTION("response t must match the request") {
        std::string bad = encode_score_response(sample_response(req, rng), req.t + 1);
        CHECK_THROWS_WITH(decode_score_response(bad, req),
                          Catch::Matchers::ContainsSubstring("t does not match"));
    }
    SECTION("response resolution must match the request") {
        ScoreRequest other = req;
        other.x_t = Image(6, 7, 3);
        other.d_t = Image(6, 7, 1);
        std::string bad = encode_score_response(sample_response(other, rng), req.t);
        CHECK_THROWS_WITH(decode_score_response(bad, req),
                          Catch::Matchers::ContainsSubstring("height"));
    }
}

TEST_CASE("remote provider against the in-process echo server") {
    RunningServer server([](httplib::Server& s) { serve_echo_scores(s); });
    RemoteProvider provider("127.0.0.1", server.port, 5);
    std::mt19937_64 rng(64);
    ScoreRequest req = sample_request(rng);
    NoiseSchedule s = NoiseSchedule::scaled_linear();

    ScoreResponse resp = provider.score(req, s);
    resp.check_shapes(req);
    for (double v : resp.eps_cond_rgb.data) CHECK(v == 0.0);
    for (double v : resp.eps_neg_depth.data) CHECK(v == 0.0);
}

TEST_CASE("echo server rejects garbage requests") {
    RunningServer server([](httplib::Server& s) { serve_echo_scores(s); });
    httplib::Client client("127.0.0.1", server.port);
    auto res = client.Post("/v1/score", "garbage", "application/octet-stream");
    REQUIRE(res);
    CHECK(res->status == 400);
    CHECK(res->body.find("magic") != std::string::npos);
}

TEST_CASE("http failure modes map to the right retriability") {
    std::mt19937_64 rng(65);
    ScoreRequest req = sample_request(rng);
    NoiseSchedule s = NoiseSchedule::scaled_linear();

    SECTION("unreachable endpoint is retriable") {
        RemoteProvider provider("127.0.0.1", 1, 1);  // nothing listens on port 1
        try {
            provider.score(req, s);
            FAIL("expected ProviderError");
        } catch (const ProviderError& e) {
            CHECK(e.retriable);
        }
    }
    SECTION("client error status is not retriable") {
        RunningServer server([](httplib::Server& s2) {
            s2.Post("/v1/score", [](const httplib::Request&, httplib::Response& r) {
                r.status = 404;
            });
        });
        RemoteProvider provider("127.0.0.1", server.port, 5);
        try {
            provider.score(req, s);
            FAIL("expected ProviderError");
        } catch (const ProviderError& e) {
            CHECK_FALSE(e.retriable);
            CHECK(std::string(e.what()).find("404") != std::string::npos);
        }
    }
    SECTION("server error status is retriable") {
        RunningServer server([](httplib::Server& s2) {
            s2.Post("/v1/score", [](const httplib::Request&, httplib::Response& r) {
                r.status = 503;
            });
        });
        RemoteProvider provider("127.0.0.1", server.port, 5);
        try {
            provider.score(req, s);
            FAIL("expected ProviderError");
        } catch (const ProviderError& e) {
            CHECK(e.retriable);
        }
    }
    SECTION("wrong-shape response from the server is caught client-side") {
        RunningServer server([](httplib::Server& s2) {
            s2.Post("/v1/score", [](const httplib::Request& hreq, httplib::Response& hres) {
                ScoreRequest inner = decode_score_request(hreq.body);
                ScoreResponse resp;
                resp.eps_cond_rgb = Image(inner.x_t.width, inner.x_t.height + 1, 3);
                resp.eps_uncond_rgb = resp.eps_cond_rgb;
                resp.eps_neg_rgb = resp.eps_cond_rgb;
                resp.eps_cond_depth = Image(inner.d_t.width, inner.d_t.height + 1, 1);
                resp.eps_uncond_depth = resp.eps_cond_depth;
                resp.eps_neg_depth = resp.eps_cond_depth;
                hres.set_content(encode_score_response(resp, inner.t), "application/octet-stream");
            });
        });
        RemoteProvider provider("127.0.0.1", server.port, 5);
        CHECK_THROWS_WITH(provider.score(req, s),
                          Catch::Matchers::ContainsSubstring("height"));
    }
}
