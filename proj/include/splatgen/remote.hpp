#pragma once

#include <cstdint>
#include <cstring>
#include <string>

#include <httplib.h>

#include "splatgen/guidance.hpp"

namespace splatgen {

// Wire protocol, byte-exact (see docs/PROTOCOL.md):
// request  = "SGS1" | u32 version=1 | u32 t | u32 height | u32 width | u32 batch=1
//            | u32 prompt_len | prompt bytes | u32 neg_len | neg bytes
//            | f32[] x_t (H*W*3) | f32[] d_t (H*W) | f32[] pose (H*W*3)
// response = "SGS1" | u32 version=1 | u32 t | u32 height | u32 width | u32 batch=1
//            | f32[] eps_cond_rgb | f32[] eps_uncond_rgb | f32[] eps_neg_rgb (H*W*3 each)
//            | f32[] eps_cond_depth | f32[] eps_uncond_depth | f32[] eps_neg_depth (H*W each)
// All integers and floats little-endian.

namespace wire {

constexpr char kMagic[4] = {'S', 'G', 'S', '1'};
constexpr std::uint32_t kVersion = 1;

inline void put_u32(std::string& out, std::uint32_t v) {
    char b[4] = {char(v & 0xff), char((v >> 8) & 0xff), char((v >> 16) & 0xff), char((v >> 24) & 0xff)};
    out.append(b, 4);
}

struct Reader {
    const std::string& buf;
    std::size_t pos = 0;

    std::uint32_t u32(const char* field) {
        if (pos + 4 > buf.size())
            throw ProviderError(std::string("truncated frame at field ") + field, false);
        std::uint32_t v = std::uint32_t(std::uint8_t(buf[pos])) |
                          std::uint32_t(std::uint8_t(buf[pos + 1])) << 8 |
                          std::uint32_t(std::uint8_t(buf[pos + 2])) << 16 |
                          std::uint32_t(std::uint8_t(buf[pos + 3])) << 24;
        pos += 4;
        return v;
    }
    std::string bytes(std::size_t n, const char* field) {
        if (pos + n > buf.size())
            throw ProviderError(std::string("truncated frame at field ") + field, false);
        std::string s = buf.substr(pos, n);
        pos += n;
        return s;
    }
    void floats(Image& img, const char* field) {
        std::size_t n = img.data.size();
        if (pos + n * 4 > buf.size())
            throw ProviderError(std::string("truncated frame at field ") + field, false);
        for (std::size_t i = 0; i < n; ++i) {
            float f;
            std::memcpy(&f, buf.data() + pos, 4);
            img.data[i] = double(f);
            pos += 4;
        }
    }
};

inline void put_floats(std::string& out, const Image& img) {
    for (double v : img.data) {
        float f = float(v);
        char b[4];
        std::memcpy(b, &f, 4);
        out.append(b, 4);
    }
}

}  // namespace wire

inline std::string encode_score_request(const ScoreRequest& req) {
    std::string out;
    out.append(wire::kMagic, 4);
    wire::put_u32(out, wire::kVersion);
    wire::put_u32(out, std::uint32_t(req.t));
    wire::put_u32(out, std::uint32_t(req.x_t.height));
    wire::put_u32(out, std::uint32_t(req.x_t.width));
    wire::put_u32(out, 1);  // batch
    wire::put_u32(out, std::uint32_t(req.prompt.size()));
    out.append(req.prompt);
    wire::put_u32(out, std::uint32_t(req.negative_prompt.size()));
    out.append(req.negative_prompt);
    wire::put_floats(out, req.x_t);
    wire::put_floats(out, req.d_t);
    wire::put_floats(out, req.pose_map);
    return out;
}

inline ScoreRequest decode_score_request(const std::string& body) {
    wire::Reader r{body};
    std::string magic = r.bytes(4, "magic");
    if (std::memcmp(magic.data(), wire::kMagic, 4) != 0)
        throw ProviderError("bad frame magic", false);
    if (r.u32("version") != wire::kVersion) throw ProviderError("unsupported frame version", false);
    ScoreRequest req;
    req.t = r.u32("t");
    int h = int(r.u32("height")), w = int(r.u32("width"));
    std::uint32_t batch = r.u32("batch");
    if (batch != 1) throw ProviderError("unsupported batch size in field batch", false);
    req.prompt = r.bytes(r.u32("prompt_len"), "prompt");
    req.negative_prompt = r.bytes(r.u32("neg_len"), "negative_prompt");
    req.x_t = Image(w, h, 3);
    req.d_t = Image(w, h, 1);
    req.pose_map = Image(w, h, 3);
    r.floats(req.x_t, "x_t");
    r.floats(req.d_t, "d_t");
    r.floats(req.pose_map, "pose_map");
    return req;
}

inline std::string encode_score_response(const ScoreResponse& resp, std::size_t t) {
    std::string out;
    out.append(wire::kMagic, 4);
    wire::put_u32(out, wire::kVersion);
    wire::put_u32(out, std::uint32_t(t));
    wire::put_u32(out, std::uint32_t(resp.eps_cond_rgb.height));
    wire::put_u32(out, std::uint32_t(resp.eps_cond_rgb.width));
    wire::put_u32(out, 1);
    wire::put_floats(out, resp.eps_cond_rgb);
    wire::put_floats(out, resp.eps_uncond_rgb);
    wire::put_floats(out, resp.eps_neg_rgb);
    wire::put_floats(out, resp.eps_cond_depth);
    wire::put_floats(out, resp.eps_uncond_depth);
    wire::put_floats(out, resp.eps_neg_depth);
    return out;
}

inline ScoreResponse decode_score_response(const std::string& body, const ScoreRequest& req) {
    wire::Reader r{body};
    std::string magic = r.bytes(4, "magic");
    if (std::memcmp(magic.data(), wire::kMagic, 4) != 0)
        throw ProviderError("bad frame magic", false);
    if (r.u32("version") != wire::kVersion) throw ProviderError("unsupported frame version", false);
    std::size_t t = r.u32("t");
    if (t != req.t) throw ProviderError("response field t does not match request", false);
    int h = int(r.u32("height")), w = int(r.u32("width"));
    if (h != req.x_t.height) throw ProviderError("response field height does not match request", false);
    if (w != req.x_t.width) throw ProviderError("response field width does not match request", false);
    if (r.u32("batch") != 1) throw ProviderError("response field batch must be 1", false);
    ScoreResponse resp;
    resp.eps_cond_rgb = Image(w, h, 3);
    resp.eps_uncond_rgb = Image(w, h, 3);
    resp.eps_neg_rgb = Image(w, h, 3);
    resp.eps_cond_depth = Image(w, h, 1);
    resp.eps_uncond_depth = Image(w, h, 1);
    resp.eps_neg_depth = Image(w, h, 1);
    r.floats(resp.eps_cond_rgb, "eps_cond_rgb");
    r.floats(resp.eps_uncond_rgb, "eps_uncond_rgb");
    r.floats(resp.eps_neg_rgb, "eps_neg_rgb");
    r.floats(resp.eps_cond_depth, "eps_cond_depth");
    r.floats(resp.eps_uncond_depth, "eps_uncond_depth");
    r.floats(resp.eps_neg_depth, "eps_neg_depth");
    if (r.pos != body.size()) throw ProviderError("trailing bytes after response payload", false);
    return resp;
}

/// Scores by POSTing each request frame to <endpoint>/v1/score.
class RemoteProvider : public ScoreProvider {
public:
    explicit RemoteProvider(std::string host, int port, int timeout_sec = 30)
        : client_(host, port) {
        client_.set_connection_timeout(timeout_sec, 0);
        client_.set_read_timeout(timeout_sec, 0);
    }

    ScoreResponse score(const ScoreRequest& req, const NoiseSchedule&) override {
        std::string body = encode_score_request(req);
        auto res = client_.Post("/v1/score", body, "application/octet-stream");
        if (!res) throw ProviderError("score endpoint unreachable", true);
        if (res->status != 200)
            throw ProviderError("score endpoint returned status " + std::to_string(res->status),
                                res->status >= 500);
        return decode_score_response(res->body, req);
    }

private:
    httplib::Client client_;
};

/// Reference integration server: answers every request with zero epsilon
/// tensors of the right shape.
inline void serve_echo_scores(httplib::Server& server) {
    server.Post("/v1/score", [](const httplib::Request& hreq, httplib::Response& hres) {
        try {
            ScoreRequest req = decode_score_request(hreq.body);
            ScoreResponse resp;
            resp.eps_cond_rgb = Image(req.x_t.width, req.x_t.height, 3);
            resp.eps_uncond_rgb = resp.eps_cond_rgb;
            resp.eps_neg_rgb = resp.eps_cond_rgb;
            resp.eps_cond_depth = Image(req.d_t.width, req.d_t.height, 1);
            resp.eps_uncond_depth = resp.eps_cond_depth;
            resp.eps_neg_depth = resp.eps_cond_depth;
            hres.set_content(encode_score_response(resp, req.t), "application/octet-stream");
        } catch (const std::exception& e) {
            hres.status = 400;
            hres.set_content(e.what(), "text/plain");
        }
    });
}

}  // namespace splatgen
