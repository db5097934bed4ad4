#pragma once

#include <cctype>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "occrec/core.hpp"

namespace occrec {

struct BodyMask {
    int height = 0;
    int width = 0;
    std::vector<std::uint8_t> bitmap;  // row-major, nonzero = person foreground

    bool at(int r, int c) const { return bitmap[static_cast<std::size_t>(r) * width + c] != 0; }
    void set(int r, int c, bool v) { bitmap[static_cast<std::size_t>(r) * width + c] = v ? 1 : 0; }
};

inline BodyMask make_mask(int h, int w) {
    BodyMask m;
    m.height = h;
    m.width = w;
    m.bitmap.assign(static_cast<std::size_t>(h) * w, 0);
    return m;
}

// M axis-aligned rectangular regions over an HxW frame: kHorizontalParts
// equal-height full-width stripes, then kVerticalParts equal-width
// full-height stripes. Integer boundaries floor(i*H/n), so the stripes tile
// the frame exactly for any H, W.
struct PartLayout {
    struct Rect {
        int r0, r1, c0, c1;  // half-open ranges
        long long area() const { return static_cast<long long>(r1 - r0) * (c1 - c0); }
    };
    int frame_h = 0;
    int frame_w = 0;
    std::vector<Rect> regions;  // size M, global part order

    static PartLayout stripes(int h, int w, int horizontal = kHorizontalParts,
                              int vertical = kVerticalParts) {
        if (h < horizontal || w < vertical)
            throw std::runtime_error("part layout: frame smaller than part counts");
        PartLayout layout;
        layout.frame_h = h;
        layout.frame_w = w;
        for (int i = 0; i < horizontal; ++i)
            layout.regions.push_back({i * h / horizontal, (i + 1) * h / horizontal, 0, w});
        for (int j = 0; j < vertical; ++j)
            layout.regions.push_back({0, h, j * w / vertical, (j + 1) * w / vertical});
        return layout;
    }
};

struct OcclusionState {
    std::vector<double> scores;  // y, in [0, 1]
    std::vector<bool> mask;      // m[p] == (y[p] >= 0.5)
    std::optional<std::vector<bool>> labels;
    bool empty_mask = false;  // diagnostic: input mask had no foreground

    int parts() const { return static_cast<int>(scores.size()); }
};

// Coverage per region, max-normalized across parts so a fully visible small
// person still scores 1 on every part. Empty masks mark all parts occluded.
inline OcclusionState estimate_visibility(const BodyMask& mask, const PartLayout& layout) {
    if (mask.height != layout.frame_h || mask.width != layout.frame_w)
        throw std::runtime_error("estimate_visibility: mask dimensions do not match layout frame");
    const int m = static_cast<int>(layout.regions.size());
    std::vector<double> coverage(m, 0.0);
    for (int p = 0; p < m; ++p) {
        const auto& reg = layout.regions[p];
        long long fg = 0;
        for (int r = reg.r0; r < reg.r1; ++r)
            for (int c = reg.c0; c < reg.c1; ++c)
                if (mask.at(r, c)) ++fg;
        coverage[p] = static_cast<double>(fg) / static_cast<double>(reg.area());
    }
    double peak = 0.0;
    for (double r : coverage) peak = std::max(peak, r);

    OcclusionState state;
    state.scores.assign(m, 0.0);
    state.mask.assign(m, false);
    if (peak > 0.0) {
        for (int p = 0; p < m; ++p) {
            state.scores[p] = coverage[p] / peak;
            state.mask[p] = state.scores[p] >= kVisibilityThreshold;
        }
    } else {
        state.empty_mask = true;
    }
    return state;
}

struct BceLoss {
    double loss = 0.0;
    std::vector<double> grad;  // d loss / d y
};

inline constexpr double kBceEps = 1e-7;

// Mean over parts of -[y_hat*log(y) + (1-y_hat)*log(1-y)]; predictions are
// clamped to [eps, 1-eps] and the gradient is 0 where the clamp is active.
inline BceLoss occlusion_bce_loss(const std::vector<double>& scores, const std::vector<double>& labels) {
    if (scores.size() != labels.size())
        throw std::runtime_error("occlusion_bce_loss: scores/labels size mismatch");
    if (scores.empty()) throw std::runtime_error("occlusion_bce_loss: empty input");
    const int m = static_cast<int>(scores.size());
    BceLoss out;
    out.grad.assign(m, 0.0);
    for (int p = 0; p < m; ++p) {
        const double raw = scores[p];
        const double y = std::min(std::max(raw, kBceEps), 1.0 - kBceEps);
        const double t = labels[p];
        out.loss += -(t * std::log(y) + (1.0 - t) * std::log(1.0 - y)) / m;
        if (raw > kBceEps && raw < 1.0 - kBceEps)
            out.grad[p] = (-t / y + (1.0 - t) / (1.0 - y)) / m;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Mask ingestion: PGM (P5, values > 127 are foreground) or run-length JSON
// {"h":H,"w":W,"rle":[...]} with row-major runs alternating background first.

inline void write_pgm(const BodyMask& mask, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("mask: cannot open '" + path + "' for writing");
    out << "P5\n" << mask.width << ' ' << mask.height << "\n255\n";
    for (std::uint8_t b : mask.bitmap) out.put(b ? char(255) : char(0));
    if (!out) throw std::runtime_error("mask: write failed for '" + path + "'");
}

namespace detail {

inline int pgm_next_int(std::istream& in) {
    // skips whitespace and '#' comment lines
    for (;;) {
        int ch = in.peek();
        if (ch == '#') {
            std::string line;
            std::getline(in, line);
        } else if (std::isspace(ch)) {
            in.get();
        } else {
            break;
        }
    }
    int value = 0;
    if (!(in >> value)) throw std::runtime_error("mask: malformed PGM header");
    return value;
}

}  // namespace detail

inline BodyMask read_pgm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("mask: cannot open '" + path + "'");
    std::string magic(2, '\0');
    in.read(magic.data(), 2);
    if (magic != "P5") throw std::runtime_error("mask: '" + path + "' is not a P5 PGM");
    const int w = detail::pgm_next_int(in);
    const int h = detail::pgm_next_int(in);
    const int maxval = detail::pgm_next_int(in);
    if (w < 1 || h < 1 || maxval < 1 || maxval > 255)
        throw std::runtime_error("mask: unsupported PGM header in '" + path + "'");
    in.get();  // single whitespace after maxval
    BodyMask mask = make_mask(h, w);
    std::vector<char> buf(static_cast<std::size_t>(h) * w);
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (in.gcount() != static_cast<std::streamsize>(buf.size()))
        throw std::runtime_error("mask: truncated PGM payload in '" + path + "'");
    for (std::size_t i = 0; i < buf.size(); ++i)
        mask.bitmap[i] = static_cast<std::uint8_t>(buf[i]) > 127 ? 1 : 0;
    return mask;
}

inline void write_mask_rle_json(const BodyMask& mask, const std::string& path) {
    std::vector<long long> runs;
    bool current = false;  // runs alternate starting with background
    long long len = 0;
    for (std::size_t i = 0; i < mask.bitmap.size(); ++i) {
        const bool v = mask.bitmap[i] != 0;
        if (v == current) {
            ++len;
        } else {
            runs.push_back(len);
            current = v;
            len = 1;
        }
    }
    runs.push_back(len);
    nlohmann::json j;
    j["h"] = mask.height;
    j["w"] = mask.width;
    j["rle"] = runs;
    std::ofstream out(path);
    if (!out) throw std::runtime_error("mask: cannot open '" + path + "' for writing");
    out << j.dump() << '\n';
}

inline BodyMask read_mask_rle_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("mask: cannot open '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error("mask: invalid JSON in '" + path + "': " + e.what());
    }
    const int h = j.at("h").get<int>();
    const int w = j.at("w").get<int>();
    const auto runs = j.at("rle").get<std::vector<long long>>();
    BodyMask mask = make_mask(h, w);
    std::size_t pos = 0;
    bool current = false;
    for (long long run : runs) {
        if (run < 0 || pos + static_cast<std::size_t>(run) > mask.bitmap.size())
            throw std::runtime_error("mask: RLE runs exceed h*w in '" + path + "'");
        for (long long i = 0; i < run; ++i) mask.bitmap[pos++] = current ? 1 : 0;
        current = !current;
    }
    if (pos != mask.bitmap.size())
        throw std::runtime_error("mask: RLE runs do not cover h*w in '" + path + "'");
    return mask;
}

inline BodyMask read_mask(const std::string& path) {
    if (detail::ends_with(path, ".json")) return read_mask_rle_json(path);
    return read_pgm(path);
}

}  // namespace occrec
