#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "occrec/core.hpp"

namespace occrec {

// Feature file, binary flavour:
//   OCCREC1 <M> <D> <count> <has_labels:0|1>\n
//   per image: one compact JSON metadata line, then M*D little-endian f32.
// A pure-JSON flavour (path ending in .json) stores features inline.
inline constexpr const char* kFeatureMagic = "OCCREC1";

namespace detail {

inline void write_f32_le(std::ostream& out, const Vec& v) {
    static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);
    for (double x : v) {
        float f = static_cast<float>(x);
        std::uint32_t bits;
        std::memcpy(&bits, &f, 4);
        if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap32(bits);
        char buf[4];
        std::memcpy(buf, &bits, 4);
        out.write(buf, 4);
    }
}

inline void read_f32_le(std::istream& in, Vec& v, std::size_t n) {
    v.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        char buf[4];
        in.read(buf, 4);
        if (in.gcount() != 4) throw std::runtime_error("feature file: truncated payload");
        std::uint32_t bits;
        std::memcpy(&bits, buf, 4);
        if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap32(bits);
        float f;
        std::memcpy(&f, &bits, 4);
        v[i] = static_cast<double>(f);
    }
}

inline nlohmann::json item_meta_json(const PartFeatureSet& fs) {
    nlohmann::json j;
    j["image_id"] = fs.image_id;
    j["person_id"] = fs.person_id ? nlohmann::json(*fs.person_id) : nlohmann::json(nullptr);
    j["camera_id"] = fs.camera_id ? nlohmann::json(*fs.camera_id) : nlohmann::json(nullptr);
    j["visibility"] = fs.visibility_scores;
    return j;
}

inline PartFeatureSet item_from_meta(const nlohmann::json& j, int m) {
    PartFeatureSet fs;
    fs.image_id = j.at("image_id").get<std::string>();
    if (j.contains("person_id") && !j["person_id"].is_null()) fs.person_id = j["person_id"].get<int>();
    if (j.contains("camera_id") && !j["camera_id"].is_null()) fs.camera_id = j["camera_id"].get<int>();
    fs.visibility_scores = j.at("visibility").get<std::vector<double>>();
    if (static_cast<int>(fs.visibility_scores.size()) != m)
        throw std::runtime_error("feature file: visibility length mismatch for '" + fs.image_id + "'");
    fs.visibility_mask.resize(m);
    for (int p = 0; p < m; ++p) fs.visibility_mask[p] = fs.visibility_scores[p] >= kVisibilityThreshold;
    return fs;
}

inline bool dataset_has_labels(const Dataset& ds) {
    for (const auto& it : ds.items)
        if (!it.person_id) return false;
    return !ds.items.empty();
}

}  // namespace detail

inline void write_feature_file(const Dataset& ds, const std::string& path) {
    const bool has_labels = detail::dataset_has_labels(ds);
    if (detail::ends_with(path, ".json")) {
        nlohmann::json j;
        j["format"] = kFeatureMagic;
        j["m"] = ds.num_parts;
        j["d"] = ds.feature_dim;
        j["has_labels"] = has_labels ? 1 : 0;
        j["items"] = nlohmann::json::array();
        for (const auto& it : ds.items) {
            nlohmann::json rec = detail::item_meta_json(it);
            rec["features"] = it.features;
            j["items"].push_back(std::move(rec));
        }
        std::ofstream out(path);
        if (!out) throw std::runtime_error("feature file: cannot open '" + path + "' for writing");
        out << j.dump(1) << '\n';
        if (!out) throw std::runtime_error("feature file: write failed for '" + path + "'");
        return;
    }

    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("feature file: cannot open '" + path + "' for writing");
    out << kFeatureMagic << ' ' << ds.num_parts << ' ' << ds.feature_dim << ' ' << ds.items.size()
        << ' ' << (has_labels ? 1 : 0) << '\n';
    for (const auto& it : ds.items) {
        out << detail::item_meta_json(it).dump() << '\n';
        for (const auto& part : it.features) detail::write_f32_le(out, part);
    }
    if (!out) throw std::runtime_error("feature file: write failed for '" + path + "'");
}

inline Dataset read_feature_file(const std::string& path, Split split = Split::gallery) {
    std::vector<PartFeatureSet> items;
    int m = 0, d = 0;

    if (detail::ends_with(path, ".json")) {
        std::ifstream in(path);
        if (!in) throw std::runtime_error("feature file: cannot open '" + path + "'");
        nlohmann::json j;
        try {
            in >> j;
        } catch (const nlohmann::json::exception& e) {
            throw std::runtime_error("feature file: invalid JSON in '" + path + "': " + e.what());
        }
        if (!j.contains("format") || j["format"] != kFeatureMagic)
            throw std::runtime_error("feature file: header mismatch in '" + path + "'");
        m = j.at("m").get<int>();
        d = j.at("d").get<int>();
        for (const auto& rec : j.at("items")) {
            PartFeatureSet fs = detail::item_from_meta(rec, m);
            fs.features = rec.at("features").get<std::vector<Vec>>();
            if (fs.parts() != m || (m > 0 && fs.dim() != d))
                throw std::runtime_error("feature file: feature shape mismatch for '" + fs.image_id + "'");
            items.push_back(std::move(fs));
        }
    } else {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw std::runtime_error("feature file: cannot open '" + path + "'");
        std::string header;
        if (!std::getline(in, header)) throw std::runtime_error("feature file: header mismatch (empty file)");
        std::istringstream hs(header);
        std::string magic;
        std::size_t count = 0;
        int has_labels = 0;
        if (!(hs >> magic >> m >> d >> count >> has_labels) || magic != kFeatureMagic || m < 1 || d < 1)
            throw std::runtime_error("feature file: header mismatch in '" + path + "'");
        items.reserve(count);
        for (std::size_t i = 0; i < count; ++i) {
            std::string meta_line;
            if (!std::getline(in, meta_line)) throw std::runtime_error("feature file: truncated payload");
            nlohmann::json meta;
            try {
                meta = nlohmann::json::parse(meta_line);
            } catch (const nlohmann::json::exception& e) {
                throw std::runtime_error("feature file: bad metadata line: " + std::string(e.what()));
            }
            PartFeatureSet fs = detail::item_from_meta(meta, m);
            fs.features.resize(m);
            for (int p = 0; p < m; ++p) detail::read_f32_le(in, fs.features[p], d);
            items.push_back(std::move(fs));
        }
    }

    std::set<std::string> seen;
    for (const auto& it : items) {
        if (!seen.insert(it.image_id).second)
            throw std::runtime_error("feature file: duplicate image_id '" + it.image_id + "'");
        if (!std::ranges::all_of(it.features, [](const Vec& v) { return all_finite(v); }))
            throw std::runtime_error("non-finite feature");
    }
    return make_dataset(std::move(items), split, m, d);
}

// ---------------------------------------------------------------------------
// Checkpoint container: one text header line then a raw little-endian f32
// payload. Used with magics OCCENC1 and OCCGNN1.

inline void write_blob_file(const std::string& path, const std::string& header_line,
                            const std::vector<double>& payload) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("checkpoint: cannot open '" + path + "' for writing");
    out << header_line << '\n';
    detail::write_f32_le(out, payload);
    if (!out) throw std::runtime_error("checkpoint: write failed for '" + path + "'");
}

struct BlobFile {
    std::vector<std::string> header_tokens;
    std::vector<double> payload;
};

inline BlobFile read_blob_file(const std::string& path, const std::string& expected_magic,
                               std::size_t expected_payload) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("checkpoint: cannot open '" + path + "'");
    std::string header;
    if (!std::getline(in, header)) throw std::runtime_error("checkpoint: header mismatch (empty file)");
    BlobFile blob;
    std::istringstream hs(header);
    std::string tok;
    while (hs >> tok) blob.header_tokens.push_back(tok);
    if (blob.header_tokens.empty() || blob.header_tokens[0] != expected_magic)
        throw std::runtime_error("checkpoint: header mismatch in '" + path + "' (want " + expected_magic + ")");
    detail::read_f32_le(in, blob.payload, expected_payload);
    // expected_payload == 0 means "caller parses the header first, then rereads"
    return blob;
}

inline std::vector<std::string> read_blob_header(const std::string& path, const std::string& expected_magic) {
    return read_blob_file(path, expected_magic, 0).header_tokens;
}

// ---------------------------------------------------------------------------
// Ground-truth sidecar (identity labels + per-part visibility truth).

inline void write_truth_json(const std::string& path,
                             const std::vector<PartFeatureSet>& items,
                             const std::unordered_map<std::string, std::vector<bool>>& visibility_truth) {
    nlohmann::json j;
    j["items"] = nlohmann::json::array();
    for (const auto& it : items) {
        nlohmann::json rec;
        rec["image_id"] = it.image_id;
        rec["person_id"] = it.person_id ? nlohmann::json(*it.person_id) : nlohmann::json(nullptr);
        auto truth = visibility_truth.find(it.image_id);
        if (truth != visibility_truth.end()) rec["visibility_truth"] = truth->second;
        j["items"].push_back(std::move(rec));
    }
    std::ofstream out(path);
    if (!out) throw std::runtime_error("truth: cannot open '" + path + "' for writing");
    out << j.dump(1) << '\n';
}

}  // namespace occrec
