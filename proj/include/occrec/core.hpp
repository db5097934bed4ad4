#pragma once

#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "occrec/la.hpp"

namespace occrec {

namespace detail {

inline bool ends_with(const std::string& s, const std::string& suffix) {
    return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

}  // namespace detail

// Part order is a global constant shared by every module:
// horizontal stripes top to bottom (h1..h4), then vertical stripes left to
// right (v1, v2).
inline constexpr int kHorizontalParts = 4;
inline constexpr int kVerticalParts = 2;
inline constexpr int kDefaultParts = kHorizontalParts + kVerticalParts;
inline constexpr double kVisibilityThreshold = 0.5;

struct PartFeatureSet {
    std::string image_id;
    std::optional<int> person_id;
    std::optional<int> camera_id;
    std::vector<Vec> features;              // M part vectors of dim D
    std::vector<double> visibility_scores;  // M values in [0, 1]
    std::vector<bool> visibility_mask;      // mask[p] == (scores[p] >= 0.5)

    int parts() const { return static_cast<int>(features.size()); }
    int dim() const { return features.empty() ? 0 : static_cast<int>(features[0].size()); }

    int visible_count() const {
        int n = 0;
        for (bool b : visibility_mask) n += b ? 1 : 0;
        return n;
    }

    bool operator==(const PartFeatureSet& o) const {
        return image_id == o.image_id && person_id == o.person_id && camera_id == o.camera_id &&
               features == o.features && visibility_scores == o.visibility_scores &&
               visibility_mask == o.visibility_mask;
    }
};

enum class Split { train, query, gallery };

inline const char* split_name(Split s) {
    switch (s) {
        case Split::train: return "train";
        case Split::query: return "query";
        case Split::gallery: return "gallery";
    }
    return "?";
}

struct Dataset {
    std::vector<PartFeatureSet> items;
    Split split = Split::gallery;
    int num_identities = 0;
    int feature_dim = 0;
    int num_parts = 0;

    bool operator==(const Dataset& o) const {
        return items == o.items && split == o.split && num_identities == o.num_identities &&
               feature_dim == o.feature_dim && num_parts == o.num_parts;
    }
};

inline int count_identities(const std::vector<PartFeatureSet>& items) {
    std::set<int> ids;
    for (const auto& it : items)
        if (it.person_id) ids.insert(*it.person_id);
    return static_cast<int>(ids.size());
}

inline Dataset make_dataset(std::vector<PartFeatureSet> items, Split split, int m, int d) {
    Dataset ds;
    ds.items = std::move(items);
    ds.split = split;
    ds.num_parts = m;
    ds.feature_dim = d;
    ds.num_identities = count_identities(ds.items);
    for (const auto& it : ds.items) {
        if (it.parts() != m || (it.parts() > 0 && it.dim() != d))
            throw std::runtime_error("dataset: item '" + it.image_id + "' has inconsistent M or D");
        if (split == Split::train && !it.person_id)
            throw std::runtime_error("dataset: train item '" + it.image_id + "' lacks person_id");
    }
    return ds;
}

// Normalizes each part vector to unit Euclidean norm. All-zero parts stay
// zero and are forced occluded (score 0, mask false). Norms are accumulated
// in double so re-normalizing is idempotent to ~1e-15.
inline PartFeatureSet l2_normalize_parts(const PartFeatureSet& fs) {
    PartFeatureSet out = fs;
    for (int p = 0; p < out.parts(); ++p) {
        if (!all_finite(out.features[p])) throw std::runtime_error("non-finite feature");
        const double n = norm(out.features[p]);
        if (n == 0.0) {
            out.visibility_scores[p] = 0.0;
            out.visibility_mask[p] = false;
            continue;
        }
        for (auto& x : out.features[p]) x /= n;
    }
    return out;
}

inline void l2_normalize_dataset(Dataset& ds) {
    for (auto& it : ds.items) it = l2_normalize_parts(it);
}

// Concatenation of the M part vectors in the fixed global part order.
inline Vec baseline_representation(const PartFeatureSet& fs) {
    Vec out;
    out.reserve(static_cast<std::size_t>(fs.parts()) * fs.dim());
    for (const auto& part : fs.features) out.insert(out.end(), part.begin(), part.end());
    return out;
}

// Visible parts kept (renormalized), occluded parts zero-filled. Used when a
// query's neighbourhood is empty and reconstruction must be skipped.
inline Vec fallback_representation(const PartFeatureSet& fs) {
    Vec out;
    out.reserve(static_cast<std::size_t>(fs.parts()) * fs.dim());
    for (int p = 0; p < fs.parts(); ++p) {
        if (fs.visibility_mask[p]) {
            Vec v = fs.features[p];
            const double n = norm(v);
            if (n > 0.0)
                for (auto& x : v) x /= n;
            out.insert(out.end(), v.begin(), v.end());
        } else {
            out.insert(out.end(), fs.dim(), 0.0);
        }
    }
    return out;
}

// Quantize through f32 so the in-memory values match the on-disk payload
// bit-for-bit after a write/read cycle.
inline void quantize_f32(Vec& v) {
    for (auto& x : v) x = static_cast<double>(static_cast<float>(x));
}

inline void quantize_f32(PartFeatureSet& fs) {
    for (auto& part : fs.features) quantize_f32(part);
}

}  // namespace occrec
