#pragma once

#include <algorithm>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "occrec/core.hpp"

namespace occrec {

// Immutable per-part feature tables. An image appears in part p's table iff
// its own part p is visible; matching against a masked-out feature is
// meaningless. Exact brute-force scan, no approximate structures.
struct GalleryIndex {
    struct PartTable {
        std::vector<std::string> ids;
        std::vector<Vec> feats;
    };
    int num_parts = 0;
    int dim = 0;
    std::vector<PartTable> parts;
    std::vector<PartFeatureSet> images;  // owning copy, original gallery order
    std::unordered_map<std::string, int> index_of;

    const PartFeatureSet* find(const std::string& id) const {
        auto it = index_of.find(id);
        return it == index_of.end() ? nullptr : &images[it->second];
    }
};

inline GalleryIndex build_index(const Dataset& gallery) {
    if (gallery.items.empty()) throw std::runtime_error("build_index: empty gallery");
    GalleryIndex index;
    index.num_parts = gallery.num_parts;
    index.dim = gallery.feature_dim;
    index.images = gallery.items;
    index.parts.resize(gallery.num_parts);
    for (int i = 0; i < static_cast<int>(index.images.size()); ++i) {
        const auto& fs = index.images[i];
        if (!index.index_of.emplace(fs.image_id, i).second)
            throw std::runtime_error("build_index: duplicate image_id '" + fs.image_id + "'");
        for (int p = 0; p < gallery.num_parts; ++p) {
            if (!fs.visibility_mask[p]) continue;
            index.parts[p].ids.push_back(fs.image_id);
            index.parts[p].feats.push_back(fs.features[p]);
        }
    }
    return index;
}

struct ScoredId {
    std::string id;
    double similarity;
};

// Up to K gallery ids with cosine similarity >= theta against the query's
// part-p feature, descending similarity, ties by ascending image_id.
inline std::vector<ScoredId> part_neighbors(const GalleryIndex& index, int part, const Vec& query,
                                            int k, double theta) {
    if (part < 0 || part >= index.num_parts) throw std::runtime_error("part_neighbors: part out of range");
    const auto& table = index.parts[part];
    std::vector<ScoredId> hits;
    for (std::size_t row = 0; row < table.feats.size(); ++row) {
        const double sim = cosine(query, table.feats[row]);
        if (sim >= theta) hits.push_back({table.ids[row], sim});
    }
    std::sort(hits.begin(), hits.end(), [](const ScoredId& a, const ScoredId& b) {
        if (a.similarity != b.similarity) return a.similarity > b.similarity;
        return a.id < b.id;
    });
    if (static_cast<int>(hits.size()) > k) hits.resize(k);
    return hits;
}

struct NeighborSet {
    std::string target_id;
    std::vector<std::string> members;  // descending min per-part similarity, ties ascending id
    std::vector<std::vector<std::string>> part_candidates;  // per part; empty for occluded parts
    bool fallback = false;                                  // empty intersection
};

// Intersection of the per-part neighbour lists over the query's visible
// parts. The query never appears in its own neighbourhood.
inline NeighborSet image_neighborhood(const GalleryIndex& index, const PartFeatureSet& query, int k,
                                      double theta) {
    if (query.parts() != index.num_parts)
        throw std::runtime_error("image_neighborhood: part count mismatch");
    if (query.visible_count() == 0) throw std::runtime_error("fully occluded query");

    NeighborSet ns;
    ns.target_id = query.image_id;
    ns.part_candidates.resize(index.num_parts);

    // min similarity across visible parts, for the canonical member order
    std::unordered_map<std::string, double> min_sim;
    std::unordered_map<std::string, int> hit_count;
    int visible_parts = 0;
    for (int p = 0; p < index.num_parts; ++p) {
        if (!query.visibility_mask[p]) continue;
        ++visible_parts;
        auto hits = part_neighbors(index, p, query.features[p], k, theta);
        for (const auto& h : hits) {
            ns.part_candidates[p].push_back(h.id);
            ++hit_count[h.id];
            auto it = min_sim.find(h.id);
            if (it == min_sim.end())
                min_sim.emplace(h.id, h.similarity);
            else
                it->second = std::min(it->second, h.similarity);
        }
    }

    std::vector<ScoredId> members;
    for (const auto& [id, count] : hit_count) {
        if (count != visible_parts) continue;  // not in every visible part's list
        if (id == query.image_id) continue;
        members.push_back({id, min_sim.at(id)});
    }
    std::sort(members.begin(), members.end(), [](const ScoredId& a, const ScoredId& b) {
        if (a.similarity != b.similarity) return a.similarity > b.similarity;
        return a.id < b.id;
    });
    for (auto& m : members) ns.members.push_back(std::move(m.id));
    ns.fallback = ns.members.empty();
    return ns;
}

// Upper-bound protocol: drop members whose ground-truth identity differs
// from the target's.
inline NeighborSet oracle_filter(const NeighborSet& ns,
                                 const std::unordered_map<std::string, int>& labels,
                                 std::optional<int> target_label) {
    if (!target_label) throw std::runtime_error("oracle_filter: target label unknown");
    NeighborSet out = ns;
    out.members.clear();
    for (const auto& id : ns.members) {
        auto it = labels.find(id);
        if (it == labels.end())
            throw std::runtime_error("oracle_filter: member '" + id + "' has no label");
        if (it->second == *target_label) out.members.push_back(id);
    }
    out.fallback = out.members.empty();
    return out;
}

inline std::unordered_map<std::string, int> label_map(const Dataset& ds) {
    std::unordered_map<std::string, int> labels;
    for (const auto& it : ds.items)
        if (it.person_id) labels.emplace(it.image_id, *it.person_id);
    return labels;
}

// Eval-time helper: ignore occlusion estimates entirely (every part visible).
inline Dataset assume_all_visible(const Dataset& ds) {
    Dataset out = ds;
    for (auto& it : out.items) {
        std::fill(it.visibility_scores.begin(), it.visibility_scores.end(), 1.0);
        it.visibility_mask.assign(it.parts(), true);
    }
    return out;
}

}  // namespace occrec
