#pragma once

#include <algorithm>
#include <functional>
#include <iostream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "occrec/config.hpp"
#include "occrec/core.hpp"
#include "occrec/neighborhood.hpp"
#include "occrec/orgnn.hpp"
#include "occrec/parallel.hpp"

namespace occrec {

enum class Variant {
    baseline,      // concatenated raw sub-features, no occlusion handling
    oan,           // visible-only matching, no reconstruction
    oan_avgagg,    // neighbourhood average reconstruction
    oan_gnn,       // GNN reconstruction without the outlier module
    oan_orgnn,     // full pipeline
    oan_orgnn_ub,  // ground-truth outlier removal before reconstruction
    gnn_no_oan,    // neighbourhoods searched with every part, occluded or not
};

inline const char* variant_name(Variant v) {
    switch (v) {
        case Variant::baseline: return "baseline";
        case Variant::oan: return "oan";
        case Variant::oan_avgagg: return "oan+avgagg";
        case Variant::oan_gnn: return "oan+gnn";
        case Variant::oan_orgnn: return "oan+orgnn";
        case Variant::oan_orgnn_ub: return "oan+orgnn+ub";
        case Variant::gnn_no_oan: return "gnn_no_oan";
    }
    return "?";
}

inline Variant parse_variant(const std::string& name) {
    for (Variant v : {Variant::baseline, Variant::oan, Variant::oan_avgagg, Variant::oan_gnn,
                      Variant::oan_orgnn, Variant::oan_orgnn_ub, Variant::gnn_no_oan})
        if (name == variant_name(v)) return v;
    throw std::runtime_error("unknown variant '" + name + "'");
}

inline std::vector<Variant> all_variants() {
    return {Variant::baseline,  Variant::oan,          Variant::oan_avgagg, Variant::oan_gnn,
            Variant::oan_orgnn, Variant::oan_orgnn_ub, Variant::gnn_no_oan};
}

// ---------------------------------------------------------------------------
// Ranking and metrics.

// Indices sorted by descending similarity, ties by ascending image_id. The
// optional hook is a post-processing plug-in point (e.g. for external
// re-ranking schemes); it receives the order and must return a permutation.
using RerankHook = std::function<std::vector<int>(std::vector<int>, const std::vector<double>&)>;

inline std::vector<int> rank_order(const std::vector<double>& sims, const std::vector<std::string>& ids,
                                   const RerankHook& hook = nullptr) {
    if (sims.empty()) throw std::runtime_error("rank: empty gallery");
    std::vector<int> order(sims.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        if (sims[a] != sims[b]) return sims[a] > sims[b];
        return ids[a] < ids[b];
    });
    if (hook) order = hook(std::move(order), sims);
    return order;
}

// Mean over relevant positions i (1-based) of (relevant in top-i) / i.
inline double average_precision(const std::vector<char>& relevance) {
    double sum = 0.0;
    int hits = 0;
    for (std::size_t i = 0; i < relevance.size(); ++i) {
        if (!relevance[i]) continue;
        ++hits;
        sum += static_cast<double>(hits) / static_cast<double>(i + 1);
    }
    return hits > 0 ? sum / hits : 0.0;
}

inline int first_hit_rank(const std::vector<char>& relevance) {
    for (std::size_t i = 0; i < relevance.size(); ++i)
        if (relevance[i]) return static_cast<int>(i + 1);
    return -1;
}

// CMC@r = fraction of queries with a correct match within the top r.
inline std::vector<double> cmc_curve(const std::vector<int>& first_hits, int max_rank) {
    std::vector<double> curve(max_rank, 0.0);
    if (first_hits.empty()) return curve;
    for (int hit : first_hits) {
        if (hit < 1) continue;
        for (int r = hit; r <= max_rank; ++r) curve[r - 1] += 1.0;
    }
    for (auto& v : curve) v /= static_cast<double>(first_hits.size());
    return curve;
}

inline double cmc_at(const std::vector<double>& curve, int rank) {
    if (curve.empty()) return 0.0;
    return curve[std::min<std::size_t>(curve.size(), static_cast<std::size_t>(rank)) - 1];
}

// Mean per-part cosine over parts visible in both images; -1 when the two
// images share no visible part.
inline double visible_only_similarity(const PartFeatureSet& a, const PartFeatureSet& b) {
    double sum = 0.0;
    int shared = 0;
    for (int p = 0; p < a.parts(); ++p) {
        if (!a.visibility_mask[p] || !b.visibility_mask[p]) continue;
        sum += cosine(a.features[p], b.features[p]);
        ++shared;
    }
    return shared > 0 ? sum / shared : -1.0;
}

// ---------------------------------------------------------------------------
// Reports.

struct EvalReport {
    std::string variant;
    std::vector<std::string> query_ids;  // evaluated queries, dataset order
    std::vector<double> per_query_ap;
    double mean_ap = 0.0;
    std::vector<double> curve;  // CMC, ranks 1..curve.size()
    int num_queries = 0;
    int skipped_queries = 0;  // queries with no relevant gallery item
    int fallbacks = 0;        // queries evaluated with the fallback representation
    double mean_neighborhood_size = 0.0;
    double outlier_rate = -1.0;  // vs ground-truth labels; -1 when unknown
    bool reconstruct_gallery = true;
    nlohmann::json config_echo;

    double cmc1() const { return cmc_at(curve, 1); }
    double cmc5() const { return cmc_at(curve, 5); }
    double cmc10() const { return cmc_at(curve, 10); }
};

inline nlohmann::json report_to_json(const EvalReport& r) {
    nlohmann::json j;
    j["variant"] = r.variant;
    j["map"] = r.mean_ap;
    j["cmc"] = {{"rank1", r.cmc1()}, {"rank5", r.cmc5()}, {"rank10", r.cmc10()}};
    j["cmc_curve"] = r.curve;
    j["num_queries"] = r.num_queries;
    j["evaluated_queries"] = static_cast<int>(r.per_query_ap.size());
    j["skipped_queries"] = r.skipped_queries;
    j["fallbacks"] = r.fallbacks;
    j["neighborhood"] = {{"mean_size", r.mean_neighborhood_size}, {"outlier_rate", r.outlier_rate}};
    j["reconstruct_gallery"] = r.reconstruct_gallery;
    j["per_query"] = nlohmann::json::array();
    for (std::size_t i = 0; i < r.per_query_ap.size(); ++i)
        j["per_query"].push_back({{"id", r.query_ids[i]}, {"ap", r.per_query_ap[i]}});
    j["config"] = r.config_echo;
    return j;
}

inline std::string report_csv_header() { return "variant,map,rank1,rank5,rank10,fallbacks"; }

inline std::string report_csv_row(const EvalReport& r) {
    char buf[256];
    std::snprintf(buf, sizeof(buf), "%s,%.6f,%.6f,%.6f,%.6f,%d", r.variant.c_str(), r.mean_ap,
                  r.cmc1(), r.cmc5(), r.cmc10(), r.fallbacks);
    return buf;
}

// Schema check for emitted reports (documented in the README).
inline void validate_report_json(const nlohmann::json& j) {
    const char* required_numbers[] = {"map"};
    for (const char* key : required_numbers)
        if (!j.contains(key) || !j[key].is_number())
            throw std::runtime_error(std::string("report schema: missing number '") + key + "'");
    if (!j.contains("variant") || !j["variant"].is_string())
        throw std::runtime_error("report schema: missing string 'variant'");
    for (const char* key : {"num_queries", "evaluated_queries", "skipped_queries", "fallbacks"})
        if (!j.contains(key) || !j[key].is_number_integer())
            throw std::runtime_error(std::string("report schema: missing integer '") + key + "'");
    if (!j.contains("cmc") || !j["cmc"].is_object() || !j["cmc"].contains("rank1") ||
        !j["cmc"].contains("rank5") || !j["cmc"].contains("rank10"))
        throw std::runtime_error("report schema: missing cmc object");
    if (!j.contains("cmc_curve") || !j["cmc_curve"].is_array())
        throw std::runtime_error("report schema: missing cmc_curve");
    if (!j.contains("neighborhood") || !j["neighborhood"].is_object())
        throw std::runtime_error("report schema: missing neighborhood stats");
    if (!j.contains("per_query") || !j["per_query"].is_array())
        throw std::runtime_error("report schema: missing per_query");
    if (!j.contains("config") || !j["config"].is_object())
        throw std::runtime_error("report schema: missing config echo");
    const double map = j["map"].get<double>();
    if (map < 0.0 || map > 1.0) throw std::runtime_error("report schema: mAP out of [0, 1]");
    double prev = 0.0;
    for (const auto& v : j["cmc_curve"]) {
        const double x = v.get<double>();
        if (x + 1e-12 < prev) throw std::runtime_error("report schema: CMC curve not monotone");
        prev = x;
    }
}

// ---------------------------------------------------------------------------
// Variant wiring.

struct VariantContext {
    const Dataset* query = nullptr;
    const Dataset* gallery = nullptr;
    const ORGNNParams* orgnn = nullptr;  // trained with the outlier module
    const ORGNNParams* gnn = nullptr;    // trained with confidences fixed to 1
    PipelineConfig cfg;
};

namespace detail {

struct ReconStats {
    int fallbacks = 0;
    long long member_total = 0;
    long long outlier_total = 0;
    bool labels_known = true;
};

// Reconstructed (or fallback) representation for every item of `ds`,
// searching neighbourhoods in `index`.
inline std::vector<Vec> reconstruct_split(const Dataset& ds, const GalleryIndex& index,
                                          const ORGNNParams& params, AggMode mode, bool oracle_ub,
                                          const std::unordered_map<std::string, int>& labels,
                                          const PipelineConfig& cfg, ReconStats* stats) {
    std::vector<Vec> reprs(ds.items.size());
    std::vector<int> fallback_flags(ds.items.size(), 0);
    std::vector<int> member_counts(ds.items.size(), 0);
    std::vector<int> outlier_counts(ds.items.size(), 0);
    std::vector<int> labels_ok(ds.items.size(), 1);

    parallel_for(static_cast<int>(ds.items.size()), cfg.threads, [&](int i) {
        const auto& item = ds.items[i];
        NeighborSet ns = image_neighborhood(index, item, cfg.k_infer, cfg.theta_infer);
        if (oracle_ub) ns = oracle_filter(ns, labels, item.person_id);
        member_counts[i] = static_cast<int>(ns.members.size());
        for (const auto& id : ns.members) {
            auto it = labels.find(id);
            if (it == labels.end() || !item.person_id)
                labels_ok[i] = 0;
            else if (it->second != *item.person_id)
                ++outlier_counts[i];
        }
        if (ns.fallback) {
            fallback_flags[i] = 1;
            reprs[i] = fallback_representation(item);
            return;
        }
        std::vector<const PartFeatureSet*> neighbors;
        neighbors.reserve(ns.members.size());
        for (const auto& id : ns.members) neighbors.push_back(index.find(id));
        reprs[i] = final_representation(reconstruct(item, neighbors, params, params.layers, mode));
    });

    if (stats) {
        for (std::size_t i = 0; i < ds.items.size(); ++i) {
            stats->fallbacks += fallback_flags[i];
            stats->member_total += member_counts[i];
            stats->outlier_total += outlier_counts[i];
            stats->labels_known = stats->labels_known && labels_ok[i];
        }
    }
    return reprs;
}

}  // namespace detail

inline EvalReport run_variant(Variant variant, const VariantContext& ctx) {
    const Dataset& query = *ctx.query;
    const Dataset& gallery = *ctx.gallery;
    if (gallery.items.empty()) throw std::runtime_error("rank: empty gallery");
    const PipelineConfig& cfg = ctx.cfg;

    EvalReport report;
    report.variant = variant_name(variant);
    report.num_queries = static_cast<int>(query.items.size());
    report.reconstruct_gallery = cfg.reconstruct_gallery;
    report.config_echo = cfg.to_json();

    std::vector<std::string> gallery_ids;
    gallery_ids.reserve(gallery.items.size());
    for (const auto& g : gallery.items) gallery_ids.push_back(g.image_id);

    // similarity matrix source: either precomputed representations or the
    // pairwise visible-only rule
    std::vector<Vec> query_reprs, gallery_reprs;
    bool pairwise_visible = false;

    switch (variant) {
        case Variant::baseline: {
            query_reprs.resize(query.items.size());
            for (std::size_t i = 0; i < query.items.size(); ++i)
                query_reprs[i] = baseline_representation(query.items[i]);
            gallery_reprs.resize(gallery.items.size());
            for (std::size_t i = 0; i < gallery.items.size(); ++i)
                gallery_reprs[i] = baseline_representation(gallery.items[i]);
            break;
        }
        case Variant::oan: {
            pairwise_visible = true;
            break;
        }
        default: {
            const bool use_masks = variant != Variant::gnn_no_oan;
            const bool oracle_ub = variant == Variant::oan_orgnn_ub;
            AggMode mode;
            const ORGNNParams* params = nullptr;
            switch (variant) {
                case Variant::oan_avgagg: mode = AggMode::average; break;
                case Variant::oan_gnn:
                case Variant::gnn_no_oan:
                    mode = AggMode::plain_gnn;
                    params = ctx.gnn;
                    break;
                default:
                    mode = AggMode::outlier_removable;
                    params = ctx.orgnn;
                    break;
            }
            ORGNNParams avg_params;  // average mode carries no learned state
            if (mode == AggMode::average) {
                avg_params.parts = query.num_parts;
                avg_params.dim = query.feature_dim;
                avg_params.layers = cfg.t;
                params = &avg_params;
            }
            if (!params)
                throw std::runtime_error(std::string("variant ") + variant_name(variant) +
                                         " needs trained GNN parameters");

            Dataset qry = use_masks ? query : assume_all_visible(query);
            Dataset gal = use_masks ? gallery : assume_all_visible(gallery);
            auto labels = label_map(gallery);
            if (oracle_ub)
                for (const auto& it : gallery.items)
                    if (!it.person_id)
                        throw std::runtime_error("upper-bound variant requires gallery labels");

            GalleryIndex index = build_index(gal);
            detail::ReconStats qstats;
            query_reprs = detail::reconstruct_split(qry, index, *params, mode, oracle_ub, labels,
                                                    cfg, &qstats);
            report.fallbacks = qstats.fallbacks;
            report.mean_neighborhood_size =
                qry.items.empty() ? 0.0
                                  : static_cast<double>(qstats.member_total) /
                                        static_cast<double>(qry.items.size());
            report.outlier_rate = (qstats.labels_known && qstats.member_total > 0)
                                      ? static_cast<double>(qstats.outlier_total) /
                                            static_cast<double>(qstats.member_total)
                                      : -1.0;

            if (cfg.reconstruct_gallery) {
                gallery_reprs = detail::reconstruct_split(gal, index, *params, mode, oracle_ub,
                                                          labels, cfg, nullptr);
            } else {
                gallery_reprs.resize(gal.items.size());
                for (std::size_t i = 0; i < gal.items.size(); ++i)
                    gallery_reprs[i] = final_representation(gal.items[i].features);
            }
            break;
        }
    }

    // rank every query, then score
    std::vector<std::vector<char>> relevance(query.items.size());
    std::vector<int> evaluated(query.items.size(), 0);
    parallel_for(static_cast<int>(query.items.size()), cfg.threads, [&](int qi) {
        const auto& q = query.items[qi];
        std::vector<double> sims(gallery.items.size());
        std::vector<int> keep;  // gallery indices that survive junk filtering
        keep.reserve(gallery.items.size());
        for (std::size_t gi = 0; gi < gallery.items.size(); ++gi) {
            const auto& g = gallery.items[gi];
            if (cfg.filter_same_camera && q.person_id && g.person_id && *q.person_id == *g.person_id &&
                q.camera_id && g.camera_id && *q.camera_id == *g.camera_id)
                continue;
            keep.push_back(static_cast<int>(gi));
        }
        std::vector<double> kept_sims(keep.size());
        std::vector<std::string> kept_ids(keep.size());
        for (std::size_t k = 0; k < keep.size(); ++k) {
            const int gi = keep[k];
            kept_sims[k] = pairwise_visible
                               ? visible_only_similarity(q, gallery.items[gi])
                               : cosine(query_reprs[qi], gallery_reprs[gi]);
            kept_ids[k] = gallery_ids[gi];
        }
        if (kept_sims.empty()) return;
        auto order = rank_order(kept_sims, kept_ids);
        std::vector<char> rel(order.size(), 0);
        bool any = false;
        for (std::size_t r = 0; r < order.size(); ++r) {
            const auto& g = gallery.items[keep[order[r]]];
            const bool match = q.person_id && g.person_id && *q.person_id == *g.person_id;
            rel[r] = match ? 1 : 0;
            any = any || match;
        }
        if (!any) return;  // no relevant item; skipped with a warning below
        relevance[qi] = std::move(rel);
        evaluated[qi] = 1;
    });

    std::vector<int> first_hits;
    for (std::size_t qi = 0; qi < query.items.size(); ++qi) {
        if (!evaluated[qi]) {
            ++report.skipped_queries;
            continue;
        }
        report.query_ids.push_back(query.items[qi].image_id);
        report.per_query_ap.push_back(average_precision(relevance[qi]));
        first_hits.push_back(first_hit_rank(relevance[qi]));
    }
    if (report.skipped_queries > 0)
        std::cerr << "warning: " << report.skipped_queries
                  << " queries had no relevant gallery item and were skipped\n";

    if (!report.per_query_ap.empty()) {
        double sum = 0.0;
        for (double ap : report.per_query_ap) sum += ap;
        report.mean_ap = sum / report.per_query_ap.size();
    }
    const int max_rank = static_cast<int>(std::min<std::size_t>(gallery.items.size(), 50));
    report.curve = cmc_curve(first_hits, max_rank);
    return report;
}

}  // namespace occrec
