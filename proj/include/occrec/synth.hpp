#pragma once

#include <cstdint>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "occrec/core.hpp"
#include "occrec/occlusion.hpp"
#include "occrec/rng.hpp"

namespace occrec {

// Desk-scale stand-in for the real datasets. Identities get a unit prototype
// per part; occluded parts are drawn from obstacle clusters *shared across
// identities*, so occluded regions of different people look alike and the
// concatenated baseline is demonstrably confusable.
struct SynthSpec {
    int num_identities = 200;
    int images_per_identity = 20;
    int raw_dim = 64;  // dimension of generated features (encoder input)
    int dim = 32;      // encoder target dimension, carried for the pipeline
    int num_parts = kDefaultParts;
    double occlusion_rate = 0.5;
    double sigma_id = 0.25;      // intra-identity noise before renormalization
    int num_obstacle_clusters = 5;
    double obstacle_noise = 0.1;
    int camera_count = 4;
    std::uint64_t seed = 1;

    void validate() const {
        if (num_identities < 1) throw std::runtime_error("synth: num_identities must be >= 1");
        if (images_per_identity < 2) throw std::runtime_error("synth: images_per_identity must be >= 2");
        if (occlusion_rate < 0.0 || occlusion_rate >= 1.0)
            throw std::runtime_error("synth: occlusion_rate must lie in [0, 1)");
        if (raw_dim < 1 || dim < 1 || num_parts < 1) throw std::runtime_error("synth: bad dimensions");
        if (num_obstacle_clusters < 1) throw std::runtime_error("synth: need >= 1 obstacle cluster");
        if (camera_count < 1) throw std::runtime_error("synth: need >= 1 camera");
    }
};

struct SynthOutput {
    Dataset train, query, gallery;
    std::unordered_map<std::string, std::vector<bool>> visibility_truth;
};

namespace detail {

inline std::string synth_image_id(int person, int image) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "img_%04d_%03d", person, image);
    return buf;
}

// Non-negative unit vector supported on ~density*d coordinates. Support
// overlap sets the typical cross-identity similarity, keeping it mostly
// below the matching threshold while leaving a confusable tail.
inline Vec sparse_unit_nonneg(Rng& rng, int d, double density) {
    std::vector<int> coords(d);
    for (int i = 0; i < d; ++i) coords[i] = i;
    rng.shuffle(coords);
    const int support = std::max(1, static_cast<int>(density * d + 0.5));
    Vec v(d, 0.0);
    for (int i = 0; i < support; ++i) v[coords[i]] = std::abs(rng.gaussian());
    const double n = norm(v);
    if (n == 0.0) return sparse_unit_nonneg(rng, d, density);
    for (auto& x : v) x /= n;
    return v;
}

inline constexpr double kPrototypeDensity = 0.80;

}  // namespace detail

inline SynthOutput generate(const SynthSpec& spec) {
    spec.validate();
    Rng rng(spec.seed);
    const int m = spec.num_parts;
    const int d = spec.raw_dim;

    // Prototypes and obstacle centers live in the non-negative orthant, like
    // post-activation CNN part features. All noise scales are vector norms
    // relative to the unit prototypes, so the geometry is
    // dimension-independent.
    std::vector<std::vector<Vec>> prototypes(spec.num_identities);
    for (auto& parts : prototypes) {
        parts.reserve(m);
        for (int p = 0; p < m; ++p)
            parts.push_back(detail::sparse_unit_nonneg(rng, d, detail::kPrototypeDensity));
    }
    const double component_scale = 1.0 / std::sqrt(static_cast<double>(d));
    std::vector<std::vector<Vec>> camera_offsets(spec.camera_count);
    for (auto& parts : camera_offsets) {
        parts.reserve(m);
        for (int p = 0; p < m; ++p) {
            Vec off = rng.gaussian_vec(d);
            for (auto& x : off) x = std::abs(x) * 0.1 * component_scale;
            parts.push_back(std::move(off));
        }
    }
    std::vector<Vec> obstacle_centers;
    obstacle_centers.reserve(spec.num_obstacle_clusters);
    for (int c = 0; c < spec.num_obstacle_clusters; ++c)
        obstacle_centers.push_back(detail::sparse_unit_nonneg(rng, d, detail::kPrototypeDensity));

    std::vector<int> identity_order(spec.num_identities);
    for (int i = 0; i < spec.num_identities; ++i) identity_order[i] = i;
    rng.shuffle(identity_order);
    const int num_train_ids = (spec.num_identities + 1) / 2;
    std::vector<bool> is_train_id(spec.num_identities, false);
    for (int i = 0; i < num_train_ids; ++i) is_train_id[identity_order[i]] = true;

    SynthOutput out;
    std::vector<PartFeatureSet> train_items, query_items, gallery_items;

    for (int person = 0; person < spec.num_identities; ++person) {
        std::vector<PartFeatureSet> images;
        std::vector<bool> occluded_any;
        for (int img = 0; img < spec.images_per_identity; ++img) {
            const int cam = rng.uniform_int(spec.camera_count);
            // rejection keeps at least one visible part per image
            std::vector<bool> visible(m);
            for (;;) {
                bool any = false;
                for (int p = 0; p < m; ++p) {
                    visible[p] = rng.uniform() >= spec.occlusion_rate;
                    any = any || visible[p];
                }
                if (any) break;
            }

            PartFeatureSet fs;
            fs.image_id = detail::synth_image_id(person, img);
            fs.person_id = person;
            fs.camera_id = cam;
            fs.features.resize(m);
            fs.visibility_scores.resize(m);
            fs.visibility_mask.resize(m);
            bool any_occluded = false;
            for (int p = 0; p < m; ++p) {
                Vec f;
                if (visible[p]) {
                    f = prototypes[person][p];
                    Vec noise = rng.gaussian_vec(d);
                    axpy(spec.sigma_id * component_scale, noise, f);
                    axpy(1.0, camera_offsets[cam][p], f);
                } else {
                    any_occluded = true;
                    const int cluster = rng.uniform_int(spec.num_obstacle_clusters);
                    f = obstacle_centers[cluster];
                    Vec noise = rng.gaussian_vec(d);
                    axpy(spec.obstacle_noise * component_scale, noise, f);
                }
                const double n = norm(f);
                for (auto& x : f) x /= n;
                quantize_f32(f);
                fs.features[p] = std::move(f);
                fs.visibility_scores[p] =
                    visible[p] ? 0.5 + 0.5 * rng.uniform() : 0.5 * rng.uniform();
                fs.visibility_mask[p] = visible[p];
                out.visibility_truth[fs.image_id].push_back(visible[p]);
            }
            images.push_back(std::move(fs));
            occluded_any.push_back(any_occluded);
        }

        if (is_train_id[person]) {
            for (auto& fs : images) train_items.push_back(std::move(fs));
            continue;
        }
        // test identity: occluded images become query candidates; the gallery
        // keeps at least one image of every identity
        const int max_queries =
            std::min(std::max(1, spec.images_per_identity / 4), spec.images_per_identity - 1);
        std::vector<bool> to_query(images.size(), false);
        int taken = 0;
        for (int img = 0; img < static_cast<int>(images.size()) && taken < max_queries; ++img) {
            if (occluded_any[img]) {
                to_query[img] = true;
                ++taken;
            }
        }
        int gallery_count = 0;
        for (int img = 0; img < static_cast<int>(images.size()); ++img) {
            if (to_query[img]) {
                query_items.push_back(std::move(images[img]));
            } else {
                gallery_items.push_back(std::move(images[img]));
                ++gallery_count;
            }
        }
        if (gallery_count == 0)
            throw std::runtime_error("synth: identity " + std::to_string(person) +
                                     " ended with zero gallery images");
    }

    out.train = make_dataset(std::move(train_items), Split::train, m, d);
    out.query = make_dataset(std::move(query_items), Split::query, m, d);
    out.gallery = make_dataset(std::move(gallery_items), Split::gallery, m, d);
    return out;
}

// ---------------------------------------------------------------------------
// Mask fixtures. A full-width/full-height torso rectangle with small margins,
// minus full-stripe and full-column occluders. Ground truth is computed from
// the rectangle parameters with exact integer pixel counts (same coverage /
// max-normalize / threshold rule as the estimator, but no rasterization), so
// the estimator test compares two independent routes to the same geometry.

struct MaskFixture {
    BodyMask mask;
    std::vector<bool> truth;  // per part, global part order
    std::string name;
};

namespace detail {

// pixels of [lo, hi) left after removing torso clipping and erased intervals
inline long long kept_span(int lo, int hi, int keep_lo, int keep_hi,
                           const std::vector<std::pair<int, int>>& erased) {
    long long total = 0;
    const int a = std::max(lo, keep_lo);
    const int b = std::min(hi, keep_hi);
    if (a >= b) return 0;
    for (int v = a; v < b; ++v) {
        bool gone = false;
        for (const auto& [e0, e1] : erased)
            if (v >= e0 && v < e1) {
                gone = true;
                break;
            }
        if (!gone) ++total;
    }
    return total;
}

}  // namespace detail

inline std::vector<MaskFixture> generate_masks(int count, std::uint64_t seed, int frame_h = 64,
                                               int frame_w = 32) {
    Rng rng(seed);
    const PartLayout layout = PartLayout::stripes(frame_h, frame_w);
    const int m = static_cast<int>(layout.regions.size());
    std::vector<MaskFixture> fixtures;
    fixtures.reserve(count);

    for (int n = 0; n < count; ++n) {
        // torso with small margins
        const int mt = rng.uniform_int(4), mb = rng.uniform_int(4);
        const int ml = rng.uniform_int(4), mr = rng.uniform_int(4);
        const int torso_r0 = mt, torso_r1 = frame_h - mb;
        const int torso_c0 = ml, torso_c1 = frame_w - mr;

        // choose occluded stripes (0-2 of 4) and columns (0-1 of 2)
        const int num_stripes = rng.uniform_int(3);
        std::vector<int> stripe_ids = {0, 1, 2, 3};
        rng.shuffle(stripe_ids);
        std::vector<bool> stripe_occluded(kHorizontalParts, false);
        for (int s = 0; s < num_stripes; ++s) stripe_occluded[stripe_ids[s]] = true;
        const int occluded_col = rng.uniform_int(3) == 0 ? rng.uniform_int(kVerticalParts) : -1;

        std::vector<std::pair<int, int>> erased_rows, erased_cols;
        for (int s = 0; s < kHorizontalParts; ++s)
            if (stripe_occluded[s])
                erased_rows.push_back({layout.regions[s].r0, layout.regions[s].r1});
        if (occluded_col >= 0) {
            const auto& reg = layout.regions[kHorizontalParts + occluded_col];
            erased_cols.push_back({reg.c0, reg.c1});
        }

        BodyMask mask = make_mask(frame_h, frame_w);
        for (int r = torso_r0; r < torso_r1; ++r) {
            bool row_gone = false;
            for (const auto& [e0, e1] : erased_rows)
                if (r >= e0 && r < e1) {
                    row_gone = true;
                    break;
                }
            if (row_gone) continue;
            for (int c = torso_c0; c < torso_c1; ++c) {
                bool col_gone = false;
                for (const auto& [e0, e1] : erased_cols)
                    if (c >= e0 && c < e1) {
                        col_gone = true;
                        break;
                    }
                if (!col_gone) mask.set(r, c, true);
            }
        }

        // exact-arithmetic ground truth: the foreground is separable, so a
        // region's count is (kept rows in range) * (kept cols in range)
        std::vector<double> coverage(m, 0.0);
        for (int p = 0; p < m; ++p) {
            const auto& reg = layout.regions[p];
            const long long rows = detail::kept_span(reg.r0, reg.r1, torso_r0, torso_r1, erased_rows);
            const long long cols = detail::kept_span(reg.c0, reg.c1, torso_c0, torso_c1, erased_cols);
            coverage[p] = static_cast<double>(rows * cols) / static_cast<double>(reg.area());
        }
        double peak = 0.0;
        for (double r : coverage) peak = std::max(peak, r);
        MaskFixture fx;
        fx.mask = std::move(mask);
        fx.truth.assign(m, false);
        if (peak > 0.0)
            for (int p = 0; p < m; ++p) fx.truth[p] = coverage[p] / peak >= kVisibilityThreshold;
        char buf[32];
        std::snprintf(buf, sizeof(buf), "mask_%04d", n);
        fx.name = buf;
        fixtures.push_back(std::move(fx));
    }
    return fixtures;
}

// Integer upscaling of mask + layout together; used by the rescaling
// invariance property.
inline BodyMask upscale_mask(const BodyMask& mask, int factor) {
    BodyMask out = make_mask(mask.height * factor, mask.width * factor);
    for (int r = 0; r < out.height; ++r)
        for (int c = 0; c < out.width; ++c) out.set(r, c, mask.at(r / factor, c / factor));
    return out;
}

}  // namespace occrec
