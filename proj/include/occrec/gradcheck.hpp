#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "occrec/encoder.hpp"
#include "occrec/occlusion.hpp"
#include "occrec/orgnn.hpp"
#include "occrec/rng.hpp"
#include "occrec/synth.hpp"

namespace occrec {

struct GradCheckReport {
    std::string name;
    int instances = 0;
    int resampled = 0;  // instances re-drawn because a kink was too close
    double max_rel_error = 0.0;
    double tolerance = 0.0;
    bool pass = false;
};

namespace detail {

// Denominator floor keeps finite-difference noise on near-zero coordinates
// from reading as spurious relative error.
inline double rel_error(double a, double b, double floor_ = 1e-6) {
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor_});
}

}  // namespace detail

// Central finite differences over every parameter coordinate of the full
// T-layer loss. Instances whose forward pass comes within `kink_eps` of a
// ReLU or confidence-clamp kink are re-drawn: the loss is not differentiable
// there and the comparison would be meaningless.
inline GradCheckReport orgnn_gradcheck(int instances, int dim, int neighbors, int parts, int layers,
                                       int num_ids, AggMode mode, std::uint64_t seed,
                                       double step = 1e-5, double tolerance = 1e-4,
                                       double kink_eps = 1e-6) {
    GradCheckReport report;
    report.name = std::string("orgnn-loss-grad[") + agg_mode_name(mode) + "]";
    report.tolerance = tolerance;
    Rng rng(seed);

    for (int inst = 0; inst < instances; ++inst) {
        ORGNNParams params;
        GraphSample sample;
        for (;;) {
            params = ORGNNParams::init(parts, dim, layers, num_ids, rng.next_u64());
            // widen the init a little so affinity/confidence paths carry signal
            for (auto& t : params.theta) t += 0.05 * rng.gaussian();
            sample.label = rng.uniform_int(num_ids);
            sample.neighbor_feats.assign(parts, {});
            for (int k = 0; k < parts; ++k) {
                Vec base = rng.unit_vec(dim);
                for (int j = 0; j < neighbors; ++j) {
                    Vec f = base;
                    axpy(0.35, rng.gaussian_vec(dim), f);
                    const double n = norm(f);
                    for (auto& x : f) x /= n;
                    sample.neighbor_feats[k].push_back(std::move(f));
                }
            }
            KinkStats kinks;
            orgnn_loss_grad(sample, params, mode, nullptr, -1, &kinks);
            if (kinks.min_relu_abs > kink_eps &&
                (mode != AggMode::outlier_removable || kinks.min_conf_abs > kink_eps))
                break;
            ++report.resampled;
        }

        std::vector<double> analytic(params.size(), 0.0);
        orgnn_loss_grad(sample, params, mode, &analytic);
        for (std::size_t i = 0; i < params.size(); ++i) {
            const double saved = params.theta[i];
            params.theta[i] = saved + step;
            const double up = orgnn_loss_grad(sample, params, mode, nullptr);
            params.theta[i] = saved - step;
            const double down = orgnn_loss_grad(sample, params, mode, nullptr);
            params.theta[i] = saved;
            const double fd = (up - down) / (2.0 * step);
            report.max_rel_error = std::max(report.max_rel_error, detail::rel_error(analytic[i], fd));
        }
        ++report.instances;
    }
    report.pass = report.max_rel_error < tolerance;
    return report;
}

namespace detail {

// Smallest |hinge| and smallest mining margin across parts for a batch;
// selections must be stable under the finite-difference perturbation.
struct EncoderKinks {
    double min_hinge_abs = 1e300;
    double min_mining_gap = 1e300;
};

inline EncoderKinks encoder_kinks(const EncoderParams& params, const Dataset& train,
                                  const std::vector<int>& batch, const std::vector<int>& labels,
                                  double eta) {
    EncoderKinks kinks;
    const int n = static_cast<int>(batch.size());
    for (int p = 0; p < params.parts; ++p) {
        std::vector<Vec> x(n);
        for (int i = 0; i < n; ++i) {
            Vec u;
            matvec(params.proj(p), train.items[batch[i]].features[p], u);
            const double un = norm(u);
            x[i] = un > 0.0 ? scaled(u, 1.0 / un) : Vec(params.dim, 0.0);
        }
        auto triplets = mine_batch_hard(x, labels);
        for (const auto& t : triplets) {
            const double dp = euclidean(x[t.anchor], x[t.positive]);
            const double dn = euclidean(x[t.anchor], x[t.negative]);
            kinks.min_hinge_abs = std::min(kinks.min_hinge_abs, std::abs(dp - dn + eta));
            for (int j = 0; j < n; ++j) {
                if (j == t.anchor) continue;
                const double d = euclidean(x[t.anchor], x[j]);
                if (labels[j] == labels[t.anchor] && j != t.positive)
                    kinks.min_mining_gap = std::min(kinks.min_mining_gap, std::abs(dp - d));
                if (labels[j] != labels[t.anchor] && j != t.negative)
                    kinks.min_mining_gap = std::min(kinks.min_mining_gap, std::abs(d - dn));
            }
        }
    }
    return kinks;
}

}  // namespace detail

// Joint identification + triplet loss through projection and normalization.
inline GradCheckReport encoder_gradcheck(int instances, int raw_dim, int dim, int persons,
                                         int images_per_person, std::uint64_t seed, double step = 1e-5,
                                         double tolerance = 1e-4) {
    GradCheckReport report;
    report.name = "encoder-loss-grad";
    report.tolerance = tolerance;
    Rng rng(seed);
    const double eta = 0.3;

    for (int inst = 0; inst < instances; ++inst) {
        EncoderParams params;
        Dataset train;
        std::vector<int> batch, labels;
        for (;;) {
            batch.clear();
            labels.clear();
            std::vector<PartFeatureSet> items;
            for (int person = 0; person < persons; ++person) {
                Vec proto = rng.unit_vec(raw_dim);
                for (int img = 0; img < images_per_person; ++img) {
                    PartFeatureSet fs;
                    fs.image_id = "p" + std::to_string(person) + "_" + std::to_string(img);
                    fs.person_id = person;
                    Vec f = proto;
                    axpy(0.4, rng.gaussian_vec(raw_dim), f);
                    const double n = norm(f);
                    for (auto& x : f) x /= n;
                    fs.features = {f};
                    fs.visibility_scores = {1.0};
                    fs.visibility_mask = {true};
                    batch.push_back(static_cast<int>(items.size()));
                    labels.push_back(person);
                    items.push_back(std::move(fs));
                }
            }
            train = make_dataset(std::move(items), Split::train, 1, raw_dim);
            params = EncoderParams::init(1, raw_dim, dim, persons, rng.next_u64());
            auto kinks = detail::encoder_kinks(params, train, batch, labels, eta);
            if (kinks.min_hinge_abs > 1e-4 && kinks.min_mining_gap > 1e-3) break;
            ++report.resampled;
        }

        std::vector<double> analytic(params.size(), 0.0);
        encoder_batch_loss_grad(params, train, batch, labels, eta, &analytic);
        for (std::size_t i = 0; i < params.size(); ++i) {
            const double saved = params.theta[i];
            params.theta[i] = saved + step;
            const double up = encoder_batch_loss_grad(params, train, batch, labels, eta, nullptr);
            params.theta[i] = saved - step;
            const double down = encoder_batch_loss_grad(params, train, batch, labels, eta, nullptr);
            params.theta[i] = saved;
            const double fd = (up - down) / (2.0 * step);
            report.max_rel_error = std::max(report.max_rel_error, detail::rel_error(analytic[i], fd));
        }
        ++report.instances;
    }
    report.pass = report.max_rel_error < tolerance;
    return report;
}

inline GradCheckReport bce_gradcheck(int instances, int parts, std::uint64_t seed, double step = 1e-6,
                                     double tolerance = 1e-5) {
    GradCheckReport report;
    report.name = "occlusion-bce-grad";
    report.tolerance = tolerance;
    Rng rng(seed);
    for (int inst = 0; inst < instances; ++inst) {
        std::vector<double> y(parts), labels(parts);
        for (int p = 0; p < parts; ++p) {
            y[p] = rng.uniform(0.05, 0.95);
            labels[p] = rng.uniform_int(2);
        }
        auto res = occlusion_bce_loss(y, labels);
        for (int p = 0; p < parts; ++p) {
            const double saved = y[p];
            y[p] = saved + step;
            const double up = occlusion_bce_loss(y, labels).loss;
            y[p] = saved - step;
            const double down = occlusion_bce_loss(y, labels).loss;
            y[p] = saved;
            const double fd = (up - down) / (2.0 * step);
            report.max_rel_error = std::max(report.max_rel_error, detail::rel_error(res.grad[p], fd));
        }
        ++report.instances;
    }
    report.pass = report.max_rel_error < tolerance;
    return report;
}

inline std::vector<GradCheckReport> run_all_gradchecks(std::uint64_t seed) {
    std::vector<GradCheckReport> reports;
    reports.push_back(orgnn_gradcheck(20, 8, 4, 2, 2, 7, AggMode::outlier_removable, seed));
    reports.push_back(orgnn_gradcheck(5, 8, 4, 2, 2, 7, AggMode::plain_gnn, seed + 1));
    reports.push_back(orgnn_gradcheck(5, 8, 4, 2, 2, 7, AggMode::average, seed + 2));
    reports.push_back(encoder_gradcheck(5, 6, 5, 3, 3, seed + 3));
    reports.push_back(bce_gradcheck(20, 6, seed + 4));
    return reports;
}

}  // namespace occrec
