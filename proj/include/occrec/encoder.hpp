#pragma once

#include <algorithm>
#include <cstdint>
#include <iostream>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "occrec/adam.hpp"
#include "occrec/config.hpp"
#include "occrec/core.hpp"
#include "occrec/io.hpp"
#include "occrec/rng.hpp"

namespace occrec {

inline constexpr const char* kEncoderMagic = "OCCENC1";

// Per-part linear projections plus per-part identity classifier heads,
// stored flat so the optimizer and the finite-difference checks can treat
// the whole model as one parameter vector.
// Layout per part p: [proj (dim x raw_dim) row-major][cls (num_ids x dim) row-major].
struct EncoderParams {
    int parts = 0;
    int raw_dim = 0;
    int dim = 0;
    int num_ids = 0;
    std::vector<double> theta;

    std::size_t per_part() const {
        return static_cast<std::size_t>(dim) * raw_dim + static_cast<std::size_t>(num_ids) * dim;
    }
    std::size_t proj_off(int p) const { return p * per_part(); }
    std::size_t cls_off(int p) const { return p * per_part() + static_cast<std::size_t>(dim) * raw_dim; }
    std::size_t size() const { return static_cast<std::size_t>(parts) * per_part(); }

    ConstMatView proj(int p) const { return {theta.data() + proj_off(p), dim, raw_dim}; }
    ConstMatView cls(int p) const { return {theta.data() + cls_off(p), num_ids, dim}; }

    static EncoderParams init(int parts, int raw_dim, int dim, int num_ids, std::uint64_t seed) {
        EncoderParams params;
        params.parts = parts;
        params.raw_dim = raw_dim;
        params.dim = dim;
        params.num_ids = num_ids;
        params.theta.resize(params.size());
        Rng rng(seed);
        const double proj_scale = 1.0 / std::sqrt(static_cast<double>(raw_dim));
        const double cls_scale = 1.0 / std::sqrt(static_cast<double>(dim));
        for (int p = 0; p < parts; ++p) {
            double* w = params.theta.data() + params.proj_off(p);
            for (std::size_t i = 0; i < static_cast<std::size_t>(dim) * raw_dim; ++i)
                w[i] = proj_scale * rng.gaussian();
            double* c = params.theta.data() + params.cls_off(p);
            for (std::size_t i = 0; i < static_cast<std::size_t>(num_ids) * dim; ++i)
                c[i] = cls_scale * rng.gaussian();
        }
        return params;
    }
};

// ---------------------------------------------------------------------------
// Batch-hard triplet mining. psi is the Euclidean distance; on unit vectors
// it is monotone in cosine, so rankings coincide.

struct Triplet {
    int anchor;
    int positive;  // farthest in-batch positive
    int negative;  // nearest in-batch negative
};

inline double euclidean(const Vec& a, const Vec& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return std::sqrt(s);
}

// Anchors lacking a positive or a negative are skipped and counted.
inline std::vector<Triplet> mine_batch_hard(const std::vector<Vec>& feats, const std::vector<int>& labels,
                                            int* skipped = nullptr) {
    const int n = static_cast<int>(feats.size());
    std::vector<Triplet> out;
    int skip_count = 0;
    for (int a = 0; a < n; ++a) {
        int best_pos = -1, best_neg = -1;
        double pos_dist = -1.0, neg_dist = 0.0;
        for (int j = 0; j < n; ++j) {
            if (j == a) continue;
            const double d = euclidean(feats[a], feats[j]);
            if (labels[j] == labels[a]) {
                if (d > pos_dist) {
                    pos_dist = d;
                    best_pos = j;
                }
            } else if (best_neg < 0 || d < neg_dist) {
                neg_dist = d;
                best_neg = j;
            }
        }
        if (best_pos < 0 || best_neg < 0) {
            ++skip_count;
            continue;
        }
        out.push_back({a, best_pos, best_neg});
    }
    if (skipped) *skipped = skip_count;
    return out;
}

struct FeatureLoss {
    double loss = 0.0;
    std::vector<Vec> grad_feats;
};

// Mean over anchors of max(psi(a,p) - psi(a,n) + eta, 0). Subgradient 0 at
// the hinge kink and at coincident pairs (distance 0).
inline FeatureLoss triplet_loss(const std::vector<Vec>& feats, const std::vector<int>& labels,
                                double eta, int* skipped = nullptr,
                                std::vector<Triplet>* mined = nullptr) {
    FeatureLoss out;
    out.grad_feats.assign(feats.size(), Vec(feats.empty() ? 0 : feats[0].size(), 0.0));
    const auto triplets = mine_batch_hard(feats, labels, skipped);
    if (mined) *mined = triplets;
    if (triplets.empty()) return out;
    const double scale = 1.0 / static_cast<double>(triplets.size());
    for (const auto& t : triplets) {
        const double dp = euclidean(feats[t.anchor], feats[t.positive]);
        const double dn = euclidean(feats[t.anchor], feats[t.negative]);
        const double hinge = dp - dn + eta;
        if (hinge <= 0.0) continue;
        out.loss += scale * hinge;
        if (dp > 0.0) {
            for (std::size_t i = 0; i < feats[t.anchor].size(); ++i) {
                const double g = scale * (feats[t.anchor][i] - feats[t.positive][i]) / dp;
                out.grad_feats[t.anchor][i] += g;
                out.grad_feats[t.positive][i] -= g;
            }
        }
        if (dn > 0.0) {
            for (std::size_t i = 0; i < feats[t.anchor].size(); ++i) {
                const double g = scale * (feats[t.anchor][i] - feats[t.negative][i]) / dn;
                out.grad_feats[t.anchor][i] -= g;
                out.grad_feats[t.negative][i] += g;
            }
        }
    }
    return out;
}

struct ClassifierLoss {
    double loss = 0.0;
    std::vector<Vec> grad_feats;
    std::vector<double> grad_cls;  // same layout as the classifier view
};

// Softmax cross-entropy averaged over the batch.
inline ClassifierLoss identification_loss(const std::vector<Vec>& feats, const std::vector<int>& labels,
                                          ConstMatView cls) {
    ClassifierLoss out;
    const int n = static_cast<int>(feats.size());
    if (n == 0) throw std::runtime_error("identification_loss: empty batch");
    out.grad_feats.assign(n, Vec(feats[0].size(), 0.0));
    out.grad_cls.assign(static_cast<std::size_t>(cls.rows) * cls.cols, 0.0);
    MatView gcls{out.grad_cls.data(), cls.rows, cls.cols};
    const double scale = 1.0 / n;
    Vec logits;
    for (int i = 0; i < n; ++i) {
        if (labels[i] < 0 || labels[i] >= cls.rows)
            throw std::runtime_error("identification_loss: label out of classifier range");
        matvec(cls, feats[i], logits);
        auto ce = softmax_cross_entropy(logits, labels[i]);
        out.loss += scale * ce.loss;
        Vec dz = scaled(ce.grad_logits, scale);
        add_outer(gcls, dz, feats[i]);
        Vec dx;
        mat_t_vec(cls, dz, dx);
        axpy(1.0, dx, out.grad_feats[i]);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Training (Eq. of the joint loss: per part, identification + triplet,
// averaged over parts) with manual backprop through the L2 normalization.

struct EncoderTrainResult {
    EncoderParams params;
    std::vector<double> epoch_loss;
    int skipped_anchors = 0;
};

namespace detail {

// x = u / |u|;  dL/du = (g - (x . g) x) / |u|;  zero u stays zero with no grad.
inline Vec normalize_backward(const Vec& x, double unorm, const Vec& grad_x) {
    Vec gu(x.size(), 0.0);
    if (unorm == 0.0) return gu;
    const double proj = dot(x, grad_x);
    for (std::size_t i = 0; i < x.size(); ++i) gu[i] = (grad_x[i] - proj * x[i]) / unorm;
    return gu;
}

inline std::map<int, std::vector<int>> group_by_person(const Dataset& ds) {
    std::map<int, std::vector<int>> groups;
    for (int i = 0; i < static_cast<int>(ds.items.size()); ++i) {
        if (!ds.items[i].person_id) continue;
        groups[*ds.items[i].person_id].push_back(i);
    }
    return groups;
}

}  // namespace detail

// One forward/backward pass over a batch of raw images; returns the batch
// loss and accumulates parameter gradients. Each part's loss terms are
// restricted to images whose part is visible: an occluded part carries an
// obstacle feature with no identity signal, so training a part head on it
// only injects label noise.
inline double encoder_batch_loss_grad(const EncoderParams& params, const Dataset& train,
                                      const std::vector<int>& batch, const std::vector<int>& labels,
                                      double eta, std::vector<double>* grad, int* skipped = nullptr) {
    const int m = params.parts;
    double total = 0.0;
    int skip_total = 0;
    for (int p = 0; p < m; ++p) {
        std::vector<int> rows;  // batch positions with part p visible
        for (std::size_t i = 0; i < batch.size(); ++i)
            if (train.items[batch[i]].visibility_mask[p]) rows.push_back(static_cast<int>(i));
        if (rows.empty()) continue;

        const int n = static_cast<int>(rows.size());
        std::vector<Vec> x(n);
        std::vector<double> unorm(n);
        std::vector<int> part_labels(n);
        for (int i = 0; i < n; ++i) {
            const Vec& raw = train.items[batch[rows[i]]].features[p];
            Vec u;
            matvec(params.proj(p), raw, u);
            unorm[i] = norm(u);
            x[i] = unorm[i] > 0.0 ? scaled(u, 1.0 / unorm[i]) : Vec(params.dim, 0.0);
            part_labels[i] = labels[rows[i]];
        }

        auto id = identification_loss(x, part_labels, params.cls(p));
        int skip = 0;
        auto tri = triplet_loss(x, part_labels, eta, &skip);
        skip_total += skip;
        total += (id.loss + tri.loss) / m;

        if (grad) {
            double* gcls = grad->data() + params.cls_off(p);
            for (std::size_t i = 0; i < id.grad_cls.size(); ++i) gcls[i] += id.grad_cls[i] / m;
            MatView gproj{grad->data() + params.proj_off(p), params.dim, params.raw_dim};
            for (int i = 0; i < n; ++i) {
                Vec gx = id.grad_feats[i];
                axpy(1.0, tri.grad_feats[i], gx);
                for (auto& g : gx) g /= m;
                Vec gu = detail::normalize_backward(x[i], unorm[i], gx);
                add_outer(gproj, gu, train.items[batch[rows[i]]].features[p]);
            }
        }
    }
    if (skipped) *skipped = skip_total;
    return total;
}

inline std::vector<int> remap_labels(const Dataset& ds, std::vector<int>* out_ids = nullptr) {
    std::map<int, int> remap;
    for (const auto& it : ds.items) {
        if (!it.person_id) throw std::runtime_error("training items must carry person_id");
        remap.emplace(*it.person_id, 0);
    }
    int next = 0;
    for (auto& [pid, idx] : remap) idx = next++;
    std::vector<int> labels;
    labels.reserve(ds.items.size());
    for (const auto& it : ds.items) labels.push_back(remap.at(*it.person_id));
    if (out_ids) {
        out_ids->clear();
        for (const auto& [pid, idx] : remap) out_ids->push_back(pid);
    }
    return labels;
}

inline EncoderTrainResult train_encoder(const Dataset& train, const PipelineConfig& cfg) {
    if (train.items.empty()) throw std::runtime_error("train_encoder: empty training set");
    const std::vector<int> labels = remap_labels(train);
    const int num_ids = 1 + *std::max_element(labels.begin(), labels.end());

    EncoderTrainResult result;
    result.params = EncoderParams::init(train.num_parts, train.feature_dim, cfg.d, num_ids, cfg.seed);
    if (cfg.epochs == 0) return result;

    auto groups = detail::group_by_person(train);
    for (const auto& [pid, members] : groups)
        if (members.size() < 2)
            std::cerr << "warning: person " << pid << " has fewer than 2 training images\n";

    Rng rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
    Adam opt(result.params.size(), {cfg.learning_rate});
    std::vector<double> grad(result.params.size());

    std::vector<int> person_order;
    for (const auto& [pid, members] : groups) person_order.push_back(pid);

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        const double lr_scale = lr_decay_multiplier(cfg.lr_decay_epochs, epoch);
        rng.shuffle(person_order);
        std::map<int, std::vector<int>> pools = groups;
        for (auto& [pid, members] : pools) rng.shuffle(members);

        double epoch_loss = 0.0;
        int batches = 0;
        for (std::size_t start = 0; start < person_order.size();
             start += static_cast<std::size_t>(cfg.enc_batch_persons)) {
            std::vector<int> batch;
            for (std::size_t pi = start;
                 pi < std::min(person_order.size(), start + cfg.enc_batch_persons); ++pi) {
                const auto& pool = pools[person_order[pi]];
                const int take = std::min<int>(cfg.enc_images_per_person, static_cast<int>(pool.size()));
                for (int s = 0; s < take; ++s) batch.push_back(pool[s]);
            }
            if (batch.size() < 2) continue;
            std::vector<int> batch_labels;
            for (int idx : batch) batch_labels.push_back(labels[idx]);

            std::fill(grad.begin(), grad.end(), 0.0);
            int skipped = 0;
            const double loss = encoder_batch_loss_grad(result.params, train, batch, batch_labels,
                                                        cfg.eta, &grad, &skipped);
            result.skipped_anchors += skipped;
            if (!std::isfinite(loss))
                throw std::runtime_error("encoder training diverged (non-finite loss)");
            opt.step(result.params.theta, grad, lr_scale);
            epoch_loss += loss;
            ++batches;
        }
        result.epoch_loss.push_back(batches > 0 ? epoch_loss / batches : 0.0);
    }
    if (result.skipped_anchors > 0)
        std::cerr << "warning: " << result.skipped_anchors
                  << " anchors lacked an in-batch positive or negative and were skipped\n";
    return result;
}

// Per-part projection then L2 normalization. Visibility carries over from
// the raw input; zero projections are forced occluded.
inline PartFeatureSet encode(const PartFeatureSet& raw, const EncoderParams& params) {
    if (raw.parts() != params.parts || raw.dim() != params.raw_dim)
        throw std::runtime_error("encode: dimension mismatch for '" + raw.image_id + "'");
    PartFeatureSet out = raw;
    for (int p = 0; p < params.parts; ++p) {
        Vec u;
        matvec(params.proj(p), raw.features[p], u);
        out.features[p] = std::move(u);
    }
    return l2_normalize_parts(out);
}

inline Dataset encode_dataset(const Dataset& raw, const EncoderParams& params) {
    std::vector<PartFeatureSet> items;
    items.reserve(raw.items.size());
    for (const auto& it : raw.items) items.push_back(encode(it, params));
    return make_dataset(std::move(items), raw.split, params.parts, params.dim);
}

inline void save_encoder(const EncoderParams& params, const std::string& path) {
    std::string header = std::string(kEncoderMagic) + ' ' + std::to_string(params.parts) + ' ' +
                         std::to_string(params.raw_dim) + ' ' + std::to_string(params.dim) + ' ' +
                         std::to_string(params.num_ids);
    write_blob_file(path, header, params.theta);
}

inline EncoderParams load_encoder(const std::string& path) {
    auto tokens = read_blob_header(path, kEncoderMagic);
    if (tokens.size() != 5) throw std::runtime_error("checkpoint: header mismatch in '" + path + "'");
    EncoderParams params;
    params.parts = std::stoi(tokens[1]);
    params.raw_dim = std::stoi(tokens[2]);
    params.dim = std::stoi(tokens[3]);
    params.num_ids = std::stoi(tokens[4]);
    auto blob = read_blob_file(path, kEncoderMagic, params.size());
    params.theta = std::move(blob.payload);
    return params;
}

}  // namespace occrec
