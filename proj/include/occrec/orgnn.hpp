#pragma once

#include <algorithm>
#include <cstdint>
#include <iostream>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "occrec/adam.hpp"
#include "occrec/config.hpp"
#include "occrec/core.hpp"
#include "occrec/encoder.hpp"
#include "occrec/io.hpp"
#include "occrec/neighborhood.hpp"
#include "occrec/rng.hpp"

namespace occrec {

inline constexpr const char* kGnnMagic = "OCCGNN1";

// Aggregation variants for the ablation matrix.
//   outlier_removable — confidences from the node/mean-of-others cosine,
//                       clamped at 0 before weighting
//   plain_gnn         — confidences fixed to 1, affinities still learned
//   average           — confidence 1, affinity 1, identity transform, no ReLU
enum class AggMode { outlier_removable, plain_gnn, average };

inline const char* agg_mode_name(AggMode m) {
    switch (m) {
        case AggMode::outlier_removable: return "orgnn";
        case AggMode::plain_gnn: return "gnn";
        case AggMode::average: return "avgagg";
    }
    return "?";
}

// One independent parameter set per part. Layout per part k:
//   [per layer t: W (d x d), V (d), b (1)] then classifier (num_ids x d).
struct ORGNNParams {
    int parts = 0;
    int dim = 0;
    int layers = 0;
    int num_ids = 0;
    std::vector<double> theta;

    std::size_t per_layer() const { return static_cast<std::size_t>(dim) * dim + dim + 1; }
    std::size_t per_part() const {
        return static_cast<std::size_t>(layers) * per_layer() + static_cast<std::size_t>(num_ids) * dim;
    }
    std::size_t size() const { return static_cast<std::size_t>(parts) * per_part(); }
    std::size_t w_off(int k, int t) const { return k * per_part() + t * per_layer(); }
    std::size_t v_off(int k, int t) const { return w_off(k, t) + static_cast<std::size_t>(dim) * dim; }
    std::size_t b_off(int k, int t) const { return v_off(k, t) + dim; }
    std::size_t cls_off(int k) const {
        return k * per_part() + static_cast<std::size_t>(layers) * per_layer();
    }

    ConstMatView w(int k, int t) const { return {theta.data() + w_off(k, t), dim, dim}; }
    const double* v(int k, int t) const { return theta.data() + v_off(k, t); }
    double b(int k, int t) const { return theta[b_off(k, t)]; }
    ConstMatView cls(int k) const { return {theta.data() + cls_off(k), num_ids, dim}; }

    // W = identity + small noise makes the untrained network approximately an
    // average aggregator.
    static ORGNNParams init(int parts, int dim, int layers, int num_ids, std::uint64_t seed) {
        ORGNNParams params;
        params.parts = parts;
        params.dim = dim;
        params.layers = layers;
        params.num_ids = num_ids;
        params.theta.assign(params.size(), 0.0);
        Rng rng(seed);
        for (int k = 0; k < parts; ++k) {
            for (int t = 0; t < layers; ++t) {
                double* w = params.theta.data() + params.w_off(k, t);
                for (int r = 0; r < dim; ++r)
                    for (int c = 0; c < dim; ++c)
                        w[static_cast<std::size_t>(r) * dim + c] =
                            (r == c ? 1.0 : 0.0) + 0.01 * rng.gaussian();
                double* v = params.theta.data() + params.v_off(k, t);
                for (int d = 0; d < dim; ++d) v[d] = 0.01 * rng.gaussian();
                params.theta[params.b_off(k, t)] = 0.0;
            }
            double* c = params.theta.data() + params.cls_off(k);
            for (std::size_t i = 0; i < static_cast<std::size_t>(num_ids) * dim; ++i)
                c[i] = 0.01 * rng.gaussian();
        }
        return params;
    }
};

// Node features of one part's complete graph. Row 0 is the target image,
// initialized to the mean of the neighbour rows.
struct GraphState {
    int part = 0;
    std::vector<Vec> x;
    std::vector<double> conf;  // raw Eq.-style confidences, filled by forward passes
    std::vector<double> aff;   // nodes x nodes, diagonal unused

    int nodes() const { return static_cast<int>(x.size()); }
};

inline GraphState init_graph(int part, const std::vector<Vec>& neighbor_feats) {
    if (neighbor_feats.empty()) throw std::runtime_error("empty neighborhood");
    const int d = static_cast<int>(neighbor_feats[0].size());
    GraphState state;
    state.part = part;
    state.x.assign(neighbor_feats.size() + 1, Vec(d, 0.0));
    for (std::size_t j = 0; j < neighbor_feats.size(); ++j) {
        state.x[j + 1] = neighbor_feats[j];
        axpy(1.0 / neighbor_feats.size(), neighbor_feats[j], state.x[0]);
    }
    return state;
}

// Cosine of node i against the arithmetic mean of all other nodes; 0 when
// either side has zero norm.
inline double node_confidence(const std::vector<Vec>& x, int i) {
    const int n = static_cast<int>(x.size());
    if (n < 2) throw std::runtime_error("node_confidence: need at least 2 nodes");
    Vec mu(x[0].size(), 0.0);
    for (int j = 0; j < n; ++j)
        if (j != i) axpy(1.0 / (n - 1), x[j], mu);
    return cosine(x[i], mu);
}

inline double node_confidence(const GraphState& state, int i) { return node_confidence(state.x, i); }

// sigma(V . (d o d) + b) for d = x_i - x_j; strictly inside (0, 1) and
// symmetric because the squared difference is. The sigmoid saturates to an
// exact 0 or 1 in floating point for extreme pre-activations, so the value
// is nudged back into the open interval.
inline double edge_affinity(const Vec& xi, const Vec& xj, const double* v, double b) {
    double q = b;
    for (std::size_t d = 0; d < xi.size(); ++d) {
        const double diff = xi[d] - xj[d];
        q += v[d] * diff * diff;
    }
    const double s = sigmoid(q);
    return std::min(std::max(s, std::numeric_limits<double>::min()), std::nextafter(1.0, 0.0));
}

inline double edge_affinity(const GraphState& state, const ORGNNParams& params, int layer, int i, int j) {
    if (i == j) throw std::runtime_error("edge_affinity: i == j");
    return edge_affinity(state.x[i], state.x[j], params.v(state.part, layer), params.b(state.part, layer));
}

// Everything the backward pass needs from one layer's forward evaluation.
struct LayerTrace {
    std::vector<Vec> x_in;
    std::vector<double> c_raw, c_eff;
    std::vector<Vec> mu;
    std::vector<double> x_norm, mu_norm;
    std::vector<double> a;  // N*N
    std::vector<Vec> g;
    std::vector<double> wsum;
    std::vector<Vec> u;  // preactivations (empty in average mode)
};

struct KinkStats {
    double min_relu_abs = 1e300;  // distance of any preactivation to the ReLU kink
    double min_conf_abs = 1e300;  // distance of any raw confidence to the clamp kink

    void merge(const KinkStats& o) {
        min_relu_abs = std::min(min_relu_abs, o.min_relu_abs);
        min_conf_abs = std::min(min_conf_abs, o.min_conf_abs);
    }
};

namespace detail {

struct LayerParamView {
    ConstMatView w;
    const double* v = nullptr;
    double b = 0.0;
};

inline std::vector<Vec> forward_layer(const std::vector<Vec>& x_in, const LayerParamView& lp,
                                      AggMode mode, LayerTrace* trace, KinkStats* kinks) {
    const int n = static_cast<int>(x_in.size());
    const int d = static_cast<int>(x_in[0].size());

    std::vector<double> c_raw(n, 1.0), c_eff(n, 1.0);
    std::vector<Vec> mu;
    std::vector<double> x_norm, mu_norm;
    if (mode == AggMode::outlier_removable || trace) {
        mu.assign(n, Vec(d, 0.0));
        x_norm.assign(n, 0.0);
        mu_norm.assign(n, 0.0);
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j)
                if (j != i) axpy(1.0 / (n - 1), x_in[j], mu[i]);
            x_norm[i] = norm(x_in[i]);
            mu_norm[i] = norm(mu[i]);
            const double raw = (x_norm[i] > 0.0 && mu_norm[i] > 0.0)
                                   ? dot(x_in[i], mu[i]) / (x_norm[i] * mu_norm[i])
                                   : 0.0;
            c_raw[i] = raw;
            if (mode == AggMode::outlier_removable) {
                c_eff[i] = std::max(raw, 0.0);
                if (kinks) kinks->min_conf_abs = std::min(kinks->min_conf_abs, std::abs(raw));
            }
        }
    }

    std::vector<double> a(static_cast<std::size_t>(n) * n, 1.0);
    if (mode != AggMode::average) {
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j) {
                const double aij = edge_affinity(x_in[i], x_in[j], lp.v, lp.b);
                a[static_cast<std::size_t>(i) * n + j] = aij;
                a[static_cast<std::size_t>(j) * n + i] = aij;
            }
    }

    std::vector<Vec> g(n, Vec(d, 0.0));
    std::vector<double> wsum(n, 0.0);
    for (int i = 0; i < n; ++i) {
        double s = 0.0;
        for (int j = 0; j < n; ++j) {
            if (j == i) continue;
            s += c_eff[j] * a[static_cast<std::size_t>(i) * n + j];
        }
        wsum[i] = s;
        if (s > 0.0) {
            for (int j = 0; j < n; ++j) {
                if (j == i) continue;
                axpy(c_eff[j] * a[static_cast<std::size_t>(i) * n + j] / s, x_in[j], g[i]);
            }
        } else {
            g[i] = x_in[i];  // no usable sources; transform the node itself
        }
    }

    std::vector<Vec> x_out(n, Vec(d, 0.0));
    std::vector<Vec> u;
    if (mode == AggMode::average) {
        x_out = g;
    } else {
        u.assign(n, Vec(d, 0.0));
        for (int i = 0; i < n; ++i) {
            matvec(lp.w, g[i], u[i]);
            for (int k = 0; k < d; ++k) {
                if (kinks) kinks->min_relu_abs = std::min(kinks->min_relu_abs, std::abs(u[i][k]));
                x_out[i][k] = u[i][k] > 0.0 ? u[i][k] : 0.0;
            }
        }
    }

    if (trace) {
        trace->x_in = x_in;
        trace->c_raw = std::move(c_raw);
        trace->c_eff = std::move(c_eff);
        trace->mu = std::move(mu);
        trace->x_norm = std::move(x_norm);
        trace->mu_norm = std::move(mu_norm);
        trace->a = std::move(a);
        trace->g = std::move(g);
        trace->wsum = std::move(wsum);
        trace->u = std::move(u);
    }
    return x_out;
}

struct LayerGrad {
    MatView gw;
    double* gv = nullptr;
    double* gb = nullptr;
};

inline std::vector<Vec> backward_layer(const LayerTrace& tr, const LayerParamView& lp, AggMode mode,
                                       const std::vector<Vec>& dx_out, const LayerGrad& acc) {
    const int n = static_cast<int>(tr.x_in.size());
    const int d = static_cast<int>(tr.x_in[0].size());
    std::vector<Vec> dx_in(n, Vec(d, 0.0));

    // transform
    std::vector<Vec> dg(n, Vec(d, 0.0));
    if (mode == AggMode::average) {
        dg = dx_out;
    } else {
        Vec du(d);
        for (int i = 0; i < n; ++i) {
            for (int k = 0; k < d; ++k) du[k] = tr.u[i][k] > 0.0 ? dx_out[i][k] : 0.0;
            add_outer(acc.gw, du, tr.g[i]);
            Vec dgi;
            mat_t_vec(lp.w, du, dgi);
            axpy(1.0, dgi, dg[i]);
        }
    }

    // aggregation: g_i = sum_j (w_ij / S_i) x_j with w_ij = c_eff_j a_ij
    std::vector<double> dweight(static_cast<std::size_t>(n) * n, 0.0);
    for (int i = 0; i < n; ++i) {
        if (tr.wsum[i] > 0.0) {
            const double gi_dot = dot(tr.g[i], dg[i]);
            for (int j = 0; j < n; ++j) {
                if (j == i) continue;
                const double w = tr.c_eff[j] * tr.a[static_cast<std::size_t>(i) * n + j];
                axpy(w / tr.wsum[i], dg[i], dx_in[j]);
                dweight[static_cast<std::size_t>(i) * n + j] =
                    (dot(tr.x_in[j], dg[i]) - gi_dot) / tr.wsum[i];
            }
        } else {
            axpy(1.0, dg[i], dx_in[i]);
        }
    }

    if (mode == AggMode::average) return dx_in;

    // affinities and confidences
    std::vector<double> dc_eff(n, 0.0);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            if (j == i) continue;
            const double dw = dweight[static_cast<std::size_t>(i) * n + j];
            if (dw == 0.0) continue;
            const double aij = tr.a[static_cast<std::size_t>(i) * n + j];
            dc_eff[j] += aij * dw;
            const double da = tr.c_eff[j] * dw;
            const double dq = aij * (1.0 - aij) * da;
            *acc.gb += dq;
            for (int k = 0; k < d; ++k) {
                const double diff = tr.x_in[i][k] - tr.x_in[j][k];
                acc.gv[k] += dq * diff * diff;
                const double dd = 2.0 * dq * lp.v[k] * diff;
                dx_in[i][k] += dd;
                dx_in[j][k] -= dd;
            }
        }
    }

    if (mode == AggMode::outlier_removable) {
        for (int i = 0; i < n; ++i) {
            const double dc = tr.c_raw[i] > 0.0 ? dc_eff[i] : 0.0;  // clamp kink: subgradient 0
            if (dc == 0.0) continue;
            const double alpha = tr.x_norm[i];
            const double beta = tr.mu_norm[i];
            if (alpha == 0.0 || beta == 0.0) continue;
            const double c = tr.c_raw[i];
            Vec dmu(d);
            for (int k = 0; k < d; ++k) {
                dx_in[i][k] += dc * (tr.mu[i][k] / (alpha * beta) - c * tr.x_in[i][k] / (alpha * alpha));
                dmu[k] = dc * (tr.x_in[i][k] / (alpha * beta) - c * tr.mu[i][k] / (beta * beta));
            }
            for (int j = 0; j < n; ++j) {
                if (j == i) continue;
                axpy(1.0 / (n - 1), dmu, dx_in[j]);
            }
        }
    }
    return dx_in;
}

}  // namespace detail

// Runs layer `t` of part k's graph in place; exposed for the layer-level
// contracts (convex weights, fixed points).
inline void layer_forward(GraphState& state, const ORGNNParams& params, int layer, AggMode mode,
                          LayerTrace* trace = nullptr) {
    detail::LayerParamView lp;
    if (mode != AggMode::average)
        lp = {params.w(state.part, layer), params.v(state.part, layer), params.b(state.part, layer)};
    LayerTrace local;
    LayerTrace* tr = trace ? trace : &local;
    auto x_out = detail::forward_layer(state.x, lp, mode, tr, nullptr);
    state.conf = tr->c_raw;
    state.aff = tr->a;
    state.x = std::move(x_out);
}

// Alg.-style inference for one image: per part, build the complete graph
// over {target} + neighbours, run T layers, keep row 0. Neighbours are
// summed in canonical order (ascending image_id) so the result does not
// depend on caller ordering.
inline std::vector<Vec> reconstruct(const PartFeatureSet& target,
                                    std::vector<const PartFeatureSet*> neighbors,
                                    const ORGNNParams& params, int layers, AggMode mode) {
    if (neighbors.empty()) throw std::runtime_error("empty neighborhood");
    std::sort(neighbors.begin(), neighbors.end(),
              [](const PartFeatureSet* a, const PartFeatureSet* b) { return a->image_id < b->image_id; });
    const int m = target.parts();
    std::vector<Vec> out(m);
    for (int k = 0; k < m; ++k) {
        std::vector<Vec> feats;
        feats.reserve(neighbors.size());
        for (const auto* nb : neighbors) feats.push_back(nb->features[k]);
        GraphState state = init_graph(k, feats);
        for (int t = 0; t < layers; ++t) layer_forward(state, params, t, mode);
        out[k] = std::move(state.x[0]);
    }
    return out;
}

// Concatenation of the reconstructed sub-features after per-part L2
// normalization; the retrieval representation.
inline Vec final_representation(const std::vector<Vec>& parts) {
    Vec out;
    for (const auto& part : parts) {
        Vec v = part;
        const double n = norm(v);
        if (n > 0.0)
            for (auto& x : v) x /= n;
        out.insert(out.end(), v.begin(), v.end());
    }
    return out;
}

// One training sample: the target's neighbourhood features per part (already
// in canonical order) and the identity label.
struct GraphSample {
    std::vector<std::vector<Vec>> neighbor_feats;  // [M][n][D]
    int label = 0;
};

// Mean over parts of the per-part classifier cross-entropy on the target
// row after T layers; gradients flow through every layer, confidence and
// affinity included. `only_part` >= 0 restricts the loss to one part's term
// (no mean), which is occasionally useful for debugging.
inline double orgnn_loss_grad(const GraphSample& sample, const ORGNNParams& params, AggMode mode,
                              std::vector<double>* grad, int only_part = -1,
                              KinkStats* kinks = nullptr) {
    const int m = params.parts;
    double total = 0.0;
    const double part_scale = only_part >= 0 ? 1.0 : 1.0 / m;
    for (int k = 0; k < m; ++k) {
        if (only_part >= 0 && k != only_part) continue;
        GraphState state = init_graph(k, sample.neighbor_feats[k]);
        const int n = state.nodes();

        std::vector<LayerTrace> traces(grad ? params.layers : 0);
        detail::LayerParamView lp;
        for (int t = 0; t < params.layers; ++t) {
            if (mode != AggMode::average) lp = {params.w(k, t), params.v(k, t), params.b(k, t)};
            state.x = detail::forward_layer(state.x, lp, mode, grad ? &traces[t] : nullptr, kinks);
        }

        Vec logits;
        matvec(params.cls(k), state.x[0], logits);
        auto ce = softmax_cross_entropy(logits, sample.label);
        total += part_scale * ce.loss;

        if (grad) {
            Vec dz = scaled(ce.grad_logits, part_scale);
            MatView gcls{grad->data() + params.cls_off(k), params.num_ids, params.dim};
            add_outer(gcls, dz, state.x[0]);
            std::vector<Vec> dx(n, Vec(params.dim, 0.0));
            mat_t_vec(params.cls(k), dz, dx[0]);
            for (int t = params.layers - 1; t >= 0; --t) {
                if (mode != AggMode::average) lp = {params.w(k, t), params.v(k, t), params.b(k, t)};
                detail::LayerGrad acc{{grad->data() + params.w_off(k, t), params.dim, params.dim},
                                      grad->data() + params.v_off(k, t),
                                      grad->data() + params.b_off(k, t)};
                dx = detail::backward_layer(traces[t], lp, mode, dx, acc);
            }
        }
    }
    return total;
}

// ---------------------------------------------------------------------------
// Training: neighbourhoods precomputed on the training set (each image's
// neighbourhood searched among the others), batches of persons x neighbour
// sets, Adam with step decay.

struct OrgnnTrainResult {
    ORGNNParams params;
    std::vector<double> epoch_loss;
    int skipped_samples = 0;  // fallback / empty neighbourhoods
    bool aborted = false;     // non-finite loss; params hold the last good epoch
};

inline std::vector<GraphSample> build_graph_samples(const Dataset& train, const GalleryIndex& index,
                                                    const std::vector<int>& labels, int k, double theta,
                                                    std::vector<int>* sample_items, int* skipped) {
    std::vector<GraphSample> samples;
    if (sample_items) sample_items->clear();
    int skip_count = 0;
    for (int i = 0; i < static_cast<int>(train.items.size()); ++i) {
        const auto& item = train.items[i];
        if (item.visible_count() == 0) {
            ++skip_count;
            continue;
        }
        NeighborSet ns = image_neighborhood(index, item, k, theta);
        if (ns.fallback) {
            ++skip_count;
            continue;
        }
        std::vector<std::string> ordered = ns.members;
        std::sort(ordered.begin(), ordered.end());
        GraphSample sample;
        sample.label = labels[i];
        sample.neighbor_feats.assign(train.num_parts, {});
        for (int p = 0; p < train.num_parts; ++p) sample.neighbor_feats[p].reserve(ordered.size());
        for (const auto& id : ordered) {
            const PartFeatureSet* nb = index.find(id);
            for (int p = 0; p < train.num_parts; ++p)
                sample.neighbor_feats[p].push_back(nb->features[p]);
        }
        samples.push_back(std::move(sample));
        if (sample_items) sample_items->push_back(i);
    }
    if (skipped) *skipped = skip_count;
    return samples;
}

inline OrgnnTrainResult train_orgnn(const Dataset& train, const PipelineConfig& cfg, AggMode mode) {
    if (train.items.empty()) throw std::runtime_error("train_orgnn: empty training set");
    const std::vector<int> labels = remap_labels(train);
    const int num_ids = 1 + *std::max_element(labels.begin(), labels.end());

    OrgnnTrainResult result;
    result.params =
        ORGNNParams::init(train.num_parts, train.feature_dim, cfg.t, num_ids, cfg.seed ^ 0xa5a5a5a5ULL);
    if (cfg.epochs == 0) return result;

    GalleryIndex index = build_index(train);
    std::vector<int> sample_items;
    std::vector<GraphSample> samples = build_graph_samples(train, index, labels, cfg.k_train,
                                                           cfg.theta_train, &sample_items,
                                                           &result.skipped_samples);
    if (result.skipped_samples > 0)
        std::cerr << "warning: " << result.skipped_samples
                  << " training images had empty neighbourhoods and were skipped\n";
    if (samples.empty()) throw std::runtime_error("train_orgnn: no usable training neighbourhoods");

    // group samples by identity for the persons-per-batch protocol
    std::map<int, std::vector<int>> by_person;
    for (int s = 0; s < static_cast<int>(samples.size()); ++s) by_person[samples[s].label].push_back(s);
    std::vector<int> person_order;
    for (const auto& [pid, list] : by_person) person_order.push_back(pid);

    Rng rng(cfg.seed ^ 0xc3c3c3c3c3c3c3c3ULL);
    Adam opt(result.params.size(), {cfg.learning_rate});
    std::vector<double> grad(result.params.size());
    ORGNNParams last_good = result.params;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        const double lr_scale = lr_decay_multiplier(cfg.lr_decay_epochs, epoch);
        rng.shuffle(person_order);
        auto pools = by_person;
        for (auto& [pid, list] : pools) rng.shuffle(list);

        double epoch_loss = 0.0;
        long epoch_samples = 0;
        for (std::size_t start = 0; start < person_order.size();
             start += static_cast<std::size_t>(cfg.batch_persons)) {
            std::vector<int> batch;
            for (std::size_t pi = start;
                 pi < std::min(person_order.size(), start + cfg.batch_persons); ++pi) {
                const auto& pool = pools[person_order[pi]];
                const int take = std::min<int>(cfg.sets_per_person, static_cast<int>(pool.size()));
                for (int s = 0; s < take; ++s) batch.push_back(pool[s]);
            }
            if (batch.empty()) continue;

            std::fill(grad.begin(), grad.end(), 0.0);
            double batch_loss = 0.0;
            for (int s : batch) batch_loss += orgnn_loss_grad(samples[s], result.params, mode, &grad);
            const double scale = 1.0 / batch.size();
            for (auto& g : grad) g *= scale;
            batch_loss *= scale;
            if (!std::isfinite(batch_loss)) {
                std::cerr << "warning: non-finite loss at epoch " << epoch
                          << "; aborting with last good parameters\n";
                result.params = last_good;
                result.aborted = true;
                return result;
            }
            opt.step(result.params.theta, grad, lr_scale);
            epoch_loss += batch_loss * batch.size();
            epoch_samples += batch.size();
        }
        result.epoch_loss.push_back(epoch_samples > 0 ? epoch_loss / epoch_samples : 0.0);
        last_good = result.params;
    }
    return result;
}

inline void save_orgnn(const ORGNNParams& params, const std::string& path) {
    std::string header = std::string(kGnnMagic) + ' ' + std::to_string(params.parts) + ' ' +
                         std::to_string(params.dim) + ' ' + std::to_string(params.layers) + ' ' +
                         std::to_string(params.num_ids);
    write_blob_file(path, header, params.theta);
}

inline ORGNNParams load_orgnn(const std::string& path) {
    auto tokens = read_blob_header(path, kGnnMagic);
    if (tokens.size() != 5) throw std::runtime_error("checkpoint: header mismatch in '" + path + "'");
    ORGNNParams params;
    params.parts = std::stoi(tokens[1]);
    params.dim = std::stoi(tokens[2]);
    params.layers = std::stoi(tokens[3]);
    params.num_ids = std::stoi(tokens[4]);
    auto blob = read_blob_file(path, kGnnMagic, params.size());
    params.theta = std::move(blob.payload);
    return params;
}

}  // namespace occrec
