#include <catch2/catch_amalgamated.hpp>

#include <filesystem>

#include "occrec/encoder.hpp"
#include "occrec/gradcheck.hpp"
#include "occrec/rng.hpp"
#include "occrec/synth.hpp"

using namespace occrec;

namespace {

std::vector<Vec> unit_cloud(Rng& rng, int n, int d) {
    std::vector<Vec> out;
    for (int i = 0; i < n; ++i) out.push_back(rng.unit_vec(d));
    return out;
}

Dataset small_raw_dataset(std::uint64_t seed, int ids = 10, int images = 6, int d_raw = 16,
                          int parts = 2) {
    SynthSpec spec;
    spec.num_identities = ids * 2;  // half become the train split
    spec.images_per_identity = images;
    spec.raw_dim = d_raw;
    spec.num_parts = parts;
    spec.seed = seed;
    return generate(spec).train;
}

}  // namespace

TEST_CASE("triplet loss direct formula cases") {
    // anchor at origin-ish construction: psi(a,p)=1.0, psi(a,n)=1.5 -> hinge 0
    std::vector<Vec> feats = {{0.0, 0.0}, {1.0, 0.0}, {1.5, 0.0}};
    std::vector<int> labels = {0, 0, 1};
    auto res = triplet_loss(feats, labels, 0.3);
    // anchor 0: dp=1.0, dn=1.5 -> max(1.0-1.5+0.3, 0)=0; anchor 1: dp=1.0, dn=0.5 -> 0.8;
    // anchor 2 has no positive -> skipped
    int skipped = 0;
    triplet_loss(feats, labels, 0.3, &skipped);
    CHECK(skipped == 1);
    CHECK(res.loss == Catch::Approx((0.0 + 0.8) / 2.0).epsilon(1e-12));

    // equal distances -> loss = margin
    std::vector<Vec> sym = {{0.0, 0.0}, {1.0, 0.0}, {0.0, 1.0}};
    std::vector<int> sym_labels = {0, 0, 1};
    auto res2 = triplet_loss({sym[0], sym[1], sym[2]}, sym_labels, 0.3);
    // anchor 0: dp=1, dn=1 -> 0.3; anchor 1: dp=1, dn=sqrt(2) -> max(1-1.414+0.3,0)=0
    CHECK(res2.loss == Catch::Approx(0.3 / 2.0).epsilon(1e-12));
}

TEST_CASE("batch-hard mining picks the exhaustive extremes") {
    Rng rng(21);
    for (int iter = 0; iter < 100; ++iter) {
        const int n = 6 + rng.uniform_int(6);
        auto feats = unit_cloud(rng, n, 5);
        std::vector<int> labels(n);
        for (auto& l : labels) l = rng.uniform_int(3);
        auto triplets = mine_batch_hard(feats, labels);
        for (const auto& t : triplets) {
            const double dp = euclidean(feats[t.anchor], feats[t.positive]);
            const double dn = euclidean(feats[t.anchor], feats[t.negative]);
            for (int j = 0; j < n; ++j) {
                if (j == t.anchor) continue;
                const double d = euclidean(feats[t.anchor], feats[j]);
                if (labels[j] == labels[t.anchor])
                    CHECK(d <= dp + 1e-15);
                else
                    CHECK(d >= dn - 1e-15);
            }
        }
    }
}

TEST_CASE("losses are permutation-invariant over the batch") {
    Rng rng(31);
    auto feats = unit_cloud(rng, 10, 6);
    std::vector<int> labels = {0, 0, 1, 1, 2, 2, 0, 1, 2, 0};
    auto base_tri = triplet_loss(feats, labels, 0.3);

    EncoderParams cls_params = EncoderParams::init(1, 6, 6, 3, 7);
    auto base_id = identification_loss(feats, labels, cls_params.cls(0));

    std::vector<int> perm(10);
    for (int i = 0; i < 10; ++i) perm[i] = i;
    for (int iter = 0; iter < 20; ++iter) {
        rng.shuffle(perm);
        std::vector<Vec> pf;
        std::vector<int> pl;
        for (int i : perm) {
            pf.push_back(feats[i]);
            pl.push_back(labels[i]);
        }
        CHECK(triplet_loss(pf, pl, 0.3).loss == Catch::Approx(base_tri.loss).epsilon(1e-12));
        CHECK(identification_loss(pf, pl, cls_params.cls(0)).loss ==
              Catch::Approx(base_id.loss).epsilon(1e-12));
    }
}

TEST_CASE("identification loss: uniform and saturated cases") {
    // zero classifier -> uniform logits -> ln C
    EncoderParams params;
    params.parts = 1;
    params.raw_dim = 4;
    params.dim = 4;
    params.num_ids = 5;
    params.theta.assign(params.size(), 0.0);
    Rng rng(3);
    auto feats = unit_cloud(rng, 6, 4);
    std::vector<int> labels = {0, 1, 2, 3, 4, 0};
    auto res = identification_loss(feats, labels, params.cls(0));
    CHECK(res.loss == Catch::Approx(std::log(5.0)).epsilon(1e-12));

    // huge correct logit -> loss ~ 0
    MatView cls{params.theta.data() + params.cls_off(0), params.num_ids, params.dim};
    std::vector<Vec> one = {{1.0, 0.0, 0.0, 0.0}};
    cls.at(2, 0) = 50.0;
    auto sat = identification_loss(one, {2}, params.cls(0));
    CHECK(sat.loss == Catch::Approx(0.0).margin(1e-12));
}

TEST_CASE("encoder loss gradients match finite differences") {
    auto report = encoder_gradcheck(3, 6, 5, 3, 3, 99);
    INFO("max rel error " << report.max_rel_error);
    CHECK(report.pass);
}

TEST_CASE("encode: identity projection keeps unit inputs") {
    EncoderParams params;
    params.parts = 2;
    params.raw_dim = 3;
    params.dim = 3;
    params.num_ids = 2;
    params.theta.assign(params.size(), 0.0);
    for (int p = 0; p < 2; ++p)
        for (int i = 0; i < 3; ++i) params.theta[params.proj_off(p) + i * 3 + i] = 1.0;

    PartFeatureSet raw;
    raw.image_id = "x";
    raw.features = {{1.0, 0.0, 0.0}, {0.0, 0.6, 0.8}};
    raw.visibility_scores = {1.0, 0.9};
    raw.visibility_mask = {true, true};
    auto out = encode(raw, params);
    CHECK(out.features[0] == Vec{1.0, 0.0, 0.0});
    CHECK(out.features[1][1] == Catch::Approx(0.6).epsilon(1e-12));
    CHECK(out.parts() == 2);
    CHECK(out.dim() == 3);
    auto again = encode(raw, params);
    CHECK(out.features == again.features);

    PartFeatureSet wrong = raw;
    wrong.features[0].push_back(0.0);
    CHECK_THROWS(encode(wrong, params));
}

TEST_CASE("train_encoder: zero epochs returns the initialization") {
    Dataset train = small_raw_dataset(51);
    PipelineConfig cfg;
    cfg.epochs = 0;
    cfg.d = 8;
    cfg.seed = 12;
    auto result = train_encoder(train, cfg);
    auto fresh = EncoderParams::init(train.num_parts, train.feature_dim, cfg.d,
                                     count_identities(train.items), 12);
    CHECK(result.params.theta == fresh.theta);
    CHECK(result.epoch_loss.empty());
}

TEST_CASE("train_encoder is deterministic given the seed") {
    Dataset train = small_raw_dataset(52);
    PipelineConfig cfg;
    cfg.epochs = 3;
    cfg.d = 8;
    cfg.seed = 5;
    cfg.learning_rate = 1e-3;
    auto a = train_encoder(train, cfg);
    auto b = train_encoder(train, cfg);
    CHECK(a.params.theta == b.params.theta);
    CHECK(a.epoch_loss == b.epoch_loss);
}

TEST_CASE("train_encoder learns: loss halves and identities separate") {
    // 8 training persons means one batch per epoch, so epochs == Adam steps
    Dataset train = small_raw_dataset(53, 8, 8, 16, 2);
    PipelineConfig cfg;
    cfg.epochs = 300;
    cfg.d = 8;
    cfg.seed = 3;
    cfg.learning_rate = 5e-3;
    cfg.lr_decay_epochs = {220, 270};
    auto result = train_encoder(train, cfg);
    REQUIRE(result.epoch_loss.size() == 300);
    INFO("loss " << result.epoch_loss.front() << " -> " << result.epoch_loss.back());
    CHECK(result.epoch_loss.back() <= 0.5 * result.epoch_loss.front());

    // held-out images of the same generator: intra-identity cosine must beat inter
    SynthSpec spec;
    spec.num_identities = 16;
    spec.images_per_identity = 8;
    spec.raw_dim = 16;
    spec.num_parts = 2;
    spec.seed = 53;
    auto heldout = generate(spec).gallery;
    Dataset encoded = encode_dataset(heldout, result.params);
    double intra = 0.0, inter = 0.0;
    long intra_n = 0, inter_n = 0;
    for (std::size_t i = 0; i < encoded.items.size(); ++i)
        for (std::size_t j = i + 1; j < encoded.items.size(); ++j)
            for (int p = 0; p < encoded.num_parts; ++p) {
                if (!encoded.items[i].visibility_mask[p] || !encoded.items[j].visibility_mask[p])
                    continue;
                const double c = cosine(encoded.items[i].features[p], encoded.items[j].features[p]);
                if (encoded.items[i].person_id == encoded.items[j].person_id) {
                    intra += c;
                    ++intra_n;
                } else {
                    inter += c;
                    ++inter_n;
                }
            }
    REQUIRE(intra_n > 0);
    REQUIRE(inter_n > 0);
    INFO("intra " << intra / intra_n << " inter " << inter / inter_n);
    CHECK(intra / intra_n > inter / inter_n);
}

TEST_CASE("encoder checkpoint round trip") {
    auto params = EncoderParams::init(3, 8, 4, 6, 77);
    for (auto& t : params.theta) t = static_cast<double>(static_cast<float>(t));
    auto dir = std::filesystem::temp_directory_path() / "occrec_encoder_tests";
    std::filesystem::create_directories(dir);
    const auto path = (dir / "enc.ckpt").string();
    save_encoder(params, path);
    auto back = load_encoder(path);
    CHECK(back.parts == 3);
    CHECK(back.raw_dim == 8);
    CHECK(back.dim == 4);
    CHECK(back.num_ids == 6);
    CHECK(back.theta == params.theta);
}
