#include <catch2/catch_amalgamated.hpp>

#include "occrec/eval.hpp"
#include "occrec/rng.hpp"
#include "occrec/synth.hpp"

using namespace occrec;

namespace {

// independent AP: recount the top-i prefix for every relevant position
double oracle_ap(const std::vector<char>& rel) {
    int total_rel = 0;
    for (char r : rel) total_rel += r ? 1 : 0;
    if (total_rel == 0) return 0.0;
    double sum = 0.0;
    for (std::size_t i = 0; i < rel.size(); ++i) {
        if (!rel[i]) continue;
        int in_prefix = 0;
        for (std::size_t j = 0; j <= i; ++j) in_prefix += rel[j] ? 1 : 0;
        sum += static_cast<double>(in_prefix) / static_cast<double>(i + 1);
    }
    return sum / total_rel;
}

PartFeatureSet flat_item(const std::string& id, Vec feat, int person, int camera = 0) {
    PartFeatureSet fs;
    fs.image_id = id;
    fs.person_id = person;
    fs.camera_id = camera;
    fs.features = {std::move(feat)};
    fs.visibility_scores = {1.0};
    fs.visibility_mask = {true};
    return fs;
}

}  // namespace

TEST_CASE("average precision: hand cases") {
    CHECK(average_precision({1, 0, 1}) == Catch::Approx((1.0 + 2.0 / 3.0) / 2.0).epsilon(1e-15));
    CHECK(average_precision({1, 1, 1}) == 1.0);
    CHECK(average_precision({0, 0, 1}) == Catch::Approx(1.0 / 3.0).epsilon(1e-15));
}

TEST_CASE("AP and CMC agree with brute-force implementations") {
    Rng rng(81);
    for (int iter = 0; iter < 200; ++iter) {
        const int n = 1 + rng.uniform_int(30);
        std::vector<char> rel(n);
        bool any = false;
        for (auto& r : rel) {
            r = rng.uniform() < 0.3 ? 1 : 0;
            any = any || r;
        }
        if (!any) rel[rng.uniform_int(n)] = 1;
        REQUIRE(std::abs(average_precision(rel) - oracle_ap(rel)) <= 1e-12);

        // CMC: first-hit route vs direct prefix-scan route
        const int max_rank = n;
        std::vector<int> hits = {first_hit_rank(rel)};
        auto curve = cmc_curve(hits, max_rank);
        for (int r = 1; r <= max_rank; ++r) {
            bool found = false;
            for (int j = 0; j < r; ++j) found = found || rel[j];
            REQUIRE(curve[r - 1] == (found ? 1.0 : 0.0));
        }
        // monotone by construction
        for (int r = 1; r < max_rank; ++r) REQUIRE(curve[r] >= curve[r - 1]);
    }
}

TEST_CASE("CMC is zero while the prefix has no relevant item") {
    std::vector<int> hits = {4};
    auto curve = cmc_curve(hits, 6);
    CHECK(curve[0] == 0.0);
    CHECK(curve[2] == 0.0);
    CHECK(curve[3] == 1.0);
    CHECK(curve[5] == 1.0);
}

TEST_CASE("rank_order: forced cases and the sort oracle") {
    std::vector<double> sims = {0.2, 0.9};
    std::vector<std::string> ids = {"a", "b"};
    CHECK(rank_order(sims, ids) == std::vector<int>{1, 0});
    CHECK_THROWS_WITH(rank_order({}, {}), Catch::Matchers::ContainsSubstring("empty gallery"));

    // exact copy of the query ranks first
    Rng rng(82);
    for (int iter = 0; iter < 50; ++iter) {
        const int n = 2 + rng.uniform_int(20);
        std::vector<double> s(n);
        std::vector<std::string> nids(n);
        for (int i = 0; i < n; ++i) {
            s[i] = rng.uniform(-1.0, 1.0);
            nids[i] = "g" + std::to_string(100 + i);
        }
        auto order = rank_order(s, nids);
        // selection-sort oracle
        std::vector<int> expect;
        std::vector<bool> used(n, false);
        for (int step = 0; step < n; ++step) {
            int best = -1;
            for (int i = 0; i < n; ++i) {
                if (used[i]) continue;
                if (best < 0 || s[i] > s[best] || (s[i] == s[best] && nids[i] < nids[best])) best = i;
            }
            used[best] = true;
            expect.push_back(best);
        }
        REQUIRE(order == expect);
    }

    // ties break by ascending id
    std::vector<double> tied = {0.5, 0.5, 0.7};
    std::vector<std::string> tid = {"z", "a", "m"};
    CHECK(rank_order(tied, tid) == std::vector<int>{2, 1, 0});

    // the post-processing hook can permute the ranking
    RerankHook reverse_hook = [](std::vector<int> order, const std::vector<double>&) {
        std::reverse(order.begin(), order.end());
        return order;
    };
    CHECK(rank_order(sims, ids, reverse_hook) == std::vector<int>{0, 1});
}

TEST_CASE("visible-only similarity handles empty overlap") {
    PartFeatureSet a = flat_item("a", {1.0, 0.0}, 0);
    PartFeatureSet b = flat_item("b", {1.0, 0.0}, 0);
    a.visibility_mask = {true};
    b.visibility_mask = {false};
    CHECK(visible_only_similarity(a, b) == -1.0);
    b.visibility_mask = {true};
    CHECK(visible_only_similarity(a, b) == Catch::Approx(1.0));
}

TEST_CASE("run_variant: baseline equals ranking on concatenated features") {
    // two gallery items: one identical to the query, one orthogonal
    std::vector<PartFeatureSet> gallery_items = {flat_item("g1", {0.0, 1.0}, 7),
                                                 flat_item("g2", {1.0, 0.0}, 3)};
    Dataset gallery = make_dataset(std::move(gallery_items), Split::gallery, 1, 2);
    Dataset query = make_dataset({flat_item("q", {1.0, 0.0}, 3)}, Split::query, 1, 2);

    VariantContext ctx;
    ctx.query = &query;
    ctx.gallery = &gallery;
    auto report = run_variant(Variant::baseline, ctx);
    REQUIRE(report.per_query_ap.size() == 1);
    CHECK(report.per_query_ap[0] == 1.0);  // g2 (same person) ranked first
    CHECK(report.mean_ap == 1.0);
    CHECK(report.cmc1() == 1.0);
    CHECK(report.fallbacks == 0);
}

TEST_CASE("run_variant: junk filter removes same-camera same-id items") {
    // similarities vs the query: g1 1.0 (junk candidate), g3 0.8, g2 0.6
    auto g1 = flat_item("g1", {1.0, 0.0}, 3, 0);  // same id, same camera as query
    auto g2 = flat_item("g2", {0.6, 0.8}, 3, 1);
    auto g3 = flat_item("g3", {0.8, 0.6}, 4, 1);
    Dataset gallery = make_dataset({g1, g2, g3}, Split::gallery, 1, 2);
    Dataset query = make_dataset({flat_item("q", {1.0, 0.0}, 3, 0)}, Split::query, 1, 2);

    VariantContext ctx;
    ctx.query = &query;
    ctx.gallery = &gallery;
    auto plain = run_variant(Variant::baseline, ctx);
    // ranking g1, g3, g2 with relevance (1, 0, 1)
    CHECK(plain.per_query_ap[0] == Catch::Approx((1.0 + 2.0 / 3.0) / 2.0).epsilon(1e-12));

    ctx.cfg.filter_same_camera = true;
    auto filtered = run_variant(Variant::baseline, ctx);
    // g1 excluded; ranking g3, g2 with relevance (0, 1)
    CHECK(filtered.per_query_ap[0] == Catch::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("run_variant: upper bound requires labels") {
    SynthSpec spec;
    spec.num_identities = 10;
    spec.images_per_identity = 6;
    spec.raw_dim = 16;
    spec.seed = 3;
    auto data = generate(spec);
    PipelineConfig cfg;
    cfg.epochs = 0;
    cfg.k_infer = 4;
    auto init = train_orgnn(data.train, cfg, AggMode::outlier_removable);

    VariantContext ctx;
    ctx.query = &data.query;
    ctx.gallery = &data.gallery;
    ctx.orgnn = &init.params;
    ctx.gnn = &init.params;
    ctx.cfg = cfg;

    Dataset unlabeled = data.gallery;
    for (auto& it : unlabeled.items) it.person_id.reset();
    VariantContext bad = ctx;
    bad.gallery = &unlabeled;
    CHECK_THROWS(run_variant(Variant::oan_orgnn_ub, bad));

    auto ub = run_variant(Variant::oan_orgnn_ub, ctx);
    auto plain = run_variant(Variant::oan_orgnn, ctx);
    CHECK(ub.mean_ap >= plain.mean_ap - 1e-12);
    CHECK(ub.outlier_rate == 0.0);  // oracle-filtered neighbourhoods have no outliers
}

TEST_CASE("report JSON validates against the schema") {
    SynthSpec spec;
    spec.num_identities = 8;
    spec.images_per_identity = 4;
    spec.raw_dim = 12;
    spec.seed = 4;
    auto data = generate(spec);
    VariantContext ctx;
    ctx.query = &data.query;
    ctx.gallery = &data.gallery;
    auto report = run_variant(Variant::oan, ctx);
    auto j = report_to_json(report);
    CHECK_NOTHROW(validate_report_json(j));

    auto broken = j;
    broken.erase("map");
    CHECK_THROWS(validate_report_json(broken));
    broken = j;
    broken["map"] = 1.5;
    CHECK_THROWS(validate_report_json(broken));
    broken = j;
    broken["cmc_curve"] = {0.5, 0.4};
    CHECK_THROWS(validate_report_json(broken));

    const std::string row = report_csv_row(report);
    CHECK(std::count(row.begin(), row.end(), ',') == 5);
    CHECK(row.substr(0, 3) == "oan");
}
