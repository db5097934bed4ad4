#include <catch2/catch_amalgamated.hpp>

#include <set>

#include "occrec/neighborhood.hpp"
#include "occrec/rng.hpp"
#include "occrec/synth.hpp"

using namespace occrec;

namespace {

PartFeatureSet item(const std::string& id, std::vector<Vec> feats, std::vector<bool> visible,
                    std::optional<int> person = std::nullopt) {
    PartFeatureSet fs;
    fs.image_id = id;
    fs.person_id = person;
    fs.features = std::move(feats);
    fs.visibility_mask = visible;
    fs.visibility_scores.resize(visible.size());
    for (std::size_t p = 0; p < visible.size(); ++p) fs.visibility_scores[p] = visible[p] ? 1.0 : 0.0;
    return fs;
}

// independent linear-scan oracle: own cosine, own ordering, own truncation
std::vector<std::string> oracle_part_neighbors(const Dataset& gallery, int part, const Vec& q, int k,
                                               double theta) {
    std::vector<std::pair<double, std::string>> scored;
    for (const auto& g : gallery.items) {
        if (!g.visibility_mask[part]) continue;
        double dot_qg = 0.0, nq = 0.0, ng = 0.0;
        for (std::size_t i = 0; i < q.size(); ++i) {
            dot_qg += q[i] * g.features[part][i];
            nq += q[i] * q[i];
            ng += g.features[part][i] * g.features[part][i];
        }
        const double sim =
            (nq == 0.0 || ng == 0.0) ? 0.0 : dot_qg / (std::sqrt(nq) * std::sqrt(ng));
        if (sim >= theta) scored.push_back({sim, g.image_id});
    }
    std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first > b.first;
        return a.second < b.second;
    });
    if (static_cast<int>(scored.size()) > k) scored.resize(k);
    std::vector<std::string> ids;
    for (const auto& [sim, id] : scored) ids.push_back(id);
    return ids;
}

Dataset random_gallery(Rng& rng, int n, int parts, int dim) {
    std::vector<PartFeatureSet> items;
    for (int i = 0; i < n; ++i) {
        std::vector<Vec> feats;
        std::vector<bool> vis;
        for (int p = 0; p < parts; ++p) {
            feats.push_back(rng.unit_vec(dim));
            vis.push_back(rng.uniform() < 0.8);
        }
        bool any = false;
        for (bool b : vis) any = any || b;
        if (!any) vis[0] = true;
        char buf[16];
        std::snprintf(buf, sizeof(buf), "g%04d", i);
        items.push_back(item(buf, std::move(feats), std::move(vis), i % 5));
    }
    return make_dataset(std::move(items), Split::gallery, parts, dim);
}

}  // namespace

TEST_CASE("build_index respects visibility and rejects empty galleries") {
    Dataset gallery = make_dataset(
        {item("a", {{1, 0}, {0, 1}}, {true, true}), item("b", {{1, 0}, {0, 1}}, {true, false}),
         item("c", {{0, 1}, {1, 0}}, {true, true})},
        Split::gallery, 2, 2);
    auto index = build_index(gallery);
    CHECK(index.parts[0].ids.size() == 3);
    CHECK(index.parts[1].ids.size() == 2);  // b's part 1 is occluded

    auto index2 = build_index(gallery);
    CHECK(index.parts[0].ids == index2.parts[0].ids);

    CHECK_THROWS_WITH(build_index(Dataset{}), Catch::Matchers::ContainsSubstring("empty gallery"));

    // querying an indexed vector for itself puts it first with similarity 1
    auto hits = part_neighbors(index, 0, gallery.items[0].features[0], 3, 0.0);
    REQUIRE_FALSE(hits.empty());
    CHECK(hits[0].similarity == Catch::Approx(1.0).epsilon(1e-12));
    CHECK(hits[0].id == "a");
}

TEST_CASE("part_neighbors: threshold and K semantics") {
    // gallery similarities against q=(1,0): 0.9, 0.75, 0.6
    auto mk = [](double c) { return Vec{c, std::sqrt(1.0 - c * c)}; };
    Dataset gallery = make_dataset({item("x1", {mk(0.9)}, {true}), item("x2", {mk(0.75)}, {true}),
                                    item("x3", {mk(0.6)}, {true})},
                                   Split::gallery, 1, 2);
    auto index = build_index(gallery);
    Vec q = {1.0, 0.0};

    auto hits = part_neighbors(index, 0, q, 10, 0.7);
    REQUIRE(hits.size() == 2);
    CHECK(hits[0].id == "x1");
    CHECK(hits[1].id == "x2");

    CHECK(part_neighbors(index, 0, q, 10, 0.95).empty());

    auto top1 = part_neighbors(index, 0, q, 1, 0.0);
    REQUIRE(top1.size() == 1);
    CHECK(top1[0].id == "x1");
}

TEST_CASE("part_neighbors agrees with the exhaustive oracle") {
    Rng rng(71);
    for (int iter = 0; iter < 50; ++iter) {
        Dataset gallery = random_gallery(rng, 60, 3, 6);
        auto index = build_index(gallery);
        const Vec q = rng.unit_vec(6);
        const int part = rng.uniform_int(3);
        const int k = 1 + rng.uniform_int(12);
        const double theta = rng.uniform(-0.2, 0.6);
        auto got = part_neighbors(index, part, q, k, theta);
        auto expected = oracle_part_neighbors(gallery, part, q, k, theta);
        std::vector<std::string> got_ids;
        for (auto& h : got) got_ids.push_back(h.id);
        REQUIRE(got_ids == expected);
    }

    // one gallery at the 10^4 scale
    Dataset big = random_gallery(rng, 10000, 1, 8);
    auto index = build_index(big);
    const Vec q = rng.unit_vec(8);
    auto got = part_neighbors(index, 0, q, 25, 0.2);
    auto expected = oracle_part_neighbors(big, 0, q, 25, 0.2);
    std::vector<std::string> got_ids;
    for (auto& h : got) got_ids.push_back(h.id);
    REQUIRE(got_ids == expected);
}

TEST_CASE("image_neighborhood intersects visible-part candidate lists") {
    // part 0 lists {A, B}; part 1 lists {B, C}; intersection {B}
    Dataset gallery = make_dataset(
        {item("A", {{1.0, 0.0}, {0.0, 1.0}}, {true, true}, 1),
         item("B", {{0.9, std::sqrt(1 - 0.81)}, {1.0, 0.0}}, {true, true}, 1),
         item("C", {{0.0, 1.0}, {0.8, 0.6}}, {true, true}, 2)},
        Split::gallery, 2, 2);
    auto index = build_index(gallery);
    auto query = item("q", {{1.0, 0.0}, {1.0, 0.0}}, {true, true}, 1);

    auto ns = image_neighborhood(index, query, 10, 0.5);
    CHECK(ns.members == std::vector<std::string>{"B"});
    CHECK_FALSE(ns.fallback);
    CHECK(ns.part_candidates[0] == std::vector<std::string>{"A", "B"});
    CHECK(ns.part_candidates[1] == std::vector<std::string>{"B", "C"});

    // single visible part: neighborhood equals that part's list
    auto one_part = item("q2", {{1.0, 0.0}, {1.0, 0.0}}, {true, false});
    auto ns1 = image_neighborhood(index, one_part, 10, 0.5);
    CHECK(ns1.members.size() == ns1.part_candidates[0].size());

    // threshold high enough that part lists are disjoint -> fallback
    auto ns2 = image_neighborhood(index, query, 10, 0.95);
    CHECK(ns2.members.empty());
    CHECK(ns2.fallback);

    // fully occluded query is an error
    auto blind = item("q3", {{1.0, 0.0}, {1.0, 0.0}}, {false, false});
    CHECK_THROWS_WITH(image_neighborhood(index, blind, 10, 0.5), "fully occluded query");
}

TEST_CASE("image_neighborhood removes the query from its own neighborhood") {
    Rng rng(72);
    Dataset gallery = random_gallery(rng, 30, 2, 5);
    auto index = build_index(gallery);
    for (int i = 0; i < 10; ++i) {
        const auto& q = gallery.items[i];
        if (q.visible_count() == 0) continue;
        auto ns = image_neighborhood(index, q, 10, -1.0);
        for (const auto& id : ns.members) CHECK(id != q.image_id);
    }
}

TEST_CASE("neighborhood members satisfy the threshold on every visible part") {
    Rng rng(73);
    for (int iter = 0; iter < 25; ++iter) {
        Dataset gallery = random_gallery(rng, 50, 3, 6);
        auto index = build_index(gallery);
        auto query = gallery.items[rng.uniform_int(50)];
        const double theta = rng.uniform(0.0, 0.5);
        auto ns = image_neighborhood(index, query, 8, theta);
        for (const auto& id : ns.members) {
            const auto* member = index.find(id);
            REQUIRE(member != nullptr);
            for (int p = 0; p < query.parts(); ++p) {
                if (!query.visibility_mask[p]) continue;
                CHECK(cosine(query.features[p], member->features[p]) >= theta - 1e-12);
            }
        }
    }
}

TEST_CASE("monotonicity: raising theta or lowering K never adds a member") {
    Rng rng(74);
    for (int iter = 0; iter < 25; ++iter) {
        Dataset gallery = random_gallery(rng, 40, 3, 6);
        auto index = build_index(gallery);
        auto query = gallery.items[rng.uniform_int(40)];
        const int k = 2 + rng.uniform_int(10);
        const double theta = rng.uniform(-0.2, 0.4);
        auto base = image_neighborhood(index, query, k, theta);
        std::set<std::string> base_set(base.members.begin(), base.members.end());

        auto smaller_k = image_neighborhood(index, query, k - 1, theta);
        for (const auto& id : smaller_k.members) CHECK(base_set.count(id) == 1);

        auto higher_theta = image_neighborhood(index, query, k, theta + 0.2);
        for (const auto& id : higher_theta.members) CHECK(base_set.count(id) == 1);
    }
}

TEST_CASE("members are ordered by descending minimum per-part similarity") {
    Rng rng(75);
    for (int iter = 0; iter < 25; ++iter) {
        Dataset gallery = random_gallery(rng, 40, 2, 6);
        auto index = build_index(gallery);
        auto query = gallery.items[rng.uniform_int(40)];
        auto ns = image_neighborhood(index, query, 12, -1.0);
        double prev = 2.0;
        std::string prev_id;
        for (const auto& id : ns.members) {
            const auto* member = index.find(id);
            double min_sim = 2.0;
            for (int p = 0; p < query.parts(); ++p) {
                if (!query.visibility_mask[p]) continue;
                min_sim = std::min(min_sim, cosine(query.features[p], member->features[p]));
            }
            if (min_sim == prev) CHECK(prev_id < id);
            CHECK(min_sim <= prev + 1e-12);
            prev = min_sim;
            prev_id = id;
        }
    }
}

TEST_CASE("oracle_filter keeps only same-identity members") {
    NeighborSet ns;
    ns.target_id = "q";
    ns.members = {"a", "b", "c"};
    std::unordered_map<std::string, int> labels = {{"a", 1}, {"b", 1}, {"c", 2}};

    auto filtered = oracle_filter(ns, labels, 1);
    CHECK(filtered.members == std::vector<std::string>{"a", "b"});
    CHECK_FALSE(filtered.fallback);

    auto twice = oracle_filter(filtered, labels, 1);
    CHECK(twice.members == filtered.members);

    auto none = oracle_filter(ns, labels, 7);
    CHECK(none.members.empty());
    CHECK(none.fallback);

    CHECK_THROWS_WITH(oracle_filter(ns, labels, std::nullopt),
                      Catch::Matchers::ContainsSubstring("target label unknown"));
    std::unordered_map<std::string, int> partial = {{"a", 1}};
    CHECK_THROWS(oracle_filter(ns, partial, 1));
}
