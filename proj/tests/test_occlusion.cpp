#include <catch2/catch_amalgamated.hpp>

#include <filesystem>

#include "occrec/gradcheck.hpp"
#include "occrec/occlusion.hpp"
#include "occrec/rng.hpp"
#include "occrec/synth.hpp"

using namespace occrec;

namespace {

std::string temp_path(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / "occrec_occlusion_tests";
    std::filesystem::create_directories(dir);
    return (dir / name).string();
}

}  // namespace

TEST_CASE("stripe layout tiles the frame exactly") {
    for (int h : {8, 17, 64})
        for (int w : {4, 9, 32}) {
            auto layout = PartLayout::stripes(h, w);
            long long horiz = 0, vert = 0;
            for (int p = 0; p < kHorizontalParts; ++p) horiz += layout.regions[p].area();
            for (int p = kHorizontalParts; p < kDefaultParts; ++p) vert += layout.regions[p].area();
            CHECK(horiz == static_cast<long long>(h) * w);
            CHECK(vert == static_cast<long long>(h) * w);
        }
    CHECK_THROWS(PartLayout::stripes(2, 8));
}

TEST_CASE("estimate_visibility: saturated coverage") {
    BodyMask mask = make_mask(16, 8);
    for (auto& b : mask.bitmap) b = 1;
    auto state = estimate_visibility(mask, PartLayout::stripes(16, 8));
    for (int p = 0; p < state.parts(); ++p) {
        CHECK(state.scores[p] == 1.0);
        CHECK(state.mask[p]);
    }
    CHECK_FALSE(state.empty_mask);
}

TEST_CASE("estimate_visibility: top-half mask marks lower stripes occluded") {
    BodyMask mask = make_mask(16, 8);
    for (int r = 0; r < 8; ++r)
        for (int c = 0; c < 8; ++c) mask.set(r, c, true);
    auto state = estimate_visibility(mask, PartLayout::stripes(16, 8));
    CHECK(state.mask[0]);
    CHECK(state.mask[1]);
    CHECK_FALSE(state.mask[2]);
    CHECK_FALSE(state.mask[3]);
}

TEST_CASE("estimate_visibility: coverage ratios follow the stated formula") {
    // 4 horizontal stripes only; coverage (0.4, 0.4, 0.1, 0.0)
    const int h = 4, w = 10;
    BodyMask mask = make_mask(h, w);
    for (int c = 0; c < 4; ++c) mask.set(0, c, true);
    for (int c = 0; c < 4; ++c) mask.set(1, c, true);
    mask.set(2, 0, true);
    auto layout = PartLayout::stripes(h, w, 4, 0);
    auto state = estimate_visibility(mask, layout);
    REQUIRE(state.parts() == 4);
    CHECK(state.scores[0] == Catch::Approx(1.0));
    CHECK(state.scores[1] == Catch::Approx(1.0));
    CHECK(state.scores[2] == Catch::Approx(0.25));
    CHECK(state.scores[3] == 0.0);
    CHECK(state.mask == std::vector<bool>{true, true, false, false});
}

TEST_CASE("estimate_visibility: empty mask flags the diagnostic") {
    BodyMask mask = make_mask(8, 4);
    auto state = estimate_visibility(mask, PartLayout::stripes(8, 4));
    CHECK(state.empty_mask);
    for (int p = 0; p < state.parts(); ++p) CHECK_FALSE(state.mask[p]);
}

TEST_CASE("estimate_visibility is invariant to uniform rescaling") {
    auto fixtures = generate_masks(50, 91);
    for (const auto& fx : fixtures) {
        auto base = estimate_visibility(fx.mask, PartLayout::stripes(fx.mask.height, fx.mask.width));
        for (int factor : {2, 3}) {
            BodyMask big = upscale_mask(fx.mask, factor);
            auto scaled_state =
                estimate_visibility(big, PartLayout::stripes(big.height, big.width));
            CHECK(scaled_state.mask == base.mask);
        }
        // max-normalization guarantees a visible part on non-empty masks
        if (!base.empty_mask) {
            bool any = false;
            for (int p = 0; p < base.parts(); ++p) any = any || base.mask[p];
            CHECK(any);
        }
    }
}

TEST_CASE("occlusion_bce_loss values and properties") {
    const double eps = 1e-7;
    std::vector<double> perfect = {1.0 - eps, eps, 1.0 - eps};
    std::vector<double> labels = {1.0, 0.0, 1.0};
    CHECK(occlusion_bce_loss(perfect, labels).loss == Catch::Approx(0.0).margin(1e-6));

    std::vector<double> uniform(4, 0.5), any_labels = {1.0, 0.0, 1.0, 0.0};
    CHECK(occlusion_bce_loss(uniform, any_labels).loss == Catch::Approx(std::log(2.0)).epsilon(1e-12));

    Rng rng(5);
    for (int iter = 0; iter < 100; ++iter) {
        std::vector<double> y(6), t(6);
        for (int p = 0; p < 6; ++p) {
            y[p] = rng.uniform(0.01, 0.99);
            t[p] = rng.uniform_int(2);
        }
        auto res = occlusion_bce_loss(y, t);
        CHECK(res.loss >= 0.0);
    }

    // saturated predictions are clamped instead of producing inf
    std::vector<double> extreme = {0.0, 1.0};
    std::vector<double> tl = {1.0, 0.0};
    CHECK(std::isfinite(occlusion_bce_loss(extreme, tl).loss));
}

TEST_CASE("occlusion_bce_loss gradient matches finite differences") {
    auto report = bce_gradcheck(10, 6, 77);
    INFO("max rel error " << report.max_rel_error);
    CHECK(report.pass);
}

TEST_CASE("mask PGM and RLE round trips") {
    auto fixtures = generate_masks(3, 123);
    for (const auto& fx : fixtures) {
        const auto pgm = temp_path(fx.name + ".pgm");
        write_pgm(fx.mask, pgm);
        BodyMask back = read_pgm(pgm);
        CHECK(back.bitmap == fx.mask.bitmap);

        const auto rle = temp_path(fx.name + ".json");
        write_mask_rle_json(fx.mask, rle);
        BodyMask back2 = read_mask(rle);
        CHECK(back2.bitmap == fx.mask.bitmap);
    }
}
