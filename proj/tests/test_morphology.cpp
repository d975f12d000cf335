#include <catch2/catch_amalgamated.hpp>

#include "tep/morphology.hpp"

#include <algorithm>

#include "testutil.hpp"

using namespace tep;
using namespace teptest;

namespace {

bool element_has(const StructuringElement& se, int x, int y) {
    return std::any_of(se.begin(), se.end(),
                       [&](const Pixel& p) { return p.x == x && p.y == y; });
}

} // namespace

TEST_CASE("line elements land on the expected lattice points", "[morphology]") {
    const StructuringElement horiz = line_element(7, 0.0);
    REQUIRE(horiz.size() == 7);
    for (int x = -3; x <= 3; ++x) REQUIRE(element_has(horiz, x, 0));

    const StructuringElement vert = line_element(5, 90.0);
    REQUIRE(vert.size() == 5);
    for (int y = -2; y <= 2; ++y) REQUIRE(element_has(vert, 0, y));

    const StructuringElement diag = line_element(5, 45.0);
    for (int t = -1; t <= 1; ++t) REQUIRE(element_has(diag, t, t));
    REQUIRE(element_has(diag, 1, 1));

    const StructuringElement dot = line_element(1, 30.0);
    REQUIRE(dot.size() == 1);
    REQUIRE(element_has(dot, 0, 0));

    // symmetric: the element equals its own reflection through the origin
    for (const StructuringElement& se : {horiz, vert, diag})
        for (const Pixel& p : se) REQUIRE(element_has(se, -p.x, -p.y));

    REQUIRE_THROWS_AS(line_element(0, 0.0), ConfigError);
}

TEST_CASE("dilation and erosion bracket the image", "[morphology]") {
    const ImageGrid img = random_grid(17, 13, 3);
    for (double angle : {0.0, 45.0, 90.0, 135.0}) {
        const StructuringElement se = line_element(5, angle);
        const ImageGrid up = dilate(img, se);
        const ImageGrid down = erode(img, se);
        for (std::size_t i = 0; i < img.size(); ++i) {
            REQUIRE(up[i] >= img[i]);
            REQUIRE(down[i] <= img[i]);
        }
    }

    REQUIRE_THROWS_AS(dilate(img, StructuringElement{}), ConfigError);
    REQUIRE_THROWS_AS(erode(img, StructuringElement{}), ConfigError);
}

TEST_CASE("dilation spreads a spike along the element", "[morphology]") {
    ImageGrid img(9, 9, 0.0);
    img.at(4, 4) = 1.0;
    const ImageGrid up = dilate(img, line_element(5, 0.0));
    for (int x = 2; x <= 6; ++x) REQUIRE(up.at(x, 4) == 1.0);
    REQUIRE(up.at(1, 4) == 0.0);
    REQUIRE(up.at(4, 3) == 0.0);

    // near the border the clipped element still covers the pixel
    ImageGrid corner(5, 5, 0.0);
    corner.at(0, 0) = 2.0;
    const ImageGrid up2 = dilate(corner, line_element(7, 0.0));
    REQUIRE(up2.at(0, 0) == 2.0);
    REQUIRE(up2.at(3, 0) == 2.0);
    REQUIRE(up2.at(4, 0) == 0.0);
}

TEST_CASE("closing is extensive and idempotent", "[morphology]") {
    for (std::uint64_t seed : {4ULL, 5ULL, 6ULL}) {
        const ImageGrid img = random_grid(15, 15, seed, 0.0, 1.0);
        for (double angle : {0.0, 45.0, 90.0}) {
            const StructuringElement se = line_element(5, angle);
            const ImageGrid once = close(img, se);
            const ImageGrid twice = close(once, se);
            for (std::size_t i = 0; i < img.size(); ++i) {
                REQUIRE(once[i] >= img[i]);       // extensive
                REQUIRE(twice[i] == once[i]);     // idempotent
            }
        }
    }
}

TEST_CASE("closing bridges a one-pixel gap in a line", "[morphology]") {
    ImageGrid img(15, 7, 0.0);
    for (int x = 2; x <= 12; ++x) img.at(x, 3) = 1.0;
    img.at(7, 3) = 0.0; // the gap

    const ImageGrid healed = close(img, line_element(5, 0.0));
    REQUIRE(healed.at(7, 3) == 1.0);
    REQUIRE(healed.at(7, 2) == 0.0); // off the line nothing appears
}

TEST_CASE("junction refinement bridges gaps and preserves counters", "[morphology]") {
    EdgeFunction ef;
    ef.V = ImageGrid(15, 15, 0.0);
    ef.votes.assign(ef.V.size(), 7);
    ef.edge_votes.assign(ef.V.size(), 3);
    ef.valid.assign(ef.V.size(), 1);
    for (int x = 2; x <= 12; ++x) ef.V.at(x, 7) = 0.9;
    ef.V.at(7, 7) = 0.0;  // gap on a horizontal line
    ef.V.at(3, 3) = 1.5;  // out-of-range response to clamp

    const EdgeFunction refined = refine_junctions(ef, 5, 4);
    REQUIRE(refined.V.at(7, 7) == 0.9);
    REQUIRE(refined.V.at(3, 3) == 1.0); // clamped
    for (std::size_t i = 0; i < ef.V.size(); ++i) {
        REQUIRE(refined.V[i] >= 0.0);
        REQUIRE(refined.V[i] <= 1.0);
        REQUIRE(refined.votes[i] == 7);
        REQUIRE(refined.edge_votes[i] == 3);
        REQUIRE(refined.valid[i] == 1);
    }

    REQUIRE_THROWS_AS(refine_junctions(ef, 0, 4), ConfigError);
    REQUIRE_THROWS_AS(refine_junctions(ef, 5, 0), ConfigError);
}

TEST_CASE("orientation maximum heals gaps in crossing lines at once", "[morphology]") {
    // two perpendicular lines, each broken once: the horizontal closing heals
    // the horizontal gap, the vertical closing the vertical one, and the
    // orientation maximum repairs both without touching the counters
    EdgeFunction ef;
    ef.V = ImageGrid(17, 17, 0.0);
    ef.votes.assign(ef.V.size(), 1);
    ef.edge_votes.assign(ef.V.size(), 0);
    ef.valid.assign(ef.V.size(), 1);
    for (int x = 2; x <= 14; ++x) ef.V.at(x, 5) = 1.0;  // horizontal line
    for (int y = 2; y <= 14; ++y) ef.V.at(10, y) = 1.0; // vertical line
    ef.V.at(6, 5) = 0.0;                                // horizontal gap
    ef.V.at(10, 9) = 0.0;                               // vertical gap

    const EdgeFunction refined = refine_junctions(ef, 3, 4);
    REQUIRE(refined.V.at(6, 5) == 1.0);
    REQUIRE(refined.V.at(10, 9) == 1.0);
    REQUIRE(refined.V.at(3, 10) == 0.0); // empty background stays empty
}
