#include <catch2/catch_amalgamated.hpp>

#include "tep/consensus.hpp"

#include <cstdint>

#include "testutil.hpp"

using namespace tep;
using namespace teptest;

TEST_CASE("the default exclusion core grows with the patch", "[consensus]") {
    REQUIRE(default_delta(1) == 2);
    REQUIRE(default_delta(3) == 2);
    REQUIRE(default_delta(9) == 2);
    REQUIRE(default_delta(10) == 5);
    REQUIRE(default_delta(30) == 5);
}

TEST_CASE("pipeline parameters are validated", "[consensus]") {
    TepConfig cfg;
    REQUIRE_NOTHROW(cfg.validate());
    REQUIRE(cfg.effective_delta() == 2);

    cfg.r = 0;
    REQUIRE_THROWS_MATCHES(cfg.validate(), ConfigError,
                           Catch::Matchers::MessageMatches(
                               Catch::Matchers::ContainsSubstring("r must be positive")));
    cfg.r = 5;
    cfg.R = 5;
    REQUIRE_THROWS_MATCHES(cfg.validate(), ConfigError,
                           Catch::Matchers::MessageMatches(
                               Catch::Matchers::ContainsSubstring("R must exceed r")));
    cfg.R = 20;
    cfg.lambda = 0.0;
    REQUIRE_THROWS_AS(cfg.validate(), ConfigError);
    cfg.lambda = 0.015;
    cfg.delta = 20;
    REQUIRE_THROWS_AS(cfg.validate(), ConfigError);
    cfg.delta = -1;
    REQUIRE_NOTHROW(cfg.validate());
}

TEST_CASE("accumulation requires clipped masks of matching width", "[consensus]") {
    EdgeFunction acc;
    acc.V = ImageGrid(30, 30, 0.0);
    acc.votes.assign(acc.V.size(), 0);
    acc.edge_votes.assign(acc.V.size(), 0);

    LocalEdgeMask mask;
    mask.half_width = 5;
    mask.values.assign(11 * 11, 0);
    REQUIRE_THROWS_AS(accumulate(acc, mask, Window{{15, 15}, 5}), ConfigError);

    const LocalEdgeMask clipped = clip_edges(mask, 1);
    REQUIRE_THROWS_AS(accumulate(acc, clipped, Window{{15, 15}, 4}), ConfigError);
    REQUIRE_NOTHROW(accumulate(acc, clipped, Window{{15, 15}, 5}));
    // support half-width is 5 - 1 - 1 = 3: centers closer than that overflow
    REQUIRE_THROWS_AS(accumulate(acc, clipped, Window{{2, 15}, 5}), ConfigError);
    REQUIRE_THROWS_AS(accumulate(acc, clipped, Window{{15, 27}, 5}), ConfigError);
}

TEST_CASE("votes and edge votes are counted per pixel", "[consensus]") {
    EdgeFunction acc;
    acc.V = ImageGrid(20, 20, 0.0);
    acc.votes.assign(acc.V.size(), 0);
    acc.edge_votes.assign(acc.V.size(), 0);

    // R=4, r=1 -> support half-width 2 (5x5 votes); a vertical edge line at
    // offset ox=1 survives clipping only for |oy| <= 2
    LocalEdgeMask mask;
    mask.half_width = 4;
    mask.values.assign(9 * 9, 0);
    for (int oy = -4; oy <= 4; ++oy)
        mask.values[static_cast<std::size_t>(oy + 4) * 9 + (1 + 4)] = 1;
    const LocalEdgeMask clipped = clip_edges(mask, 1);

    accumulate(acc, clipped, Window{{10, 10}, 4});
    accumulate(acc, clipped, Window{{11, 10}, 4});
    finalize_votes(acc);

    auto idx = [&](int x, int y) { return static_cast<std::size_t>(y) * 20 + x; };
    REQUIRE(acc.votes[idx(10, 10)] == 2);  // covered by both supports
    REQUIRE(acc.votes[idx(8, 10)] == 1);   // left fringe of the first support
    REQUIRE(acc.votes[idx(14, 10)] == 0);
    REQUIRE(acc.edge_votes[idx(11, 10)] == 1); // edge line of the first observer
    REQUIRE(acc.edge_votes[idx(12, 10)] == 1); // edge line of the second observer
    REQUIRE(acc.edge_votes[idx(10, 10)] == 0);
    REQUIRE(acc.V[idx(11, 10)] == 0.5);        // 1 edge vote out of 2
    REQUIRE(acc.V[idx(12, 10)] == Catch::Approx(1.0 / 2.0));
    REQUIRE(acc.V[idx(14, 10)] == 0.0);        // nothing voted
}

TEST_CASE("constant images produce no edges anywhere", "[consensus]") {
    ImageGrid img(26, 24, 40.0);
    TepConfig cfg;
    cfg.r = 1;
    cfg.R = 6;
    cfg.threads = 1;
    const EdgeFunction ef = detect_edges(img, cfg);

    const int m = cfg.R + cfg.r;
    for (int y = 0; y < 24; ++y)
        for (int x = 0; x < 26; ++x) {
            const std::size_t i = static_cast<std::size_t>(y) * 26 + x;
            REQUIRE(ef.V[i] == 0.0);
            const bool interior = x >= m && x < 26 - m && y >= m && y < 24 - m;
            REQUIRE(ef.valid[i] == (interior ? 1 : 0));
        }
    // K=1 observers still vote inside their support squares
    REQUIRE(ef.votes[static_cast<std::size_t>(12) * 26 + 13] > 0);
}

TEST_CASE("detection needs room for at least one observer", "[consensus]") {
    TepConfig cfg;
    cfg.r = 1;
    cfg.R = 6;
    REQUIRE_THROWS_AS(detect_edges(ImageGrid(14, 20, 0.0), cfg), ConfigError);
    REQUIRE_THROWS_AS(detect_edges(ImageGrid(20, 14, 0.0), cfg), ConfigError);
    REQUIRE_NOTHROW(detect_edges(ImageGrid(15, 15, 0.0), cfg));
}

TEST_CASE("a step edge collects a vote ridge along the boundary", "[consensus]") {
    const ImageGrid img = two_field_grid(40, 30, 60.0, 190.0, 6.0, 2024);
    TepConfig cfg;
    cfg.r = 2;
    cfg.R = 8;
    cfg.threads = 2;
    const EdgeFunction ef = detect_edges(img, cfg);

    // the boundary sits between x=19 and x=20; the forward-difference edge
    // convention puts the vote crest on the left column of the pair, and it
    // should dominate the flat interior by a wide margin
    double ridge = 0.0, flat = 0.0;
    int n_ridge = 0, n_flat = 0;
    const int m = cfg.R + cfg.r;
    for (int y = m; y < 30 - m; ++y) {
        for (int x = m; x < 40 - m; ++x) {
            const double v = ef.V.at(x, y);
            REQUIRE(v >= 0.0);
            REQUIRE(v <= 1.0);
            if (x == 19) {
                ridge += v;
                ++n_ridge;
            } else if (x <= 14 || x >= 25) {
                flat += v;
                ++n_flat;
            }
        }
    }
    ridge /= n_ridge;
    flat /= n_flat;
    REQUIRE(ridge > 0.5);
    REQUIRE(flat < 0.2 * ridge);
}

TEST_CASE("the vote ratio is independent of the thread count", "[consensus]") {
    const ImageGrid img = two_field_grid(36, 28, 80.0, 170.0, 8.0, 99);
    TepConfig cfg;
    cfg.r = 1;
    cfg.R = 5;

    cfg.threads = 1;
    const EdgeFunction a = detect_edges(img, cfg);
    cfg.threads = 4;
    const EdgeFunction b = detect_edges(img, cfg);

    REQUIRE(a.votes == b.votes);
    REQUIRE(a.edge_votes == b.edge_votes);
    for (std::size_t i = 0; i < a.V.size(); ++i) REQUIRE(a.V[i] == b.V[i]);
}
