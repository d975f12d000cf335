#pragma once

#include <algorithm>
#include <cstdint>
#include <thread>
#include <vector>

#include "tep/errors.hpp"
#include "tep/image.hpp"
#include "tep/response.hpp"
#include "tep/segmentation.hpp"

namespace tep {

/// Default exclusion core half-width for the center repair: 2 for small
/// patches, 5 for large ones (r in [10, 30]).
inline int default_delta(int r) { return r <= 9 ? 2 : 5; }

/// Pipeline parameters for consensus edge detection.
struct TepConfig {
    int r = 3;              // patch half-width
    int R = 20;             // comparison window half-width
    double lambda = 0.015;  // regularity weight (normalized-response units)
    int delta = -1;         // exclusion core half-width; -1 = auto
    bool normalize = true;  // scale responses by the squared intensity range
    int threads = 0;        // worker count; 0 = hardware concurrency

    int effective_delta() const { return delta >= 0 ? delta : default_delta(r); }

    void validate() const {
        if (r <= 0) throw ConfigError("r must be positive");
        if (R <= r) throw ConfigError("R must exceed r (accepted: R > r)");
        if (lambda <= 0.0) throw ConfigError("lambda must be positive");
        const int d = effective_delta();
        if (d <= 0 || d >= R)
            throw ConfigError("delta must satisfy 0 < delta < R");
    }
};

/// Consensus edge function: per pixel, the fraction of observers that voted
/// it an edge. votes counts the observers whose clipped mask support covered
/// the pixel; edge_votes is the raw vote accumulator; valid marks the eroded
/// observer domain (margin R + r).
struct EdgeFunction {
    ImageGrid V;
    std::vector<std::uint32_t> votes;
    std::vector<std::uint32_t> edge_votes;
    std::vector<std::uint8_t> valid;

    int width() const { return V.width(); }
    int height() const { return V.height(); }
};

namespace detail {

/// Adds one observer's clipped mask: inside the surviving support square
/// |o|_inf <= R - r - 1 every pixel receives a vote, edge pixels also an
/// edge vote. Integer accumulators keep the result independent of
/// observer order.
inline void accumulate_mask(std::vector<std::uint32_t>& votes,
                            std::vector<std::uint32_t>& edge_votes,
                            int width, const LocalEdgeMask& mask, Pixel center) {
    const int s = mask.half_width - mask.clip_margin - 1;
    if (s < 0) return;
    for (int oy = -s; oy <= s; ++oy) {
        const std::size_t row = static_cast<std::size_t>(center.y + oy) * width;
        for (int ox = -s; ox <= s; ++ox) {
            ++votes[row + center.x + ox];
            if (mask.at_offset(ox, oy))
                ++edge_votes[row + center.x + ox];
        }
    }
}

} // namespace detail

/// Adds one clipped mask into the accumulator (votes over the whole
/// surviving support, edge votes where the mask is set).
inline void accumulate(EdgeFunction& acc, const LocalEdgeMask& mask, Window window) {
    if (!mask.clipped) throw ConfigError("edge mask must be clipped before accumulation");
    if (window.half_width != mask.half_width)
        throw ConfigError("window and mask half-widths disagree");
    const int s = mask.half_width - mask.clip_margin - 1;
    if (window.center.x - s < 0 || window.center.x + s >= acc.width() ||
        window.center.y - s < 0 || window.center.y + s >= acc.height())
        throw ConfigError("mask support exceeds accumulator bounds");
    detail::accumulate_mask(acc.votes, acc.edge_votes, acc.width(), mask, window.center);
}

/// Recomputes V = edge_votes / votes (0 where nothing voted).
inline void finalize_votes(EdgeFunction& acc) {
    for (std::size_t i = 0; i < acc.V.size(); ++i)
        acc.V[i] = acc.votes[i] > 0
                       ? static_cast<double>(acc.edge_votes[i]) / acc.votes[i]
                       : 0.0;
}

/// Runs the full consensus pipeline: every observer in the eroded domain
/// computes its patch response, repairs the center, segments the window, and
/// scatters its clipped edge mask; V is the per-pixel vote ratio. Observers
/// are processed in parallel row chunks with private integer accumulators,
/// so the result is independent of the thread count.
inline EdgeFunction detect_edges(const ImageGrid& img, const TepConfig& cfg) {
    cfg.validate();
    const int m = cfg.R + cfg.r;
    if (img.width() <= 2 * m || img.height() <= 2 * m)
        throw ConfigError("image too small for the eroded observer domain");

    const int w = img.width(), h = img.height();
    EdgeFunction out;
    out.V = ImageGrid(w, h, 0.0);
    out.votes.assign(out.V.size(), 0);
    out.edge_votes.assign(out.V.size(), 0);
    out.valid.assign(out.V.size(), 0);
    for (int y = m; y < h - m; ++y)
        for (int x = m; x < w - m; ++x)
            out.valid[static_cast<std::size_t>(y) * w + x] = 1;

    const double range2 = img.nominal_range * img.nominal_range;
    const int support = cfg.R - cfg.r - 1;

    int n_threads = cfg.threads > 0
                        ? cfg.threads
                        : std::max(1u, std::thread::hardware_concurrency());
    const int n_rows = h - 2 * m;
    n_threads = std::max(1, std::min(n_threads, n_rows));

    auto worker = [&](int row_begin, int row_end,
                      std::vector<std::uint32_t>& votes,
                      std::vector<std::uint32_t>& edge_votes) {
        for (int y = row_begin; y < row_end; ++y) {
            for (int x = m; x < w - m; ++x) {
                PatchResponse resp = compute_response(img, {x, y}, cfg.r, cfg.R);
                resp = repair_center(resp, cfg.effective_delta());
                if (cfg.normalize)
                    for (double& v : resp.values) v /= range2;

                SegmentationResult seg = segment_response(resp, cfg.lambda);
                if (seg.K == 1) {
                    // no edge anywhere: every support pixel gets a plain vote
                    for (int oy = -support; oy <= support; ++oy) {
                        const std::size_t row = static_cast<std::size_t>(y + oy) * w;
                        for (int ox = -support; ox <= support; ++ox)
                            ++votes[row + x + ox];
                    }
                    continue;
                }
                const LocalEdgeMask mask = clip_edges(extract_edges(seg), cfg.r);
                detail::accumulate_mask(votes, edge_votes, w, mask, {x, y});
            }
        }
    };

    if (n_threads == 1) {
        worker(m, h - m, out.votes, out.edge_votes);
    } else {
        std::vector<std::vector<std::uint32_t>> votes_parts(n_threads),
            edge_parts(n_threads);
        std::vector<std::thread> pool;
        const int chunk = (n_rows + n_threads - 1) / n_threads;
        for (int t = 0; t < n_threads; ++t) {
            votes_parts[t].assign(out.V.size(), 0);
            edge_parts[t].assign(out.V.size(), 0);
            const int begin = m + t * chunk;
            const int end = std::min(h - m, begin + chunk);
            pool.emplace_back(worker, begin, end, std::ref(votes_parts[t]),
                              std::ref(edge_parts[t]));
        }
        for (auto& th : pool) th.join();
        for (int t = 0; t < n_threads; ++t)
            for (std::size_t i = 0; i < out.V.size(); ++i) {
                out.votes[i] += votes_parts[t][i];
                out.edge_votes[i] += edge_parts[t][i];
            }
    }

    finalize_votes(out);
    return out;
}

} // namespace tep
