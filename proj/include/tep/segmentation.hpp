#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include "tep/errors.hpp"
#include "tep/response.hpp"

namespace tep {

/// Two-phase (or single-phase) labeling of a patch response window under the
/// scale-regularized piecewise-constant energy
///   E = lambda * (P0/A0 + P1/A1) * |Gamma| + sum_i sum_{phase i} (R - c_i)^2
/// where |Gamma| is the interior 4-neighbor boundary length shared by both
/// phases (P0 = P1 = |Gamma|), and the single-phase energy is the plain
/// sum of squared deviations from the window mean.
struct SegmentationResult {
    int K = 1;
    int side = 0;                      // window side length (2R+1)
    std::vector<std::uint8_t> chi;     // per-pixel label, 0..K-1, row-major
    std::array<double, 2> means{0.0, 0.0};
    std::array<double, 2> perimeters{0.0, 0.0};
    std::array<double, 2> areas{0.0, 0.0};
    double energy = 0.0;
    std::vector<double> sweep_energies; // energy after each solver sweep

    std::uint8_t label(int ix, int iy) const {
        return chi[static_cast<std::size_t>(iy) * side + ix];
    }
};

/// Binary edge mask over the same window: 1 at pixels whose label differs
/// from the right or down neighbor. clip_margin records the patch half-width
/// used for border clipping (-1 while unclipped).
struct LocalEdgeMask {
    int half_width = 0; // R
    std::vector<std::uint8_t> values;
    bool clipped = false;
    int clip_margin = -1;

    int side() const { return 2 * half_width + 1; }

    std::uint8_t at_offset(int ox, int oy) const {
        return values[static_cast<std::size_t>(oy + half_width) * side() + (ox + half_width)];
    }
};

namespace detail {

/// Otsu threshold over [lo, hi]; returns false when every split leaves one
/// side empty (effectively constant data).
inline bool otsu_threshold(const std::vector<double>& v, double lo, double hi,
                           double& threshold) {
    constexpr int bins = 256;
    std::array<int, bins> hist{};
    const double scale = (bins - 1) / (hi - lo);
    for (double x : v)
        ++hist[static_cast<int>((x - lo) * scale + 0.5)];

    std::array<double, bins> bin_mean{};
    for (int b = 0; b < bins; ++b)
        bin_mean[b] = lo + (b + 0.5) * (hi - lo) / bins;

    double total_mean = 0.0;
    for (int b = 0; b < bins; ++b) total_mean += hist[b] * bin_mean[b];
    total_mean /= static_cast<double>(v.size());

    double best = -1.0;
    int best_bin = -1;
    long w0 = 0;
    double sum0 = 0.0;
    const long n = static_cast<long>(v.size());
    for (int b = 0; b < bins - 1; ++b) {
        w0 += hist[b];
        sum0 += hist[b] * bin_mean[b];
        const long w1 = n - w0;
        if (w0 == 0 || w1 == 0) continue;
        const double m0 = sum0 / w0;
        const double m1 = (total_mean * n - sum0) / w1;
        const double between = static_cast<double>(w0) * w1 * (m0 - m1) * (m0 - m1);
        if (between > best) {
            best = between;
            best_bin = b;
        }
    }
    if (best_bin < 0) return false;
    threshold = lo + (best_bin + 1) * (hi - lo) / bins;
    return true;
}

/// Interior boundary length: 4-neighbor label-changing pixel edges.
inline long boundary_length(const std::vector<std::uint8_t>& lab, int side) {
    long g = 0;
    for (int y = 0; y < side; ++y)
        for (int x = 0; x < side; ++x) {
            const std::uint8_t c = lab[static_cast<std::size_t>(y) * side + x];
            if (x + 1 < side && lab[static_cast<std::size_t>(y) * side + x + 1] != c) ++g;
            if (y + 1 < side && lab[static_cast<std::size_t>(y + 1) * side + x] != c) ++g;
        }
    return g;
}

inline double scale_term(double lambda, long gamma_len, long a0, long a1) {
    const double g = static_cast<double>(gamma_len);
    return lambda * g * g * (1.0 / a0 + 1.0 / a1);
}

} // namespace detail

/// Minimizes the two-phase energy by alternating sweeps: flips a label only
/// when it strictly lowers the exact energy at the current phase means, then
/// recomputes the means; initialized from an Otsu split. Returns whichever of
/// the single-phase and two-phase solutions has lower energy (ties go to the
/// single phase). Phase 0 is the phase with the smaller mean.
inline SegmentationResult segment_response(const PatchResponse& resp, double lambda) {
    if (lambda <= 0.0) throw ConfigError("regularity weight lambda must be positive");
    const int side = resp.side();
    const std::vector<double>& v = resp.values;
    const long n = static_cast<long>(v.size());

    double mean1 = 0.0;
    for (double x : v) mean1 += x;
    mean1 /= static_cast<double>(n);
    double e1 = 0.0;
    for (double x : v) e1 += (x - mean1) * (x - mean1);

    SegmentationResult single;
    single.K = 1;
    single.side = side;
    single.chi.assign(v.size(), 0);
    single.means = {mean1, 0.0};
    single.perimeters = {0.0, 0.0};
    single.areas = {static_cast<double>(n), 0.0};
    single.energy = e1;
    single.sweep_energies = {e1};

    const auto [lo_it, hi_it] = std::minmax_element(v.begin(), v.end());
    double threshold;
    if (*hi_it <= *lo_it || !detail::otsu_threshold(v, *lo_it, *hi_it, threshold))
        return single;

    std::vector<std::uint8_t> lab(v.size());
    long area[2] = {0, 0};
    for (std::size_t i = 0; i < v.size(); ++i) {
        lab[i] = v[i] > threshold ? 1 : 0;
        ++area[lab[i]];
    }
    if (area[0] == 0 || area[1] == 0) return single;

    double csum[2];
    auto recompute_means = [&] {
        csum[0] = csum[1] = 0.0;
        for (std::size_t i = 0; i < v.size(); ++i) csum[lab[i]] += v[i];
    };
    recompute_means();
    double c[2] = {csum[0] / area[0], csum[1] / area[1]};

    long gamma_len = detail::boundary_length(lab, side);
    auto fidelity = [&] {
        double f = 0.0;
        for (std::size_t i = 0; i < v.size(); ++i) {
            const double d = v[i] - c[lab[i]];
            f += d * d;
        }
        return f;
    };

    std::vector<double> sweep_energies;
    constexpr int max_sweeps = 50;
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        bool changed = false;
        for (int y = 0; y < side; ++y) {
            for (int x = 0; x < side; ++x) {
                const std::size_t i = static_cast<std::size_t>(y) * side + x;
                const std::uint8_t a = lab[i], b = 1 - a;
                if (area[a] == 1) continue; // never empty a phase

                // boundary edges incident to i before/after the flip
                int to_a = 0, to_b = 0;
                auto count_neighbor = [&](int nx, int ny) {
                    const std::uint8_t q = lab[static_cast<std::size_t>(ny) * side + nx];
                    if (q != a) ++to_a;
                    if (q != b) ++to_b;
                };
                if (x > 0) count_neighbor(x - 1, y);
                if (x + 1 < side) count_neighbor(x + 1, y);
                if (y > 0) count_neighbor(x, y - 1);
                if (y + 1 < side) count_neighbor(x, y + 1);

                const long gamma_new = gamma_len - to_a + to_b;
                const long a0_new = area[0] + (b == 0 ? 1 : -1);
                const long a1_new = area[1] + (b == 1 ? 1 : -1);
                const double dfid = (v[i] - c[b]) * (v[i] - c[b]) -
                                    (v[i] - c[a]) * (v[i] - c[a]);
                const double dscale = detail::scale_term(lambda, gamma_new, a0_new, a1_new) -
                                      detail::scale_term(lambda, gamma_len, area[0], area[1]);
                if (dfid + dscale < -1e-15) {
                    lab[i] = b;
                    --area[a];
                    ++area[b];
                    csum[a] -= v[i];
                    csum[b] += v[i];
                    gamma_len = gamma_new;
                    changed = true;
                }
            }
        }
        c[0] = csum[0] / area[0];
        c[1] = csum[1] / area[1];
        sweep_energies.push_back(fidelity() +
                                 detail::scale_term(lambda, gamma_len, area[0], area[1]));
        if (!changed) break;
    }

    const double e2 = sweep_energies.back();
    if (e2 >= e1 - 1e-12) return single; // prefer no edge on ties

    SegmentationResult out;
    out.K = 2;
    out.side = side;
    // phase 0 = smaller mean
    const bool swap = c[0] > c[1];
    out.chi.resize(v.size());
    for (std::size_t i = 0; i < v.size(); ++i)
        out.chi[i] = swap ? static_cast<std::uint8_t>(1 - lab[i]) : lab[i];
    out.means = {c[swap ? 1 : 0], c[swap ? 0 : 1]};
    out.areas = {static_cast<double>(area[swap ? 1 : 0]),
                 static_cast<double>(area[swap ? 0 : 1])};
    out.perimeters = {static_cast<double>(gamma_len), static_cast<double>(gamma_len)};
    out.energy = e2;
    out.sweep_energies = std::move(sweep_energies);
    return out;
}

/// Marks phase-boundary pixels by forward differences: 1 where the label
/// differs from the right or the down neighbor. A single phase yields an
/// all-zero mask.
inline LocalEdgeMask extract_edges(const SegmentationResult& seg) {
    LocalEdgeMask mask;
    mask.half_width = (seg.side - 1) / 2;
    mask.values.assign(seg.chi.size(), 0);
    if (seg.K == 1) return mask;

    const int side = seg.side;
    for (int y = 0; y < side; ++y)
        for (int x = 0; x < side; ++x) {
            const std::uint8_t c = seg.label(x, y);
            const bool right = x + 1 < side && seg.label(x + 1, y) != c;
            const bool down = y + 1 < side && seg.label(x, y + 1) != c;
            if (right || down)
                mask.values[static_cast<std::size_t>(y) * side + x] = 1;
        }
    return mask;
}

/// Zeroes mask pixels within chebyshev distance r of the window border
/// (their patches poke outside the observer's window); survivors satisfy
/// |o|_inf <= R - r - 1.
inline LocalEdgeMask clip_edges(const LocalEdgeMask& mask, int r) {
    if (mask.clipped) throw ConfigError("edge mask is already clipped");
    if (r < 0) throw ConfigError("clip margin must be >= 0");

    LocalEdgeMask out = mask;
    const int R = mask.half_width;
    const int keep = R - r - 1; // may be negative: everything clipped
    std::size_t i = 0;
    for (int oy = -R; oy <= R; ++oy)
        for (int ox = -R; ox <= R; ++ox, ++i)
            if (std::max(std::abs(ox), std::abs(oy)) > keep)
                out.values[i] = 0;
    out.clipped = true;
    out.clip_margin = r;
    return out;
}

} // namespace tep
