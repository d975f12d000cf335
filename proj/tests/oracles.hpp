#pragma once

// Independent straight-from-the-definition reference implementations for
// cross-checking the library. They share no code with the library internals
// and favor clarity over speed.

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "tep/image.hpp"

namespace teptest {

/// Patch response over a full window by the plain quadruple loop:
/// out[(oy+R)*(2R+1) + (ox+R)] = sum_patch (I(y+d) - I(x+d))^2 / (2r+1)^2.
inline std::vector<double> oracle_response(const tep::ImageGrid& img, int cx, int cy,
                                           int r, int R) {
    const int side = 2 * R + 1;
    std::vector<double> out(static_cast<std::size_t>(side) * side, 0.0);
    const double d = static_cast<double>(2 * r + 1) * (2 * r + 1);
    for (int oy = -R; oy <= R; ++oy)
        for (int ox = -R; ox <= R; ++ox) {
            double acc = 0.0;
            for (int dy = -r; dy <= r; ++dy)
                for (int dx = -r; dx <= r; ++dx) {
                    const double diff = img.at(cx + ox + dx, cy + oy + dy) -
                                        img.at(cx + dx, cy + dy);
                    acc += diff * diff;
                }
            out[static_cast<std::size_t>(oy + R) * side + (ox + R)] = acc / d;
        }
    return out;
}

/// Center repair: entries with chebyshev offset <= delta are replaced by the
/// mean over the remaining entries.
inline std::vector<double> oracle_repair(const std::vector<double>& values, int R,
                                         int delta) {
    const int side = 2 * R + 1;
    double sum = 0.0;
    long n = 0;
    for (int oy = -R; oy <= R; ++oy)
        for (int ox = -R; ox <= R; ++ox)
            if (std::max(std::abs(ox), std::abs(oy)) > delta) {
                sum += values[static_cast<std::size_t>(oy + R) * side + (ox + R)];
                ++n;
            }
    const double mean = sum / static_cast<double>(n);
    std::vector<double> out = values;
    for (int oy = -R; oy <= R; ++oy)
        for (int ox = -R; ox <= R; ++ox)
            if (std::max(std::abs(ox), std::abs(oy)) <= delta)
                out[static_cast<std::size_t>(oy + R) * side + (ox + R)] = mean;
    return out;
}

/// Forward-difference boundary mask of a label grid.
inline std::vector<std::uint8_t> oracle_edges(const std::vector<std::uint8_t>& lab,
                                              int side) {
    std::vector<std::uint8_t> out(lab.size(), 0);
    for (int y = 0; y < side; ++y)
        for (int x = 0; x < side; ++x) {
            const std::uint8_t c = lab[static_cast<std::size_t>(y) * side + x];
            const bool right =
                x + 1 < side && lab[static_cast<std::size_t>(y) * side + x + 1] != c;
            const bool down =
                y + 1 < side && lab[static_cast<std::size_t>(y + 1) * side + x] != c;
            if (right || down) out[static_cast<std::size_t>(y) * side + x] = 1;
        }
    return out;
}

/// Exact energy of a binary labeling: lambda |Gamma|^2 (1/A0 + 1/A1) plus the
/// squared deviations from the per-phase means. Returns infinity when a phase
/// is empty.
inline double oracle_two_phase_energy(const std::vector<double>& v,
                                      const std::vector<std::uint8_t>& lab, int side,
                                      double lambda) {
    double sum[2] = {0.0, 0.0};
    long area[2] = {0, 0};
    for (std::size_t i = 0; i < v.size(); ++i) {
        sum[lab[i]] += v[i];
        ++area[lab[i]];
    }
    if (area[0] == 0 || area[1] == 0)
        return std::numeric_limits<double>::infinity();
    const double c[2] = {sum[0] / area[0], sum[1] / area[1]};

    long gamma = 0;
    for (int y = 0; y < side; ++y)
        for (int x = 0; x < side; ++x) {
            const std::uint8_t c0 = lab[static_cast<std::size_t>(y) * side + x];
            if (x + 1 < side && lab[static_cast<std::size_t>(y) * side + x + 1] != c0)
                ++gamma;
            if (y + 1 < side && lab[static_cast<std::size_t>(y + 1) * side + x] != c0)
                ++gamma;
        }
    double e = lambda * static_cast<double>(gamma) * gamma *
               (1.0 / area[0] + 1.0 / area[1]);
    for (std::size_t i = 0; i < v.size(); ++i) {
        const double d = v[i] - c[lab[i]];
        e += d * d;
    }
    return e;
}

inline double oracle_single_phase_energy(const std::vector<double>& v) {
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double e = 0.0;
    for (double x : v) e += (x - mean) * (x - mean);
    return e;
}

struct OracleSegmentation {
    int K = 1;
    double energy = 0.0;
    std::vector<std::uint8_t> chi; // phase 0 = smaller mean (K = 2 only)
};

/// Exhaustive split search for two-level inputs: the only candidate
/// labelings with zero fidelity are the by-value split and the single phase;
/// instances are generated so one of these is the global optimum.
inline OracleSegmentation oracle_segment_two_level(const std::vector<double>& v,
                                                   int side, double lambda) {
    OracleSegmentation out;
    out.energy = oracle_single_phase_energy(v);

    double lo = v[0], hi = v[0];
    for (double x : v) {
        lo = std::min(lo, x);
        hi = std::max(hi, x);
    }
    if (hi <= lo) return out; // constant input: single phase

    std::vector<std::uint8_t> lab(v.size());
    for (std::size_t i = 0; i < v.size(); ++i)
        lab[i] = v[i] > 0.5 * (lo + hi) ? 1 : 0;
    const double e2 = oracle_two_phase_energy(v, lab, side, lambda);
    if (e2 < out.energy - 1e-12) {
        out.K = 2;
        out.energy = e2;
        out.chi = lab; // lower value already labeled 0, so means are ordered
    }
    return out;
}

} // namespace teptest
