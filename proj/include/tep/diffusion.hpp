#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "tep/consensus.hpp"
#include "tep/errors.hpp"
#include "tep/image.hpp"

namespace tep {

/// Brightness/chromaticity split of a color image: brightness is the
/// per-pixel Euclidean norm, chromaticity the unit direction (a fixed
/// diagonal unit vector where the pixel is black).
struct CBDecomposition {
    ImageGrid brightness;
    ColorImage chroma;
};

inline constexpr double chroma_eps = 1e-6;

inline CBDecomposition split_cb(const ColorImage& img) {
    const int w = img.width(), h = img.height();
    CBDecomposition out{ImageGrid(w, h),
                        ColorImage{ImageGrid(w, h), ImageGrid(w, h), ImageGrid(w, h)}};
    const double diag = 1.0 / std::sqrt(3.0);
    for (std::size_t i = 0; i < out.brightness.size(); ++i) {
        const double r = img.r[i], g = img.g[i], b = img.b[i];
        const double n = std::sqrt(r * r + g * g + b * b);
        out.brightness[i] = n;
        if (n > chroma_eps) {
            out.chroma.r[i] = r / n;
            out.chroma.g[i] = g / n;
            out.chroma.b[i] = b / n;
        } else {
            out.chroma.r[i] = out.chroma.g[i] = out.chroma.b[i] = diag;
        }
    }
    return out;
}

/// Edge-stopping weight g(V) = (1 - V^alpha) / (1 + V^alpha): 1 on flat
/// regions, 0 on consensus edges, strictly decreasing in between.
inline ImageGrid edge_stopping(const ImageGrid& V, double alpha) {
    if (alpha <= 0.0) throw ConfigError("alpha must be positive");
    ImageGrid g(V.width(), V.height());
    for (std::size_t i = 0; i < g.size(); ++i) {
        const double v = std::min(1.0, std::max(0.0, V[i]));
        const double p = std::pow(v, alpha);
        g[i] = (1.0 - p) / (1.0 + p);
    }
    return g;
}

inline ImageGrid edge_stopping(const EdgeFunction& V, double alpha) {
    return edge_stopping(V.V, alpha);
}

struct DiffusionConfig {
    double alpha = 0.2;   // edge-stopping exponent
    double gamma1 = 0.05; // brightness fidelity weight
    double gamma2 = 0.05; // chromaticity fidelity weight
    double beta = 1.0;    // chromaticity unit-norm restoring weight
    double dt = 0.1;      // explicit time step
    int iters = 500;
    double stop_tol = 1e-6; // early stop when the max per-step change drops below

    void validate() const {
        if (alpha <= 0.0) throw ConfigError("alpha must be positive");
        if (gamma1 < 0.0 || gamma2 < 0.0 || beta < 0.0)
            throw ConfigError("fidelity and norm weights must be >= 0");
        if (dt <= 0.0) throw ConfigError("dt must be positive");
        if (iters < 0) throw ConfigError("iters must be >= 0");
    }
};

/// Largest stable explicit step for the 5-point stencil: 1 / (4 max g + gamma).
inline double stable_dt_limit(const ImageGrid& g, double gamma) {
    double gmax = 0.0;
    for (double v : g.data()) gmax = std::max(gmax, v);
    return 1.0 / (4.0 * gmax + gamma);
}

/// Discrete energy driven by the edge-weighted diffusion:
/// 1/2 sum_faces g_face (dU)^2 + gamma/2 sum (U - U0)^2, with g averaged
/// onto faces. Non-increasing along the explicit flow under the dt limit.
inline double diffusion_energy(const ImageGrid& u, const ImageGrid& u0,
                               const ImageGrid& g, double gamma) {
    const int w = u.width(), h = u.height();
    double e = 0.0;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            if (x + 1 < w) {
                const double gf = 0.5 * (g.at(x, y) + g.at(x + 1, y));
                const double d = u.at(x + 1, y) - u.at(x, y);
                e += 0.5 * gf * d * d;
            }
            if (y + 1 < h) {
                const double gf = 0.5 * (g.at(x, y) + g.at(x, y + 1));
                const double d = u.at(x, y + 1) - u.at(x, y);
                e += 0.5 * gf * d * d;
            }
            const double f = u.at(x, y) - u0.at(x, y);
            e += 0.5 * gamma * f * f;
        }
    return e;
}

namespace detail {

/// One explicit step of dU/dt = div(g grad U) - gamma (U - U0) with
/// face-averaged g and zero-flux boundaries.
inline void diffusion_step(std::vector<ImageGrid*> channels,
                           const std::vector<const ImageGrid*>& anchors,
                           const ImageGrid& g, double gamma, double beta,
                           double dt, double& max_change) {
    const int w = g.width(), h = g.height();
    const std::size_t nc = channels.size();
    std::vector<ImageGrid> next;
    next.reserve(nc);
    for (std::size_t c = 0; c < nc; ++c) next.push_back(*channels[c]);

    max_change = 0.0;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            double norm2 = 0.0;
            if (beta > 0.0)
                for (std::size_t c = 0; c < nc; ++c) {
                    const double v = channels[c]->at(x, y);
                    norm2 += v * v;
                }
            const double norm = std::sqrt(norm2);

            for (std::size_t c = 0; c < nc; ++c) {
                const ImageGrid& u = *channels[c];
                const double uc = u.at(x, y);
                double div = 0.0;
                if (x + 1 < w)
                    div += 0.5 * (g.at(x, y) + g.at(x + 1, y)) * (u.at(x + 1, y) - uc);
                if (x > 0)
                    div += 0.5 * (g.at(x, y) + g.at(x - 1, y)) * (u.at(x - 1, y) - uc);
                if (y + 1 < h)
                    div += 0.5 * (g.at(x, y) + g.at(x, y + 1)) * (u.at(x, y + 1) - uc);
                if (y > 0)
                    div += 0.5 * (g.at(x, y) + g.at(x, y - 1)) * (u.at(x, y - 1) - uc);

                double rhs = div - gamma * (uc - anchors[c]->at(x, y));
                if (beta > 0.0 && norm > chroma_eps)
                    rhs += beta * (1.0 / norm - 1.0) * uc; // restores unit norm
                const double nv = uc + dt * rhs;
                max_change = std::max(max_change, std::abs(nv - uc));
                next[c].at(x, y) = nv;
            }
        }
    }
    for (std::size_t c = 0; c < nc; ++c) *channels[c] = std::move(next[c]);
}

inline void check_bounded(const ImageGrid& u, double limit) {
    for (double v : u.data())
        if (!std::isfinite(v) || std::abs(v) > limit)
            throw NumericError("diffusion diverged: values exceed 10x the input range");
}

} // namespace detail

/// Edge-weighted smoothing of the brightness channel: explicit steps of
/// dU/dt = div(g grad U) - gamma1 (U - U_b), Neumann boundaries, with an
/// instability guard and early stopping.
inline ImageGrid diffuse_brightness(const ImageGrid& u_b, const ImageGrid& g,
                                    const DiffusionConfig& cfg) {
    cfg.validate();
    if (g.width() != u_b.width() || g.height() != u_b.height())
        throw ConfigError("weight grid and image dimensions disagree");
    if (cfg.dt > stable_dt_limit(g, cfg.gamma1) + 1e-12)
        throw ConfigError("dt exceeds the explicit stability limit 1/(4 max g + gamma1)");

    double limit = 0.0;
    for (double v : u_b.data()) limit = std::max(limit, std::abs(v));
    limit = 10.0 * std::max(limit, 1.0);

    ImageGrid u = u_b;
    for (int it = 0; it < cfg.iters; ++it) {
        double change = 0.0;
        detail::diffusion_step({&u}, {&u_b}, g, cfg.gamma1, 0.0, cfg.dt, change);
        detail::check_bounded(u, limit);
        if (change < cfg.stop_tol) break;
    }
    return u;
}

/// Edge-weighted smoothing of the chromaticity direction field: channel-wise
/// diffusion plus fidelity plus a restoring force toward unit norm; the
/// result is renormalized to exact unit length.
inline ColorImage diffuse_chromaticity(const ColorImage& u_c, const ImageGrid& g,
                                       const DiffusionConfig& cfg) {
    cfg.validate();
    if (g.width() != u_c.width() || g.height() != u_c.height())
        throw ConfigError("weight grid and image dimensions disagree");
    if (cfg.dt > stable_dt_limit(g, cfg.gamma2) + 1e-12)
        throw ConfigError("dt exceeds the explicit stability limit 1/(4 max g + gamma2)");

    ColorImage u = u_c;
    const double limit = 10.0; // channels of a unit direction field stay within [-1, 1]
    for (int it = 0; it < cfg.iters; ++it) {
        double change = 0.0;
        detail::diffusion_step({&u.r, &u.g, &u.b}, {&u_c.r, &u_c.g, &u_c.b}, g,
                               cfg.gamma2, cfg.beta, cfg.dt, change);
        detail::check_bounded(u.r, limit);
        detail::check_bounded(u.g, limit);
        detail::check_bounded(u.b, limit);
        if (change < cfg.stop_tol) break;
    }

    const double diag = 1.0 / std::sqrt(3.0);
    for (std::size_t i = 0; i < u.r.size(); ++i) {
        const double n = std::sqrt(u.r[i] * u.r[i] + u.g[i] * u.g[i] + u.b[i] * u.b[i]);
        if (n > chroma_eps) {
            u.r[i] /= n;
            u.g[i] /= n;
            u.b[i] /= n;
        } else {
            u.r[i] = u.g[i] = u.b[i] = diag;
        }
    }
    return u;
}

/// Piecewise-smooth simplification of a color image guided by the consensus
/// edge map: brightness and chromaticity are diffused with diffusivity
/// g(V) and recombined.
inline ColorImage segment_image(const ColorImage& img, const EdgeFunction& V,
                                const DiffusionConfig& cfg) {
    if (V.width() != img.width() || V.height() != img.height())
        throw ConfigError("edge map and image dimensions disagree");
    const CBDecomposition cb = split_cb(img);
    const ImageGrid g = edge_stopping(V, cfg.alpha);
    const ImageGrid ub = diffuse_brightness(cb.brightness, g, cfg);
    const ColorImage uc = diffuse_chromaticity(cb.chroma, g, cfg);

    ColorImage out{ImageGrid(img.width(), img.height()),
                   ImageGrid(img.width(), img.height()),
                   ImageGrid(img.width(), img.height())};
    for (std::size_t i = 0; i < out.r.size(); ++i) {
        out.r[i] = ub[i] * uc.r[i];
        out.g[i] = ub[i] * uc.g[i];
        out.b[i] = ub[i] * uc.b[i];
    }
    return out;
}

/// Texture remainder: the exact per-channel difference between the original
/// and its smoothed version (display output shifts it by +128).
inline ColorImage decompose(const ColorImage& img, const ColorImage& segmented) {
    if (segmented.width() != img.width() || segmented.height() != img.height())
        throw ConfigError("image dimensions disagree");
    ColorImage out{ImageGrid(img.width(), img.height()),
                   ImageGrid(img.width(), img.height()),
                   ImageGrid(img.width(), img.height())};
    for (std::size_t i = 0; i < out.r.size(); ++i) {
        out.r[i] = img.r[i] - segmented.r[i];
        out.g[i] = img.g[i] - segmented.g[i];
        out.b[i] = img.b[i] - segmented.b[i];
    }
    return out;
}

} // namespace tep
