#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "tep/config.hpp"
#include "tep/consensus.hpp"
#include "tep/diffusion.hpp"
#include "tep/errors.hpp"
#include "tep/image.hpp"
#include "tep/image_io.hpp"
#include "tep/manifest.hpp"
#include "tep/morphology.hpp"
#include "tep/random_field.hpp"
#include "tep/version.hpp"

namespace tep::cli {

namespace detail {

inline bool ends_with(const std::string& s, const std::string& suffix) {
    return s.size() >= suffix.size() &&
           s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

/// .png outputs get min/max-normalized 8-bit encoding; anything else is the
/// raw float64 grid format.
inline void save_map_auto(const ImageGrid& g, const std::string& path) {
    save_scalar_map(g, path,
                    ends_with(path, ".png") ? MapMode::normalized_8bit
                                            : MapMode::raw_float);
}

inline std::vector<int> parse_int_list(const std::string& key, const std::string& text) {
    std::vector<int> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty())
            out.push_back(static_cast<int>(parse_integer(key, item)));
    }
    if (out.empty()) throw ConfigError("key '" + key + "': expected a comma-separated list");
    return out;
}

inline std::vector<double> parse_real_list(const std::string& key, const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(parse_real(key, item));
    }
    if (out.empty()) throw ConfigError("key '" + key + "': expected a comma-separated list");
    return out;
}

/// Wraps a raw consensus map loaded from disk so diffusion and refinement
/// can consume it; vote counters are placeholders.
inline EdgeFunction edge_function_from_map(ImageGrid v) {
    const std::size_t n = v.size();
    for (std::size_t i = 0; i < n; ++i) v[i] = std::min(1.0, std::max(0.0, v[i]));
    return EdgeFunction{std::move(v), std::vector<std::uint32_t>(n, 1),
                        std::vector<std::uint32_t>(n, 0),
                        std::vector<std::uint8_t>(n, 1)};
}

inline ImageGrid brightness_of(const ColorImage& img) {
    ImageGrid b = split_cb(img).brightness;
    b.nominal_range = img.r.nominal_range * std::sqrt(3.0);
    return b;
}

inline TepConfig detect_config_from(const Config& cfg) {
    TepConfig tc;
    tc.r = static_cast<int>(cfg.get_int("r"));
    tc.R = static_cast<int>(cfg.get_int("R"));
    tc.lambda = cfg.get_real("lambda");
    const std::string d = cfg.get_text("delta");
    tc.delta = (d == "auto") ? -1 : static_cast<int>(parse_integer("delta", d));
    tc.normalize = cfg.get_bool("normalize");
    tc.threads = static_cast<int>(cfg.get_int("threads"));
    tc.validate();
    return tc;
}

inline DiffusionConfig diffusion_config_from(const Config& cfg) {
    DiffusionConfig dc;
    dc.alpha = cfg.get_real("alpha");
    dc.gamma1 = cfg.get_real("gamma1");
    dc.gamma2 = cfg.get_real("gamma2");
    dc.beta = cfg.get_real("beta");
    dc.dt = cfg.get_real("dt");
    dc.iters = static_cast<int>(cfg.get_int("iters"));
    dc.validate();
    return dc;
}

inline void append_detect_options(OptionSchema& s) {
    s.push_back({"r", OptType::integer, "3", false, "patch half-width (pixels)", 1, {}});
    s.push_back({"R", OptType::integer, "20", false,
                 "observation window half-width (pixels)", 2, {}});
    s.push_back({"lambda", OptType::real, "0.015", false,
                 "boundary length weight in the local split energy", {}, {}});
    s.push_back({"delta", OptType::text, "auto", false,
                 "center repair half-width (pixels), or 'auto' = 2 if r <= 9 else 5"});
    s.push_back({"normalize", OptType::boolean, "true", false,
                 "divide responses by the squared nominal intensity range"});
    s.push_back({"threads", OptType::integer, "0", false,
                 "worker threads (0 = hardware parallelism; 1 = bit-exact reductions)",
                 0, {}});
}

inline OptionSpec quiet_option() {
    return {"quiet", OptType::boolean, "false", false,
            "suppress informational output"};
}

inline OptionSchema detect_schema() {
    OptionSchema s;
    s.push_back({"input", OptType::text, "", true, "input image (PNG or PGM/PPM)"});
    s.push_back({"output", OptType::text, "", true,
                 "edge map path (.png = normalized 8-bit, else raw float64)"});
    append_detect_options(s);
    s.push_back({"dump-v-raw", OptType::text, "", false,
                 "also write the consensus map as a raw float64 grid"});
    s.push_back(quiet_option());
    return s;
}

inline OptionSchema segment_schema() {
    OptionSchema s;
    s.push_back({"input", OptType::text, "", true, "input color image (PNG or PPM)"});
    s.push_back({"edges", OptType::text, "auto", false,
                 "raw float64 edge map, or 'auto' to run detection first"});
    s.push_back({"output", OptType::text, "", true, "smoothed image (PNG)"});
    s.push_back({"remainder", OptType::text, "", false,
                 "optional texture remainder PNG (difference + 128)"});
    s.push_back({"alpha", OptType::real, "0.2", false,
                 "edge-stopping exponent of g(V)", {}, {}});
    s.push_back({"gamma1", OptType::real, "0.05", false,
                 "brightness fidelity weight", 0.0, {}});
    s.push_back({"gamma2", OptType::real, "0.05", false,
                 "chromaticity fidelity weight", 0.0, {}});
    s.push_back({"beta", OptType::real, "1.0", false,
                 "chromaticity unit-norm restoring weight", 0.0, {}});
    s.push_back({"dt", OptType::real, "0.1", false,
                 "explicit diffusion step (must satisfy dt <= 1/(4 max g + gamma))"});
    s.push_back({"iters", OptType::integer, "500", false, "diffusion steps", 0, {}});
    append_detect_options(s);
    s.push_back(quiet_option());
    return s;
}

inline OptionSchema decompose_schema() {
    OptionSchema s;
    s.push_back({"input", OptType::text, "", true, "original color image"});
    s.push_back({"segmented", OptType::text, "", true, "smoothed image from 'segment'"});
    s.push_back({"output", OptType::text, "", true,
                 "texture remainder PNG (difference + 128)"});
    s.push_back({"raw-prefix", OptType::text, "", false,
                 "also write raw float64 channels <prefix>.{r,g,b}.tepf"});
    s.push_back(quiet_option());
    return s;
}

inline OptionSchema synth_schema() {
    OptionSchema s;
    s.push_back({"mu", OptType::real, "128", false, "field mean (intensity units)"});
    s.push_back({"sigma", OptType::real, "20", false,
                 "field standard deviation (intensity units)", 0.0, {}});
    s.push_back({"ell", OptType::real, "2", false, "correlation length (pixels)"});
    s.push_back({"seed", OptType::integer, "1", false, "random seed", 0, {}});
    s.push_back({"size", OptType::text, "64x64", false, "field size WxH (pixels)"});
    s.push_back({"method", OptType::text, "auto", false,
                 "sampler: auto | exact | circulant"});
    s.push_back({"output", OptType::text, "", true,
                 "output path (.png = clamped 8-bit, else raw float64)"});
    s.push_back({"raw", OptType::text, "", false,
                 "also write the field as a raw float64 grid"});
    s.push_back(quiet_option());
    return s;
}

inline OptionSchema verify_schema() {
    OptionSchema s;
    s.push_back({"check", OptType::text, "", false,
                 "theorem1 | theorem2 | hellinger | frobenius | periodscan "
                 "(alternative to the positional argument)"});
    s.push_back({"report", OptType::text, "", true,
                 "tab-separated report path ('-' = stdout)"});
    s.push_back({"sigma", OptType::real, "1", false,
                 "field standard deviation", 0.0, {}});
    s.push_back({"ell", OptType::real, "2", false, "correlation length (pixels)"});
    s.push_back({"mu-diff", OptType::real, "1.5", false,
                 "mean gap between the two fields, in units of sigma (hellinger)"});
    s.push_back({"seed", OptType::integer, "1", false, "random seed", 0, {}});
    s.push_back({"draws", OptType::integer, "0", false,
                 "Monte-Carlo draws (0 = per-check default)", 0, {}});
    s.push_back({"r-list", OptType::text, "", false,
                 "comma-separated patch half-widths (default depends on the check)"});
    s.push_back({"tau", OptType::real, "12", false, "patch separation (pixels)"});
    s.push_back({"tau-list", OptType::text, "", false,
                 "comma-separated separations (default depends on the check)"});
    s.push_back({"input", OptType::text, "", false,
                 "image for periodscan (default: built-in period-8 stripes)"});
    s.push_back(quiet_option());
    return s;
}

inline OptionSchema refine_schema() {
    OptionSchema s;
    s.push_back({"input", OptType::text, "", true,
                 "consensus map as a raw float64 grid"});
    s.push_back({"line", OptType::integer, "7", false,
                 "line element length (pixels)", 1, {}});
    s.push_back({"orients", OptType::integer, "4", false,
                 "number of closing orientations over 180 degrees", 1, {}});
    s.push_back({"output", OptType::text, "", true,
                 "refined map path (.png = normalized 8-bit, else raw float64)"});
    s.push_back(quiet_option());
    return s;
}

struct CommandInfo {
    const char* name;
    const char* summary;
};

inline const std::vector<CommandInfo>& command_table() {
    static const std::vector<CommandInfo> table = {
        {"detect", "compute the consensus edge map of an image"},
        {"segment", "edge-guided piecewise-smooth simplification of a color image"},
        {"decompose", "split an image into its smoothed part and texture remainder"},
        {"synth", "sample a stationary Gaussian random field"},
        {"verify", "statistical checks of the patch-response theory"},
        {"refine", "bridge junction gaps in a consensus map by oriented closings"},
    };
    return table;
}

inline std::string global_usage() {
    std::ostringstream os;
    os << "usage: tep <command> [flags]\n\ncommands:\n";
    for (const CommandInfo& c : command_table()) {
        std::string head = std::string("  ") + c.name;
        os << head;
        for (std::size_t i = head.size(); i < 14; ++i) os << ' ';
        os << c.summary << "\n";
    }
    os << "\nglobal flags: --config <file>, --quiet, --help, --version\n";
    os << "run 'tep <command> --help' for per-command flags\n";
    return os.str();
}

/// Shared prologue: split args, honor --help, pull --config, and merge.
/// Returns nothing when --help was printed.
inline std::optional<Config> prepare(const std::string& command,
                                     const std::string& summary,
                                     const OptionSchema& schema,
                                     const std::vector<std::string>& rest,
                                     std::vector<std::string>* positional = nullptr) {
    ParsedArgs pa = split_args(rest, &schema);
    for (const auto& [k, v] : pa.flags)
        if (k == "help") {
            std::cout << format_help(command, summary, schema);
            return std::nullopt;
        }
    std::string config_path;
    for (const auto& [k, v] : pa.flags)
        if (k == "config") config_path = v;
    if (positional)
        *positional = pa.positional;
    else if (!pa.positional.empty())
        throw ConfigError("unexpected argument '" + pa.positional.front() + "'");
    return parse_config(command, schema, pa.flags, config_path);
}

inline void report_written(const Config& cfg, const std::string& path) {
    if (!cfg.get_bool("quiet")) std::cout << "tep: wrote " << path << "\n";
}

inline void finish(const std::string& command, const Config& cfg,
                   std::map<std::string, std::string> digests,
                   const std::string& primary_output, const StopWatch& watch) {
    RunManifest m;
    m.command = command;
    m.params = cfg.values();
    m.input_digests = std::move(digests);
    m.duration_ms = watch.elapsed_ms();
    write_manifest(primary_output, m);
}

// ---------------------------------------------------------------- detect --

inline int run_detect(const std::vector<std::string>& rest) {
    const auto cfg = prepare("detect", "compute the consensus edge map of an image",
                             detect_schema(), rest);
    if (!cfg) return 0;
    StopWatch watch;
    const TepConfig tc = detect_config_from(*cfg);
    const std::string input = cfg->get_text("input");
    const std::string output = cfg->get_text("output");

    const ImageGrid img = load_image(input);
    const EdgeFunction ef = detect_edges(img, tc);

    save_map_auto(ef.V, output);
    const std::string dump = cfg->get_text("dump-v-raw");
    if (!dump.empty()) save_scalar_map(ef.V, dump, MapMode::raw_float);

    finish("detect", *cfg, {{"input", file_digest(input)}}, output, watch);
    report_written(*cfg, output);
    return 0;
}

// --------------------------------------------------------------- segment --

inline int run_segment(const std::vector<std::string>& rest) {
    const auto cfg = prepare(
        "segment", "edge-guided piecewise-smooth simplification of a color image",
        segment_schema(), rest);
    if (!cfg) return 0;
    StopWatch watch;
    const std::string input = cfg->get_text("input");
    const std::string output = cfg->get_text("output");
    const std::string edges = cfg->get_text("edges");

    const ColorImage img = load_color(input);
    std::map<std::string, std::string> digests{{"input", file_digest(input)}};

    EdgeFunction ef;
    if (edges == "auto") {
        const TepConfig tc = detect_config_from(*cfg);
        ef = detect_edges(brightness_of(img), tc);
    } else {
        ImageGrid v = load_scalar_map(edges);
        if (v.width() != img.width() || v.height() != img.height())
            throw ConfigError("edge map dimensions disagree with the input image");
        digests["edges"] = file_digest(edges);
        ef = edge_function_from_map(std::move(v));
    }

    const DiffusionConfig dc = diffusion_config_from(*cfg);
    const ColorImage seg = segment_image(img, ef, dc);
    write_png_color8(seg, output);

    const std::string remainder = cfg->get_text("remainder");
    if (!remainder.empty()) {
        ColorImage diff = decompose(img, seg);
        for (std::size_t i = 0; i < diff.r.size(); ++i) {
            diff.r[i] += 128.0;
            diff.g[i] += 128.0;
            diff.b[i] += 128.0;
        }
        write_png_color8(diff, remainder);
    }

    finish("segment", *cfg, std::move(digests), output, watch);
    report_written(*cfg, output);
    return 0;
}

// ------------------------------------------------------------- decompose --

inline int run_decompose(const std::vector<std::string>& rest) {
    const auto cfg = prepare(
        "decompose", "split an image into its smoothed part and texture remainder",
        decompose_schema(), rest);
    if (!cfg) return 0;
    StopWatch watch;
    const std::string input = cfg->get_text("input");
    const std::string segmented = cfg->get_text("segmented");
    const std::string output = cfg->get_text("output");

    const ColorImage img = load_color(input);
    const ColorImage seg = load_color(segmented);
    const ColorImage diff = decompose(img, seg);

    ColorImage display = diff;
    for (std::size_t i = 0; i < display.r.size(); ++i) {
        display.r[i] += 128.0;
        display.g[i] += 128.0;
        display.b[i] += 128.0;
    }
    write_png_color8(display, output);

    const std::string prefix = cfg->get_text("raw-prefix");
    if (!prefix.empty()) {
        save_scalar_map(diff.r, prefix + ".r.tepf", MapMode::raw_float);
        save_scalar_map(diff.g, prefix + ".g.tepf", MapMode::raw_float);
        save_scalar_map(diff.b, prefix + ".b.tepf", MapMode::raw_float);
    }

    finish("decompose", *cfg,
           {{"input", file_digest(input)}, {"segmented", file_digest(segmented)}},
           output, watch);
    report_written(*cfg, output);
    return 0;
}

// ----------------------------------------------------------------- synth --

inline int run_synth(const std::vector<std::string>& rest) {
    const auto cfg = prepare("synth", "sample a stationary Gaussian random field",
                             synth_schema(), rest);
    if (!cfg) return 0;
    StopWatch watch;
    const std::string size = cfg->get_text("size");
    const std::size_t x = size.find('x');
    if (x == std::string::npos)
        throw ConfigError("key 'size': expected WxH, e.g. 64x64");
    const int w = static_cast<int>(parse_integer("size", size.substr(0, x)));
    const int h = static_cast<int>(parse_integer("size", size.substr(x + 1)));
    if (w < 1 || h < 1) throw ConfigError("key 'size': dimensions must be >= 1");

    const std::string method_text = cfg->get_text("method");
    FieldMethod method = FieldMethod::automatic;
    if (method_text == "exact")
        method = FieldMethod::exact;
    else if (method_text == "circulant")
        method = FieldMethod::circulant;
    else if (method_text != "auto")
        throw ConfigError("key 'method': expected auto, exact, or circulant");

    FieldSpec spec;
    spec.mu = cfg->get_real("mu");
    spec.sigma = cfg->get_real("sigma");
    spec.ell = cfg->get_real("ell");
    spec.seed = static_cast<std::uint64_t>(cfg->get_int("seed"));

    const ImageGrid field = synthesize_field(spec, w, h, method);
    const std::string output = cfg->get_text("output");
    if (ends_with(output, ".png"))
        write_png_gray8(field, output);
    else
        save_scalar_map(field, output, MapMode::raw_float);
    const std::string raw = cfg->get_text("raw");
    if (!raw.empty()) save_scalar_map(field, raw, MapMode::raw_float);

    finish("synth", *cfg, {}, output, watch);
    report_written(*cfg, output);
    return 0;
}

// ---------------------------------------------------------------- verify --

inline void emit_report(const Config& cfg, const std::string& text,
                        const StopWatch& watch) {
    const std::string report = cfg.get_text("report");
    if (report == "-") {
        std::cout << text;
        return;
    }
    std::ofstream out(report, std::ios::binary);
    if (!out) throw IoError("cannot write report '" + report + "'");
    out << text;
    out.close();
    finish("verify", cfg, {}, report, watch);
    report_written(cfg, report);
}

inline std::string verify_theorem1(const Config& cfg) {
    FieldSpec spec;
    spec.sigma = cfg.get_real("sigma");
    spec.ell = cfg.get_real("ell");
    const std::uint64_t seed = static_cast<std::uint64_t>(cfg.get_int("seed"));
    int draws = static_cast<int>(cfg.get_int("draws"));
    if (draws == 0) draws = 10000;
    const std::vector<int> rs = cfg.has("r-list")
                                    ? parse_int_list("r-list", cfg.get_text("r-list"))
                                    : std::vector<int>{1, 2, 3};
    const std::vector<double> taus =
        cfg.has("tau-list") ? parse_real_list("tau-list", cfg.get_text("tau-list"))
                            : std::vector<double>{8, 12, 16};

    std::ostringstream os;
    os << "r\ttau\ttheory\tempirical\tstderr\n";
    for (int r : rs)
        for (double tau : taus) {
            const double theory = expected_response_same(spec, tau);
            const std::vector<double> s = mc_response_same(spec, r, tau, draws, seed);
            double sum = 0.0, sum2 = 0.0;
            for (double v : s) {
                sum += v;
                sum2 += v * v;
            }
            const double n = static_cast<double>(s.size());
            const double mean = sum / n;
            const double var = (sum2 - n * mean * mean) / (n - 1.0);
            os << r << "\t" << tau << "\t" << theory << "\t" << mean << "\t"
               << std::sqrt(var / n) << "\n";
        }
    return os.str();
}

inline std::string verify_theorem2(const Config& cfg) {
    FieldSpec spec;
    spec.sigma = cfg.get_real("sigma");
    spec.ell = cfg.get_real("ell");
    const std::uint64_t seed = static_cast<std::uint64_t>(cfg.get_int("seed"));
    int draws = static_cast<int>(cfg.get_int("draws"));
    if (draws == 0) draws = 20000;
    const double tau = cfg.get_real("tau");
    const std::vector<int> rs = cfg.has("r-list")
                                    ? parse_int_list("r-list", cfg.get_text("r-list"))
                                    : std::vector<int>{1, 2, 3, 4};

    std::ostringstream os;
    os << "r\ttau\ttheory\tempirical\tstderr\n";
    for (int r : rs) {
        const Eigen::VectorXd v = draw_patch(spec, r, seed + static_cast<unsigned>(r));
        PatchVector pv;
        pv.center = {0, 0};
        pv.half_width = r;
        pv.values.assign(v.data(), v.data() + v.size());
        const double theory = response_variance_conditional(spec, pv, tau, r);

        const std::vector<double> s =
            mc_response_conditional(spec, v, r, tau, draws, seed + 1000 + r);
        double sum = 0.0;
        for (double x : s) sum += x;
        const double n = static_cast<double>(s.size());
        const double mean = sum / n;
        double m2 = 0.0, m4 = 0.0;
        for (double x : s) {
            const double d = x - mean;
            m2 += d * d;
            m4 += d * d * d * d;
        }
        m2 /= n;
        m4 /= n;
        const double var = m2 * n / (n - 1.0);
        const double se_var = std::sqrt(std::max(0.0, m4 - m2 * m2) / n);
        os << r << "\t" << tau << "\t" << theory << "\t" << var << "\t" << se_var
           << "\n";
    }
    return os.str();
}

inline std::string verify_frobenius(const Config& cfg) {
    FieldSpec spec;
    spec.sigma = cfg.get_real("sigma");
    spec.ell = cfg.get_real("ell");
    const std::vector<int> rs = cfg.has("r-list")
                                    ? parse_int_list("r-list", cfg.get_text("r-list"))
                                    : std::vector<int>{1, 2, 3, 4, 5};
    const std::vector<double> taus =
        cfg.has("tau-list") ? parse_real_list("tau-list", cfg.get_text("tau-list"))
                            : std::vector<double>{16, 20, 24, 28, 32};

    std::ostringstream os;
    os << "r\ttau\texact\tbound\tratio\n";
    for (int r : rs)
        for (double tau : taus) {
            const FrobeniusBound fb = covariance_frobenius_bound(spec, r, tau);
            os << r << "\t" << tau << "\t" << fb.exact << "\t" << fb.bound << "\t"
               << fb.exact / fb.bound << "\n";
        }
    return os.str();
}

inline std::string verify_hellinger(const Config& cfg) {
    FieldSpec p;
    p.sigma = cfg.get_real("sigma");
    p.ell = cfg.get_real("ell");
    FieldSpec q = p;
    q.mu = p.mu + cfg.get_real("mu-diff") * p.sigma;
    const std::uint64_t seed = static_cast<std::uint64_t>(cfg.get_int("seed"));
    int draws = static_cast<int>(cfg.get_int("draws"));
    if (draws == 0) draws = 20000;
    const double tau = cfg.get_real("tau");
    const std::vector<int> rs =
        cfg.has("r-list") ? parse_int_list("r-list", cfg.get_text("r-list"))
                          : std::vector<int>{1, 2, 3, 4, 5, 6, 7, 8};

    std::ostringstream os;
    os << "r\ttau\th2\n";
    for (int r : rs)
        os << r << "\t" << tau << "\t" << hellinger_separation(p, q, r, tau, draws, seed)
           << "\n";
    return os.str();
}

inline std::string verify_periodscan(const Config& cfg) {
    const double tau = cfg.get_real("tau");
    const std::vector<int> rs =
        cfg.has("r-list") ? parse_int_list("r-list", cfg.get_text("r-list"))
                          : std::vector<int>{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
    ImageGrid img;
    if (cfg.has("input")) {
        img = load_image(cfg.get_text("input"));
    } else {
        const int r_max = *std::max_element(rs.begin(), rs.end());
        const int margin = r_max + static_cast<int>(std::ceil(tau + 0.5));
        img = periodic_stripe_pattern(2 * margin + 96, 2 * margin + 16);
    }

    std::ostringstream os;
    os << "r\ttau\tmean\tvariance\n";
    for (const PatchWidthScanRow& row : scan_patch_width(img, rs, tau))
        os << row.r << "\t" << tau << "\t" << row.mean << "\t" << row.variance << "\n";
    return os.str();
}

inline int run_verify(const std::vector<std::string>& rest) {
    std::vector<std::string> positional;
    const auto cfg = prepare("verify", "statistical checks of the patch-response theory",
                             verify_schema(), rest, &positional);
    if (!cfg) return 0;
    StopWatch watch;

    std::string which = cfg->get_text("check");
    if (!positional.empty()) {
        if (positional.size() > 1)
            throw ConfigError("unexpected argument '" + positional[1] + "'");
        if (!which.empty() && which != positional[0])
            throw ConfigError("check name given twice with different values");
        which = positional[0];
    }
    if (which.empty())
        throw ConfigError(
            "verify requires a check name: theorem1 | theorem2 | hellinger | "
            "frobenius | periodscan");

    // the positional is recorded so a manifest replays without it
    Config cfg2 = *cfg;
    {
        auto values = cfg->values();
        values["check"] = which;
        cfg2 = Config(cfg->schema(), std::move(values));
    }

    std::string text;
    if (which == "theorem1")
        text = verify_theorem1(cfg2);
    else if (which == "theorem2")
        text = verify_theorem2(cfg2);
    else if (which == "hellinger")
        text = verify_hellinger(cfg2);
    else if (which == "frobenius")
        text = verify_frobenius(cfg2);
    else if (which == "periodscan")
        text = verify_periodscan(cfg2);
    else
        throw ConfigError("unknown check '" + which +
                          "' (expected theorem1 | theorem2 | hellinger | frobenius | "
                          "periodscan)");

    emit_report(cfg2, text, watch);
    return 0;
}

// ---------------------------------------------------------------- refine --

inline int run_refine(const std::vector<std::string>& rest) {
    const auto cfg = prepare(
        "refine", "bridge junction gaps in a consensus map by oriented closings",
        refine_schema(), rest);
    if (!cfg) return 0;
    StopWatch watch;
    const std::string input = cfg->get_text("input");
    const std::string output = cfg->get_text("output");

    const EdgeFunction ef = edge_function_from_map(load_scalar_map(input));
    const EdgeFunction refined =
        refine_junctions(ef, static_cast<int>(cfg->get_int("line")),
                         static_cast<int>(cfg->get_int("orients")));
    save_map_auto(refined.V, output);

    finish("refine", *cfg, {{"input", file_digest(input)}}, output, watch);
    report_written(*cfg, output);
    return 0;
}

inline void emit_error(const char* kind, std::string msg) {
    for (char& c : msg)
        if (c == '\n' || c == '\r' || c == '\t') c = ' ';
    std::cerr << "tep: error: " << kind << ": " << msg << "\n";
}

} // namespace detail

/// Entry point for the `tep` binary: dispatches subcommands and maps errors
/// to exit codes (1 config, 2 IO, 3 numeric, 4 internal).
inline int run(const std::vector<std::string>& args) {
    try {
        if (args.empty()) {
            detail::emit_error("config",
                               "missing command (run 'tep --help' for usage)");
            return 1;
        }
        const std::string& cmd = args[0];
        if (cmd == "--help" || cmd == "help") {
            std::cout << detail::global_usage();
            return 0;
        }
        if (cmd == "--version" || cmd == "version") {
            std::cout << "tep " << version_string << "\n";
            return 0;
        }
        const std::vector<std::string> rest(args.begin() + 1, args.end());
        if (cmd == "detect") return detail::run_detect(rest);
        if (cmd == "segment") return detail::run_segment(rest);
        if (cmd == "decompose") return detail::run_decompose(rest);
        if (cmd == "synth") return detail::run_synth(rest);
        if (cmd == "verify") return detail::run_verify(rest);
        if (cmd == "refine") return detail::run_refine(rest);
        throw ConfigError("unknown command '" + cmd +
                          "' (expected detect | segment | decompose | synth | verify "
                          "| refine)");
    } catch (const ConfigError& e) {
        detail::emit_error("config", e.what());
        return 1;
    } catch (const IoError& e) {
        detail::emit_error("io", e.what());
        return 2;
    } catch (const NumericError& e) {
        detail::emit_error("numeric", e.what());
        return 3;
    } catch (const InternalError& e) {
        detail::emit_error("internal", e.what());
        return 4;
    } catch (const std::exception& e) {
        detail::emit_error("internal", e.what());
        return 4;
    }
}

} // namespace tep::cli
