#include <catch2/catch_amalgamated.hpp>

#include "tep/cli.hpp"

#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "testutil.hpp"

using namespace tep;
using namespace teptest;

namespace {

/// Redirects a std stream into a buffer for the lifetime of the capture.
class StreamCapture {
public:
    explicit StreamCapture(std::ostream& stream)
        : stream_(stream), old_(stream.rdbuf(buffer_.rdbuf())) {}
    ~StreamCapture() { stream_.rdbuf(old_); }
    std::string text() const { return buffer_.str(); }

private:
    std::ostream& stream_;
    std::ostringstream buffer_;
    std::streambuf* old_;
};

int run_cli(const std::vector<std::string>& args) { return cli::run(args); }

} // namespace

TEST_CASE("version and help exit cleanly", "[cli]") {
    StreamCapture out(std::cout);
    REQUIRE(run_cli({"--version"}) == 0);
    REQUIRE(run_cli({"--help"}) == 0);
    REQUIRE(run_cli({"detect", "--help"}) == 0);
    REQUIRE(out.text().find("tep ") != std::string::npos);
    REQUIRE(out.text().find("usage:") != std::string::npos);
    REQUIRE(out.text().find("--lambda") != std::string::npos);
}

TEST_CASE("errors map to exit codes and a single stderr line", "[cli]") {
    TempDir dir;
    StreamCapture err(std::cerr);

    SECTION("no command") {
        REQUIRE(run_cli({}) == 1);
        REQUIRE(err.text().rfind("tep: error: config:", 0) == 0);
    }
    SECTION("unknown command") {
        REQUIRE(run_cli({"detect-all"}) == 1);
        REQUIRE(err.text().find("unknown command 'detect-all'") != std::string::npos);
    }
    SECTION("unknown flag") {
        REQUIRE(run_cli({"detect", "--input", "a", "--output", "b", "--bogus", "1"}) == 1);
        REQUIRE(err.text().find("--bogus") != std::string::npos);
    }
    SECTION("missing required flag") {
        REQUIRE(run_cli({"detect", "--input", "a.png"}) == 1);
        REQUIRE(err.text().find("--output") != std::string::npos);
    }
    SECTION("missing input file") {
        REQUIRE(run_cli({"detect", "--input", dir.file("absent.png"), "--output",
                         dir.file("o.png"), "--quiet"}) == 2);
        REQUIRE(err.text().rfind("tep: error: io:", 0) == 0);
    }
    SECTION("bad synth method") {
        REQUIRE(run_cli({"synth", "--method", "turbo", "--output",
                         dir.file("f.png"), "--quiet"}) == 1);
        REQUIRE(err.text().find("key 'method'") != std::string::npos);
    }
    SECTION("the error line never spans multiple lines") {
        REQUIRE(run_cli({"detect-all"}) == 1);
        const std::string line = err.text();
        REQUIRE(std::count(line.begin(), line.end(), '\n') == 1);
        REQUIRE(line.back() == '\n');
    }
}

TEST_CASE("detect writes the edge map and its manifest", "[cli]") {
    TempDir dir;
    const std::string input = dir.file("in.png");
    const std::string output = dir.file("edges.png");
    write_png_gray8(two_field_grid(36, 28, 70.0, 180.0, 6.0, 11), input);

    REQUIRE(run_cli({"detect", "--input", input, "--output", output, "--r", "1",
                     "--R", "5", "--threads", "1", "--quiet"}) == 0);

    const ImageGrid edges = load_image(output);
    REQUIRE(edges.width() == 36);
    REQUIRE(edges.height() == 28);

    const std::string manifest = read_bytes(output + ".manifest.txt");
    REQUIRE(manifest.find("command=detect\n") != std::string::npos);
    REQUIRE(manifest.find("r=1\n") != std::string::npos);
    REQUIRE(manifest.find("R=5\n") != std::string::npos);
    REQUIRE(manifest.find("lambda=0.015\n") != std::string::npos);
    REQUIRE(manifest.find("input_digest.input=" + cli::file_digest(input)) !=
            std::string::npos);
    REQUIRE(manifest.find("version=") != std::string::npos);
    REQUIRE(manifest.find("duration_ms=") != std::string::npos);
}

TEST_CASE("a manifest replays the run bit-exactly", "[cli]") {
    TempDir dir;
    const std::string input = dir.file("in.png");
    write_png_gray8(two_field_grid(32, 26, 60.0, 170.0, 5.0, 17), input);

    REQUIRE(run_cli({"detect", "--input", input, "--output", dir.file("a.png"),
                     "--r", "1", "--R", "5", "--threads", "1", "--quiet",
                     "--dump-v-raw", dir.file("a.tepf")}) == 0);
    REQUIRE(run_cli({"detect", "--config", dir.file("a.png.manifest.txt"),
                     "--output", dir.file("b.png"),
                     "--dump-v-raw", dir.file("b.tepf")}) == 0);

    const std::string a = read_bytes(dir.file("a.tepf"));
    const std::string b = read_bytes(dir.file("b.tepf"));
    REQUIRE_FALSE(a.empty());
    REQUIRE(a == b);

    // replaying under the wrong command is refused
    StreamCapture err(std::cerr);
    REQUIRE(run_cli({"refine", "--config", dir.file("a.png.manifest.txt"),
                     "--output", dir.file("c.png")}) == 1);
    REQUIRE(err.text().find("recorded for command 'detect'") != std::string::npos);
}

TEST_CASE("synth produces a field image plus manifest", "[cli]") {
    TempDir dir;
    const std::string output = dir.file("field.png");
    REQUIRE(run_cli({"synth", "--size", "40x30", "--sigma", "10", "--seed", "4",
                     "--output", output, "--raw", dir.file("field.tepf"),
                     "--quiet"}) == 0);

    const ImageGrid img = load_image(output);
    REQUIRE(img.width() == 40);
    REQUIRE(img.height() == 30);

    const ImageGrid raw = load_scalar_map(dir.file("field.tepf"));
    REQUIRE(raw.width() == 40);
    double spread = 0.0;
    for (std::size_t i = 0; i < raw.size(); ++i)
        spread = std::max(spread, std::abs(raw[i] - 128.0));
    REQUIRE(spread > 1.0); // the field actually varies around mu

    const std::string manifest = read_bytes(output + ".manifest.txt");
    REQUIRE(manifest.find("command=synth\n") != std::string::npos);
    REQUIRE(manifest.find("size=40x30\n") != std::string::npos);

    // identical seeds give identical fields
    REQUIRE(run_cli({"synth", "--size", "40x30", "--sigma", "10", "--seed", "4",
                     "--output", dir.file("again.tepf"), "--quiet"}) == 0);
    const ImageGrid again = load_scalar_map(dir.file("again.tepf"));
    for (std::size_t i = 0; i < raw.size(); ++i) REQUIRE(again[i] == raw[i]);
}

TEST_CASE("verify writes tab-separated reports", "[cli]") {
    TempDir dir;

    SECTION("frobenius ratios stay below one, report to file") {
        const std::string report = dir.file("frob.tsv");
        REQUIRE(run_cli({"verify", "frobenius", "--r-list", "1,2", "--tau-list",
                         "16,20", "--report", report, "--quiet"}) == 0);

        std::istringstream in(read_bytes(report));
        std::string header;
        std::getline(in, header);
        REQUIRE(header == "r\ttau\texact\tbound\tratio");
        int rows = 0;
        int r;
        double tau, exact, bound, ratio;
        while (in >> r >> tau >> exact >> bound >> ratio) {
            ++rows;
            REQUIRE(ratio <= 1.0);
            REQUIRE(exact <= bound);
        }
        REQUIRE(rows == 4);
        REQUIRE(read_bytes(report + ".manifest.txt").find("check=frobenius") !=
                std::string::npos);
    }

    SECTION("stdout report") {
        StreamCapture out(std::cout);
        REQUIRE(run_cli({"verify", "--check", "frobenius", "--r-list", "1",
                         "--tau-list", "16", "--report", "-", "--quiet"}) == 0);
        REQUIRE(out.text().rfind("r\ttau\texact\tbound\tratio\n", 0) == 0);
    }

    SECTION("check must be named once") {
        REQUIRE(run_cli({"verify", "--report", "-"}) == 1);
        REQUIRE(run_cli({"verify", "frobenius", "--check", "hellinger",
                         "--report", "-"}) == 1);
        REQUIRE(run_cli({"verify", "nonsense", "--report", "-"}) == 1);
    }
}

TEST_CASE("refine heals a gap through the file interface", "[cli]") {
    TempDir dir;
    ImageGrid v(21, 15, 0.0);
    for (int x = 3; x <= 17; ++x) v.at(x, 7) = 1.0;
    v.at(10, 7) = 0.0;
    const std::string input = dir.file("v.tepf");
    REQUIRE(save_scalar_map(v, input, MapMode::raw_float));

    const std::string output = dir.file("refined.tepf");
    REQUIRE(run_cli({"refine", "--input", input, "--output", output, "--line", "5",
                     "--orients", "4", "--quiet"}) == 0);

    const ImageGrid healed = load_scalar_map(output);
    REQUIRE(healed.at(10, 7) == 1.0);
    REQUIRE(healed.at(10, 3) == 0.0);
    REQUIRE(read_bytes(output + ".manifest.txt").find("command=refine") !=
            std::string::npos);
}

TEST_CASE("positional arguments are rejected where none are accepted", "[cli]") {
    StreamCapture err(std::cerr);
    REQUIRE(run_cli({"detect", "stray", "--input", "a", "--output", "b"}) == 1);
    REQUIRE(err.text().find("unexpected argument 'stray'") != std::string::npos);
}
