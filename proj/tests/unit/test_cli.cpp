#include <cmath>
#include <algorithm>
#include <cstdlib>
#include <cstring>
#include <functional>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include <doctest.h>
#include <json.hpp>

#include "cli/commands.hpp"
#include "cli/config.hpp"
#include "cli/raster_io.hpp"
#include "cloudheight/errors.hpp"

using namespace cloudheight;
using namespace cloudheight::cli;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir()
    {
        std::random_device rd;
        path = fs::temp_directory_path() / ("cloudheight-test-" + std::to_string(rd()) + std::to_string(rd()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
};

void write_bytes(const fs::path& p, const std::string& bytes)
{
    std::ofstream out(p, std::ios::binary);
    out << bytes;
}

std::string read_file(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

std::string be16(unsigned v) { return {static_cast<char>(v >> 8), static_cast<char>(v & 0xff)}; }

std::string error_of(const std::function<void()>& f)
{
    try {
        f();
    } catch (const std::exception& e) {
        return e.what();
    }
    return "";
}

// Small default run on a simulated scene: three cameras, narrow grid around 5000 m.
RunConfig small_run(const fs::path& dir)
{
    RunConfig cfg = default_config();
    cfg.out = dir;
    cfg.simulate.rows = 40;
    cfg.simulate.cols = 8;
    cfg.window = {8, 8};
    cfg.stride = 3;
    cfg.grid = SearchGrid{4500.0, 5500.0, 100.0};
    cfg.seed = 3;
    for (auto& c : cfg.cameras)
        c.path = dir / (c.spec.name + ".csv");
    validate(cfg);
    return cfg;
}

int run_tool(const std::string& args)
{
    const std::string cmd = std::string(CLOUDHEIGHT_TOOL) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("16-bit PGM ingestion")
{
    TempDir t;
    const auto p = t.path / "a.pgm";
    write_bytes(p, "P5\n# two by two\n2 2\n65535\n" + be16(0) + be16(65535) + be16(32768) + be16(16384));
    const Raster r = load_raster(p);
    REQUIRE(r.rows == 2);
    REQUIRE(r.cols == 2);
    CHECK(r.values[0] == std::log(1e-6));
    CHECK(r.values[1] == 0.0);
    CHECK(r.values[2] == doctest::Approx(std::log(32768.0 / 65535.0)).epsilon(1e-15));
    CHECK(r.values[3] == doctest::Approx(std::log(16384.0 / 65535.0)).epsilon(1e-15));
    CHECK(r.pitch == 275.0);

    write_bytes(p, std::string("P5 3 1 255\n") + '\x00' + '\xff' + '\x80');
    const Raster e = load_raster(p);
    CHECK(e.values[2] == doctest::Approx(std::log(128.0 / 255.0)));
}

TEST_CASE("PGM errors carry the byte offset")
{
    TempDir t;
    const auto p = t.path / "bad.pgm";
    write_bytes(p, "P5\n2 2\n65535\n" + be16(1) + be16(2) + be16(3));
    const std::string msg = error_of([&] { load_raster(p); });
    CHECK(msg.find("byte ") != std::string::npos);
    CHECK_THROWS_AS(load_raster(p), IoError);

    write_bytes(p, "P2\n2 2\n255\n");
    CHECK(error_of([&] { load_raster(p); }).find("byte 0") != std::string::npos);
    write_bytes(p, "P5\n2 x\n255\n");
    CHECK(error_of([&] { load_raster(p); }).find("byte ") != std::string::npos);
    CHECK_THROWS_AS(load_raster(t.path / "missing.pgm"), IoError);
    CHECK_THROWS_AS(load_raster(t.path / "raster.tif"), IoError);
}

TEST_CASE("CSV ingestion with a sidecar")
{
    TempDir t;
    const auto p = t.path / "row.csv";
    write_bytes(p, "0.1,0.2,0.3\n");
    write_bytes(sidecar_path(p), R"({"rows": 1, "cols": 3, "pitch_m": 1100})");
    const Raster r = load_raster(p);
    REQUIRE(r.size() == 3);
    CHECK(r.values[0] == std::log(0.1));
    CHECK(r.values[1] == std::log(0.2));
    CHECK(r.values[2] == std::log(0.3));
    CHECK(r.pitch == 1100.0);

    write_bytes(p, "0.1,0,0.3\n");
    CHECK(load_raster(p).values[1] == std::log(1e-6));

    write_bytes(p, "0.1,abc,0.3\n");
    const std::string msg = error_of([&] { load_raster(p); });
    CHECK(msg.find("line 1, column 2") != std::string::npos);
    write_bytes(p, "0.1,0.2\n");
    CHECK(error_of([&] { load_raster(p); }).find("line 1") != std::string::npos);
    write_bytes(p, "0.1,0.2,0.3\n0.4,0.5,0.6\n");
    CHECK(error_of([&] { load_raster(p); }).find("line 2") != std::string::npos);
    write_bytes(p, "0.1,nan,0.3\n");
    CHECK_THROWS_AS(load_raster(p), IoError);
    fs::remove(sidecar_path(p));
    CHECK_THROWS_AS(load_raster(p), IoError);
}

TEST_CASE("raster round trips")
{
    TempDir t;
    std::mt19937_64 rng(4);
    std::normal_distribution<double> n(-1.0, 0.6);
    Raster r(7, 5, 300.0);
    for (auto& v : r.values)
        v = std::min(0.0, n(rng));

    save_raster(r, t.path / "r.csv");
    const Raster c = load_raster(t.path / "r.csv");
    REQUIRE(c.size() == r.size());
    CHECK(c.pitch == 300.0);
    for (std::size_t i = 0; i < r.size(); ++i)
        CHECK(std::abs(c.values[i] - r.values[i]) <= 1e-12);

    save_raster(r, t.path / "r.pgm");
    const Raster g = load_raster(t.path / "r.pgm", 300.0);
    REQUIRE(g.size() == r.size());
    for (std::size_t i = 0; i < r.size(); ++i)
        CHECK(std::abs(std::exp(g.values[i]) - std::exp(r.values[i])) <= 0.5 / 65535.0 + 1e-15);
}

TEST_CASE("heat map levels")
{
    const double nan = std::nan("");
    const auto l = heat_levels({1000.0, nan, 3000.0, 2000.0});
    CHECK(l[0] == 1);
    CHECK(l[1] == 0);
    CHECK(l[2] == 65535);
    CHECK(l[3] == 32768);
    const auto flat = heat_levels({5000.0, 5000.0, nan});
    CHECK(flat[0] == 65535);
    CHECK(flat[1] == 65535);
    CHECK(flat[2] == 0);
    CHECK(heat_levels({nan, nan}) == std::vector<std::uint16_t>{0, 0});
}

TEST_CASE("configuration parsing")
{
    TempDir t;
    using nlohmann::json;
    const json j = {{"cameras", json::array({{{"name", "An"}, {"path", "an.csv"}},
                                            {{"name", "Bf"}, {"path", "/abs/bf.csv"}},
                                            {{"name", "tilted"}, {"theta_deg", 12.5}, {"delay_s", 3.0}, {"path", "t.csv"}}})},
                    {"grid", {{"h_min", 1000.0}, {"h_max", 2000.0}, {"h_step", 50.0}}},
                    {"mode", "high"},
                    {"stabilization", {{"begin", 2}, {"end", 10}, {"reference", "Bf"}}}};
    const RunConfig cfg = config_from_json(j, t.path);
    REQUIRE(cfg.cameras.size() == 3);
    CHECK(cfg.cameras[1].spec.theta_deg == 45.6);
    CHECK(cfg.cameras[2].spec.theta_deg == 12.5);
    CHECK(cfg.cameras[2].spec.delay_s == 3.0);
    CHECK(cfg.cameras[0].path == t.path / "an.csv");
    CHECK(cfg.cameras[1].path == "/abs/bf.csv");
    CHECK(cfg.mode == Mode::high);
    CHECK(cfg.grid.heights().size() == 20);
    CHECK(cfg.stabilization.region->begin == 2);
    CHECK(cfg.params.nu == doctest::Approx(4.0 / 3.0));
    CHECK(cfg.window.rows == 15);
    CHECK(cfg.window.cols == 16);

    const RunConfig again = config_from_json(config_to_json(cfg), "/elsewhere");
    CHECK(config_to_json(again) == config_to_json(cfg));

    CHECK_THROWS_AS(config_from_json(json{{"windw", {{"rows", 3}}}}, t.path), ConfigError);
    CHECK_THROWS_AS(config_from_json(json{{"cameras", json::array({{{"name", "odd"}}})}}, t.path), ConfigError);
    CHECK_THROWS_AS(config_from_json(json{{"matern", {{"nu", -1.0}}}}, t.path), ConfigError);
    CHECK_THROWS_AS(config_from_json(json{{"mode", "sideways"}}, t.path), ConfigError);
    CHECK_THROWS_AS(config_from_json(json{{"stride", "two"}}, t.path), ConfigError);
    CHECK_THROWS_AS(config_from_json(json{{"stabilization", {{"reference", "Zz"}}}}, t.path), ConfigError);

    const auto def = default_config();
    REQUIRE(def.cameras.size() == 3);
    CHECK(def.cameras[0].spec.name == "An");
}

TEST_CASE("scene loading names the failing camera")
{
    TempDir t;
    RunConfig cfg = small_run(t.path);
    const std::string missing = error_of([&] { load_scene(cfg); });
    CHECK(missing.find("'An'") != std::string::npos);

    run_simulate(cfg);
    CHECK_NOTHROW(load_scene(cfg));
    Raster small(3, 3);
    save_raster(small, cfg.cameras[2].path);
    const std::string dims = error_of([&] { load_scene(cfg); });
    CHECK(dims.find("'Aa'") != std::string::npos);
    CHECK_THROWS_AS(load_scene(cfg), IoError);
}

TEST_CASE("simulate then heights recovers the scene height")
{
    TempDir t;
    RunConfig cfg = small_run(t.path);
    run_simulate(cfg);
    const RunConfig sim = load_config(t.path / "config.json");
    CHECK(sim.cameras[1].path == cfg.cameras[1].path);

    for (const Mode mode : {Mode::low, Mode::high}) {
        RunConfig run = sim;
        run.mode = mode;
        run.out = t.path / std::string(to_string(mode));
        const auto s = run_heights(run);
        CHECK(s.cells == 11);
        CHECK(s.valid >= 4);
        const std::string heights = read_file(run.out / "heights.csv");
        std::size_t count = 0;
        for (std::size_t at = heights.find("5000"); at != std::string::npos; at = heights.find("5000", at + 1))
            ++count;
        CHECK(count == s.valid);
        // Uniform heights draw every valid cell at the same level.
        const std::string pgm = read_file(run.out / "heights.pgm");
        const std::string body = pgm.substr(pgm.size() - 2 * s.cells);
        for (std::size_t i = 0; i < s.cells; ++i) {
            const unsigned level = (static_cast<unsigned char>(body[2 * i]) << 8) | static_cast<unsigned char>(body[2 * i + 1]);
            CHECK((level == 65535 || level == 0));
        }
        CHECK(fs::exists(run.out / "flags.csv"));
        CHECK(fs::exists(run.out / "flatness.csv"));
        const auto m = nlohmann::json::parse(read_file(run.out / "manifest.json"));
        CHECK(m["kind"] == kManifestKind);
        CHECK(m["valid_cells"] == s.valid);
        CHECK(m["config"]["mode"] == std::string(to_string(mode)));
    }
}

TEST_CASE("low mode skips stabilization")
{
    TempDir t;
    RunConfig cfg = small_run(t.path);
    run_simulate(cfg);
    auto scene = load_scene(cfg);
    for (auto& v : scene[1].values)
        v = 3.0 * v + 1.0;
    const auto est = estimator_config(cfg);
    const auto raw = sliding_height_map(scene, cfg.window, cfg.stride, cfg.grid, est);
    const auto via = compute_heights(cfg, scene);
    CHECK(std::memcmp(raw.flatness.data(), via.flatness.data(), raw.flatness.size() * sizeof(double)) == 0);

    cfg.mode = Mode::high;
    const auto stab = compute_heights(cfg, scene);
    const auto map = stabilize(scene, {0, 8}, 0);
    const auto direct =
        sliding_height_map(apply_stabilization(map, scene), cfg.window, cfg.stride, cfg.grid, estimator_config(cfg));
    CHECK(std::memcmp(stab.flatness.data(), direct.flatness.data(), direct.flatness.size() * sizeof(double)) == 0);
}

TEST_CASE("a manifest reproduces byte-identical outputs")
{
    TempDir t;
    RunConfig cfg = small_run(t.path);
    run_simulate(cfg);
    RunConfig first = load_config(t.path / "config.json");
    first.out = t.path / "first";
    run_heights(first);

    RunConfig second = load_config(first.out / "manifest.json");
    CHECK(second.out == first.out);
    second.out = t.path / "second";
    run_heights(second);
    for (const char* f : {"heights.csv", "flags.csv", "flatness.csv", "heights.pgm"})
        CHECK(read_file(first.out / f) == read_file(second.out / f));
}

TEST_CASE("stabilize writes gains and stabilized rasters")
{
    TempDir t;
    RunConfig cfg = small_run(t.path);
    run_simulate(cfg);
    cfg.out = t.path / "stab";
    Raster r = load_raster(cfg.cameras[2].path);
    for (auto& v : r.values)
        v = 0.5 * v - 2.0;
    save_raster(r, cfg.cameras[2].path);
    const auto map = run_stabilize(cfg);
    CHECK(map.cameras[0].gain == 1.0);
    const auto j = nlohmann::json::parse(read_file(cfg.out / "stabilization.json"));
    CHECK(j["reference"] == "An");
    CHECK(j["cameras"].size() == 3);
    CHECK(fs::exists(cfg.out / "stabilized" / "Aa.csv"));
}

TEST_CASE("table1 honours the method subset")
{
    TempDir t;
    RunConfig cfg = default_config();
    cfg.out = t.path;
    cfg.table1.reps = 1;
    cfg.table1.methods = {Method::full, Method::baseline};
    const std::string csv = run_table1(cfg);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);
    CHECK(csv.find("\nfull,") != std::string::npos);
    CHECK(csv.find("\nbaseline,") != std::string::npos);
    CHECK(csv.find("pairwise") == std::string::npos);
    CHECK(read_file(t.path / "table1.csv") == csv);
    CHECK(run_table1(cfg) == csv);
}

TEST_CASE("command-line exit codes")
{
    TempDir t;
    const std::string out = " --out " + t.path.string();
    CHECK(run_tool("") == 2);
    CHECK(run_tool("heights --bogus") == 2);
    CHECK(run_tool("heights --mode sideways" + out) == 2);
    CHECK(run_tool("heights" + out + " --config " + (t.path / "nope.json").string()) == 3);

    write_bytes(t.path / "broken.json", "{\"stride\": ");
    CHECK(run_tool("heights --config " + (t.path / "broken.json").string()) == 2);

    // Default cameras resolve against the working directory, where no rasters exist.
    CHECK(run_tool("heights" + out) == 3);

    // Flat rasters cannot be stabilized.
    nlohmann::json cfg = {{"cameras", nlohmann::json::array()}, {"out", (t.path / "o").string()}};
    for (const char* name : {"An", "Af"}) {
        const auto p = t.path / (std::string(name) + ".csv");
        save_raster(Raster(4, 4), p);
        cfg["cameras"].push_back({{"name", name}, {"path", p.string()}});
    }
    write_bytes(t.path / "flat.json", cfg.dump());
    CHECK(run_tool("stabilize --config " + (t.path / "flat.json").string()) == 4);

    nlohmann::json sim = {{"out", (t.path / "sim").string()}, {"simulate", {{"rows", 24}, {"cols", 8}, {"format", "pgm"}}}};
    write_bytes(t.path / "sim.json", sim.dump());
    CHECK(run_tool("simulate --config " + (t.path / "sim.json").string()) == 0);
    CHECK(fs::exists(t.path / "sim" / "An.pgm"));
    CHECK(fs::exists(t.path / "sim" / "config.json"));
}
