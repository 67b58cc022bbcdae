#include "cli/commands.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>

#include "cli/raster_io.hpp"
#include "cloudheight/errors.hpp"
#include "cloudheight/scene.hpp"
#include "cloudheight/simstudy.hpp"

namespace cloudheight::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void write_text(const fs::path& path, const std::string& text)
{
    if (path.has_parent_path())
        fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw IoError("cannot write " + path.string());
    out << text;
    if (!out)
        throw IoError("failed writing " + path.string());
}

void append_number(std::string& out, double v)
{
    char buf[32];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    out.append(buf, ptr);
}

template <class Cell>
std::string grid_csv(const HeightMap& map, Cell cell)
{
    std::string out;
    for (long r = 0; r < map.rows; ++r) {
        for (long c = 0; c < map.cols; ++c) {
            if (c > 0)
                out += ',';
            cell(out, map.index(r, c));
        }
        out += '\n';
    }
    return out;
}

json manifest(const RunConfig& cfg, const char* command)
{
    return {{"kind", kManifestKind}, {"command", command}, {"config", config_to_json(cfg)}};
}

std::size_t camera_index(const RunConfig& cfg, const std::string& name)
{
    if (name.empty())
        return 0;
    for (std::size_t k = 0; k < cfg.cameras.size(); ++k) {
        if (cfg.cameras[k].spec.name == name)
            return k;
    }
    throw ConfigError("unknown camera '" + name + "'");
}

StabilizationMap stabilization_for(const RunConfig& cfg, std::span<const Raster> scene)
{
    const ColumnRange region = cfg.stabilization.region.value_or(ColumnRange{0, scene.front().cols});
    return stabilize(scene, region, camera_index(cfg, cfg.stabilization.reference));
}

}  // namespace

std::vector<Raster> load_scene(const RunConfig& cfg)
{
    std::vector<Raster> scene;
    for (const auto& cam : cfg.cameras) {
        if (!fs::exists(cam.path))
            throw IoError("camera '" + cam.spec.name + "': raster file not found: " + cam.path.string());
        try {
            scene.push_back(load_raster(cam.path, cfg.pitch));
        } catch (const IoError& e) {
            throw IoError("camera '" + cam.spec.name + "': " + e.what());
        }
        const Raster& r = scene.back();
        if (r.rows != scene.front().rows || r.cols != scene.front().cols)
            throw IoError("camera '" + cam.spec.name + "' is " + std::to_string(r.rows) + "x" + std::to_string(r.cols) +
                          " but reference camera '" + cfg.cameras.front().spec.name + "' is " +
                          std::to_string(scene.front().rows) + "x" + std::to_string(scene.front().cols));
    }
    return scene;
}

std::string heights_csv(const HeightMap& map)
{
    return grid_csv(map, [&](std::string& out, std::size_t i) {
        if (map.valid[i])
            append_number(out, map.height[i]);
    });
}

std::string flags_csv(const HeightMap& map)
{
    return grid_csv(map, [&](std::string& out, std::size_t i) {
        out += std::to_string(static_cast<int>(map.rejection[i]));
    });
}

std::string flatness_csv(const HeightMap& map)
{
    return grid_csv(map, [&](std::string& out, std::size_t i) {
        if (std::isfinite(map.flatness[i]))
            append_number(out, map.flatness[i]);
    });
}

HeightMap compute_heights(const RunConfig& cfg, std::span<const Raster> scene)
{
    const EstimatorConfig est = estimator_config(cfg);
    if (cfg.mode != Mode::high)
        return sliding_height_map(scene, cfg.window, cfg.stride, cfg.grid, est);
    const auto stabilized = apply_stabilization(stabilization_for(cfg, scene), scene);
    return sliding_height_map(stabilized, cfg.window, cfg.stride, cfg.grid, est);
}

HeightsSummary run_heights(const RunConfig& cfg)
{
    const auto scene = load_scene(cfg);
    const HeightMap map = compute_heights(cfg, scene);

    HeightsSummary s;
    s.cells = map.height.size();
    s.valid = static_cast<std::size_t>(std::count(map.valid.begin(), map.valid.end(), std::uint8_t{1}));
    s.coverage = map.coverage();

    write_text(cfg.out / "heights.csv", heights_csv(map));
    write_text(cfg.out / "flags.csv", flags_csv(map));
    write_text(cfg.out / "flatness.csv", flatness_csv(map));
    std::vector<double> shown(map.height.size(), std::nan(""));
    for (std::size_t i = 0; i < shown.size(); ++i) {
        if (map.valid[i])
            shown[i] = map.height[i];
    }
    write_gray16(cfg.out / "heights.pgm", map.rows, map.cols, heat_levels(shown));

    json m = manifest(cfg, "heights");
    m["map"] = {{"rows", map.rows}, {"cols", map.cols}, {"stride", map.stride}};
    m["cells"] = s.cells;
    m["valid_cells"] = s.valid;
    m["coverage"] = s.coverage;
    write_text(cfg.out / "manifest.json", m.dump(2) + "\n");
    return s;
}

StabilizationMap run_stabilize(const RunConfig& cfg)
{
    const auto scene = load_scene(cfg);
    const StabilizationMap map = stabilization_for(cfg, scene);
    const auto stabilized = apply_stabilization(map, scene);

    json cams = json::array();
    for (std::size_t k = 0; k < cfg.cameras.size(); ++k) {
        const auto file = cfg.out / "stabilized" / (cfg.cameras[k].spec.name + ".csv");
        save_csv(stabilized[k], file);
        cams.push_back({{"name", cfg.cameras[k].spec.name},
                        {"gain", map.cameras[k].gain},
                        {"offset", map.cameras[k].offset},
                        {"path", file.string()}});
    }
    const ColumnRange region = cfg.stabilization.region.value_or(ColumnRange{0, scene.front().cols});
    json out = {{"reference", cfg.cameras[map.reference].spec.name},
                {"region", {{"begin", region.begin}, {"end", region.end}}},
                {"cameras", cams}};
    write_text(cfg.out / "stabilization.json", out.dump(2) + "\n");
    write_text(cfg.out / "manifest.json", manifest(cfg, "stabilize").dump(2) + "\n");
    return map;
}

void run_simulate(const RunConfig& cfg)
{
    auto scene = SceneSimulator(scene_config(cfg)).draw(cfg.seed);
    RunConfig next = cfg;
    if (cfg.simulate.format == "pgm") {
        double top = -std::numeric_limits<double>::infinity();
        for (const auto& r : scene)
            top = std::max(top, *std::max_element(r.values.begin(), r.values.end()));
        for (auto& r : scene)
            for (auto& v : r.values)
                v -= top;
    }
    for (std::size_t k = 0; k < scene.size(); ++k) {
        const auto file = cfg.out / (cfg.cameras[k].spec.name + "." + cfg.simulate.format);
        save_raster(scene[k], file);
        next.cameras[k].path = fs::absolute(file);
    }
    write_text(cfg.out / "config.json", config_to_json(next).dump(2) + "\n");
}

std::string run_table1(const RunConfig& cfg)
{
    const SimConfig sim;
    const auto results = cloudheight::run_table1(sim, cfg.table1.methods, cfg.table1.reps, cfg.seed, cfg.workers);
    const std::string csv = table1_csv(results, cfg.table1.reps, cfg.seed);
    write_text(cfg.out / "table1.csv", csv);
    write_text(cfg.out / "manifest.json", manifest(cfg, "table1").dump(2) + "\n");
    return csv;
}

}  // namespace cloudheight::cli
