#pragma once

#include <string>
#include <vector>

#include "cli/config.hpp"
#include "cloudheight/estimator.hpp"

namespace cloudheight::cli {

// One raster per configured camera, in camera order. Fails naming the camera
// whose file is missing or whose dimensions differ from the reference.
std::vector<Raster> load_scene(const RunConfig& cfg);

struct HeightsSummary {
    std::size_t cells = 0;
    std::size_t valid = 0;
    double coverage = 0.0;
};

// heights.csv, flags.csv, flatness.csv, heights.pgm and manifest.json under cfg.out.
HeightsSummary run_heights(const RunConfig& cfg);
HeightMap compute_heights(const RunConfig& cfg, std::span<const Raster> scene);

// stabilization.json and stabilized/<camera>.csv under cfg.out.
StabilizationMap run_stabilize(const RunConfig& cfg);

// One synthetic raster per camera plus config.json pointing at them.
void run_simulate(const RunConfig& cfg);

// table1.csv under cfg.out; returns the CSV text.
std::string run_table1(const RunConfig& cfg);

std::string heights_csv(const HeightMap& map);
std::string flags_csv(const HeightMap& map);
std::string flatness_csv(const HeightMap& map);

}  // namespace cloudheight::cli
