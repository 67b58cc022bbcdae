#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "cloudheight/estimator.hpp"
#include "cloudheight/scene.hpp"
#include "cloudheight/simstudy.hpp"

namespace cloudheight::cli {

struct CameraInput {
    CameraSpec spec;
    std::filesystem::path path;  // absolute after loading
};

struct StabilizationConfig {
    std::optional<ColumnRange> region;  // whole width when unset
    std::string reference;              // camera name; the first camera when empty
};

struct SimulateConfig {
    long rows = 48;
    long cols = 16;
    HeightWind truth{5000.0, 0.0, 0.0};
    std::string format = "csv";
};

struct Table1Config {
    std::size_t reps = 100;
    std::vector<Method> methods{kAllMethods.begin(), kAllMethods.end()};
};

// Every field has a default; a config file only overrides what it names.
struct RunConfig {
    std::vector<CameraInput> cameras;  // the first camera is the reference
    double pitch = kMisrPitchMeters;
    MaternParams params;
    double nugget = kDefaultNugget;
    SigmaDivisor divisor = SigmaDivisor::m;
    WindowSize window;
    long stride = 1;
    SearchGrid grid;
    Mode mode = Mode::low;
    double tau_flat = 2.0;
    double min_valid_fraction = 0.5;
    StabilizationConfig stabilization;
    std::filesystem::path out = "out";
    std::uint64_t seed = 1;
    unsigned workers = 1;
    SimulateConfig simulate;
    Table1Config table1;
};

// Nadir reference with the two 26.1-degree cameras, rasters named <camera>.csv.
RunConfig default_config();

inline constexpr const char* kManifestKind = "cloudheight-manifest";

// Relative paths resolve against base_dir. Unknown keys are rejected.
RunConfig config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);
// Accepts a plain config or a run manifest, whose config section is used.
RunConfig load_config(const std::filesystem::path& path);

nlohmann::json config_to_json(const RunConfig& cfg);

void validate(const RunConfig& cfg);

EstimatorConfig estimator_config(const RunConfig& cfg);
SceneConfig scene_config(const RunConfig& cfg);

}  // namespace cloudheight::cli
