#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "cloudheight/gauss.hpp"
#include "cloudheight/geometry.hpp"
#include "cloudheight/likelihood.hpp"
#include "cloudheight/raster.hpp"

namespace cloudheight {

// Multi-camera view of one Matérn cloud-top field displaced by the parallax
// of a fixed height and wind. cameras.front() is the reference.
struct SceneConfig {
    std::vector<CameraSpec> cameras;
    long rows = 48;
    long cols = 16;
    double pitch = kMisrPitchMeters;
    HeightWind truth{5000.0, 0.0, 0.0};
    MaternParams params;
    double nugget = kDefaultNugget;
    std::vector<Gain> gains;  // empty means identity for every camera
};

void validate(const SceneConfig& cfg);

// Camera k's pixel (r, c) observes the reference-frame field at
// (r - along_k, c - across_k). Coincident sample sites share one value.
class SceneSimulator {
public:
    explicit SceneSimulator(SceneConfig cfg);

    [[nodiscard]] std::vector<Raster> draw(std::uint64_t seed) const;
    [[nodiscard]] const SceneConfig& config() const { return cfg_; }
    [[nodiscard]] std::size_t sites() const { return static_cast<std::size_t>(factor_.rows()); }

private:
    SceneConfig cfg_;
    std::vector<std::size_t> site_of_pixel_;  // camera-major, then row-major
    Eigen::MatrixXd factor_;                  // lower Cholesky factor
};

std::vector<Raster> simulate_scene(const SceneConfig& cfg, std::uint64_t seed);

}  // namespace cloudheight
