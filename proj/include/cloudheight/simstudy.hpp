#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cloudheight/gauss.hpp"
#include "cloudheight/raster.hpp"

namespace cloudheight {

// Strip experiment: a pinned power-law field on [0, width] x [0, length]
// sub-sampled into three interleaved images; a small patch cut from the third
// is searched for in the first two along a one-parameter manifold
//   y1 = d,  y2 = (1 + kappa) * anchor - kappa * d.
struct SimConfig {
    double strip_width = 6.0 / 500.0;  // x extent
    double strip_length = 1.0;         // y extent
    long fine_rows = 501;              // y spacing 1/500
    long cols = 3;                     // x spacing 3/500
    long subsample = 3;                // images interleave every third fine row
    GenCovParams gen;
    double strip2_gain = 10.0;
    double patch_gain = 5.0;
    long patch_rows = 4;  // along y
    long patch_cols = 3;  // along x
    double patch_anchor = 0.5040;
    double kappa = 0.9;
    double d_min = 0.0;
    double d_max = 1.0;
    double d_step = 1.0 / 5000.0;
    MaternParams params;  // likelihood model, pixel units
    double wrong_nu = 2.0 / 3.0;
    double nugget = kDefaultNugget;
};

void validate(const SimConfig& cfg);

[[nodiscard]] double fine_dy(const SimConfig& cfg);
[[nodiscard]] long anchor_fine_row(const SimConfig& cfg);

// Fine-row phase of each image; the third image holds the anchor row.
[[nodiscard]] std::array<long, 3> image_phases(const SimConfig& cfg);

// Factors the strip covariance once; each draw is a matrix-vector product.
// Grid points coinciding with an anchor are exactly zero in every draw.
class StripSimulator {
public:
    explicit StripSimulator(const SimConfig& cfg);

    [[nodiscard]] Raster draw(std::uint64_t seed) const;
    [[nodiscard]] const std::vector<Point2>& fine_coords() const { return coords_; }
    [[nodiscard]] const std::vector<std::size_t>& pinned() const { return pinned_; }

private:
    SimConfig cfg_;
    std::vector<Point2> coords_;      // (y, x) of every fine-grid point, row-major
    std::vector<std::size_t> free_;   // points carried by the sampler
    std::vector<std::size_t> pinned_; // points at anchors
    std::optional<GaussianSampler> sampler_;
};

Raster simulate_strip(const SimConfig& cfg, std::uint64_t seed);

struct SimImages {
    Raster image1;
    Raster image2;        // scaled by strip2_gain
    Raster patch_raster;  // scaled by patch_gain
    Patch patch;          // integer-grid coordinates
    std::array<long, 3> phases{};
};

SimImages extract_three_images(const Raster& field, const SimConfig& cfg);

enum class Method { full, pairwise, no_newton, baseline, wrong_nu };

inline constexpr std::array<Method, 5> kAllMethods{Method::full, Method::pairwise, Method::no_newton, Method::baseline,
                                                   Method::wrong_nu};

std::string_view to_string(Method m);
Method parse_method(std::string_view text);

// Image-pixel row at which the patch sits in image `which` (0 or 1) for latent d.
double patch_position(const SimConfig& cfg, const SimImages& images, int which, double d);

[[nodiscard]] std::vector<double> d_grid(const SimConfig& cfg);

struct DProfile {
    std::vector<double> d;
    std::vector<double> score;  // NaN where the candidate was skipped
};

DProfile d_profile(const SimImages& images, Method method, const SimConfig& cfg);

// Argmax over d_grid; ties resolve to the smallest d.
double estimate_d(const SimImages& images, Method method, const SimConfig& cfg);

// All requested methods on one realization, sharing patch extraction.
std::vector<double> estimate_d(const SimImages& images, std::span<const Method> methods, const SimConfig& cfg);

struct MethodResult {
    Method method = Method::full;
    std::vector<double> estimates;
    double mean = 0.0;
    double rmse = 0.0;
};

// splitmix64 finalizer applied to master + (rep + 1) * 0x9E3779B97F4A7C15.
std::uint64_t rep_seed(std::uint64_t master_seed, std::uint64_t rep);

std::vector<MethodResult> run_table1(const SimConfig& cfg, std::span<const Method> methods, std::size_t reps,
                                     std::uint64_t master_seed, unsigned workers = 1);

// method,mean,rmse,reps,master_seed
std::string table1_csv(std::span<const MethodResult> results, std::size_t reps, std::uint64_t master_seed);

}  // namespace cloudheight
