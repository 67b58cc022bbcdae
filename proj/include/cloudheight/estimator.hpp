#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cloudheight/gauss.hpp"
#include "cloudheight/geometry.hpp"
#include "cloudheight/likelihood.hpp"
#include "cloudheight/raster.hpp"

namespace cloudheight {

enum class Mode { low, high, baseline };

std::string_view to_string(Mode mode);
Mode parse_mode(std::string_view text);

struct SearchGrid {
    double h_min = 0.0;  // exclusive
    double h_max = 3.0e4;
    double h_step = 100.0;
    std::vector<double> v1{0.0};
    std::vector<double> v2{0.0};

    // h_min + k * h_step for k >= 1 while <= h_max.
    [[nodiscard]] std::vector<double> heights() const;
    // Height-major, then v1, then v2.
    [[nodiscard]] std::vector<HeightWind> candidates() const;
};

void validate(const SearchGrid& grid);

struct EstimatorConfig {
    std::vector<CameraSpec> cameras;  // cameras.front() is the reference
    double pitch = kMisrPitchMeters;
    MaternParams params;
    double nugget = kDefaultNugget;
    SigmaDivisor divisor = SigmaDivisor::m;
    Mode mode = Mode::low;
    double tau_flat = 2.0;            // natural-log units
    double min_valid_fraction = 0.5;
    unsigned workers = 1;
};

void validate(const EstimatorConfig& cfg);

struct Window {
    GridIndex origin;
    WindowSize size;
};

// Log-likelihood (or mean correlation in baseline mode) of one candidate, or
// nullopt when the shifted windows leave the rasters or the interlace is degenerate.
std::optional<double> evaluate_candidate(std::span<const Raster> scene, const Window& window, const HeightWind& hw,
                                         const EstimatorConfig& cfg, MaternCache* cache = nullptr);

enum class Rejection : std::uint8_t { none = 0, all_invalid = 1, few_valid = 2, boundary = 3, flat = 4 };

std::string_view to_string(Rejection r);

struct LikelihoodProfile {
    std::vector<HeightWind> candidates;
    std::vector<double> loglik;  // NaN where invalid
    std::vector<bool> candidate_valid;
    std::optional<std::size_t> best;
    std::size_t valid_count = 0;
    double flatness = 0.0;  // max minus median of the valid values
    bool valid = false;
    Rejection rejection = Rejection::all_invalid;

    [[nodiscard]] std::optional<HeightWind> best_candidate() const;
};

LikelihoodProfile search(std::span<const Raster> scene, const Window& window, const SearchGrid& grid,
                         const EstimatorConfig& cfg, MaternCache* cache = nullptr);

struct HeightMap {
    long rows = 0;
    long cols = 0;
    long stride = 1;
    WindowSize window;
    std::vector<double> height;  // meters, NaN where invalid
    std::vector<std::uint8_t> valid;
    std::vector<double> flatness;
    std::vector<Rejection> rejection;

    [[nodiscard]] std::size_t index(long r, long c) const { return static_cast<std::size_t>(r * cols + c); }
    // Reference-raster location of a cell's window midpoint.
    [[nodiscard]] Point2 midpoint(long r, long c) const;
    [[nodiscard]] double coverage() const;
};

HeightMap sliding_height_map(std::span<const Raster> scene, WindowSize window, long stride, const SearchGrid& grid,
                             const EstimatorConfig& cfg);

}  // namespace cloudheight
