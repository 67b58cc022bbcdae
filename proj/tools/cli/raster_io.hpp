#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "cloudheight/raster.hpp"

namespace cloudheight::cli {

inline constexpr double kReflectanceFloor = 1e-6;

// Binary PGM (P5, 8- or 16-bit). Gray levels become log(max(v / maxval, floor)).
Raster load_pgm(const std::filesystem::path& path, double pitch = kMisrPitchMeters);

// Comma-separated reflectances plus a "<path>.json" sidecar holding
// {rows, cols, pitch_m}. Values are stored as log(max(v, floor)).
Raster load_csv(const std::filesystem::path& path);

// Dispatches on the extension: .pgm or .csv.
Raster load_raster(const std::filesystem::path& path, double pitch = kMisrPitchMeters);

// Inverse of load_csv: writes exp(values) with round-trip precision and the sidecar.
void save_csv(const Raster& raster, const std::filesystem::path& path);

// Inverse of load_pgm up to 16-bit quantization.
void save_pgm(const Raster& raster, const std::filesystem::path& path);

void save_raster(const Raster& raster, const std::filesystem::path& path);

// 16-bit gray image of arbitrary levels in [0, 65535]; no log transform.
void write_gray16(const std::filesystem::path& path, long rows, long cols, const std::vector<std::uint16_t>& levels);

// Linear min–max scaling of the finite cells to [1, 65535]; NaN cells are 0.
// A constant map is drawn at full scale.
std::vector<std::uint16_t> heat_levels(const std::vector<double>& values);

std::string sidecar_path(const std::filesystem::path& csv);

}  // namespace cloudheight::cli
