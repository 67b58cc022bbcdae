#pragma once

#include <string>
#include <vector>

namespace cloudheight {

struct CameraSpec {
    std::string name;
    double theta_deg = 0.0;  // forward positive, aft negative
    double delay_s = 0.0;    // fly-over offset relative to the reference camera
};

struct HeightWind {
    double h = 0.0;   // meters
    double v1 = 0.0;  // across-track, m/s
    double v2 = 0.0;  // along-track, m/s
};

// Real-valued image displacement split into a nearest-integer relocation and
// a residual in [-0.5, 0.5).
struct PixelShift {
    double along = 0.0;
    double across = 0.0;
    long int_along = 0;
    long int_across = 0;
    double frac_along = 0.0;
    double frac_across = 0.0;
};

inline constexpr double kMisrPitchMeters = 275.0;

// The nine MISR cameras Df..Da. Delays are left at zero: they are not
// published per camera and must be configured whenever wind is nonzero.
std::vector<CameraSpec> misr_camera_bank();

void validate(const CameraSpec& cam);

// v2 (t_i - t_j) + h (tan theta_i - tan theta_j), meters.
double along_track_parallax(const HeightWind& hw, const CameraSpec& cam_i, const CameraSpec& cam_j);

// v1 (t_i - t_j), meters.
double across_track_parallax(const HeightWind& hw, const CameraSpec& cam_i, const CameraSpec& cam_j);

// Splits x into n + r with n = floor(x + 1/2), so r lies in [-0.5, 0.5).
void split_shift(double x, long& whole, double& residual);

PixelShift make_shift(double along_px, double across_px);

// Displacement of camera k's image relative to the reference camera, in pixels.
PixelShift shift_for_camera(const HeightWind& hw, const CameraSpec& cam_k, const CameraSpec& ref,
                            double pitch_m = kMisrPitchMeters);

}  // namespace cloudheight
