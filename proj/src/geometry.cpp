#include "cloudheight/geometry.hpp"

#include <cmath>
#include <numbers>

#include "cloudheight/errors.hpp"

namespace cloudheight {

namespace {

double tan_deg(double deg) { return std::tan(deg * std::numbers::pi / 180.0); }

}  // namespace

std::vector<CameraSpec> misr_camera_bank()
{
    return {
        {"Df", 70.0, 0.0}, {"Cf", 60.0, 0.0},  {"Bf", 45.6, 0.0},  {"Af", 26.1, 0.0},  {"An", 0.0, 0.0},
        {"Aa", -26.1, 0.0}, {"Ba", -45.6, 0.0}, {"Ca", -60.0, 0.0}, {"Da", -70.0, 0.0},
    };
}

void validate(const CameraSpec& cam)
{
    if (!(std::abs(cam.theta_deg) < 90.0))
        throw ConfigError("camera '" + cam.name + "': view angle must satisfy |theta| < 90");
    if (!std::isfinite(cam.delay_s))
        throw ConfigError("camera '" + cam.name + "': delay must be finite");
}

double along_track_parallax(const HeightWind& hw, const CameraSpec& cam_i, const CameraSpec& cam_j)
{
    return hw.v2 * (cam_i.delay_s - cam_j.delay_s) + hw.h * (tan_deg(cam_i.theta_deg) - tan_deg(cam_j.theta_deg));
}

double across_track_parallax(const HeightWind& hw, const CameraSpec& cam_i, const CameraSpec& cam_j)
{
    return hw.v1 * (cam_i.delay_s - cam_j.delay_s);
}

void split_shift(double x, long& whole, double& residual)
{
    const double n = std::floor(x + 0.5);
    whole = static_cast<long>(n);
    residual = x - n;
    // x + 0.5 can round up across an integer when x is just below a half.
    if (residual < -0.5) {
        whole -= 1;
        residual += 1.0;
    }
}

PixelShift make_shift(double along_px, double across_px)
{
    PixelShift s;
    s.along = along_px;
    s.across = across_px;
    split_shift(along_px, s.int_along, s.frac_along);
    split_shift(across_px, s.int_across, s.frac_across);
    return s;
}

PixelShift shift_for_camera(const HeightWind& hw, const CameraSpec& cam_k, const CameraSpec& ref, double pitch_m)
{
    if (!(pitch_m > 0.0))
        throw DomainError("pixel pitch must be positive");
    return make_shift(along_track_parallax(hw, cam_k, ref) / pitch_m, across_track_parallax(hw, cam_k, ref) / pitch_m);
}

}  // namespace cloudheight
