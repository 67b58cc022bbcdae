#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/QR>

#include "cloudheight/geometry.hpp"

namespace cloudheight {

// Image-plane location in pixel units: row runs along-track, col across-track.
struct Point2 {
    double row = 0.0;
    double col = 0.0;
};

inline double distance(const Point2& a, const Point2& b)
{
    const double dr = a.row - b.row;
    const double dc = a.col - b.col;
    return std::sqrt(dr * dr + dc * dc);
}

// Row-major grid of (log-BRF) values.
struct Raster {
    long rows = 0;
    long cols = 0;
    std::vector<double> values;
    double pitch = kMisrPitchMeters;

    Raster() = default;
    Raster(long rows_, long cols_, double pitch_ = kMisrPitchMeters);
    Raster(long rows_, long cols_, std::vector<double> values_, double pitch_ = kMisrPitchMeters);

    double& operator()(long r, long c) { return values[static_cast<std::size_t>(r * cols + c)]; }
    double operator()(long r, long c) const { return values[static_cast<std::size_t>(r * cols + c)]; }
    [[nodiscard]] std::size_t size() const { return values.size(); }
};

void validate(const Raster& raster);

struct Patch {
    std::vector<Point2> coords;
    Eigen::VectorXd values;

    [[nodiscard]] std::size_t size() const { return coords.size(); }
};

struct GridIndex {
    long row = 0;
    long col = 0;
};

struct WindowSize {
    long rows = 15;
    long cols = 16;
};

// Reads the window at origin + integer part of the shift. Each pixel's
// coordinate is its window-local grid position minus the fractional residual,
// which places every camera in the reference camera's window frame.
Patch extract_patch(const Raster& raster, GridIndex origin, WindowSize size, const PixelShift& shift);

// True when extract_patch would succeed.
bool window_fits(const Raster& raster, GridIndex origin, WindowSize size, const PixelShift& shift);

// Concatenation of per-camera patches in camera order.
struct SuperImage {
    std::vector<Point2> coords;
    Eigen::VectorXd values;
    std::vector<std::size_t> block_sizes;

    [[nodiscard]] std::size_t size() const { return coords.size(); }
    [[nodiscard]] std::size_t blocks() const { return block_sizes.size(); }
    [[nodiscard]] std::size_t block_offset(std::size_t k) const;
    [[nodiscard]] Patch block(std::size_t k) const;
};

SuperImage interlace(std::span<const Patch> patches);

// Orthogonal projection onto the complement of span{1, row, col} at a set of
// locations, kept in factored Householder form. The retained basis is the
// trailing p - 3 columns of Q in a QR factorization of the centered design.
class AffineFilter {
public:
    explicit AffineFilter(std::span<const Point2> coords);

    [[nodiscard]] Eigen::Index size() const { return size_; }
    [[nodiscard]] Eigen::Index rank() const { return size_ - 3; }

    // Filtered vector: rows of the annihilator applied to y.
    [[nodiscard]] Eigen::VectorXd apply(const Eigen::Ref<const Eigen::VectorXd>& y) const;

    // Rotates rows (left) or columns (right) of a block in place by Q^T / Q.
    void rotate_rows(Eigen::Ref<Eigen::MatrixXd> block) const;
    void rotate_cols(Eigen::Ref<Eigen::MatrixXd> block) const;

    // Explicit (p - 3) x p annihilator.
    [[nodiscard]] Eigen::MatrixXd matrix() const;

private:
    Eigen::Index size_;
    Eigen::HouseholderQR<Eigen::MatrixXd> qr_;
};

struct Annihilator {
    Eigen::MatrixXd matrix;  // q x p, orthonormal rows
    std::vector<Point2> source_coords;
    int degree = 1;
};

// Throws DegenerateError when the locations cannot separate affine functions.
Annihilator poly_annihilator(std::span<const Point2> coords, int degree = 1);

// Relative singular-value cut used to decide affine unisolvence.
inline constexpr double kDesignRankTolerance = 1e-9;

void check_unisolvent(std::span<const Point2> coords);

}  // namespace cloudheight
