#include "cloudheight/raster.hpp"

#include <cmath>
#include <string>

#include <Eigen/SVD>

#include "cloudheight/errors.hpp"

namespace cloudheight {

Raster::Raster(long rows_, long cols_, double pitch_)
    : rows(rows_), cols(cols_), values(static_cast<std::size_t>(rows_ * cols_), 0.0), pitch(pitch_)
{
}

Raster::Raster(long rows_, long cols_, std::vector<double> values_, double pitch_)
    : rows(rows_), cols(cols_), values(std::move(values_)), pitch(pitch_)
{
    validate(*this);
}

void validate(const Raster& raster)
{
    if (raster.rows <= 0 || raster.cols <= 0)
        throw DomainError("raster dimensions must be positive");
    if (raster.values.size() != static_cast<std::size_t>(raster.rows * raster.cols))
        throw DomainError("raster holds " + std::to_string(raster.values.size()) + " values, expected " +
                          std::to_string(raster.rows * raster.cols));
    if (!(raster.pitch > 0.0))
        throw DomainError("raster pitch must be positive");
    for (std::size_t i = 0; i < raster.values.size(); ++i) {
        if (!std::isfinite(raster.values[i]))
            throw DomainError("non-finite raster value at index " + std::to_string(i));
    }
}

bool window_fits(const Raster& raster, GridIndex origin, WindowSize size, const PixelShift& shift)
{
    const long r0 = origin.row + shift.int_along;
    const long c0 = origin.col + shift.int_across;
    return r0 >= 0 && c0 >= 0 && r0 + size.rows <= raster.rows && c0 + size.cols <= raster.cols;
}

Patch extract_patch(const Raster& raster, GridIndex origin, WindowSize size, const PixelShift& shift)
{
    if (size.rows <= 0 || size.cols <= 0)
        throw DomainError("window size must be positive");
    if (!window_fits(raster, origin, size, shift))
        throw OutOfRasterError("window outside raster");

    const long r0 = origin.row + shift.int_along;
    const long c0 = origin.col + shift.int_across;
    Patch patch;
    patch.coords.reserve(static_cast<std::size_t>(size.rows * size.cols));
    patch.values.resize(size.rows * size.cols);
    Eigen::Index k = 0;
    for (long i = 0; i < size.rows; ++i) {
        for (long j = 0; j < size.cols; ++j) {
            patch.coords.push_back({static_cast<double>(i) - shift.frac_along, static_cast<double>(j) - shift.frac_across});
            patch.values[k++] = raster(r0 + i, c0 + j);
        }
    }
    return patch;
}

std::size_t SuperImage::block_offset(std::size_t k) const
{
    std::size_t offset = 0;
    for (std::size_t i = 0; i < k; ++i)
        offset += block_sizes[i];
    return offset;
}

Patch SuperImage::block(std::size_t k) const
{
    const std::size_t offset = block_offset(k);
    const std::size_t len = block_sizes.at(k);
    Patch p;
    p.coords.assign(coords.begin() + static_cast<std::ptrdiff_t>(offset),
                    coords.begin() + static_cast<std::ptrdiff_t>(offset + len));
    p.values = values.segment(static_cast<Eigen::Index>(offset), static_cast<Eigen::Index>(len));
    return p;
}

SuperImage interlace(std::span<const Patch> patches)
{
    if (patches.empty())
        throw DomainError("no patches");
    SuperImage si;
    std::size_t total = 0;
    for (const auto& p : patches) {
        if (static_cast<std::size_t>(p.values.size()) != p.coords.size())
            throw DomainError("patch coordinate and value counts differ");
        total += p.size();
    }
    si.coords.reserve(total);
    si.values.resize(static_cast<Eigen::Index>(total));
    Eigen::Index offset = 0;
    for (const auto& p : patches) {
        si.coords.insert(si.coords.end(), p.coords.begin(), p.coords.end());
        si.values.segment(offset, p.values.size()) = p.values;
        offset += p.values.size();
        si.block_sizes.push_back(p.size());
    }
    return si;
}

namespace {

Eigen::MatrixXd centered_design(std::span<const Point2> coords)
{
    const auto p = static_cast<Eigen::Index>(coords.size());
    double mr = 0.0;
    double mc = 0.0;
    for (const auto& x : coords) {
        mr += x.row;
        mc += x.col;
    }
    mr /= static_cast<double>(p);
    mc /= static_cast<double>(p);
    Eigen::MatrixXd design(p, 3);
    for (Eigen::Index i = 0; i < p; ++i) {
        design(i, 0) = 1.0;
        design(i, 1) = coords[static_cast<std::size_t>(i)].row - mr;
        design(i, 2) = coords[static_cast<std::size_t>(i)].col - mc;
    }
    return design;
}

}  // namespace

void check_unisolvent(std::span<const Point2> coords)
{
    if (coords.size() < 4)
        throw DegenerateError("degenerate design: need at least 4 locations, got " + std::to_string(coords.size()));
    const Eigen::JacobiSVD<Eigen::MatrixXd> svd(centered_design(coords));
    const auto& s = svd.singularValues();
    if (!(s(2) > kDesignRankTolerance * s(0)))
        throw DegenerateError("degenerate design: locations are collinear or coincident");
}

AffineFilter::AffineFilter(std::span<const Point2> coords) : size_(static_cast<Eigen::Index>(coords.size()))
{
    check_unisolvent(coords);
    qr_.compute(centered_design(coords));
}

Eigen::VectorXd AffineFilter::apply(const Eigen::Ref<const Eigen::VectorXd>& y) const
{
    if (y.size() != size_)
        throw DomainError("filter size mismatch");
    Eigen::VectorXd rotated = qr_.householderQ().adjoint() * y;
    return rotated.tail(size_ - 3);
}

void AffineFilter::rotate_rows(Eigen::Ref<Eigen::MatrixXd> block) const
{
    Eigen::MatrixXd tmp = qr_.householderQ().adjoint() * block;
    block = tmp;
}

void AffineFilter::rotate_cols(Eigen::Ref<Eigen::MatrixXd> block) const
{
    Eigen::MatrixXd tmp = block * qr_.householderQ();
    block = tmp;
}

Eigen::MatrixXd AffineFilter::matrix() const
{
    Eigen::MatrixXd q = qr_.householderQ();
    return q.rightCols(size_ - 3).transpose();
}

Annihilator poly_annihilator(std::span<const Point2> coords, int degree)
{
    if (degree != 1)
        throw DomainError("only degree-1 annihilators are supported");
    const AffineFilter filter(coords);
    return Annihilator{filter.matrix(), std::vector<Point2>(coords.begin(), coords.end()), degree};
}

}  // namespace cloudheight
