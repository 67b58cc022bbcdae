#include "cloudheight/likelihood.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "cloudheight/errors.hpp"

namespace cloudheight {

namespace {

// Annihilated signal counts as zero below this fraction of the raw signal norm.
constexpr double kFlatTolerance = 1e-10;

bool is_flat(const Eigen::VectorXd& filtered, const Eigen::VectorXd& raw)
{
    return !(filtered.norm() > kFlatTolerance * raw.norm());
}

double divisor_for(std::size_t m, SigmaDivisor d)
{
    return d == SigmaDivisor::m ? static_cast<double>(m) : static_cast<double>(m) - 3.0;
}

double log_det(const Eigen::LLT<Eigen::MatrixXd>& llt)
{
    return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

Eigen::LLT<Eigen::MatrixXd> factor_or_throw(const Eigen::MatrixXd& m, const char* what)
{
    Eigen::LLT<Eigen::MatrixXd> llt(m);
    if (llt.info() != Eigen::Success)
        throw DegenerateError(what);
    const auto d = llt.matrixLLT().diagonal();
    if (!(d.minCoeff() > 0.0) || !std::isfinite(d.maxCoeff()))
        throw DegenerateError(what);
    return llt;
}

double sigma_from_block(const Eigen::MatrixXd& block_cov, const Eigen::VectorXd& filtered, std::size_t m,
                        SigmaDivisor divisor)
{
    const auto llt = factor_or_throw(block_cov, "degenerate patch covariance");
    const Eigen::VectorXd w = llt.matrixL().solve(filtered);
    return std::sqrt(w.squaredNorm() / divisor_for(m, divisor));
}

}  // namespace

SigmaEstimate sigma_hat(const Patch& patch, const MaternParams& p, const LowCloudOptions& opts)
{
    validate(p);
    const std::size_t m = patch.size();
    if (m <= 3)
        throw DegenerateError("sigma_hat: patch needs more than 3 pixels");
    const AffineFilter filter(patch.coords);
    const Eigen::VectorXd z = filter.apply(patch.values);
    if (is_flat(z, patch.values))
        return {0.0, true};
    Eigen::MatrixXd cov = cov_matrix(patch.coords, p, opts.nugget);
    filter.rotate_rows(cov);
    filter.rotate_cols(cov);
    const Eigen::MatrixXd filtered_cov = cov.bottomRightCorner(filter.rank(), filter.rank());
    return {sigma_from_block(filtered_cov, z, m, opts.divisor), false};
}

NewtonStep newton_sigma(const Eigen::MatrixXd& inner, const Eigen::VectorXd& sigma_hat, std::size_t m)
{
    const Eigen::Index n = sigma_hat.size();
    if (inner.rows() != n || inner.cols() != n)
        throw DomainError("newton_sigma: inner-product matrix must be n x n");
    if (!(sigma_hat.minCoeff() > 0.0))
        throw DomainError("newton_sigma: starting scales must be positive");

    const double dof = static_cast<double>(m) - 3.0;
    const Eigen::VectorXd inv = sigma_hat.cwiseInverse();
    const Eigen::VectorXd weights = dof * sigma_hat.cwiseAbs2();  // (m-3) diag(sigma)^2
    Eigen::MatrixXd jac = inner;
    jac.diagonal() += weights;
    const Eigen::VectorXd rhs = weights.cwiseProduct(inv) - inner * inv;
    const Eigen::VectorXd step = jac.partialPivLu().solve(rhs);
    const Eigen::VectorXd updated = inv + step;

    NewtonStep out;
    if (updated.allFinite() && updated.minCoeff() > 0.0) {
        out.sigma = (step.array() == 0.0).all() ? sigma_hat : Eigen::VectorXd(updated.cwiseInverse());
        out.accepted = true;
    } else {
        out.sigma = sigma_hat;
        out.accepted = false;
    }
    return out;
}

LowCloudWorkspace build_low_workspace(const SuperImage& si, MaternCache& cache, const LowCloudOptions& opts)
{
    const std::size_t n = si.blocks();
    if (n == 0)
        throw DegenerateError("empty super-image");
    const std::size_t m = si.block_sizes.front();
    for (const auto b : si.block_sizes) {
        if (b != m)
            throw DegenerateError("low-cloud likelihood needs equal block sizes");
    }
    if (m <= 3)
        throw DegenerateError("low-cloud likelihood needs more than 3 pixels per block");

    const auto mi = static_cast<Eigen::Index>(m);
    const Eigen::Index q = mi - 3;
    std::vector<AffineFilter> filters;
    filters.reserve(n);
    for (std::size_t k = 0; k < n; ++k) {
        const std::span<const Point2> c(si.coords.data() + k * m, m);
        filters.emplace_back(c);
    }

    Eigen::MatrixXd cov = cov_matrix(si.coords, cache, opts.nugget);
    for (std::size_t k = 0; k < n; ++k)
        filters[k].rotate_rows(cov.middleRows(static_cast<Eigen::Index>(k) * mi, mi));
    for (std::size_t k = 0; k < n; ++k)
        filters[k].rotate_cols(cov.middleCols(static_cast<Eigen::Index>(k) * mi, mi));

    LowCloudWorkspace ws;
    ws.cameras = n;
    ws.block_size = m;
    const Eigen::Index total = static_cast<Eigen::Index>(n) * q;
    ws.filtered_cov.resize(total, total);
    for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = 0; b < n; ++b)
            ws.filtered_cov.block(static_cast<Eigen::Index>(a) * q, static_cast<Eigen::Index>(b) * q, q, q) =
                cov.block(static_cast<Eigen::Index>(a) * mi + 3, static_cast<Eigen::Index>(b) * mi + 3, q, q);

    ws.sigma_hat.resize(static_cast<Eigen::Index>(n));
    for (std::size_t k = 0; k < n; ++k) {
        const Eigen::VectorXd yk = si.values.segment(static_cast<Eigen::Index>(k) * mi, mi);
        ws.filtered.push_back(filters[k].apply(yk));
        if (is_flat(ws.filtered.back(), yk)) {
            ws.flat = true;
            ws.sigma_hat(static_cast<Eigen::Index>(k)) = 0.0;
            continue;
        }
        const Eigen::MatrixXd block =
            ws.filtered_cov.block(static_cast<Eigen::Index>(k) * q, static_cast<Eigen::Index>(k) * q, q, q);
        ws.sigma_hat(static_cast<Eigen::Index>(k)) = sigma_from_block(block, ws.filtered.back(), m, opts.divisor);
    }

    const auto llt = factor_or_throw(ws.filtered_cov, "degenerate interlace");
    ws.log_det = log_det(llt);

    std::optional<Eigen::MatrixXd> sym_root;
    if (opts.root == RootChoice::symmetric) {
        const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(ws.filtered_cov);
        if (eig.info() != Eigen::Success || !(eig.eigenvalues().minCoeff() > 0.0))
            throw DegenerateError("degenerate interlace");
        sym_root = eig.eigenvectors() * eig.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal() *
                   eig.eigenvectors().transpose();
    }

    for (std::size_t k = 0; k < n; ++k) {
        Eigen::VectorXd padded = Eigen::VectorXd::Zero(total);
        padded.segment(static_cast<Eigen::Index>(k) * q, q) = ws.filtered[k];
        if (sym_root)
            ws.whitened.push_back(*sym_root * padded);
        else
            ws.whitened.push_back(llt.matrixL().solve(padded));
    }
    ws.inner.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j <= i; ++j)
            ws.inner(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                ws.inner(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = ws.whitened[i].dot(ws.whitened[j]);

    if (!ws.flat)
        ws.newton = newton_sigma(ws.inner, ws.sigma_hat, m);
    else
        ws.newton = NewtonStep{ws.sigma_hat, false};
    return ws;
}

LowCloudWorkspace build_low_workspace(const SuperImage& si, const MaternParams& p, const LowCloudOptions& opts)
{
    MaternCache cache(p);
    return build_low_workspace(si, cache, opts);
}

double low_cloud_loglik(const LowCloudWorkspace& ws, const Eigen::VectorXd& sigma)
{
    if (sigma.size() != static_cast<Eigen::Index>(ws.cameras))
        throw DomainError("low_cloud_loglik: one scale per camera expected");
    if (!(sigma.minCoeff() > 0.0))
        throw DegenerateError("flat patch");
    const double dof = static_cast<double>(ws.block_size) - 3.0;
    const Eigen::VectorXd inv = sigma.cwiseInverse();
    return -0.5 * ws.log_det - dof * sigma.array().log().sum() - 0.5 * inv.dot(ws.inner * inv);
}

double low_cloud_loglik(const LowCloudWorkspace& ws, bool newton)
{
    if (ws.flat)
        throw DegenerateError("flat patch");
    return low_cloud_loglik(ws, newton ? ws.newton.sigma : ws.sigma_hat);
}

double low_cloud_loglik(const SuperImage& si, const MaternParams& p, const LowCloudOptions& opts)
{
    return low_cloud_loglik(build_low_workspace(si, p, opts), opts.newton);
}

HighCloudWorkspace build_high_workspace(const SuperImage& si, MaternCache& cache, double nugget)
{
    const AffineFilter filter(si.coords);
    const Eigen::VectorXd z = filter.apply(si.values);
    if (is_flat(z, si.values))
        throw DegenerateError("flat patch");

    Eigen::MatrixXd cov = cov_matrix(si.coords, cache, nugget);
    filter.rotate_rows(cov);
    filter.rotate_cols(cov);

    HighCloudWorkspace ws;
    ws.size = si.size();
    ws.filtered_cov = cov.bottomRightCorner(filter.rank(), filter.rank());
    const auto llt = factor_or_throw(ws.filtered_cov, "degenerate interlace");
    ws.log_det = log_det(llt);
    ws.quad_form = llt.matrixL().solve(z).squaredNorm();
    if (!(ws.quad_form > 0.0) || !std::isfinite(ws.quad_form))
        throw DegenerateError("flat patch");
    return ws;
}

HighCloudWorkspace build_high_workspace(const SuperImage& si, const MaternParams& p, double nugget)
{
    MaternCache cache(p);
    return build_high_workspace(si, cache, nugget);
}

double high_cloud_loglik(const HighCloudWorkspace& ws)
{
    const double nm = static_cast<double>(ws.size);
    return -0.5 * ws.log_det - 0.5 * (nm - 4.0) * std::log(ws.quad_form);
}

double high_cloud_loglik(const SuperImage& si, const MaternParams& p, double nugget)
{
    return high_cloud_loglik(build_high_workspace(si, p, nugget));
}

double high_cloud_profile_loglik(const HighCloudWorkspace& ws)
{
    const double nm = static_cast<double>(ws.size);
    return -0.5 * ws.log_det - 0.5 * (nm - 3.0) * std::log(ws.quad_form);
}

double high_cloud_profile_loglik(const SuperImage& si, const MaternParams& p, double nugget)
{
    return high_cloud_profile_loglik(build_high_workspace(si, p, nugget));
}

namespace {

struct Moments {
    double mean = 0.0;
    double sd = 0.0;
};

Moments region_moments(const Raster& img, ColumnRange region)
{
    double sum = 0.0;
    double count = 0.0;
    for (long r = 0; r < img.rows; ++r)
        for (long c = region.begin; c < region.end; ++c) {
            sum += img(r, c);
            count += 1.0;
        }
    const double mean = sum / count;
    double ss = 0.0;
    for (long r = 0; r < img.rows; ++r)
        for (long c = region.begin; c < region.end; ++c) {
            const double d = img(r, c) - mean;
            ss += d * d;
        }
    return {mean, std::sqrt(ss / count)};
}

}  // namespace

StabilizationMap stabilize(std::span<const Raster> images, ColumnRange region, std::size_t reference)
{
    if (images.empty())
        throw DomainError("stabilize: no images");
    if (reference >= images.size())
        throw DomainError("stabilize: reference camera index out of range");
    if (region.begin < 0 || region.end <= region.begin)
        throw DomainError("stabilize: empty column range");
    for (const auto& img : images) {
        if (region.end > img.cols)
            throw DomainError("stabilize: column range exceeds image width");
    }

    std::vector<Moments> moments;
    moments.reserve(images.size());
    for (std::size_t k = 0; k < images.size(); ++k) {
        moments.push_back(region_moments(images[k], region));
        if (!(moments.back().sd > 0.0))
            throw DegenerateError("untextured stabilization region in camera " + std::to_string(k));
    }

    StabilizationMap map;
    map.reference = reference;
    const Moments& ref = moments[reference];
    for (std::size_t k = 0; k < images.size(); ++k) {
        if (k == reference) {
            map.cameras.push_back({1.0, 0.0});
            continue;
        }
        const double gain = ref.sd / moments[k].sd;
        map.cameras.push_back({gain, ref.mean - gain * moments[k].mean});
    }
    return map;
}

Raster apply_gain(const Gain& g, const Raster& image)
{
    Raster out = image;
    for (auto& v : out.values)
        v = g.gain * v + g.offset;
    return out;
}

std::vector<Raster> apply_stabilization(const StabilizationMap& map, std::span<const Raster> images)
{
    if (map.cameras.size() != images.size())
        throw DomainError("stabilization map and image list differ in length");
    std::vector<Raster> out;
    out.reserve(images.size());
    for (std::size_t k = 0; k < images.size(); ++k)
        out.push_back(apply_gain(map.cameras[k], images[k]));
    return out;
}

ColumnProfile column_profile(const Raster& image)
{
    ColumnProfile prof;
    prof.mean.assign(static_cast<std::size_t>(image.cols), 0.0);
    prof.variance.assign(static_cast<std::size_t>(image.cols), 0.0);
    for (long c = 0; c < image.cols; ++c) {
        double sum = 0.0;
        for (long r = 0; r < image.rows; ++r)
            sum += image(r, c);
        const double mean = sum / static_cast<double>(image.rows);
        double ss = 0.0;
        for (long r = 0; r < image.rows; ++r)
            ss += (image(r, c) - mean) * (image(r, c) - mean);
        prof.mean[static_cast<std::size_t>(c)] = mean;
        prof.variance[static_cast<std::size_t>(c)] = ss / static_cast<double>(image.rows);
    }
    return prof;
}

double correlation_metric(const Patch& a, const Patch& b)
{
    if (a.values.size() != b.values.size() || a.values.size() == 0)
        throw DomainError("correlation_metric: patches must have equal, nonzero sizes");
    const Eigen::VectorXd da = a.values.array() - a.values.mean();
    const Eigen::VectorXd db = b.values.array() - b.values.mean();
    const double na = da.norm();
    const double nb = db.norm();
    if (!(na > kFlatTolerance * a.values.norm()) || !(nb > kFlatTolerance * b.values.norm()))
        throw DegenerateError("flat patch");
    return std::clamp(da.dot(db) / (na * nb), -1.0, 1.0);
}

}  // namespace cloudheight
