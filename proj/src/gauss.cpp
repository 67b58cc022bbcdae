#include "cloudheight/gauss.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "cloudheight/errors.hpp"

namespace cloudheight {

void validate(const MaternParams& p)
{
    if (!(p.sigma > 0.0) || !(p.rho > 0.0) || !(p.nu > 0.0))
        throw DomainError("Matern parameters (sigma, rho, nu) must all be positive");
}

double matern(double r, const MaternParams& p)
{
    if (!(r >= 0.0))
        throw DomainError("matern: distance must be nonnegative");
    if (r == 0.0)
        return p.sigma;
    const double z = 2.0 * std::sqrt(p.nu) * r / p.rho;
    const double log_z = std::log(z);
    // z^nu K_nu(z) has reached its limit 2^(nu-1) Gamma(nu) long before K_nu overflows.
    if (-p.nu * log_z > 500.0)
        return p.sigma;
    const double norm = std::exp((1.0 - p.nu) * std::numbers::ln2 - std::lgamma(p.nu));
    return p.sigma * norm * std::exp(p.nu * log_z) * bessel_k(p.nu, z);
}

MaternCache::MaternCache(const MaternParams& p) : params_(p)
{
    validate(p);
    table_.reserve(4096);
}

double MaternCache::operator()(double squared_distance)
{
    const auto it = table_.find(squared_distance);
    if (it != table_.end())
        return it->second;
    const double v = matern(std::sqrt(squared_distance), params_);
    if (table_.size() >= kMaxEntries)
        table_.clear();
    table_.emplace(squared_distance, v);
    return v;
}

Eigen::MatrixXd cov_matrix(std::span<const Point2> coords, MaternCache& cache, double nugget)
{
    if (!(nugget >= 0.0))
        throw DomainError("nugget must be nonnegative");
    const auto n = static_cast<Eigen::Index>(coords.size());
    Eigen::MatrixXd cov(n, n);
    const double diag = cache.params().sigma * (1.0 + nugget);
    for (Eigen::Index j = 0; j < n; ++j) {
        const Point2& b = coords[static_cast<std::size_t>(j)];
        cov(j, j) = diag;
        for (Eigen::Index i = j + 1; i < n; ++i) {
            const Point2& a = coords[static_cast<std::size_t>(i)];
            const double dr = a.row - b.row;
            const double dc = a.col - b.col;
            const double v = cache(dr * dr + dc * dc);
            cov(i, j) = v;
            cov(j, i) = v;
        }
    }
    return cov;
}

Eigen::MatrixXd cov_matrix(std::span<const Point2> coords, const MaternParams& p, double nugget)
{
    MaternCache cache(p);
    return cov_matrix(coords, cache, nugget);
}

void validate(const GenCovParams& g)
{
    if (!(g.sigma > 0.0) || !(g.space_scale > 0.0))
        throw DomainError("generalized covariance: sigma and space_scale must be positive");
    if (!(g.exponent > 2.0 && g.exponent < 4.0))
        throw DomainError("generalized covariance: exponent must lie in (2, 4)");
}

double power_law(double r, const GenCovParams& g)
{
    return g.sigma * g.sigma * std::pow(g.space_scale * r, g.exponent);
}

namespace {

// Inverse of the 3x3 matrix with rows [1, u.row, u.col] over the anchors.
Eigen::Matrix3d anchor_inverse(const GenCovParams& g)
{
    Eigen::Matrix3d a;
    for (int k = 0; k < 3; ++k)
        a.row(k) << 1.0, g.anchors[static_cast<std::size_t>(k)].row, g.anchors[static_cast<std::size_t>(k)].col;
    const Eigen::JacobiSVD<Eigen::Matrix3d> svd(a);
    const auto& s = svd.singularValues();
    if (!(s(2) > 1e-12 * s(0)))
        throw DegenerateError("degenerate anchors");
    return a.inverse();
}

std::array<double, 3> lagrange(const Point2& s, const Eigen::Matrix3d& inv)
{
    const Eigen::RowVector3d phi(1.0, s.row, s.col);
    const Eigen::RowVector3d lam = phi * inv;
    return {lam(0), lam(1), lam(2)};
}

}  // namespace

std::array<double, 3> anchor_lagrange(const Point2& s, const GenCovParams& g)
{
    return lagrange(s, anchor_inverse(g));
}

Eigen::MatrixXd sim_cov_matrix(std::span<const Point2> coords, const GenCovParams& g)
{
    validate(g);
    const Eigen::Matrix3d inv = anchor_inverse(g);
    const auto n = static_cast<Eigen::Index>(coords.size());

    Eigen::MatrixXd lam(n, 3);
    Eigen::MatrixXd to_anchor(n, 3);
    for (Eigen::Index i = 0; i < n; ++i) {
        const Point2& s = coords[static_cast<std::size_t>(i)];
        const auto l = lagrange(s, inv);
        for (int k = 0; k < 3; ++k) {
            lam(i, k) = l[static_cast<std::size_t>(k)];
            to_anchor(i, k) = power_law(distance(s, g.anchors[static_cast<std::size_t>(k)]), g);
        }
    }
    Eigen::Matrix3d between;
    for (int j = 0; j < 3; ++j)
        for (int k = 0; k < 3; ++k)
            between(j, k) = power_law(distance(g.anchors[static_cast<std::size_t>(j)], g.anchors[static_cast<std::size_t>(k)]), g);

    Eigen::MatrixXd cov(n, n);
    for (Eigen::Index j = 0; j < n; ++j)
        for (Eigen::Index i = j; i < n; ++i)
            cov(i, j) = cov(j, i) = power_law(distance(coords[static_cast<std::size_t>(i)], coords[static_cast<std::size_t>(j)]), g);

    const Eigen::MatrixXd cross = lam * to_anchor.transpose();
    cov -= cross;
    cov -= cross.transpose();
    cov.noalias() += lam * between * lam.transpose();
    // Restore exact symmetry lost to rounding in the products above.
    const Eigen::MatrixXd sym = 0.5 * (cov + cov.transpose());
    return sym;
}

GaussianSampler::GaussianSampler(const Eigen::MatrixXd& cov)
{
    if (cov.rows() != cov.cols())
        throw DomainError("covariance must be square");
    if (cov.size() == 0) {
        factor_.resize(0, 0);
        return;
    }
    const double scale = std::max(1.0, cov.cwiseAbs().maxCoeff());
    if ((cov - cov.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
        throw DomainError("covariance must be symmetric");
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
    if (eig.info() != Eigen::Success)
        throw DegenerateError("eigendecomposition failed");
    Eigen::VectorXd lambda = eig.eigenvalues();
    const double top = std::max(0.0, lambda.maxCoeff());
    for (Eigen::Index i = 0; i < lambda.size(); ++i) {
        if (lambda(i) < -kPsdTolerance * top)
            throw DegenerateError("not PSD: eigenvalue " + std::to_string(lambda(i)) + " against max " + std::to_string(top));
        lambda(i) = std::sqrt(std::max(0.0, lambda(i)));
    }
    factor_ = eig.eigenvectors() * lambda.asDiagonal();
}

Eigen::VectorXd GaussianSampler::draw(std::uint64_t seed) const
{
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::VectorXd z(factor_.cols());
    for (Eigen::Index i = 0; i < z.size(); ++i)
        z(i) = normal(rng);
    return factor_ * z;
}

Eigen::VectorXd sample_gaussian(const Eigen::MatrixXd& cov, std::uint64_t seed)
{
    return GaussianSampler(cov).draw(seed);
}

}  // namespace cloudheight
