#include <cmath>
#include <limits>
#include <numbers>

#include "cloudheight/errors.hpp"
#include "cloudheight/gauss.hpp"

namespace cloudheight {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();
constexpr int kMaxIter = 10000;

// Taylor coefficients of 1/Gamma(z) = sum_k c[k] z^(k+1) (Abramowitz & Stegun 6.1.34).
constexpr double kRecipGamma[] = {
    1.0,
    0.5772156649015329,
    -0.6558780715202538,
    -0.0420026350340952,
    0.1665386113822915,
    -0.0421977345555443,
    -0.0096219715278770,
    0.0072189432466630,
    -0.0011651675918591,
    -0.0002152416741149,
    0.0001280502823882,
    -0.0000201348547807,
    -0.0000012504934821,
    0.0000011330272320,
    -0.0000002056338417,
    0.0000000061160950,
    0.0000000050020075,
    -0.0000000011812746,
    0.0000000001043427,
    0.0000000000077823,
    -0.0000000000036968,
    0.0000000000005100,
    -0.0000000000000206,
    -0.0000000000000054,
    0.0000000000000014,
    0.0000000000000001,
};

// For |mu| <= 1/2:
//   gam1 = (1/Gamma(1-mu) - 1/Gamma(1+mu)) / (2 mu)
//   gam2 = (1/Gamma(1-mu) + 1/Gamma(1+mu)) / 2
// from the even/odd parts of the series 1/Gamma(1+mu) = sum_k c[k] mu^k.
void temme_gammas(double mu, double& gam1, double& gam2)
{
    const double mu2 = mu * mu;
    constexpr int n = sizeof(kRecipGamma) / sizeof(kRecipGamma[0]);
    double even = 0.0;
    double odd = 0.0;
    for (int k = n - 1; k >= 0; --k) {
        if (k % 2 == 0)
            even = even * mu2 + kRecipGamma[k];
        else
            odd = odd * mu2 + kRecipGamma[k];
    }
    gam1 = -odd;
    gam2 = even;
}

// K_mu(x) and K_{mu+1}(x) for |mu| <= 1/2, 0 < x < 2.
void temme_series(double mu, double x, double& k_mu, double& k_mu1)
{
    const double half_x = 0.5 * x;
    const double pimu = std::numbers::pi * mu;
    const double fact = std::abs(pimu) < kEps ? 1.0 : pimu / std::sin(pimu);
    const double d = -std::log(half_x);
    double e = mu * d;
    const double fact2 = std::abs(e) < kEps ? 1.0 : std::sinh(e) / e;

    double gam1 = 0.0;
    double gam2 = 0.0;
    temme_gammas(mu, gam1, gam2);
    const double recip_gamma_plus = gam2 - mu * gam1;   // 1/Gamma(1+mu)
    const double recip_gamma_minus = gam2 + mu * gam1;  // 1/Gamma(1-mu)

    double ff = fact * (gam1 * std::cosh(e) + gam2 * fact2 * d);
    double sum = ff;
    e = std::exp(e);
    // p = Gamma(1+mu) (x/2)^-mu / 2, q = Gamma(1-mu) (x/2)^mu / 2
    double p = 0.5 * e / recip_gamma_plus;
    double q = 0.5 / (e * recip_gamma_minus);
    double c = 1.0;
    const double quarter_x2 = half_x * half_x;
    double sum1 = p;
    const double mu2 = mu * mu;
    for (int i = 1; i <= kMaxIter; ++i) {
        const double di = i;
        ff = (di * ff + p + q) / (di * di - mu2);
        c *= quarter_x2 / di;
        p /= (di - mu);
        q /= (di + mu);
        const double del = c * ff;
        sum += del;
        sum1 += c * (p - di * ff);
        if (std::abs(del) < std::abs(sum) * kEps)
            break;
    }
    k_mu = sum;
    k_mu1 = sum1 * 2.0 / x;
}

// K_mu(x) and K_{mu+1}(x) for |mu| <= 1/2, x >= 2 (Steed's CF2).
void steed_cf2(double mu, double x, double& k_mu, double& k_mu1)
{
    const double mu2 = mu * mu;
    double b = 2.0 * (1.0 + x);
    double d = 1.0 / b;
    double h = d;
    double delh = d;
    double q1 = 0.0;
    double q2 = 1.0;
    const double a1 = 0.25 - mu2;
    double q = a1;
    double c = a1;
    double a = -a1;
    double s = 1.0 + q * delh;
    for (int i = 2; i <= kMaxIter; ++i) {
        a -= 2.0 * (i - 1);
        c = -a * c / i;
        const double qnew = (q1 - b * q2) / a;
        q1 = q2;
        q2 = qnew;
        q += c * qnew;
        b += 2.0;
        d = 1.0 / (b + a * d);
        delh = (b * d - 1.0) * delh;
        h += delh;
        const double dels = q * delh;
        s += dels;
        if (std::abs(dels / s) < kEps)
            break;
    }
    h *= a1;
    k_mu = std::sqrt(std::numbers::pi / (2.0 * x)) * std::exp(-x) / s;
    k_mu1 = k_mu * (mu + x + 0.5 - h) / x;
}

}  // namespace

double bessel_k(double nu, double x)
{
    if (!(x > 0.0) || !std::isfinite(x))
        throw DomainError("bessel_k: argument must be positive and finite");
    if (!std::isfinite(nu))
        throw DomainError("bessel_k: order must be finite");
    nu = std::abs(nu);  // K_{-nu} = K_nu

    const int steps = static_cast<int>(nu + 0.5);
    const double mu = nu - steps;

    double k_lo = 0.0;
    double k_hi = 0.0;
    if (x < 2.0)
        temme_series(mu, x, k_lo, k_hi);
    else
        steed_cf2(mu, x, k_lo, k_hi);

    // K_{v+1} = (2v/x) K_v + K_{v-1}
    for (int i = 1; i <= steps; ++i) {
        const double next = 2.0 * (mu + i) / x * k_hi + k_lo;
        k_lo = k_hi;
        k_hi = next;
    }
    return k_lo;
}

}  // namespace cloudheight
