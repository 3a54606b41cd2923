#include <dic/normal.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <boost/math/special_functions/erf.hpp>

#include <dic/errors.hpp>

namespace dic {

double normal_pdf(double x) { return kInvSqrt2Pi * std::exp(-0.5 * x * x); }

double normal_cdf(double x) { return 0.5 * std::erfc(-x * std::numbers::sqrt2 * 0.5); }

double normal_inverse_cdf(double p) {
    DIC_REQUIRE(p > 0.0 && p < 1.0, "normal_inverse_cdf: p = " << p << " outside (0,1)");
    return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * p);
}

namespace {

// Gauss-Legendre half-rules (6, 12 and 20 points) from Genz's BVND.
constexpr double kW[3][10] = {
    {0.1713244923791705, 0.3607615730481384, 0.4679139345726904},
    {0.4717533638651177e-01, 0.1069393259953183, 0.1600783285433464, 0.2031674267230659, 0.2334925365383547,
     0.2491470458134029},
    {0.1761400713915212e-01, 0.4060142980038694e-01, 0.6267204833410906e-01, 0.8327674157670475e-01,
     0.1019301198172404, 0.1181945319615184, 0.1316886384491766, 0.1420961093183821, 0.1491729864726037,
     0.1527533871307259}};
constexpr double kX[3][10] = {
    {-0.9324695142031522, -0.6612093864662647, -0.2386191860831970},
    {-0.9815606342467191, -0.9041172563704750, -0.7699026741943050, -0.5873179542866171, -0.3678314989981802,
     -0.1252334085114692},
    {-0.9931285991850949, -0.9639719272779138, -0.9122344282513259, -0.8391169718222188, -0.7463319064601508,
     -0.6360536807265150, -0.5108670019508271, -0.3737060887154196, -0.2277858511416451,
     -0.7652652113349733e-01}};

// P(X > dh, Y > dk) for standard bivariate normal with correlation r.
double bvnu(double dh, double dk, double r) {
    constexpr double two_pi = 2.0 * std::numbers::pi;
    int ng, lg;
    if (std::abs(r) < 0.3) {
        ng = 0;
        lg = 3;
    } else if (std::abs(r) < 0.75) {
        ng = 1;
        lg = 6;
    } else {
        ng = 2;
        lg = 10;
    }
    double h = dh, k = dk, hk = h * k, bvn = 0.0;
    if (std::abs(r) < 0.925) {
        const double hs = (h * h + k * k) / 2.0;
        const double asr = std::asin(r);
        for (int i = 0; i < lg; ++i) {
            double sn = std::sin(asr * (kX[ng][i] + 1.0) / 2.0);
            bvn += kW[ng][i] * std::exp((sn * hk - hs) / (1.0 - sn * sn));
            sn = std::sin(asr * (-kX[ng][i] + 1.0) / 2.0);
            bvn += kW[ng][i] * std::exp((sn * hk - hs) / (1.0 - sn * sn));
        }
        return bvn * asr / (2.0 * two_pi) + normal_cdf(-h) * normal_cdf(-k);
    }
    if (r < 0.0) {
        k = -k;
        hk = -hk;
    }
    if (std::abs(r) < 1.0) {
        const double as = (1.0 - r) * (1.0 + r);
        double a = std::sqrt(as);
        const double bs = (h - k) * (h - k);
        const double c = (4.0 - hk) / 8.0;
        const double d = (12.0 - hk) / 16.0;
        bvn = a * std::exp(-(bs / as + hk) / 2.0) * (1.0 - c * (bs - as) * (1.0 - d * bs / 5.0) / 3.0 + c * d * as * as / 5.0);
        if (hk > -160.0) {
            const double b = std::sqrt(bs);
            bvn -= std::exp(-hk / 2.0) * std::sqrt(two_pi) * normal_cdf(-b / a) * b *
                   (1.0 - c * bs * (1.0 - d * bs / 5.0) / 3.0);
        }
        a /= 2.0;
        for (int i = 0; i < lg; ++i) {
            double xs = (a * (kX[ng][i] + 1.0)) * (a * (kX[ng][i] + 1.0));
            double rs = std::sqrt(1.0 - xs);
            bvn += a * kW[ng][i] *
                   (std::exp(-bs / (2.0 * xs) - hk / (1.0 + rs)) / rs -
                    std::exp(-(bs / xs + hk) / 2.0) * (1.0 + c * xs * (1.0 + d * xs)));
            xs = as * (-kX[ng][i] + 1.0) * (-kX[ng][i] + 1.0) / 4.0;
            rs = std::sqrt(1.0 - xs);
            bvn += a * kW[ng][i] * std::exp(-(bs / xs + hk) / 2.0) *
                   (std::exp(-hk * (1.0 - rs) / (2.0 * (1.0 + rs))) / rs - (1.0 + c * xs * (1.0 + d * xs)));
        }
        bvn = -bvn / two_pi;
    }
    if (r > 0.0)
        return bvn + normal_cdf(-std::max(h, k));
    bvn = -bvn;
    if (k > h) {
        if (h < 0.0)
            bvn += normal_cdf(k) - normal_cdf(h);
        else
            bvn += normal_cdf(-h) - normal_cdf(-k);
    }
    return bvn;
}

} // namespace

double bivariate_normal_cdf(double a, double b, double rho) {
    DIC_REQUIRE(rho >= -1.0 && rho <= 1.0, "bivariate_normal_cdf: correlation " << rho << " outside [-1,1]");
    constexpr double inf = std::numeric_limits<double>::infinity();
    if (a == -inf || b == -inf)
        return 0.0;
    if (a == inf)
        return normal_cdf(b);
    if (b == inf)
        return normal_cdf(a);
    if (rho == 1.0)
        return normal_cdf(std::min(a, b));
    if (rho == -1.0)
        return std::max(0.0, normal_cdf(a) - normal_cdf(-b));
    return std::clamp(bvnu(-a, -b, rho), 0.0, 1.0);
}

} // namespace dic
