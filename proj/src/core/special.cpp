#include "dbmm/core/special.hpp"

#include <cmath>
#include <limits>

#include "dbmm/core/errors.hpp"

namespace dbmm {

namespace {
constexpr double kLog2Pi = 1.8378770664093454835606594728112; // log(2*pi)
constexpr double kSqrt2 = 1.4142135623730950488016887242097;
constexpr double kInf = std::numeric_limits<double>::infinity();
} // namespace

double normal_pdf(double z) {
    return std::exp(-0.5 * z * z - 0.5 * kLog2Pi);
}

double normal_log_pdf(double z) {
    return -0.5 * z * z - 0.5 * kLog2Pi;
}

double normal_cdf(double z) {
    // erfc keeps relative precision in the lower tail down to ~1e-308,
    // unlike 0.5*(1+erf(.)) which cancels.
    return 0.5 * std::erfc(-z / kSqrt2);
}

double log_normal_cdf(double z) {
    if (z > -36.0) {
        return std::log(normal_cdf(z));
    }
    // Asymptotic expansion of the Mills ratio:
    //   Phi(z) ~ phi(z)/(-z) * (1 - 1/z^2 + 3/z^4 - 15/z^6 + 105/z^8)
    const double z2 = z * z;
    const double corr = 1.0 + (-1.0 + (3.0 + (-15.0 + 105.0 / z2) / z2) / z2) / z2;
    return -0.5 * z2 - 0.5 * kLog2Pi - std::log(-z) + std::log(corr);
}

double normal_hazard(double z) {
    // Both pieces are computed in log space, so the ratio survives the
    // regions where pdf and cdf individually underflow.
    return std::exp(normal_log_pdf(z) - log_normal_cdf(z));
}

double inverse_normal_cdf(double p) {
    if (!(p > 0.0 && p < 1.0)) throw IndexError("inverse_normal_cdf: p must be in (0,1)");
    // Mirror the upper half onto the lower so we always refine in the tail
    // where log_normal_cdf is accurate.
    const bool flip = p > 0.5;
    const double q = flip ? 1.0 - p : p;

    // Abramowitz & Stegun 26.2.23 rational start (|err| < 4.5e-4).
    const double t = std::sqrt(-2.0 * std::log(q));
    double x = -(t - (2.515517 + t * (0.802853 + t * 0.010328)) /
                         (1.0 + t * (1.432788 + t * (0.189269 + t * 0.001308))));

    // Newton on log Phi: x <- x - (log Phi(x) - log q) / (phi/Phi)(x).
    // Quadratic convergence; three steps take 4.5e-4 to machine precision.
    const double logq = std::log(q);
    for (int it = 0; it < 4; ++it) {
        const double diff = log_normal_cdf(x) - logq;
        const double h = normal_hazard(x);
        const double step = diff / h;
        x -= step;
        if (std::fabs(step) < 1e-15 * std::max(1.0, std::fabs(x))) break;
    }
    return flip ? -x : x;
}

namespace {

// Continued fraction for the incomplete beta (modified Lentz).
double betacf(double a, double b, double x) {
    constexpr int kMaxIter = 400;
    constexpr double kEps = 3e-16;
    constexpr double kTiny = 1e-300;

    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < kTiny) d = kTiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxIter; ++m) {
        const int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < kEps) break;
    }
    return h;
}

inline double log_beta_front(double a, double b, double x) {
    return std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
           a * std::log(x) + b * std::log1p(-x);
}

} // namespace

double betainc(double a, double b, double x) {
    if (!(a > 0.0 && b > 0.0)) throw IndexError("betainc: a and b must be positive");
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    const double front = std::exp(log_beta_front(a, b, x));
    if (x < (a + 1.0) / (a + b + 2.0)) {
        return front * betacf(a, b, x) / a;
    }
    return 1.0 - front * betacf(b, a, 1.0 - x) / b;
}

double log_betainc(double a, double b, double x) {
    if (!(a > 0.0 && b > 0.0)) throw IndexError("log_betainc: a and b must be positive");
    if (x <= 0.0) return -kInf;
    if (x >= 1.0) return 0.0;
    if (x < (a + 1.0) / (a + b + 2.0)) {
        // Direct branch: the continued fraction is O(1), the front factor
        // carries the (possibly underflowing) magnitude.
        return log_beta_front(a, b, x) + std::log(betacf(a, b, x) / a);
    }
    // Complement branch doesn't underflow (I_x >= ~0.5 up to the switch).
    return std::log1p(-std::exp(log_beta_front(a, b, x)) * betacf(b, a, 1.0 - x) / b);
}

double student_t_log_pdf(double t, double nu) {
    if (!(nu > 0.0)) throw IndexError("student_t_log_pdf: nu must be positive");
    return std::lgamma(0.5 * (nu + 1.0)) - std::lgamma(0.5 * nu) -
           0.5 * std::log(nu * M_PI) -
           0.5 * (nu + 1.0) * std::log1p(t * t / nu);
}

double student_t_cdf(double t, double nu) {
    if (!(nu > 0.0)) throw IndexError("student_t_cdf: nu must be positive");
    if (t == 0.0) return 0.5;
    // For very large nu the betainc parameters blow up (a = nu/2) and the
    // continued fraction loses digits; the normal limit with its first
    // 1/nu correction term is accurate to ~1/nu^2 there.
    if (nu > 4e6) {
        const double corr = normal_pdf(t) * (t * t * t + t) / (4.0 * nu);
        return normal_cdf(t) - corr;
    }
    const double x = nu / (nu + t * t);
    const double p = 0.5 * betainc(0.5 * nu, 0.5, x);
    return t < 0.0 ? p : 1.0 - p;
}

double log_student_t_cdf(double t, double nu) {
    if (!(nu > 0.0)) throw IndexError("log_student_t_cdf: nu must be positive");
    if (t == 0.0) return std::log(0.5);
    const double x = nu / (nu + t * t);
    if (t < 0.0) {
        return std::log(0.5) + log_betainc(0.5 * nu, 0.5, x);
    }
    return std::log1p(-0.5 * betainc(0.5 * nu, 0.5, x));
}

double student_t_quantile(double p, double nu) {
    if (!(p > 0.0 && p < 1.0)) throw IndexError("student_t_quantile: p must be in (0,1)");
    if (!(nu > 0.0)) throw IndexError("student_t_quantile: nu must be positive");
    if (p == 0.5) return 0.0;

    // Work on the lower half and mirror, so the Newton iteration always
    // chases a left-tail target with monotone increasing CDF.
    const bool flip = p > 0.5;
    const double q = flip ? 1.0 - p : p;

    // Bracket the root: [lo, hi] with cdf(lo) <= q <= cdf(hi) = 0.5 at 0.
    double hi = 0.0;
    double lo = -1.0;
    // Expand geometrically; even q = 1e-300 with nu = 0.5 brackets quickly.
    while (student_t_cdf(lo, nu) > q) {
        hi = lo;
        lo *= 8.0;
        if (lo < -1e300) break;
    }

    // Start from the normal quantile (exact as nu -> inf, decent otherwise),
    // clamped into the bracket.
    double x = inverse_normal_cdf(q);
    if (!(x > lo && x < hi)) x = 0.5 * (lo + hi);

    // Safeguarded Newton: fall back to bisection whenever the Newton step
    // leaves the bracket or stalls. The bisection midpoint is geometric when
    // the bracket spans orders of magnitude (deep tail), so the exponent of
    // the root converges even from a huge initial bracket.
    for (int it = 0; it < 200; ++it) {
        const double f = student_t_cdf(x, nu) - q;
        if (f > 0.0) {
            hi = x;
        } else {
            lo = x;
        }
        const double pdf = std::exp(student_t_log_pdf(x, nu));
        double xn = x;
        bool newton_ok = false;
        if (pdf > 0.0) {
            xn = x - f / pdf;
            newton_ok = (xn > lo && xn < hi);
        }
        if (!newton_ok) {
            if (hi < -1.0 && lo < 64.0 * hi) {
                xn = -std::sqrt(lo * hi);
            } else {
                xn = 0.5 * (lo + hi);
            }
        }
        const double step = std::fabs(xn - x);
        x = xn;
        if (step <= 1e-14 * std::max(1.0, std::fabs(x))) break;
        if (hi - lo <= 1e-14 * std::max(1.0, std::fabs(lo))) break;
    }
    return flip ? -x : x;
}

} // namespace dbmm
