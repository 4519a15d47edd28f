#pragma once

#include <cmath>

namespace eemix {

namespace detail {

// Rational Chebyshev approximation of erfc after W. J. Cody (Math. Comp. 23,
// 1969), double-precision coefficient set. Relative error of the rational
// kernels is below 1.2e-17; evaluated in doubles the result is accurate to
// a few ulp across all three branches, so erfc here is good to better than
// 1e-14 relative for arguments up to the underflow cutoff.
inline double erfc_cody(double x) {
  static constexpr double kA[5] = {3.1611237438705656, 113.864154151050156,
                                   377.485237685302021, 3209.37758913846947,
                                   0.185777706184603153};
  static constexpr double kB[4] = {23.6012909523441209, 244.024637934444173,
                                   1282.61652607737228, 2844.23683343917062};
  static constexpr double kC[9] = {0.564188496988670089, 8.88314979438837594,
                                   66.1191906371416295,  298.635138197400131,
                                   881.95222124176909,   1712.04761263407058,
                                   2051.07837782607147,  1230.33935479799725,
                                   2.15311535474403846e-8};
  static constexpr double kD[8] = {15.7449261107098347, 117.693950891312499,
                                   537.181101862009858, 1621.38957456669019,
                                   3290.79923573345963, 4362.61909014324716,
                                   3439.36767414372164, 1230.33935480374942};
  static constexpr double kP[6] = {0.305326634961232344,   0.360344899949804439,
                                   0.125781726111229246,   0.0160837851487422766,
                                   6.58749161529837803e-4, 0.0163153871373020978};
  static constexpr double kQ[5] = {2.56852019228982242, 1.87295284992346047,
                                   0.527905102951428412, 0.0605183413124413191,
                                   0.00233520497626869185};
  static constexpr double kSqrtPiInv = 0.56418958354775628695;
  static constexpr double kThresh = 0.46875;
  static constexpr double kXSmall = 1.11e-16;
  static constexpr double kXBig = 26.543;

  const double y = std::fabs(x);
  double result;

  if (y <= kThresh) {
    // erfc via erf; the rational form is in y^2.
    const double ysq = y > kXSmall ? y * y : 0.0;
    double xnum = kA[4] * ysq;
    double xden = ysq;
    for (int i = 0; i < 3; ++i) {
      xnum = (xnum + kA[i]) * ysq;
      xden = (xden + kB[i]) * ysq;
    }
    return 1.0 - x * (xnum + kA[3]) / (xden + kB[3]);
  }

  if (y <= 4.0) {
    double xnum = kC[8] * y;
    double xden = y;
    for (int i = 0; i < 7; ++i) {
      xnum = (xnum + kC[i]) * y;
      xden = (xden + kD[i]) * y;
    }
    result = (xnum + kC[7]) / (xden + kD[7]);
  } else if (y <= kXBig) {
    const double ysq = 1.0 / (y * y);
    double xnum = kP[5] * ysq;
    double xden = ysq;
    for (int i = 0; i < 4; ++i) {
      xnum = (xnum + kP[i]) * ysq;
      xden = (xden + kQ[i]) * ysq;
    }
    result = ysq * (xnum + kP[4]) / (xden + kQ[4]);
    result = (kSqrtPiInv - result) / y;
  } else {
    result = 0.0;
  }

  if (result != 0.0) {
    // Split exp(-y^2) as exp(-t^2) * exp(-(y-t)(y+t)) with t = trunc(16y)/16
    // so the squared argument is exact and the tail keeps full precision.
    const double t = std::trunc(y * 16.0) / 16.0;
    const double del = (y - t) * (y + t);
    result *= std::exp(-t * t) * std::exp(-del);
  }

  return x < 0.0 ? 2.0 - result : result;
}

inline constexpr double kSqrt2 = 1.4142135623730950488;

}  // namespace detail

// Standard normal CDF.
inline double normal_cdf(double z) { return 0.5 * detail::erfc_cody(-z / detail::kSqrt2); }

// Two-sided tail probability 2 * Phi(-|z|).
inline double two_sided_p(double z) { return detail::erfc_cody(std::fabs(z) / detail::kSqrt2); }

}  // namespace eemix
