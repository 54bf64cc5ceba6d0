#pragma once

// Reference values computed independently of the library: closed forms and
// brute-force quadrature only.

#include <vector>

namespace oracle {

inline constexpr double kPi = 3.14159265358979323846;

/// Scalar factor of laminate(c, b).
double laminate_factor(double c, double b, double y1);

/// int_0^1 dy / (c + b sin 2 pi y) by composite Simpson on n intervals.
double harmonic_mean(double c, double b, int n = 200000);
double arithmetic_mean(double c, double b, int n = 200000);

/// Laminate corrector profile: chi' = H / a - 1, mean zero, H the harmonic mean.
class LaminateChi {
public:
    LaminateChi(double c, double b, int n = 1 << 16);
    double operator()(double y) const;
    double derivative(double y) const;
    double harmonic() const { return H_; }

private:
    double c_, b_, H_;
    std::vector<double> table_;
};

/// Min and max of the laminate factor over a dense grid.
struct Range {
    double lo, hi;
};
Range laminate_range(double c, double b, int n = 100000);

/// (S_eps sin(2 pi .))(x) = sin(pi eps) / (pi eps) sin(2 pi (x - eps / 2)).
double steklov_sine(double x, double eps);

}  // namespace oracle
