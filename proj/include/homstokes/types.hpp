#pragma once

#include <array>
#include <cmath>
#include <numbers>

namespace homstokes {

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

struct Vec2 {
    double x = 0.0;
    double y = 0.0;
    [[nodiscard]] double operator[](int k) const { return k == 0 ? x : y; }
};

/// d x d matrix xi_i^alpha stored as xi[i * 2 + alpha].
using Mat2 = std::array<double, 4>;

/// Four-index coefficient a_{ij}^{alpha beta} for d = 2. Indices are 0-based.
/// The operator is -d_i ( a_{ij}^{alpha beta} d_j u^beta ) acting on component alpha.
class Tensor4 {
public:
    Tensor4() { v_.fill(0.0); }

    [[nodiscard]] static constexpr int index(int i, int j, int alpha, int beta) {
        return ((i * 2 + j) * 2 + alpha) * 2 + beta;
    }
    double& operator()(int i, int j, int alpha, int beta) { return v_[index(i, j, alpha, beta)]; }
    [[nodiscard]] double operator()(int i, int j, int alpha, int beta) const {
        return v_[index(i, j, alpha, beta)];
    }

    [[nodiscard]] static Tensor4 identity() { return scaled_identity(1.0); }
    [[nodiscard]] static Tensor4 scaled_identity(double s) {
        Tensor4 t;
        for (int i = 0; i < 2; ++i)
            for (int a = 0; a < 2; ++a) t(i, i, a, a) = s;
        return t;
    }

    /// System adjoint: (a*)_{ij}^{alpha beta} = a_{ji}^{beta alpha}.
    [[nodiscard]] Tensor4 adjoint() const {
        Tensor4 t;
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j)
                for (int a = 0; a < 2; ++a)
                    for (int b = 0; b < 2; ++b) t(i, j, a, b) = (*this)(j, i, b, a);
        return t;
    }

    /// a_{ij}^{alpha beta} xi_i^alpha xi_j^beta
    [[nodiscard]] double quadratic_form(const Mat2& xi) const {
        double s = 0.0;
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j)
                for (int a = 0; a < 2; ++a)
                    for (int b = 0; b < 2; ++b) s += (*this)(i, j, a, b) * xi[i * 2 + a] * xi[j * 2 + b];
        return s;
    }

    [[nodiscard]] const std::array<double, 16>& data() const { return v_; }
    [[nodiscard]] std::array<double, 16>& data() { return v_; }

    Tensor4& operator+=(const Tensor4& o) {
        for (int k = 0; k < 16; ++k) v_[k] += o.v_[k];
        return *this;
    }
    Tensor4& operator*=(double s) {
        for (auto& x : v_) x *= s;
        return *this;
    }

private:
    std::array<double, 16> v_;
};

inline double max_abs_difference(const Tensor4& a, const Tensor4& b) {
    double m = 0.0;
    for (int k = 0; k < 16; ++k) m = std::max(m, std::abs(a.data()[k] - b.data()[k]));
    return m;
}

inline double max_abs(const Tensor4& a) {
    double m = 0.0;
    for (double x : a.data()) m = std::max(m, std::abs(x));
    return m;
}

}  // namespace homstokes
