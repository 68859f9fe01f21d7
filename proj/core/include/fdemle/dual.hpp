#pragma once

#include <array>

namespace fdemle {

inline constexpr int kMaxParams = 4;

// Forward-mode value with a fixed-width parameter gradient.
struct Dual {
    double v = 0.0;
    std::array<double, kMaxParams> g{};

    Dual() = default;
    Dual(double value) : v(value) {}  // NOLINT(google-explicit-constructor)

    static Dual variable(double value, int l) {
        Dual d(value);
        d.g[l] = 1.0;
        return d;
    }

    Dual& operator+=(const Dual& o) {
        v += o.v;
        for (int l = 0; l < kMaxParams; ++l) g[l] += o.g[l];
        return *this;
    }
    Dual& operator-=(const Dual& o) {
        v -= o.v;
        for (int l = 0; l < kMaxParams; ++l) g[l] -= o.g[l];
        return *this;
    }
    Dual& operator*=(const Dual& o) {
        for (int l = 0; l < kMaxParams; ++l) g[l] = g[l] * o.v + v * o.g[l];
        v *= o.v;
        return *this;
    }
    Dual& operator*=(double s) {
        v *= s;
        for (double& x : g) x *= s;
        return *this;
    }
};

inline Dual operator+(Dual a, const Dual& b) { return a += b; }
inline Dual operator-(Dual a, const Dual& b) { return a -= b; }
inline Dual operator*(Dual a, const Dual& b) { return a *= b; }
inline Dual operator*(Dual a, double s) { return a *= s; }
inline Dual operator*(double s, Dual a) { return a *= s; }
inline Dual operator-(Dual a) { return a *= -1.0; }
inline Dual operator/(const Dual& a, const Dual& b) {
    Dual r(a.v / b.v);
    for (int l = 0; l < kMaxParams; ++l) r.g[l] = (a.g[l] * b.v - a.v * b.g[l]) / (b.v * b.v);
    return r;
}

inline double value_of(double x) { return x; }
inline double value_of(const Dual& x) { return x.v; }

}  // namespace fdemle
