#pragma once

#include <array>
#include <cmath>
#include <utility>

namespace fatigue {

// Symmetric 3x3 tensor stored as (xx, yy, zz, xy, xz, yz).
struct SymTensor {
    std::array<double, 6> c{0, 0, 0, 0, 0, 0};

    SymTensor() = default;
    SymTensor(double xx, double yy, double zz, double xy = 0, double xz = 0, double yz = 0)
        : c{xx, yy, zz, xy, xz, yz} {}

    static SymTensor identity() { return {1, 1, 1}; }

    double& operator[](int i) { return c[i]; }
    double operator[](int i) const { return c[i]; }

    double xx() const { return c[0]; }
    double yy() const { return c[1]; }
    double zz() const { return c[2]; }
    double xy() const { return c[3]; }
    double xz() const { return c[4]; }
    double yz() const { return c[5]; }

    SymTensor& operator+=(const SymTensor& o) {
        for (int i = 0; i < 6; ++i) c[i] += o.c[i];
        return *this;
    }
    SymTensor& operator-=(const SymTensor& o) {
        for (int i = 0; i < 6; ++i) c[i] -= o.c[i];
        return *this;
    }
    SymTensor& operator*=(double s) {
        for (auto& v : c) v *= s;
        return *this;
    }
};

inline SymTensor operator+(SymTensor a, const SymTensor& b) { return a += b; }
inline SymTensor operator-(SymTensor a, const SymTensor& b) { return a -= b; }
inline SymTensor operator*(double s, SymTensor a) { return a *= s; }
inline SymTensor operator*(SymTensor a, double s) { return a *= s; }
inline SymTensor operator-(SymTensor a) { return a *= -1.0; }

inline double trace(const SymTensor& t) { return t.c[0] + t.c[1] + t.c[2]; }

// Full contraction a:b; off-diagonal products counted twice.
inline double ddot(const SymTensor& a, const SymTensor& b) {
    return a.c[0] * b.c[0] + a.c[1] * b.c[1] + a.c[2] * b.c[2] +
           2.0 * (a.c[3] * b.c[3] + a.c[4] * b.c[4] + a.c[5] * b.c[5]);
}

inline double norm(const SymTensor& t) { return std::sqrt(ddot(t, t)); }

inline SymTensor dev(const SymTensor& t) {
    const double m = trace(t) / 3.0;
    SymTensor d = t;
    d.c[0] -= m;
    d.c[1] -= m;
    d.c[2] -= m;
    return d;
}

struct Macaulay {
    double plus;
    double minus;
};

inline Macaulay macaulay(double x) { return {x > 0 ? x : 0.0, x < 0 ? x : 0.0}; }

// Plane-strain total strain from in-plane components; engineering shear is not used.
inline SymTensor plane_strain(double exx, double eyy, double exy) { return {exx, eyy, 0.0, exy, 0.0, 0.0}; }

}  // namespace fatigue
