#pragma once

#include <cmath>

namespace dsrf {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    Vec2() = default;
    Vec2(double x_, double y_) : x(x_), y(y_) {}

    Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
    Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
    Vec2 operator*(double s) const { return {x * s, y * s}; }
    Vec2& operator+=(const Vec2& o) { x += o.x; y += o.y; return *this; }
    Vec2& operator-=(const Vec2& o) { x -= o.x; y -= o.y; return *this; }

    bool finite() const { return std::isfinite(x) && std::isfinite(y); }
};

inline Vec2 operator*(double s, const Vec2& v) { return {s * v.x, s * v.y}; }

inline double dot(const Vec2& a, const Vec2& b) { return a.x * b.x + a.y * b.y; }
inline double norm(const Vec2& v) { return std::sqrt(v.x * v.x + v.y * v.y); }
inline double norm2(const Vec2& v) { return v.x * v.x + v.y * v.y; }

/// Determinant of the 2x2 matrix with columns (a, b).
inline double det2(const Vec2& a, const Vec2& b) { return a.x * b.y - a.y * b.x; }

/// 2x2 Jacobian [dvx/dx dvx/dy; dvy/dx dvy/dy].
struct Mat2 {
    double xx = 0.0, xy = 0.0;
    double yx = 0.0, yy = 0.0;

    double det() const { return xx * yy - xy * yx; }
    double trace() const { return xx + yy; }
};

} // namespace dsrf
