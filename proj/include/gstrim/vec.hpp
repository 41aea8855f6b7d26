#pragma once

#include <array>
#include <cmath>

// Small fixed-size linear algebra used throughout. Double precision everywhere;
// the renderer is CPU-bound, not memory-bound, at the scene sizes we target.

namespace gstrim {

struct Vec2 {
    double x = 0.0, y = 0.0;

    Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
    Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
    Vec2 operator*(double s) const { return {x * s, y * s}; }
    Vec2& operator+=(const Vec2& o) { x += o.x; y += o.y; return *this; }
};

inline double dot(const Vec2& a, const Vec2& b) { return a.x * b.x + a.y * b.y; }
inline double norm(const Vec2& v) { return std::sqrt(dot(v, v)); }

struct Vec3 {
    double x = 0.0, y = 0.0, z = 0.0;

    Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
    Vec3 operator-() const { return {-x, -y, -z}; }
    Vec3& operator+=(const Vec3& o) { x += o.x; y += o.y; z += o.z; return *this; }
    Vec3& operator-=(const Vec3& o) { x -= o.x; y -= o.y; z -= o.z; return *this; }
    Vec3& operator*=(double s) { x *= s; y *= s; z *= s; return *this; }
    double operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }
};

inline Vec3 operator*(double s, const Vec3& v) { return v * s; }
inline double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
inline Vec3 cross(const Vec3& a, const Vec3& b) {
    return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
inline double norm2(const Vec3& v) { return dot(v, v); }
inline double norm(const Vec3& v) { return std::sqrt(dot(v, v)); }
inline Vec3 normalized(const Vec3& v) {
    double n = norm(v);
    return n > 0.0 ? v * (1.0 / n) : Vec3{};
}
inline Vec3 cwise_exp(const Vec3& v) { return {std::exp(v.x), std::exp(v.y), std::exp(v.z)}; }
inline Vec3 cwise_abs(const Vec3& v) { return {std::fabs(v.x), std::fabs(v.y), std::fabs(v.z)}; }
inline double max_component(const Vec3& v) { return std::fmax(v.x, std::fmax(v.y, v.z)); }
inline double min_component(const Vec3& v) { return std::fmin(v.x, std::fmin(v.y, v.z)); }

struct Vec4 {
    double w = 1.0, x = 0.0, y = 0.0, z = 0.0;

    Vec4 operator+(const Vec4& o) const { return {w + o.w, x + o.x, y + o.y, z + o.z}; }
    Vec4 operator-(const Vec4& o) const { return {w - o.w, x - o.x, y - o.y, z - o.z}; }
    Vec4 operator*(double s) const { return {w * s, x * s, y * s, z * s}; }
    Vec4& operator+=(const Vec4& o) { w += o.w; x += o.x; y += o.y; z += o.z; return *this; }
};

inline double dot(const Vec4& a, const Vec4& b) {
    return a.w * b.w + a.x * b.x + a.y * b.y + a.z * b.z;
}
inline double norm(const Vec4& v) { return std::sqrt(dot(v, v)); }
inline Vec4 normalized(const Vec4& v) {
    double n = norm(v);
    return n > 0.0 ? v * (1.0 / n) : Vec4{1.0, 0.0, 0.0, 0.0};
}

// Unit quaternion in (w, x, y, z) order, matching the usual splat checkpoint layout.
using Quat = Vec4;

// Symmetric 2x2 matrix stored as full entries; b is the off-diagonal value.
struct Mat2 {
    double a = 0.0, b = 0.0, c = 0.0;  // [[a, b], [b, c]]

    double det() const { return a * c - b * b; }
    Mat2 inverse() const {
        double d = det();
        double inv = 1.0 / d;
        return {c * inv, -b * inv, a * inv};
    }
    Mat2 operator+(const Mat2& o) const { return {a + o.a, b + o.b, c + o.c}; }
    Mat2 operator*(double s) const { return {a * s, b * s, c * s}; }
    Vec2 operator*(const Vec2& v) const { return {a * v.x + b * v.y, b * v.x + c * v.y}; }
};

// A*B*A for symmetric A,B (both Mat2); result is symmetric.
inline Mat2 sandwich(const Mat2& A, const Mat2& B) {
    // M = A*B
    double m00 = A.a * B.a + A.b * B.b;
    double m01 = A.a * B.b + A.b * B.c;
    double m10 = A.b * B.a + A.c * B.b;
    double m11 = A.b * B.b + A.c * B.c;
    // M*A
    return {m00 * A.a + m01 * A.b,
            m00 * A.b + m01 * A.c,
            m10 * A.b + m11 * A.c};
}

struct Mat3 {
    // Row-major.
    std::array<std::array<double, 3>, 3> m{{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}};

    static Mat3 zero() { return Mat3{{{{0, 0, 0}, {0, 0, 0}, {0, 0, 0}}}}; }
    static Mat3 identity() { return Mat3{}; }
    static Mat3 diagonal(const Vec3& d) {
        return Mat3{{{{d.x, 0, 0}, {0, d.y, 0}, {0, 0, d.z}}}};
    }

    double operator()(int r, int c) const { return m[r][c]; }
    double& operator()(int r, int c) { return m[r][c]; }

    Vec3 operator*(const Vec3& v) const {
        return {m[0][0] * v.x + m[0][1] * v.y + m[0][2] * v.z,
                m[1][0] * v.x + m[1][1] * v.y + m[1][2] * v.z,
                m[2][0] * v.x + m[2][1] * v.y + m[2][2] * v.z};
    }
    Mat3 operator*(const Mat3& o) const {
        Mat3 r = zero();
        for (int i = 0; i < 3; ++i)
            for (int k = 0; k < 3; ++k)
                for (int j = 0; j < 3; ++j) r.m[i][j] += m[i][k] * o.m[k][j];
        return r;
    }
    Mat3 operator+(const Mat3& o) const {
        Mat3 r = zero();
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) r.m[i][j] = m[i][j] + o.m[i][j];
        return r;
    }
    Mat3 operator*(double s) const {
        Mat3 r = *this;
        for (auto& row : r.m)
            for (auto& v : row) v *= s;
        return r;
    }
    Mat3 transposed() const {
        Mat3 r;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) r.m[i][j] = m[j][i];
        return r;
    }
    Vec3 row(int i) const { return {m[i][0], m[i][1], m[i][2]}; }
    Vec3 col(int j) const { return {m[0][j], m[1][j], m[2][j]}; }

    double det() const {
        return m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
               m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
               m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
    }
    Mat3 inverse() const {
        double d = det();
        double inv = 1.0 / d;
        Mat3 r;
        r.m[0][0] = (m[1][1] * m[2][2] - m[1][2] * m[2][1]) * inv;
        r.m[0][1] = (m[0][2] * m[2][1] - m[0][1] * m[2][2]) * inv;
        r.m[0][2] = (m[0][1] * m[1][2] - m[0][2] * m[1][1]) * inv;
        r.m[1][0] = (m[1][2] * m[2][0] - m[1][0] * m[2][2]) * inv;
        r.m[1][1] = (m[0][0] * m[2][2] - m[0][2] * m[2][0]) * inv;
        r.m[1][2] = (m[0][2] * m[1][0] - m[0][0] * m[1][2]) * inv;
        r.m[2][0] = (m[1][0] * m[2][1] - m[1][1] * m[2][0]) * inv;
        r.m[2][1] = (m[0][1] * m[2][0] - m[0][0] * m[2][1]) * inv;
        r.m[2][2] = (m[0][0] * m[1][1] - m[0][1] * m[1][0]) * inv;
        return r;
    }
};

inline Mat3 outer(const Vec3& a, const Vec3& b) {
    return Mat3{{{{a.x * b.x, a.x * b.y, a.x * b.z},
                  {a.y * b.x, a.y * b.y, a.y * b.z},
                  {a.z * b.x, a.z * b.y, a.z * b.z}}}};
}

// Rotation matrix from a unit quaternion (w, x, y, z).
inline Mat3 rotation_from_quat(const Quat& q) {
    double w = q.w, x = q.x, y = q.y, z = q.z;
    Mat3 r;
    r.m = {{{1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)},
            {2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)},
            {2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)}}};
    return r;
}

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }
inline double logit(double p) { return std::log(p / (1.0 - p)); }

}  // namespace gstrim
