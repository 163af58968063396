#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace poresens {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Vec2 {
    double x = 0.0;
    double y = 0.0;
};

inline Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
inline Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
inline Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
inline Vec2 operator*(Vec2 a, double s) { return {s * a.x, s * a.y}; }
inline Vec2 operator/(Vec2 a, double s) { return {a.x / s, a.y / s}; }
inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Vec2 a) { return std::hypot(a.x, a.y); }
inline double norm2(Vec2 a) { return a.x * a.x + a.y * a.y; }
inline Vec2 normalized(Vec2 a) {
    double n = norm(a);
    if (n == 0.0) throw Error("geometry: cannot normalize zero vector");
    return a / n;
}
/// Rotate 90 degrees counterclockwise.
inline Vec2 perp(Vec2 a) { return {-a.y, a.x}; }

/// Symmetric 2x2 tensor (stress or strain); xy is the tensor component,
/// not the engineering shear.
struct Tensor2 {
    double xx = 0.0;
    double yy = 0.0;
    double xy = 0.0;

    double trace() const { return xx + yy; }
    /// Full double contraction a:b accounting for both off-diagonal entries.
    double ddot(const Tensor2& o) const { return xx * o.xx + yy * o.yy + 2.0 * xy * o.xy; }
    /// Quadratic form t . A . t for a direction t.
    double project(Vec2 t) const { return xx * t.x * t.x + 2.0 * xy * t.x * t.y + yy * t.y * t.y; }
    std::array<double, 2> principal() const {
        double m = 0.5 * (xx + yy);
        double r = std::hypot(0.5 * (xx - yy), xy);
        return {m + r, m - r};
    }
    double von_mises() const {
        return std::sqrt(xx * xx - xx * yy + yy * yy + 3.0 * xy * xy);
    }
};

inline Tensor2 operator+(const Tensor2& a, const Tensor2& b) {
    return {a.xx + b.xx, a.yy + b.yy, a.xy + b.xy};
}
inline Tensor2 operator-(const Tensor2& a, const Tensor2& b) {
    return {a.xx - b.xx, a.yy - b.yy, a.xy - b.xy};
}
inline Tensor2 operator*(double s, const Tensor2& a) { return {s * a.xx, s * a.yy, s * a.xy}; }

/// R A R^T for the rotation (c, s) = (cos t, sin t).
inline Tensor2 rotated(const Tensor2& a, double c, double s) {
    return {c * c * a.xx - 2.0 * c * s * a.xy + s * s * a.yy,
            s * s * a.xx + 2.0 * c * s * a.xy + c * c * a.yy,
            c * s * (a.xx - a.yy) + (c * c - s * s) * a.xy};
}

using Polygon = std::vector<Vec2>;

struct Box {
    Vec2 lo, hi;
    bool contains(Vec2 p) const {
        return p.x >= lo.x && p.x <= hi.x && p.y >= lo.y && p.y <= hi.y;
    }
};

/// Signed area; positive for counterclockwise orientation.
inline double polygon_area(const Polygon& poly) {
    double a = 0.0;
    size_t n = poly.size();
    for (size_t i = 0; i < n; ++i) a += cross(poly[i], poly[(i + 1) % n]);
    return 0.5 * a;
}

inline double polygon_perimeter(const Polygon& poly) {
    double p = 0.0;
    size_t n = poly.size();
    for (size_t i = 0; i < n; ++i) p += norm(poly[(i + 1) % n] - poly[i]);
    return p;
}

inline Vec2 polygon_centroid(const Polygon& poly) {
    double a = 0.0;
    Vec2 c{0, 0};
    size_t n = poly.size();
    for (size_t i = 0; i < n; ++i) {
        double w = cross(poly[i], poly[(i + 1) % n]);
        a += w;
        c = c + w * (poly[i] + poly[(i + 1) % n]);
    }
    if (a == 0.0) throw Error("geometry: degenerate polygon has zero area");
    return c / (3.0 * a);
}

/// Crossing-number test. Points exactly on the boundary may land on either
/// side; callers that care use distance tests instead.
inline bool point_in_polygon(Vec2 p, const Polygon& poly) {
    bool in = false;
    size_t n = poly.size();
    for (size_t i = 0, j = n - 1; i < n; j = i++) {
        if ((poly[i].y > p.y) != (poly[j].y > p.y)) {
            double xc = poly[j].x + (p.y - poly[j].y) / (poly[i].y - poly[j].y) * (poly[i].x - poly[j].x);
            if (p.x < xc) in = !in;
        }
    }
    return in;
}

inline double point_segment_distance(Vec2 p, Vec2 a, Vec2 b) {
    Vec2 ab = b - a;
    double l2 = norm2(ab);
    if (l2 == 0.0) return norm(p - a);
    double t = std::clamp(dot(p - a, ab) / l2, 0.0, 1.0);
    return norm(p - (a + t * ab));
}

inline double point_polyline_distance(Vec2 p, const Polygon& poly) {
    double d = std::numeric_limits<double>::infinity();
    size_t n = poly.size();
    for (size_t i = 0; i < n; ++i)
        d = std::min(d, point_segment_distance(p, poly[i], poly[(i + 1) % n]));
    return d;
}

inline bool segments_intersect(Vec2 a, Vec2 b, Vec2 c, Vec2 d) {
    auto o = [](Vec2 p, Vec2 q, Vec2 r) { return cross(q - p, r - p); };
    double o1 = o(a, b, c), o2 = o(a, b, d), o3 = o(c, d, a), o4 = o(c, d, b);
    if (((o1 > 0) != (o2 > 0)) && ((o3 > 0) != (o4 > 0)) && o1 != 0 && o2 != 0 && o3 != 0 && o4 != 0)
        return true;
    auto on = [](Vec2 p, Vec2 q, Vec2 r) {
        return cross(q - p, r - p) == 0.0 && dot(r - p, r - q) <= 0.0;
    };
    return on(a, b, c) || on(a, b, d) || on(c, d, a) || on(c, d, b);
}

inline double segment_segment_distance(Vec2 a, Vec2 b, Vec2 c, Vec2 d) {
    if (segments_intersect(a, b, c, d)) return 0.0;
    return std::min(std::min(point_segment_distance(a, c, d), point_segment_distance(b, c, d)),
                    std::min(point_segment_distance(c, a, b), point_segment_distance(d, a, b)));
}

inline double polygon_polygon_distance(const Polygon& p, const Polygon& q) {
    double d = std::numeric_limits<double>::infinity();
    size_t n = p.size(), m = q.size();
    for (size_t i = 0; i < n; ++i)
        for (size_t j = 0; j < m; ++j)
            d = std::min(d, segment_segment_distance(p[i], p[(i + 1) % n], q[j], q[(j + 1) % m]));
    return d;
}

/// Non-adjacent edge pairs must not intersect.
inline bool polygon_simple(const Polygon& poly) {
    size_t n = poly.size();
    if (n < 3) return false;
    for (size_t i = 0; i < n; ++i) {
        for (size_t j = i + 1; j < n; ++j) {
            if (j == i || (j + 1) % n == i || (i + 1) % n == j) continue;
            if (segments_intersect(poly[i], poly[(i + 1) % n], poly[j], poly[(j + 1) % n]))
                return false;
        }
    }
    return true;
}

/// Outward normal of edge i of a counterclockwise polygon (points away from
/// the interior).
inline Vec2 polygon_edge_outward_normal(const Polygon& poly, size_t i) {
    Vec2 t = poly[(i + 1) % poly.size()] - poly[i];
    return normalized(Vec2{t.y, -t.x});
}

/// Every edge must see the center from its inner side: (X - c) . n_out > 0 at
/// the midpoint, which is the shrink-validity condition for radial scaling.
inline bool polygon_star_shaped_about(const Polygon& poly, Vec2 c, size_t* bad_edge = nullptr) {
    size_t n = poly.size();
    for (size_t i = 0; i < n; ++i) {
        Vec2 mid = 0.5 * (poly[i] + poly[(i + 1) % n]);
        Vec2 nrm = polygon_edge_outward_normal(poly, i);
        if (dot(mid - c, nrm) <= 0.0) {
            if (bad_edge) *bad_edge = i;
            return false;
        }
    }
    return true;
}

/// Regular n-gon inscribed in a circle; phase rotates the first vertex.
inline Polygon regular_polygon(Vec2 center, double radius, int n, double phase = 0.0) {
    if (n < 3) throw Error("geometry: polygon needs at least 3 vertices");
    Polygon p(n);
    for (int i = 0; i < n; ++i) {
        double t = phase + 2.0 * M_PI * i / n;
        p[i] = {center.x + radius * std::cos(t), center.y + radius * std::sin(t)};
    }
    return p;
}

}  // namespace poresens
