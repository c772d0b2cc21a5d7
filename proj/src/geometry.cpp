#include "gnm/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace gnm {

double AABB::distance(Vec2 p) const {
    const double dx = std::max({lo.x - p.x, 0.0, p.x - hi.x});
    const double dy = std::max({lo.y - p.y, 0.0, p.y - hi.y});
    return std::sqrt(dx * dx + dy * dy);
}

Vec2 closest_point_on_segment(Vec2 p, const Segment& s) {
    const Vec2 d = s.b - s.a;
    const double len2 = d.norm2();
    if (len2 == 0.0) return s.a;
    double t = dot(p - s.a, d) / len2;
    t = std::clamp(t, 0.0, 1.0);
    return s.a + d * t;
}

double dist_point_segment(Vec2 p, const Segment& s) {
    return (p - closest_point_on_segment(p, s)).norm();
}

bool Polygon::contains(Vec2 p) const {
    if (pts.size() < 3) return false;
    bool inside = false;
    for (size_t i = 0, j = pts.size() - 1; i < pts.size(); j = i++) {
        const Vec2& a = pts[i];
        const Vec2& b = pts[j];
        if ((a.y > p.y) != (b.y > p.y)) {
            const double xint = a.x + (p.y - a.y) / (b.y - a.y) * (b.x - a.x);
            if (p.x < xint) inside = !inside;
        }
    }
    return inside;
}

double Polygon::area() const {
    return clip::polygon_area(pts);
}

AABB Polygon::bbox() const {
    AABB box{{std::numeric_limits<double>::max(), std::numeric_limits<double>::max()},
             {std::numeric_limits<double>::lowest(), std::numeric_limits<double>::lowest()}};
    for (const Vec2& p : pts) {
        box.lo.x = std::min(box.lo.x, p.x);
        box.lo.y = std::min(box.lo.y, p.y);
        box.hi.x = std::max(box.hi.x, p.x);
        box.hi.y = std::max(box.hi.y, p.y);
    }
    return box;
}

Vec2 Polygon::closest_boundary_point(Vec2 p) const {
    Vec2 best = pts.empty() ? Vec2{} : pts[0];
    double best_d2 = std::numeric_limits<double>::max();
    const size_t n = pts.size();
    if (n == 1) return pts[0];
    // 2-vertex polygons are one segment; closed ones wrap around
    const size_t nedges = (n == 2) ? 1 : n;
    for (size_t i = 0; i < nedges; ++i) {
        const Segment e{pts[i], pts[(i + 1) % n]};
        const Vec2 c = closest_point_on_segment(p, e);
        const double d2 = (p - c).norm2();
        if (d2 < best_d2) {
            best_d2 = d2;
            best = c;
        }
    }
    return best;
}

double Polygon::distance(Vec2 p) const {
    if (has_interior() && contains(p)) return 0.0;
    if (pts.empty()) return std::numeric_limits<double>::max();
    return (p - closest_boundary_point(p)).norm();
}

namespace clip {

std::vector<Vec2> half_plane(const std::vector<Vec2>& poly, Vec2 point_on_line, Vec2 normal) {
    std::vector<Vec2> out;
    const size_t n = poly.size();
    if (n == 0) return out;
    out.reserve(n + 2);
    for (size_t i = 0; i < n; ++i) {
        const Vec2 cur = poly[i];
        const Vec2 nxt = poly[(i + 1) % n];
        const double dc = dot(cur - point_on_line, normal);
        const double dn = dot(nxt - point_on_line, normal);
        const bool cin = dc <= 0.0;
        const bool nin = dn <= 0.0;
        if (cin) out.push_back(cur);
        if (cin != nin) {
            const double t = dc / (dc - dn);
            out.push_back(cur + (nxt - cur) * t);
        }
    }
    return out;
}

double polygon_area(const std::vector<Vec2>& poly) {
    const size_t n = poly.size();
    if (n < 3) return 0.0;
    double twice = 0.0;
    for (size_t i = 0, j = n - 1; i < n; j = i++) {
        twice += cross(poly[j], poly[i]);
    }
    return std::fabs(twice) * 0.5;
}

}  // namespace clip

}  // namespace gnm
