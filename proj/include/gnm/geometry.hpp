#pragma once

#include <vector>

#include "gnm/vec2.hpp"

namespace gnm {

struct AABB {
    Vec2 lo;
    Vec2 hi;

    bool contains(Vec2 p) const {
        return p.x >= lo.x && p.x <= hi.x && p.y >= lo.y && p.y <= hi.y;
    }
    double width() const { return hi.x - lo.x; }
    double height() const { return hi.y - lo.y; }
    double area() const { return width() * height(); }
    /// Distance from p to the box (0 inside).
    double distance(Vec2 p) const;
};

struct Segment {
    Vec2 a;
    Vec2 b;
};

Vec2 closest_point_on_segment(Vec2 p, const Segment& s);
double dist_point_segment(Vec2 p, const Segment& s);

/// Closed polygon when it has >= 3 vertices; a 2-vertex "polygon" is a bare
/// wall segment with no interior.
struct Polygon {
    std::vector<Vec2> pts;

    bool has_interior() const { return pts.size() >= 3; }
    /// Even-odd ray-casting test; false for < 3 vertices.
    bool contains(Vec2 p) const;
    /// Shoelace area (absolute value).
    double area() const;
    AABB bbox() const;
    /// Nearest point on the boundary (edges, wrapping for closed polygons).
    Vec2 closest_boundary_point(Vec2 p) const;
    /// Distance to the polygon as a solid region: 0 inside, else boundary distance.
    double distance(Vec2 p) const;
};

/// Convex clipping helpers used by the Voronoi density estimator.
namespace clip {

/// Keep the part of `poly` with dot(p - point_on_line, normal) <= 0
/// (Sutherland-Hodgman against one half-plane).
std::vector<Vec2> half_plane(const std::vector<Vec2>& poly, Vec2 point_on_line, Vec2 normal);

double polygon_area(const std::vector<Vec2>& poly);

}  // namespace clip

}  // namespace gnm
