#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include <Eigen/Core>

namespace pduu {

using Point2 = Eigen::Vector2d;

enum class BoundaryTag { Outer, Inner };

const char* to_string(BoundaryTag tag);

struct BoundaryFacet {
    std::array<int, 2> vertices;
    BoundaryTag tag;
};

/// Per-triangle geometry cached at construction: area and the (constant)
/// gradients of the three P1 hat functions.
struct ElementGeometry {
    double area;
    Eigen::Matrix<double, 2, 3> grad;
};

/// Immutable 2D triangulation with tagged boundary edges.
///
/// Construction validates index ranges, orients every triangle
/// counterclockwise, rejects degenerate triangles and checks that the facet
/// list is exactly the set of edges owned by a single triangle.
class Mesh {
public:
    Mesh(std::vector<Point2> vertices, std::vector<std::array<int, 3>> triangles,
         std::vector<BoundaryFacet> facets);

    std::size_t num_vertices() const { return vertices_.size(); }
    std::size_t num_triangles() const { return triangles_.size(); }
    std::size_t num_facets() const { return facets_.size(); }
    std::size_t num_edges() const { return num_edges_; }

    const std::vector<Point2>& vertices() const { return vertices_; }
    const Point2& vertex(std::size_t i) const { return vertices_[i]; }
    const std::vector<std::array<int, 3>>& triangles() const { return triangles_; }
    const std::array<int, 3>& triangle(std::size_t t) const { return triangles_[t]; }
    const std::vector<BoundaryFacet>& facets() const { return facets_; }
    const ElementGeometry& geometry(std::size_t t) const { return geometry_[t]; }

    double signed_area(std::size_t t) const;
    double total_area() const;
    double facet_length(std::size_t f) const;
    double boundary_length(BoundaryTag tag) const;
    double boundary_length() const;
    double max_edge_length() const;

    /// Vertices touched by at least one facet carrying `tag`.
    std::vector<int> boundary_vertices(BoundaryTag tag) const;

private:
    std::vector<Point2> vertices_;
    std::vector<std::array<int, 3>> triangles_;
    std::vector<BoundaryFacet> facets_;
    std::vector<ElementGeometry> geometry_;
    std::size_t num_edges_ = 0;
};

/// Structured triangulation of [0,1]^2; every boundary facet is Outer.
Mesh build_unit_square_mesh(int nx, int ny);

/// L-shape [0,1]^2 minus (0.5,1]x(0.5,1] on a structured grid whose spacing
/// keeps every edge at most 1.5*h. The two re-entrant edges are Inner.
Mesh build_lshape_mesh(double h, std::size_t max_vertices = 2'000'000);

/// Red refinement: every triangle becomes four congruent children.
Mesh refine_uniform(const Mesh& mesh);

}  // namespace pduu
