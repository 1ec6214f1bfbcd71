#include <doctest.h>

#include <cmath>
#include <map>
#include <set>
#include <utility>

#include "pduu/errors.hpp"
#include "pduu/mesh.hpp"

using namespace pduu;

namespace {

// Edges owned by exactly one triangle, computed from the connectivity alone.
std::set<std::pair<int, int>> single_owner_edges(const Mesh& mesh) {
    std::map<std::pair<int, int>, int> count;
    for (const auto& t : mesh.triangles())
        for (int i = 0; i < 3; ++i) {
            int a = t[i], b = t[(i + 1) % 3];
            if (a > b) std::swap(a, b);
            ++count[{a, b}];
        }
    std::set<std::pair<int, int>> out;
    for (const auto& [e, c] : count)
        if (c == 1) out.insert(e);
    return out;
}

std::size_t edge_count(const Mesh& mesh) {
    std::set<std::pair<int, int>> edges;
    for (const auto& t : mesh.triangles())
        for (int i = 0; i < 3; ++i) {
            int a = t[i], b = t[(i + 1) % 3];
            if (a > b) std::swap(a, b);
            edges.insert({a, b});
        }
    return edges.size();
}

void check_invariants(const Mesh& mesh) {
    for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
        CHECK(mesh.signed_area(t) > 0.0);
        for (int v : mesh.triangle(t)) {
            CHECK(v >= 0);
            CHECK(static_cast<std::size_t>(v) < mesh.num_vertices());
        }
    }
    const auto boundary = single_owner_edges(mesh);
    std::set<std::pair<int, int>> tagged;
    for (const auto& f : mesh.facets()) {
        int a = f.vertices[0], b = f.vertices[1];
        if (a > b) std::swap(a, b);
        tagged.insert({a, b});
    }
    CHECK(tagged == boundary);
    CHECK(mesh.num_facets() == boundary.size());
    CHECK(mesh.boundary_length(BoundaryTag::Inner) + mesh.boundary_length(BoundaryTag::Outer) ==
          doctest::Approx(mesh.boundary_length()).epsilon(1e-14));
    // simply connected planar triangulation: V - E + F = 1
    CHECK(static_cast<long>(mesh.num_vertices()) - static_cast<long>(edge_count(mesh)) +
              static_cast<long>(mesh.num_triangles()) ==
          1);
    CHECK(mesh.num_edges() == edge_count(mesh));
}

}  // namespace

TEST_CASE("unit square counts") {
    const Mesh m11 = build_unit_square_mesh(1, 1);
    CHECK(m11.num_vertices() == 4);
    CHECK(m11.num_triangles() == 2);
    const Mesh m22 = build_unit_square_mesh(2, 2);
    CHECK(m22.num_vertices() == 9);
    CHECK(m22.num_triangles() == 8);
    const Mesh m = build_unit_square_mesh(3, 5);
    CHECK(m.num_vertices() == 4 * 6);
    CHECK(m.num_triangles() == 2 * 3 * 5);
}

TEST_CASE("unit square area and tags") {
    const Mesh m = build_unit_square_mesh(4, 4);
    CHECK(std::abs(m.total_area() - 1.0) <= 1e-12);
    for (const auto& f : m.facets()) CHECK(f.tag == BoundaryTag::Outer);
    CHECK(std::abs(m.boundary_length(BoundaryTag::Outer) - 4.0) <= 1e-12);
    check_invariants(m);
}

TEST_CASE("unit square rejects bad counts") {
    CHECK_THROWS_AS(build_unit_square_mesh(0, 3), ArgumentError);
    CHECK_THROWS_AS(build_unit_square_mesh(2, -1), ArgumentError);
}

TEST_CASE("L-shape geometry") {
    const Mesh coarse = build_lshape_mesh(0.5);
    CHECK(std::abs(coarse.total_area() - 0.75) <= 1e-12);

    const Mesh m = build_lshape_mesh(0.25);
    CHECK(std::abs(m.boundary_length(BoundaryTag::Inner) - 1.0) <= 1e-12);
    CHECK(std::abs(m.boundary_length(BoundaryTag::Outer) - 3.0) <= 1e-12);
    check_invariants(m);

    for (const auto& f : m.facets()) {
        const Point2& a = m.vertex(static_cast<std::size_t>(f.vertices[0]));
        const Point2& b = m.vertex(static_cast<std::size_t>(f.vertices[1]));
        const bool on_notch = (std::abs(a.x() - 0.5) < 1e-14 && std::abs(b.x() - 0.5) < 1e-14 && a.y() >= 0.5 &&
                               b.y() >= 0.5) ||
                              (std::abs(a.y() - 0.5) < 1e-14 && std::abs(b.y() - 0.5) < 1e-14 && a.x() >= 0.5 &&
                               b.x() >= 0.5);
        CHECK((f.tag == BoundaryTag::Inner) == on_notch);
    }
}

TEST_CASE("L-shape edge length and resolution") {
    for (double h : {0.3, 0.125, 0.07, 1.0 / 24.0}) {
        const Mesh m = build_lshape_mesh(h);
        CHECK(m.max_edge_length() <= 1.5 * h);
        CHECK(std::abs(m.total_area() - 0.75) <= 1e-12);
        check_invariants(m);
    }
    const auto n1 = build_lshape_mesh(0.25).num_triangles();
    const auto n2 = build_lshape_mesh(0.125).num_triangles();
    CHECK(n2 >= 2 * n1);
    CHECK(n2 <= 4 * n1);
}

TEST_CASE("L-shape errors") {
    CHECK_THROWS_AS(build_lshape_mesh(0.0), ArgumentError);
    CHECK_THROWS_AS(build_lshape_mesh(1.0), ArgumentError);
    CHECK_THROWS_AS(build_lshape_mesh(1e-4, 10000), ResourceError);
}

TEST_CASE("uniform refinement") {
    const Mesh sq = build_unit_square_mesh(1, 1);
    const Mesh r = refine_uniform(sq);
    CHECK(r.num_triangles() == 8);
    CHECK(std::abs(r.total_area() - 1.0) <= 1e-12);
    check_invariants(r);

    const Mesh l = build_lshape_mesh(0.25);
    const Mesh lr = refine_uniform(l);
    CHECK(lr.num_triangles() == 4 * l.num_triangles());
    CHECK(std::abs(lr.total_area() - l.total_area()) <= 1e-12);
    CHECK(std::abs(lr.boundary_length(BoundaryTag::Inner) - 1.0) <= 1e-12);
    CHECK(lr.num_facets() == 2 * l.num_facets());
    CHECK(lr.max_edge_length() == doctest::Approx(0.5 * l.max_edge_length()));
    check_invariants(lr);
}

TEST_CASE("constructor validation") {
    std::vector<Point2> v{{0, 0}, {1, 0}, {0, 1}};
    // clockwise input is reoriented
    const Mesh m(v, {{0, 2, 1}}, {{{0, 1}, BoundaryTag::Outer}, {{1, 2}, BoundaryTag::Outer}, {{2, 0}, BoundaryTag::Outer}});
    CHECK(m.signed_area(0) == doctest::Approx(0.5));

    CHECK_THROWS_AS(Mesh(v, {{0, 1, 3}}, {}), ArgumentError);
    // a missing boundary facet
    CHECK_THROWS_AS(Mesh(v, {{0, 1, 2}}, {{{0, 1}, BoundaryTag::Outer}, {{1, 2}, BoundaryTag::Outer}}), ArgumentError);
    std::vector<Point2> collinear{{0, 0}, {1, 0}, {2, 0}};
    CHECK_THROWS_AS(Mesh(collinear, {{0, 1, 2}}, {}), ArgumentError);
}
