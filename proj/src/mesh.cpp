#include "pduu/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <sstream>
#include <utility>

#include "pduu/errors.hpp"

namespace pduu {
namespace {

using Edge = std::pair<int, int>;

Edge make_edge(int a, int b) { return a < b ? Edge{a, b} : Edge{b, a}; }

double cross(const Point2& a, const Point2& b, const Point2& c) {
    return (b.x() - a.x()) * (c.y() - a.y()) - (b.y() - a.y()) * (c.x() - a.x());
}

// Edges owned by exactly one triangle, in first-seen order.
std::vector<Edge> single_owner_edges(const std::vector<std::array<int, 3>>& tris,
                                     std::size_t* total_edges) {
    std::map<Edge, int> count;
    std::vector<Edge> order;
    for (const auto& t : tris) {
        for (int k = 0; k < 3; ++k) {
            Edge e = make_edge(t[k], t[(k + 1) % 3]);
            if (count[e]++ == 0) order.push_back(e);
        }
    }
    if (total_edges) *total_edges = count.size();
    std::vector<Edge> out;
    for (const auto& e : order)
        if (count[e] == 1) out.push_back(e);
    return out;
}

std::vector<BoundaryFacet> tag_boundary(const std::vector<Point2>& verts,
                                        const std::vector<std::array<int, 3>>& tris,
                                        const std::function<BoundaryTag(const Point2&)>& classify) {
    std::vector<BoundaryFacet> facets;
    for (const auto& [a, b] : single_owner_edges(tris, nullptr)) {
        Point2 mid = 0.5 * (verts[a] + verts[b]);
        facets.push_back({{a, b}, classify(mid)});
    }
    return facets;
}

}  // namespace

const char* to_string(BoundaryTag tag) {
    switch (tag) {
        case BoundaryTag::Outer: return "Outer";
        case BoundaryTag::Inner: return "Inner";
    }
    return "Unknown";
}

Mesh::Mesh(std::vector<Point2> vertices, std::vector<std::array<int, 3>> triangles,
           std::vector<BoundaryFacet> facets)
    : vertices_(std::move(vertices)), triangles_(std::move(triangles)), facets_(std::move(facets)) {
    const int nv = static_cast<int>(vertices_.size());
    auto in_range = [nv](int i) { return i >= 0 && i < nv; };

    geometry_.reserve(triangles_.size());
    for (std::size_t t = 0; t < triangles_.size(); ++t) {
        auto& tri = triangles_[t];
        for (int v : tri) {
            if (!in_range(v)) {
                std::ostringstream os;
                os << "triangle " << t << " references vertex " << v << " outside [0," << nv << ")";
                throw ArgumentError(os.str());
            }
        }
        double a2 = cross(vertices_[tri[0]], vertices_[tri[1]], vertices_[tri[2]]);
        if (a2 < 0) {
            std::swap(tri[1], tri[2]);
            a2 = -a2;
        }
        if (!(a2 > 0)) {
            std::ostringstream os;
            os << "triangle " << t << " is degenerate";
            throw ArgumentError(os.str());
        }
        ElementGeometry g;
        g.area = 0.5 * a2;
        const Point2& p0 = vertices_[tri[0]];
        const Point2& p1 = vertices_[tri[1]];
        const Point2& p2 = vertices_[tri[2]];
        // grad(lambda_i) = rot90(opposite edge) / (2 area)
        g.grad(0, 0) = (p1.y() - p2.y()) / a2;
        g.grad(1, 0) = (p2.x() - p1.x()) / a2;
        g.grad(0, 1) = (p2.y() - p0.y()) / a2;
        g.grad(1, 1) = (p0.x() - p2.x()) / a2;
        g.grad(0, 2) = (p0.y() - p1.y()) / a2;
        g.grad(1, 2) = (p1.x() - p0.x()) / a2;
        geometry_.push_back(g);
    }

    std::vector<Edge> boundary = single_owner_edges(triangles_, &num_edges_);
    std::map<Edge, int> facet_seen;
    for (const auto& f : facets_) {
        if (!in_range(f.vertices[0]) || !in_range(f.vertices[1]))
            throw ArgumentError("boundary facet references a vertex out of range");
        facet_seen[make_edge(f.vertices[0], f.vertices[1])]++;
    }
    for (const auto& [e, c] : facet_seen) {
        if (c != 1) throw ArgumentError("duplicate boundary facet");
    }
    std::map<Edge, int> boundary_set;
    for (const auto& e : boundary) boundary_set[e] = 1;
    if (boundary_set.size() != facet_seen.size())
        throw ArgumentError("boundary facets do not match the single-owner edges of the triangulation");
    for (const auto& [e, c] : facet_seen) {
        if (!boundary_set.count(e))
            throw ArgumentError("boundary facet is not owned by exactly one triangle");
    }
}

double Mesh::signed_area(std::size_t t) const {
    const auto& tri = triangles_[t];
    return 0.5 * cross(vertices_[tri[0]], vertices_[tri[1]], vertices_[tri[2]]);
}

double Mesh::total_area() const {
    double a = 0.0;
    for (const auto& g : geometry_) a += g.area;
    return a;
}

double Mesh::facet_length(std::size_t f) const {
    const auto& v = facets_[f].vertices;
    return (vertices_[v[0]] - vertices_[v[1]]).norm();
}

double Mesh::boundary_length(BoundaryTag tag) const {
    double len = 0.0;
    for (std::size_t f = 0; f < facets_.size(); ++f)
        if (facets_[f].tag == tag) len += facet_length(f);
    return len;
}

double Mesh::boundary_length() const {
    double len = 0.0;
    for (std::size_t f = 0; f < facets_.size(); ++f) len += facet_length(f);
    return len;
}

double Mesh::max_edge_length() const {
    double m = 0.0;
    for (const auto& t : triangles_)
        for (int k = 0; k < 3; ++k)
            m = std::max(m, (vertices_[t[k]] - vertices_[t[(k + 1) % 3]]).norm());
    return m;
}

std::vector<int> Mesh::boundary_vertices(BoundaryTag tag) const {
    std::vector<int> out;
    for (const auto& f : facets_)
        if (f.tag == tag) out.insert(out.end(), f.vertices.begin(), f.vertices.end());
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

Mesh build_unit_square_mesh(int nx, int ny) {
    if (nx < 1 || ny < 1) throw ArgumentError("unit square mesh needs nx >= 1 and ny >= 1");
    std::vector<Point2> verts;
    verts.reserve(static_cast<std::size_t>(nx + 1) * (ny + 1));
    for (int j = 0; j <= ny; ++j)
        for (int i = 0; i <= nx; ++i)
            verts.emplace_back(static_cast<double>(i) / nx, static_cast<double>(j) / ny);
    auto id = [nx](int i, int j) { return j * (nx + 1) + i; };
    std::vector<std::array<int, 3>> tris;
    tris.reserve(2 * static_cast<std::size_t>(nx) * ny);
    for (int j = 0; j < ny; ++j) {
        for (int i = 0; i < nx; ++i) {
            tris.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1)});
            tris.push_back({id(i, j), id(i + 1, j + 1), id(i, j + 1)});
        }
    }
    auto facets = tag_boundary(verts, tris, [](const Point2&) { return BoundaryTag::Outer; });
    return Mesh(std::move(verts), std::move(tris), std::move(facets));
}

Mesh build_lshape_mesh(double h, std::size_t max_vertices) {
    if (!(h > 0.0 && h < 1.0)) throw ArgumentError("L-shape mesh needs 0 < h < 1");
    // Even cell count so the notch corner (0.5, 0.5) is a grid point.
    const double half_cells = std::ceil(0.5 / h - 1e-12);
    const double n_est = 2.0 * half_cells;
    const double est_vertices = (n_est + 1) * (n_est + 1) - half_cells * half_cells;
    if (est_vertices > static_cast<double>(max_vertices)) {
        std::ostringstream os;
        os << "L-shape mesh with h=" << h << " needs about " << est_vertices
           << " vertices, above the budget of " << max_vertices;
        throw ResourceError(os.str());
    }
    const int n = static_cast<int>(n_est);
    const int half = n / 2;
    std::vector<int> index(static_cast<std::size_t>(n + 1) * (n + 1), -1);
    std::vector<Point2> verts;
    for (int j = 0; j <= n; ++j) {
        for (int i = 0; i <= n; ++i) {
            if (i > half && j > half) continue;
            index[static_cast<std::size_t>(j) * (n + 1) + i] = static_cast<int>(verts.size());
            verts.emplace_back(static_cast<double>(i) / n, static_cast<double>(j) / n);
        }
    }
    auto id = [&](int i, int j) { return index[static_cast<std::size_t>(j) * (n + 1) + i]; };
    std::vector<std::array<int, 3>> tris;
    for (int j = 0; j < n; ++j) {
        for (int i = 0; i < n; ++i) {
            if (i >= half && j >= half) continue;
            tris.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1)});
            tris.push_back({id(i, j), id(i + 1, j + 1), id(i, j + 1)});
        }
    }
    const double tol = 0.25 / n;
    auto classify = [tol](const Point2& mid) {
        bool on_vertical = std::abs(mid.x() - 0.5) < tol && mid.y() > 0.5 - tol;
        bool on_horizontal = std::abs(mid.y() - 0.5) < tol && mid.x() > 0.5 - tol;
        return (on_vertical || on_horizontal) ? BoundaryTag::Inner : BoundaryTag::Outer;
    };
    auto facets = tag_boundary(verts, tris, classify);
    return Mesh(std::move(verts), std::move(tris), std::move(facets));
}

Mesh refine_uniform(const Mesh& mesh) {
    std::vector<Point2> verts = mesh.vertices();
    std::map<Edge, int> midpoint;
    auto mid = [&](int a, int b) {
        Edge e = make_edge(a, b);
        auto it = midpoint.find(e);
        if (it != midpoint.end()) return it->second;
        int id = static_cast<int>(verts.size());
        verts.push_back(0.5 * (mesh.vertex(a) + mesh.vertex(b)));
        midpoint.emplace(e, id);
        return id;
    };
    std::vector<std::array<int, 3>> tris;
    tris.reserve(4 * mesh.num_triangles());
    for (const auto& t : mesh.triangles()) {
        int m01 = mid(t[0], t[1]);
        int m12 = mid(t[1], t[2]);
        int m20 = mid(t[2], t[0]);
        tris.push_back({t[0], m01, m20});
        tris.push_back({m01, t[1], m12});
        tris.push_back({m20, m12, t[2]});
        tris.push_back({m01, m12, m20});
    }
    std::vector<BoundaryFacet> facets;
    facets.reserve(2 * mesh.num_facets());
    for (const auto& f : mesh.facets()) {
        int m = mid(f.vertices[0], f.vertices[1]);
        facets.push_back({{f.vertices[0], m}, f.tag});
        facets.push_back({{m, f.vertices[1]}, f.tag});
    }
    return Mesh(std::move(verts), std::move(tris), std::move(facets));
}

}  // namespace pduu
