#include "pduu/io.hpp"

#include <cmath>
#include <cstdio>

#include "pduu/errors.hpp"

namespace pduu {
namespace {

std::ofstream open_for_write(const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ResourceError("cannot open `" + path.string() + "` for writing");
    return out;
}

void write_grid(std::ofstream& out, const Mesh& mesh, const std::string& title) {
    out << "# vtk DataFile Version 3.0\n" << title << "\nASCII\nDATASET UNSTRUCTURED_GRID\n";
    out << "POINTS " << mesh.num_vertices() << " double\n";
    for (std::size_t i = 0; i < mesh.num_vertices(); ++i) {
        const Point2& p = mesh.vertex(i);
        out << format_real(p.x()) << ' ' << format_real(p.y()) << " 0\n";
    }
    out << "CELLS " << mesh.num_triangles() << ' ' << 4 * mesh.num_triangles() << '\n';
    for (std::size_t t = 0; t < mesh.num_triangles(); ++t) {
        const auto& tri = mesh.triangle(t);
        out << "3 " << tri[0] << ' ' << tri[1] << ' ' << tri[2] << '\n';
    }
    out << "CELL_TYPES " << mesh.num_triangles() << '\n';
    for (std::size_t t = 0; t < mesh.num_triangles(); ++t) out << "5\n";
}

void check_field(const Mesh& mesh, const NodalField& v) {
    if (static_cast<std::size_t>(v.size()) != mesh.num_vertices())
        throw ArgumentError("field size does not match the mesh");
}

}  // namespace

std::string format_real(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_vtk_scalar(const std::filesystem::path& path, const Mesh& mesh, const std::string& name,
                      const NodalField& values) {
    check_field(mesh, values);
    std::ofstream out = open_for_write(path);
    write_grid(out, mesh, name);
    out << "POINT_DATA " << mesh.num_vertices() << "\nSCALARS " << name << " double 1\nLOOKUP_TABLE default\n";
    for (Eigen::Index i = 0; i < values.size(); ++i) out << format_real(values[i]) << '\n';
    if (!out) throw ResourceError("failed writing `" + path.string() + "`");
}

void write_vtk_vector(const std::filesystem::path& path, const Mesh& mesh, const std::string& name,
                      const NodalField& x, const NodalField& y) {
    check_field(mesh, x);
    check_field(mesh, y);
    std::ofstream out = open_for_write(path);
    write_grid(out, mesh, name);
    out << "POINT_DATA " << mesh.num_vertices() << "\nVECTORS " << name << " double\n";
    for (Eigen::Index i = 0; i < x.size(); ++i) out << format_real(x[i]) << ' ' << format_real(y[i]) << " 0\n";
    if (!out) throw ResourceError("failed writing `" + path.string() + "`");
}

void write_vtk_mesh(const std::filesystem::path& path, const Mesh& mesh) {
    std::ofstream out = open_for_write(path);
    write_grid(out, mesh, "mesh");
    out << "CELL_DATA " << mesh.num_triangles() << "\nSCALARS area double 1\nLOOKUP_TABLE default\n";
    for (std::size_t t = 0; t < mesh.num_triangles(); ++t) out << format_real(mesh.geometry(t).area) << '\n';
    if (!out) throw ResourceError("failed writing `" + path.string() + "`");
}

std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

CsvWriter::CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header)
    : out_(open_for_write(path)), width_(header.size()) {
    for (const auto& h : header) cell(h);
    end_row();
}

CsvWriter& CsvWriter::cell(const std::string& s) {
    if (current_ > 0) out_ << ',';
    out_ << csv_escape(s);
    ++current_;
    return *this;
}

CsvWriter& CsvWriter::cell(double v) { return cell(format_real(v)); }

CsvWriter& CsvWriter::cell(long long v) { return cell(std::to_string(v)); }

void CsvWriter::end_row() {
    if (current_ != width_) throw ArgumentError("CSV row width does not match the header");
    out_ << "\r\n";
    current_ = 0;
    if (!out_) throw ResourceError("failed writing CSV output");
}

}  // namespace pduu
