#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "pduu/fem.hpp"

namespace pduu {

/// Legacy-VTK ASCII unstructured grid with one float64 point-data array.
void write_vtk_scalar(const std::filesystem::path& path, const Mesh& mesh, const std::string& name,
                      const NodalField& values);
/// Same with a 2-component vector (written as 3-component, z = 0).
void write_vtk_vector(const std::filesystem::path& path, const Mesh& mesh, const std::string& name,
                      const NodalField& x, const NodalField& y);
/// Mesh only, with triangle areas as cell data.
void write_vtk_mesh(const std::filesystem::path& path, const Mesh& mesh);

/// RFC 4180 CSV writer. Reals are printed with 17 significant digits.
class CsvWriter {
public:
    CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header);

    CsvWriter& cell(const std::string& s);
    CsvWriter& cell(double v);
    CsvWriter& cell(long long v);
    CsvWriter& cell(int v) { return cell(static_cast<long long>(v)); }
    CsvWriter& cell(std::size_t v) { return cell(static_cast<long long>(v)); }
    /// Ends the current row; throws ArgumentError if its width differs from the header.
    void end_row();
    void flush() { out_.flush(); }

private:
    std::ofstream out_;
    std::size_t width_;
    std::size_t current_ = 0;
};

/// Quotes a field when it contains a comma, quote, CR or LF.
std::string csv_escape(const std::string& s);

std::string format_real(double v);

}  // namespace pduu
