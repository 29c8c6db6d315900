#ifndef CALDERON_SVG_HPP
#define CALDERON_SVG_HPP

#include <filesystem>
#include <string>
#include <vector>

#include "calderon/mesh.hpp"

namespace calderon::svg {

struct Series {
    std::string label;
    std::vector<double> x, y;
};

struct PlotOptions {
    std::string title;
    std::string xlabel, ylabel;
    bool logx = false;
    bool logy = false;
    int width = 640;
    int height = 480;
};

/// Polyline plot; points with non-positive values on a log axis are skipped.
std::string line_plot(const std::vector<Series>& series, const PlotOptions& options);

/// Triangles filled by value on a blue-white-red scale symmetric about 0.
std::string field_plot(const Mesh& mesh, const std::vector<double>& value_per_triangle, const std::string& title,
                       int size = 480);

void write_file(const std::filesystem::path& path, const std::string& content);

}  // namespace calderon::svg

#endif
