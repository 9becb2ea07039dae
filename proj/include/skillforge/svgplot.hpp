#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace skillforge::svg {

/// One plotted arm: mean curve with a +-stddev band.
struct CurveSeries {
    std::string label;
    std::vector<double> x;
    std::vector<double> mean;
    std::vector<double> stddev;  // may be all zero
};

void write_curve_plot(const std::filesystem::path& path, const std::string& title,
                      const std::string& x_label, const std::string& y_label,
                      const std::vector<CurveSeries>& series);

struct HistogramPanel {
    std::string title;
    std::vector<double> bin_edges;  // size == counts.size() + 1
    std::vector<double> counts;
};

void write_histogram_grid(const std::filesystem::path& path, const std::string& title,
                          const std::vector<HistogramPanel>& panels, int columns);

/// Paths and markers inside the unit square (episode traces).
struct UnitSquareScene {
    struct Path {
        std::string label;
        std::vector<std::pair<double, double>> points;
    };
    struct Circle {
        double x = 0, y = 0, radius = 0;
        std::string color;
        bool filled = false;
    };
    std::string title;
    std::vector<Path> paths;
    std::vector<Circle> circles;
};

void write_scene_grid(const std::filesystem::path& path, const std::string& title,
                      const std::vector<UnitSquareScene>& scenes, int columns);

}  // namespace skillforge::svg
