#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace ctlearn {

enum class BeamKind { Parallel, Fan };

// 2-d acquisition description. Lengths are in mm, angles in radians.
// Parallel beams use angles in [0, pi), fan beams a full [0, 2*pi) turn
// around the axis with a flat detector.
struct Geometry {
    BeamKind beam = BeamKind::Parallel;
    std::vector<double> angles;
    int num_detector_bins = 0;
    double detector_extent = 0.0;
    double src_to_axis = 0.0;      // fan only
    double axis_to_detector = 0.0; // fan only
    int image_height = 0;
    int image_width = 0;
    double pixel_size = 1.0;

    int num_angles() const { return static_cast<int>(angles.size()); }
    double bin_spacing() const { return detector_extent / num_detector_bins; }
    double detector_pos(int bin) const {
        return (bin - 0.5 * (num_detector_bins - 1)) * bin_spacing();
    }
    double image_half_width() const { return 0.5 * image_width * pixel_size; }
    double image_half_height() const { return 0.5 * image_height * pixel_size; }
    double image_diagonal() const {
        return pixel_size * std::hypot(static_cast<double>(image_width), static_cast<double>(image_height));
    }

    void validate() const;
};

// Evenly spaced parallel geometry covering [0, pi). Detector extent defaults
// to the image diagonal so every ray through the support is measured.
Geometry make_parallel_geometry(int num_angles, int num_bins, int image_h, int image_w,
                                double pixel_size, double detector_extent = 0.0);

// Evenly spaced fan geometry covering [0, 2*pi). Detector extent defaults to
// the image diagonal magnified onto the detector.
Geometry make_fan_geometry(int num_angles, int num_bins, int image_h, int image_w,
                           double pixel_size, double src_to_axis, double axis_to_detector,
                           double detector_extent = 0.0);

std::string geometry_to_json(const Geometry& geom);
Geometry geometry_from_json(const std::string& text);
void save_geometry(const Geometry& geom, const std::string& path);
Geometry load_geometry(const std::string& path);

}  // namespace ctlearn
