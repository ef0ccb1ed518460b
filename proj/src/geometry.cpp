#include "ctlearn/geometry.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace ctlearn {

void Geometry::validate() const {
    if (angles.empty()) throw std::invalid_argument("geometry: at least one angle required");
    if (num_detector_bins <= 0) throw std::invalid_argument("geometry: num_detector_bins must be positive");
    if (detector_extent <= 0.0) throw std::invalid_argument("geometry: detector_extent must be positive");
    if (image_height <= 0 || image_width <= 0) throw std::invalid_argument("geometry: image shape must be positive");
    if (pixel_size <= 0.0) throw std::invalid_argument("geometry: pixel_size must be positive");
    const double limit = (beam == BeamKind::Parallel) ? std::numbers::pi : 2.0 * std::numbers::pi;
    for (std::size_t i = 0; i < angles.size(); ++i) {
        if (angles[i] < 0.0 || angles[i] >= limit)
            throw std::invalid_argument("geometry: angle out of range [0, " + std::to_string(limit) + ")");
        if (i > 0 && angles[i] <= angles[i - 1])
            throw std::invalid_argument("geometry: angles must be strictly increasing");
    }
    if (beam == BeamKind::Fan && (src_to_axis <= 0.0 || axis_to_detector <= 0.0))
        throw std::invalid_argument("geometry: fan beam requires positive source/detector distances");
}

Geometry make_parallel_geometry(int num_angles, int num_bins, int image_h, int image_w,
                                double pixel_size, double detector_extent) {
    Geometry g;
    g.beam = BeamKind::Parallel;
    g.angles.resize(num_angles);
    for (int i = 0; i < num_angles; ++i) g.angles[i] = i * std::numbers::pi / num_angles;
    g.num_detector_bins = num_bins;
    g.image_height = image_h;
    g.image_width = image_w;
    g.pixel_size = pixel_size;
    g.detector_extent = detector_extent > 0.0 ? detector_extent : g.image_diagonal();
    g.validate();
    return g;
}

Geometry make_fan_geometry(int num_angles, int num_bins, int image_h, int image_w,
                           double pixel_size, double src_to_axis, double axis_to_detector,
                           double detector_extent) {
    Geometry g;
    g.beam = BeamKind::Fan;
    g.angles.resize(num_angles);
    for (int i = 0; i < num_angles; ++i) g.angles[i] = i * 2.0 * std::numbers::pi / num_angles;
    g.num_detector_bins = num_bins;
    g.image_height = image_h;
    g.image_width = image_w;
    g.pixel_size = pixel_size;
    g.src_to_axis = src_to_axis;
    g.axis_to_detector = axis_to_detector;
    if (detector_extent > 0.0) {
        g.detector_extent = detector_extent;
    } else {
        const double magnification = (src_to_axis + axis_to_detector) / src_to_axis;
        g.detector_extent = magnification * g.image_diagonal();
    }
    g.validate();
    return g;
}

std::string geometry_to_json(const Geometry& geom) {
    nlohmann::json j;
    j["beam"] = geom.beam == BeamKind::Parallel ? "parallel" : "fan";
    j["num-angles"] = geom.num_angles();
    j["angles"] = geom.angles;
    j["num-detector-bins"] = geom.num_detector_bins;
    j["detector-extent"] = geom.detector_extent;
    if (geom.beam == BeamKind::Fan) {
        j["src-to-axis"] = geom.src_to_axis;
        j["axis-to-detector"] = geom.axis_to_detector;
    }
    j["image-shape"] = {geom.image_height, geom.image_width};
    j["pixel-size"] = geom.pixel_size;
    return j.dump(2);
}

Geometry geometry_from_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    Geometry g;
    const std::string beam = j.at("beam").get<std::string>();
    if (beam == "parallel") {
        g.beam = BeamKind::Parallel;
    } else if (beam == "fan") {
        g.beam = BeamKind::Fan;
    } else {
        throw std::invalid_argument("geometry: unknown beam kind '" + beam + "'");
    }
    g.angles = j.at("angles").get<std::vector<double>>();
    if (j.contains("num-angles") && j.at("num-angles").get<int>() != g.num_angles())
        throw std::invalid_argument("geometry: num-angles disagrees with angles list");
    g.num_detector_bins = j.at("num-detector-bins").get<int>();
    g.detector_extent = j.at("detector-extent").get<double>();
    g.src_to_axis = j.value("src-to-axis", 0.0);
    g.axis_to_detector = j.value("axis-to-detector", 0.0);
    auto shape = j.at("image-shape").get<std::vector<int>>();
    if (shape.size() != 2) throw std::invalid_argument("geometry: image-shape must have two entries");
    g.image_height = shape[0];
    g.image_width = shape[1];
    g.pixel_size = j.at("pixel-size").get<double>();
    g.validate();
    return g;
}

void save_geometry(const Geometry& geom, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    out << geometry_to_json(geom) << "\n";
}

Geometry load_geometry(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return geometry_from_json(ss.str());
}

}  // namespace ctlearn
