#pragma once

#include <memory>

#include "ctlearn/core.hpp"
#include "ctlearn/geometry.hpp"

namespace ctlearn {

// Primal-space element: H x W attenuation grid with a physical pixel size.
template <typename T>
struct Image {
    NdArray<T> values;
    double pixel_size = 1.0;

    Image() = default;
    Image(int h, int w, double px) : values(Shape{h, w}), pixel_size(px) {}
    Image(NdArray<T> v, double px) : values(std::move(v)), pixel_size(px) {
        if (values.shape().size() != 2) throw std::invalid_argument("Image: values must be 2-d");
    }

    int height() const { return values.dim(0); }
    int width() const { return values.dim(1); }
};

// Data-space element: num_angles x num_detector_bins grid plus the geometry
// that produced it.
template <typename T>
struct Sinogram {
    NdArray<T> values;
    std::shared_ptr<const Geometry> geometry;

    Sinogram() = default;
    Sinogram(NdArray<T> v, std::shared_ptr<const Geometry> g) : values(std::move(v)), geometry(std::move(g)) {
        if (!geometry) throw std::invalid_argument("Sinogram: geometry required");
        if (values.shape() != Shape{geometry->num_angles(), geometry->num_detector_bins})
            throw std::invalid_argument("Sinogram: values shape does not match geometry");
    }

    int num_angles() const { return values.dim(0); }
    int num_bins() const { return values.dim(1); }
};

template <typename T>
Image<T> make_image(const Geometry& geom) {
    return Image<T>(geom.image_height, geom.image_width, geom.pixel_size);
}

template <typename T>
Sinogram<T> make_sinogram(std::shared_ptr<const Geometry> geom) {
    NdArray<T> v(Shape{geom->num_angles(), geom->num_detector_bins});
    return Sinogram<T>(std::move(v), std::move(geom));
}

}  // namespace ctlearn
