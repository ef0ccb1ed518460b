#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <vector>

#include "ctlearn/core.hpp"
#include "ctlearn/image.hpp"
#include "ctlearn/rng.hpp"

namespace ctlearn {

// Axis description in the [-1, 1]^2 phantom domain.
struct EllipseSpec {
    double value = 0.0;
    double center_x = 0.0;
    double center_y = 0.0;
    double semi_a = 0.0;
    double semi_b = 0.0;
    double rotation = 0.0;
};

inline bool ellipse_contains(const EllipseSpec& e, double x, double y) {
    const double c = std::cos(e.rotation);
    const double s = std::sin(e.rotation);
    const double dx = x - e.center_x;
    const double dy = y - e.center_y;
    const double u = dx * c + dy * s;
    const double v = -dx * s + dy * c;
    return (u * u) / (e.semi_a * e.semi_a) + (v * v) / (e.semi_b * e.semi_b) <= 1.0;
}

inline double ellipse_sum_at(const std::vector<EllipseSpec>& specs, double x, double y) {
    double acc = 0.0;
    for (const auto& e : specs)
        if (ellipse_contains(e, x, y)) acc += e.value;
    return acc;
}

// Rasterizes by pixel-centre point sampling, sum of covering amplitudes
// clamped to [0, 1]. The domain [-1, 1]^2 maps onto the full grid.
template <typename T>
Image<T> render_ellipses(const std::vector<EllipseSpec>& specs, int height, int width) {
    if (height <= 0 || width <= 0) throw std::invalid_argument("render_ellipses: shape must be positive");
    for (const auto& e : specs)
        if (e.semi_a <= 0.0 || e.semi_b <= 0.0)
            throw std::invalid_argument("render_ellipses: semi-axes must be positive");
    Image<T> img(height, width, 2.0 / height);
    for (int r = 0; r < height; ++r) {
        const double y = (0.5 * (height - 1) - r) * (2.0 / height);
        for (int c = 0; c < width; ++c) {
            const double x = (c - 0.5 * (width - 1)) * (2.0 / width);
            double v = ellipse_sum_at(specs, x, y);
            img.values.at(r, c) = static_cast<T>(std::clamp(v, 0.0, 1.0));
        }
    }
    return img;
}

// Random ellipse phantom, a pure function of (seed, shape). Draw order per
// sample: count, then per ellipse amplitude, centre, semi-axes, rotation.
inline std::vector<EllipseSpec> sample_ellipse_specs(std::uint64_t seed) {
    Rng rng(seed, /*stream=*/0x656c6c /* "ell" */);
    const int count = 1 + static_cast<int>(rng.uniform_int(10));
    std::vector<EllipseSpec> specs(count);
    for (auto& e : specs) {
        e.value = rng.uniform(0.1, 1.0);
        const double radius = std::sqrt(rng.uniform01());
        const double phi = rng.uniform(0.0, 2.0 * std::numbers::pi);
        e.center_x = radius * std::cos(phi);
        e.center_y = radius * std::sin(phi);
        e.semi_a = rng.uniform(0.05, 0.5);
        e.semi_b = rng.uniform(0.05, 0.5);
        e.rotation = rng.uniform(0.0, std::numbers::pi);
    }
    return specs;
}

template <typename T>
Image<T> sample_ellipse_phantom(std::uint64_t seed, int height, int width) {
    return render_ellipses<T>(sample_ellipse_specs(seed), height, width);
}

// Modified Shepp-Logan intensity table (Toft variant, the one MATLAB and
// ODL ship). Columns: value, a, b, x0, y0, rotation in degrees.
inline const std::vector<EllipseSpec>& shepp_logan_specs() {
    static const std::vector<EllipseSpec> specs = [] {
        constexpr std::array<std::array<double, 6>, 10> table{{
            {1.0, 0.69, 0.92, 0.0, 0.0, 0.0},
            {-0.8, 0.6624, 0.8740, 0.0, -0.0184, 0.0},
            {-0.2, 0.1100, 0.3100, 0.22, 0.0, -18.0},
            {-0.2, 0.1600, 0.4100, -0.22, 0.0, 18.0},
            {0.1, 0.2100, 0.2500, 0.0, 0.35, 0.0},
            {0.1, 0.0460, 0.0460, 0.0, 0.1, 0.0},
            {0.1, 0.0460, 0.0460, 0.0, -0.1, 0.0},
            {0.1, 0.0460, 0.0230, -0.08, -0.605, 0.0},
            {0.1, 0.0230, 0.0230, 0.0, -0.606, 0.0},
            {0.1, 0.0230, 0.0460, 0.06, -0.605, 0.0},
        }};
        std::vector<EllipseSpec> out;
        out.reserve(table.size());
        for (const auto& row : table) {
            EllipseSpec e;
            e.value = row[0];
            e.semi_a = row[1];
            e.semi_b = row[2];
            e.center_x = row[3];
            e.center_y = row[4];
            e.rotation = row[5] * std::numbers::pi / 180.0;
            out.push_back(e);
        }
        return out;
    }();
    return specs;
}

// The signed intensities already sum inside [0, 1]; no clamping applied.
template <typename T>
Image<T> shepp_logan(int height, int width) {
    const auto& specs = shepp_logan_specs();
    Image<T> img(height, width, 2.0 / height);
    for (int r = 0; r < height; ++r) {
        const double y = (0.5 * (height - 1) - r) * (2.0 / height);
        for (int c = 0; c < width; ++c) {
            const double x = (c - 0.5 * (width - 1)) * (2.0 / width);
            img.values.at(r, c) = static_cast<T>(ellipse_sum_at(specs, x, y));
        }
    }
    return img;
}

enum class NoiseKind { AdditiveGaussian, PoissonPhoton };

struct NoiseModel {
    NoiseKind kind = NoiseKind::AdditiveGaussian;
    // Relative std for gaussian, incident photon count for poisson.
    double level = 0.05;
    std::uint64_t seed = 0;
};

class PoissonDomainError : public std::runtime_error {
  public:
    explicit PoissonDomainError(const std::string& what) : std::runtime_error(what) {}
};

// Gaussian: adds iid N(0, sigma^2) with sigma = level * mean(|s|).
// Poisson: counts ~ Poisson(level * s) rescaled by 1/level; requires
// transmission-valued input in (0, 1]. Each entry draws from its own
// counter stream so results do not depend on evaluation order.
template <typename T>
Sinogram<T> apply_noise(const Sinogram<T>& s, const NoiseModel& model) {
    if (model.level <= 0.0) throw std::invalid_argument("apply_noise: level must be positive");
    Sinogram<T> out = s;
    const std::size_t n = s.values.size();
    if (model.kind == NoiseKind::AdditiveGaussian) {
        double mean_abs = 0.0;
        for (std::size_t i = 0; i < n; ++i) mean_abs += std::fabs(static_cast<double>(s.values[i]));
        mean_abs /= static_cast<double>(n);
        const double sigma = model.level * mean_abs;
        for (std::size_t i = 0; i < n; ++i) {
            Rng rng(model.seed, i);
            out.values[i] = static_cast<T>(static_cast<double>(s.values[i]) + sigma * rng.normal());
        }
    } else {
        for (std::size_t i = 0; i < n; ++i) {
            const double v = static_cast<double>(s.values[i]);
            if (!(v > 0.0) || v > 1.0)
                throw PoissonDomainError("apply_noise: poisson requires transmission values in (0, 1]");
            Rng rng(model.seed, i);
            const double counts = static_cast<double>(rng.poisson(model.level * v));
            out.values[i] = static_cast<T>(counts / model.level);
        }
    }
    return out;
}

}  // namespace ctlearn
