#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "ctlearn/core.hpp"
#include "ctlearn/geometry.hpp"
#include "ctlearn/image.hpp"
#include "ctlearn/rng.hpp"

namespace ctlearn {

namespace detail {

// Clip parametrized line o + t*d against [-hw, hw] x [-hh, hh].
inline bool clip_to_rect(double ox, double oy, double dx, double dy, double hw, double hh,
                         double& t0, double& t1) {
    auto slab = [&](double o, double d, double lo, double hi) {
        if (std::fabs(d) < 1e-300) return o >= lo && o <= hi;
        double ta = (lo - o) / d;
        double tb = (hi - o) / d;
        if (ta > tb) std::swap(ta, tb);
        if (ta > t0) t0 = ta;
        if (tb < t1) t1 = tb;
        return t0 < t1;
    };
    return slab(ox, dx, -hw, hw) && slab(oy, dy, -hh, hh);
}

inline void ray_origin_direction(const Geometry& g, int angle, int bin, double& ox, double& oy,
                                 double& dx, double& dy, double& tmin, double& tmax) {
    const double c = std::cos(g.angles[angle]);
    const double s = std::sin(g.angles[angle]);
    const double u = g.detector_pos(bin);
    if (g.beam == BeamKind::Parallel) {
        // Ray offset u along the normal (c, s), direction (-s, c).
        ox = u * c;
        oy = u * s;
        dx = -s;
        dy = c;
        const double reach = std::hypot(g.image_half_width(), g.image_half_height()) +
                             0.5 * g.detector_extent + g.pixel_size;
        tmin = -reach;
        tmax = reach;
    } else {
        const double sx = g.src_to_axis * c;
        const double sy = g.src_to_axis * s;
        const double bx = -g.axis_to_detector * c - u * s;
        const double by = -g.axis_to_detector * s + u * c;
        const double len = std::hypot(bx - sx, by - sy);
        ox = sx;
        oy = sy;
        dx = (bx - sx) / len;
        dy = (by - sy) / len;
        tmin = 0.0;
        tmax = len;
    }
}

// Enumerates the quadrature samples of one ray. Every sample touches the
// four bilinear neighbours of its position (clamped to edge pixels, so a
// constant image integrates to the exact chord length). The functor is
// called as f(flat_index, weight) where weight already carries the step
// length; forward and adjoint walk the exact same list, which makes the
// pair an exact matrix transpose.
template <typename F>
inline void for_each_ray_sample(const Geometry& g, int angle, int bin, F&& f) {
    double ox, oy, dx, dy, t0, t1;
    ray_origin_direction(g, angle, bin, ox, oy, dx, dy, t0, t1);
    if (!clip_to_rect(ox, oy, dx, dy, g.image_half_width(), g.image_half_height(), t0, t1)) return;
    const double length = t1 - t0;
    if (!(length > 0.0)) return;
    const double target_step = 0.5 * g.pixel_size;
    const int n = std::max(1, static_cast<int>(std::ceil(length / target_step)));
    const double h = length / n;
    const int rows = g.image_height;
    const int cols = g.image_width;
    const double inv_p = 1.0 / g.pixel_size;
    for (int k = 0; k < n; ++k) {
        const double t = t0 + (k + 0.5) * h;
        const double x = ox + t * dx;
        const double y = oy + t * dy;
        // Continuous pixel coordinates; integer values land on pixel centres,
        // row 0 at the top of the image.
        const double px = x * inv_p + 0.5 * (cols - 1);
        const double py = 0.5 * (rows - 1) - y * inv_p;
        int ix;
        double fx;
        if (cols == 1) {
            ix = 0;
            fx = 0.0;
        } else {
            ix = static_cast<int>(std::floor(px));
            fx = px - ix;
            if (ix < 0) { ix = 0; fx = 0.0; }
            if (ix > cols - 2) { ix = cols - 2; fx = 1.0; }
        }
        int iy;
        double fy;
        if (rows == 1) {
            iy = 0;
            fy = 0.0;
        } else {
            iy = static_cast<int>(std::floor(py));
            fy = py - iy;
            if (iy < 0) { iy = 0; fy = 0.0; }
            if (iy > rows - 2) { iy = rows - 2; fy = 1.0; }
        }
        const std::size_t base = static_cast<std::size_t>(iy) * cols + ix;
        const int right = cols == 1 ? 0 : 1;
        const std::size_t down = rows == 1 ? 0 : static_cast<std::size_t>(cols);
        f(base, (1.0 - fx) * (1.0 - fy) * h);
        f(base + right, fx * (1.0 - fy) * h);
        f(base + down, (1.0 - fx) * fy * h);
        f(base + down + right, fx * fy * h);
    }
}

template <typename T>
void forward_into(const Geometry& g, std::span<const T> image, std::span<T> sino) {
    const int nb = g.num_detector_bins;
    for (int a = 0; a < g.num_angles(); ++a) {
        for (int b = 0; b < nb; ++b) {
            double acc = 0.0;
            for_each_ray_sample(g, a, b, [&](std::size_t idx, double w) {
                acc += w * static_cast<double>(image[idx]);
            });
            sino[static_cast<std::size_t>(a) * nb + b] = static_cast<T>(acc);
        }
    }
}

template <typename T>
void adjoint_into(const Geometry& g, std::span<const T> sino, std::span<T> image) {
    std::fill(image.begin(), image.end(), T(0));
    const int nb = g.num_detector_bins;
    for (int a = 0; a < g.num_angles(); ++a) {
        for (int b = 0; b < nb; ++b) {
            const double v = static_cast<double>(sino[static_cast<std::size_t>(a) * nb + b]);
            if (v == 0.0) continue;
            for_each_ray_sample(g, a, b, [&](std::size_t idx, double w) {
                image[idx] += static_cast<T>(w * v);
            });
        }
    }
}

}  // namespace detail

// Line-integral forward model (Joseph-style ray-driven sampling, half-pixel
// steps, bilinear interpolation). Values carry physical length units.
template <typename T>
Sinogram<T> ray_transform(const Image<T>& f, const Geometry& geom) {
    if (f.height() != geom.image_height || f.width() != geom.image_width)
        throw std::invalid_argument("ray_transform: image shape does not match geometry");
    auto sg = std::make_shared<Geometry>(geom);
    auto out = make_sinogram<T>(sg);
    detail::forward_into<T>(geom, f.values.span(), out.values.span());
    return out;
}

// Exact algebraic transpose of ray_transform.
template <typename T>
Image<T> back_projection(const Sinogram<T>& s, const Geometry& geom) {
    if (s.num_angles() != geom.num_angles() || s.num_bins() != geom.num_detector_bins)
        throw std::invalid_argument("back_projection: sinogram shape does not match geometry");
    auto out = make_image<T>(geom);
    detail::adjoint_into<T>(geom, s.values.span(), out.values.span());
    return out;
}

// Beer-Lambert transmission model: exp(-mu * P(f)) per detector bin.
template <typename T>
Sinogram<T> beer_lambert_forward(const Image<T>& f, const Geometry& geom, double mu) {
    if (mu <= 0.0) throw std::invalid_argument("beer_lambert_forward: mu must be positive");
    auto s = ray_transform(f, geom);
    for (auto& v : s.values.vec()) v = static_cast<T>(std::exp(-mu * static_cast<double>(v)));
    return s;
}

// Adjoint of the derivative of the transmission model at f applied to g:
// -mu * P^T(exp(-mu * P(f)) .* g).
template <typename T>
Image<T> beer_lambert_derivative_adjoint(const Image<T>& f, const Sinogram<T>& g,
                                         const Geometry& geom, double mu) {
    auto att = beer_lambert_forward(f, geom, mu);
    check_same_shape(att.values, g.values, "beer_lambert_derivative_adjoint");
    for (std::size_t i = 0; i < att.values.size(); ++i) att.values[i] *= g.values[i];
    auto out = back_projection(att, geom);
    for (auto& v : out.values.vec()) v = static_cast<T>(-mu * static_cast<double>(v));
    return out;
}

struct OpCounters {
    long forward_calls = 0;
    long adjoint_calls = 0;
};

// Type-erased linear operator handle. The adjoint must be the exact
// transpose of the forward map; autodiff trusts this contract and the
// projector test suite enforces it.
template <typename T>
struct LinearOperator {
    Shape domain;
    Shape range;
    std::string name;
    std::function<void(std::span<const T>, std::span<T>)> apply;
    std::function<void(std::span<const T>, std::span<T>)> apply_adjoint;
    std::shared_ptr<OpCounters> counters = std::make_shared<OpCounters>();

    LinearOperator transposed() const {
        LinearOperator t;
        t.domain = range;
        t.range = domain;
        t.name = name + "^T";
        t.apply = apply_adjoint;
        t.apply_adjoint = apply;
        t.counters = counters;
        return t;
    }
};

// Non-linear operator handle; backward uses the adjoint of the derivative
// linearized at the forward-pass point.
template <typename T>
struct NonlinearOperator {
    Shape domain;
    Shape range;
    std::string name;
    std::function<void(std::span<const T>, std::span<T>)> apply;
    // (linearization point, cotangent) -> domain-shaped result
    std::function<void(std::span<const T>, std::span<const T>, std::span<T>)> derivative_adjoint;
    std::shared_ptr<OpCounters> counters = std::make_shared<OpCounters>();
};

template <typename T>
LinearOperator<T> ray_transform_operator(const Geometry& geom) {
    LinearOperator<T> op;
    op.domain = {geom.image_height, geom.image_width};
    op.range = {geom.num_angles(), geom.num_detector_bins};
    op.name = "ray_transform";
    auto counters = op.counters;
    Geometry g = geom;
    op.apply = [g, counters](std::span<const T> in, std::span<T> out) {
        ++counters->forward_calls;
        detail::forward_into<T>(g, in, out);
    };
    op.apply_adjoint = [g, counters](std::span<const T> in, std::span<T> out) {
        ++counters->adjoint_calls;
        detail::adjoint_into<T>(g, in, out);
    };
    return op;
}

template <typename T>
LinearOperator<T> identity_operator(Shape shape) {
    LinearOperator<T> op;
    op.domain = shape;
    op.range = shape;
    op.name = "identity";
    auto counters = op.counters;
    op.apply = [counters](std::span<const T> in, std::span<T> out) {
        ++counters->forward_calls;
        std::copy(in.begin(), in.end(), out.begin());
    };
    op.apply_adjoint = [counters](std::span<const T> in, std::span<T> out) {
        ++counters->adjoint_calls;
        std::copy(in.begin(), in.end(), out.begin());
    };
    return op;
}

template <typename T>
LinearOperator<T> scaling_operator(Shape shape, T alpha) {
    LinearOperator<T> op;
    op.domain = shape;
    op.range = shape;
    op.name = "scaling";
    auto counters = op.counters;
    op.apply = [alpha, counters](std::span<const T> in, std::span<T> out) {
        ++counters->forward_calls;
        for (std::size_t i = 0; i < in.size(); ++i) out[i] = alpha * in[i];
    };
    op.apply_adjoint = op.apply;
    return op;
}

template <typename T>
NonlinearOperator<T> beer_lambert_operator(const Geometry& geom, double mu) {
    if (mu <= 0.0) throw std::invalid_argument("beer_lambert_operator: mu must be positive");
    NonlinearOperator<T> op;
    op.domain = {geom.image_height, geom.image_width};
    op.range = {geom.num_angles(), geom.num_detector_bins};
    op.name = "beer_lambert";
    auto counters = op.counters;
    Geometry g = geom;
    op.apply = [g, mu, counters](std::span<const T> in, std::span<T> out) {
        ++counters->forward_calls;
        detail::forward_into<T>(g, in, out);
        for (auto& v : out) v = static_cast<T>(std::exp(-mu * static_cast<double>(v)));
    };
    op.derivative_adjoint = [g, mu, counters](std::span<const T> point, std::span<const T> cotangent,
                                              std::span<T> out) {
        ++counters->adjoint_calls;
        std::vector<T> tmp(cotangent.size());
        detail::forward_into<T>(g, point, std::span<T>(tmp));
        for (std::size_t i = 0; i < tmp.size(); ++i)
            tmp[i] = static_cast<T>(std::exp(-mu * static_cast<double>(tmp[i])) * cotangent[i]);
        detail::adjoint_into<T>(g, std::span<const T>(tmp), out);
        for (auto& v : out) v = static_cast<T>(-mu * static_cast<double>(v));
    };
    return op;
}

// Power-method estimate of the largest singular value. Deterministic for a
// fixed seed; the start vector comes from the counter-based generator.
template <typename T>
double operator_norm_estimate(const LinearOperator<T>& op, int iterations, std::uint64_t seed = 0) {
    if (iterations < 10) throw std::invalid_argument("operator_norm_estimate: iterations must be >= 10");
    const std::size_t n = numel(op.domain);
    const std::size_t m = numel(op.range);
    std::vector<T> v(n), w(m), back(n);
    Rng rng(seed, /*stream=*/0x6f70 /* "op" */);
    for (auto& x : v) x = static_cast<T>(rng.uniform(-1.0, 1.0));
    double estimate = 0.0;
    for (int it = 0; it < iterations; ++it) {
        double nv = norm2(std::span<const T>(v));
        if (nv == 0.0) return 0.0;
        for (auto& x : v) x = static_cast<T>(x / nv);
        op.apply(v, std::span<T>(w));
        estimate = norm2(std::span<const T>(w));
        op.apply_adjoint(w, std::span<T>(back));
        v.swap(back);
    }
    return estimate;
}

template <typename T>
double operator_norm_estimate(const Geometry& geom, int iterations, std::uint64_t seed = 0) {
    return operator_norm_estimate(ray_transform_operator<T>(geom), iterations, seed);
}

}  // namespace ctlearn
