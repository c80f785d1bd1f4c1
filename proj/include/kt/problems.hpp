#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "kt/matrix.hpp"

namespace kt {

struct GridMeta {
    std::size_t grid_n = 0;
    std::size_t angles = 0;
    std::size_t rays = 0;
    double spacing = 0.0;               // mesh width (problem 2) or detector step (problem 3)
    std::vector<std::size_t> kept_rows; // raw projector rows that survived zero-row filtering
};

struct ProblemSpec {
    DenseMatrix a;
    DenseVector b;
    std::optional<DenseVector> true_solution;
    std::string label;
    std::optional<GridMeta> grid_meta;
};

/// The consistent 6x4 rank-3 benchmark system with solution (1,1,1,1).
inline ProblemSpec model_problem_1() {
    // clang-format off
    const double rows[6][4] = {
        {1.0,  3.0,  2.0, -1.0},
        {1.0,  2.0, -1.0, -2.0},
        {1.0, -1.0,  2.0,  3.0},
        {2.0,  1.0,  1.0,  1.0},
        {5.0,  5.0,  4.0,  1.0},
        {4.0, -1.0,  5.0,  7.0},
    };
    // clang-format on
    DenseMatrix a(6, 4);
    for (std::size_t i = 0; i < 6; ++i)
        for (std::size_t j = 0; j < 4; ++j) a(i, j) = rows[i][j];
    ProblemSpec spec;
    spec.a = std::move(a);
    spec.b = DenseVector{5.0, 0.0, 5.0, 5.0, 15.0, 15.0};
    spec.true_solution = DenseVector{1.0, 1.0, 1.0, 1.0};
    spec.label = "mp1";
    return spec;
}

namespace mp2_detail {

inline constexpr double kBeta = 10000.0;

inline double solution(double x, double y) {
    return x * std::exp(x * y) * std::sin(std::numbers::pi * x) * std::sin(std::numbers::pi * y);
}

/// Right-hand side from the manufactured solution; derivatives expanded
/// analytically.
inline double forcing(double x, double y) {
    const double pi = std::numbers::pi;
    const double e = std::exp(x * y);
    const double s = std::sin(pi * x);
    const double c = std::cos(pi * x);
    const double t = std::sin(pi * y);
    const double d = std::cos(pi * y);
    const double u = x * e * s * t;
    const double ux = e * t * (s + x * y * s + pi * x * c);
    const double uxx =
        e * t * (2.0 * y * s + x * y * y * s + 2.0 * pi * x * y * c + 2.0 * pi * c - pi * pi * x * s);
    const double uy = x * e * s * (x * t + pi * d);
    const double uyy = x * e * s * (x * x * t + 2.0 * pi * x * d - pi * pi * t);
    return std::exp(-x * y) * (y * ux - uxx) - e * (uyy + x * uy) +
           2.0 * kBeta * (x + y) * uy + (kBeta + 1.0 / (1.0 + x + y)) * u;
}

} // namespace mp2_detail

/// Five-point finite-difference system for the convection-diffusion equation
///   -(e^{-xy} u_x)_x - (e^{xy} u_y)_y + 2 beta (x+y) u_y + (beta + 1/(1+x+y)) u = g
/// on the unit square with homogeneous Dirichlet data: n x n interior points,
/// h = 1/(n+1), diffusion coefficients at half-grid midpoints, convection by
/// central differences, unknowns ordered row-major. Yields an n^2 x n^2
/// system whose sampled true solution exhibits second-order consistency.
inline ProblemSpec model_problem_2(std::size_t n) {
    detail::require(n >= 2, "model_problem_2: need n >= 2");
    const std::size_t total = n * n;
    const double h = 1.0 / static_cast<double>(n + 1);
    DenseMatrix a(total, total);
    DenseVector b(total);
    DenseVector u_true(total);

    for (std::size_t j = 1; j <= n; ++j) {
        for (std::size_t i = 1; i <= n; ++i) {
            const double x = i * h;
            const double y = j * h;
            const std::size_t k = (j - 1) * n + (i - 1);
            const double a_e = std::exp(-(x + 0.5 * h) * y);
            const double a_w = std::exp(-(x - 0.5 * h) * y);
            const double c_n = std::exp(x * (y + 0.5 * h));
            const double c_s = std::exp(x * (y - 0.5 * h));
            const double conv = mp2_detail::kBeta * (x + y) / h;

            a(k, k) = (a_e + a_w + c_n + c_s) / (h * h) + mp2_detail::kBeta + 1.0 / (1.0 + x + y);
            if (i < n) a(k, k + 1) = -a_e / (h * h);
            if (i > 1) a(k, k - 1) = -a_w / (h * h);
            if (j < n) a(k, k + n) = -c_n / (h * h) + conv;
            if (j > 1) a(k, k - n) = -c_s / (h * h) - conv;

            b[k] = mp2_detail::forcing(x, y);
            u_true[k] = mp2_detail::solution(x, y);
        }
    }

    ProblemSpec spec;
    spec.a = std::move(a);
    spec.b = std::move(b);
    spec.true_solution = std::move(u_true);
    spec.label = "mp2";
    GridMeta meta;
    meta.grid_n = n;
    meta.spacing = h;
    spec.grid_meta = std::move(meta);
    return spec;
}

namespace phantom_detail {

struct Ellipse {
    double intensity, semi_x, semi_y, center_x, center_y, angle_deg;
};

/// Canonical ten-ellipse head phantom parameters.
inline constexpr Ellipse kSheppLogan[10] = {
    {1.00, 0.6900, 0.9200, 0.00, 0.0000, 0.0},
    {-0.98, 0.6624, 0.8740, 0.00, -0.0184, 0.0},
    {-0.02, 0.1100, 0.3100, 0.22, 0.0000, -18.0},
    {-0.02, 0.1600, 0.4100, -0.22, 0.0000, 18.0},
    {0.01, 0.2100, 0.2500, 0.00, 0.3500, 0.0},
    {0.01, 0.0460, 0.0460, 0.00, 0.1000, 0.0},
    {0.01, 0.0460, 0.0460, 0.00, -0.1000, 0.0},
    {0.01, 0.0460, 0.0230, -0.08, -0.6050, 0.0},
    {0.01, 0.0230, 0.0230, 0.00, -0.6060, 0.0},
    {0.01, 0.0230, 0.0460, 0.06, -0.6050, 0.0},
};

} // namespace phantom_detail

/// Row-major n x n image of the head phantom on [-1,1]^2; each pixel value
/// sums the intensities of the ellipses containing its center.
inline DenseVector shepp_logan_phantom(std::size_t n) {
    detail::require(n >= 8, "shepp_logan_phantom: need n >= 8");
    std::vector<double> img(n * n, 0.0);
    const double step = 2.0 / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double y = 1.0 - (static_cast<double>(i) + 0.5) * step;
        for (std::size_t j = 0; j < n; ++j) {
            const double x = -1.0 + (static_cast<double>(j) + 0.5) * step;
            double v = 0.0;
            for (const auto& e : phantom_detail::kSheppLogan) {
                const double phi = e.angle_deg * std::numbers::pi / 180.0;
                const double dx = x - e.center_x;
                const double dy = y - e.center_y;
                const double xr = dx * std::cos(phi) + dy * std::sin(phi);
                const double yr = -dx * std::sin(phi) + dy * std::cos(phi);
                const double q = (xr / e.semi_x) * (xr / e.semi_x) +
                                 (yr / e.semi_y) * (yr / e.semi_y);
                if (q <= 1.0) v += e.intensity;
            }
            img[i * n + j] = v;
        }
    }
    return DenseVector(std::move(img));
}

/// Pixel index and intersection length of one ray with one pixel.
struct RayHit {
    std::size_t pixel;
    double length;
};

/// Siddon-style traversal of the n x n unit-pixel grid on [-n/2, n/2]^2.
/// The ray for (theta, t) runs along direction (cos theta, sin theta) and
/// passes through t * (-sin theta, cos theta); at theta = 0 it is the
/// horizontal line y = t. Returns the pixels it crosses with their chord
/// lengths; empty when the ray misses the grid.
inline std::vector<RayHit> ray_pixel_intersections(std::size_t n, double theta, double t) {
    const double half = static_cast<double>(n) / 2.0;
    const double ct = std::cos(theta);
    const double st = std::sin(theta);
    const double px = -st * t;
    const double py = ct * t;
    constexpr double kParallelEps = 1e-12;

    double s_min = -1e300, s_max = 1e300;
    const double origins[2] = {px, py};
    const double dirs[2] = {ct, st};
    for (int axis = 0; axis < 2; ++axis) {
        if (std::abs(dirs[axis]) > kParallelEps) {
            double s1 = (-half - origins[axis]) / dirs[axis];
            double s2 = (half - origins[axis]) / dirs[axis];
            if (s1 > s2) std::swap(s1, s2);
            s_min = std::max(s_min, s1);
            s_max = std::min(s_max, s2);
        } else if (std::abs(origins[axis]) >= half) {
            return {};
        }
    }
    if (s_min >= s_max) return {};

    // gridline crossing parameters, merged and sorted
    std::vector<double> stops;
    stops.reserve(2 * n + 4);
    stops.push_back(s_min);
    stops.push_back(s_max);
    for (int axis = 0; axis < 2; ++axis) {
        if (std::abs(dirs[axis]) <= kParallelEps) continue;
        for (std::size_t k = 0; k <= n; ++k) {
            const double line = -half + static_cast<double>(k);
            const double s = (line - origins[axis]) / dirs[axis];
            if (s > s_min && s < s_max) stops.push_back(s);
        }
    }
    std::sort(stops.begin(), stops.end());

    std::vector<RayHit> hits;
    hits.reserve(stops.size());
    for (std::size_t seg = 0; seg + 1 < stops.size(); ++seg) {
        const double len = stops[seg + 1] - stops[seg];
        if (len <= 1e-14) continue;
        const double sm = 0.5 * (stops[seg] + stops[seg + 1]);
        const double x = px + sm * ct;
        const double y = py + sm * st;
        const auto col = static_cast<std::ptrdiff_t>(std::floor(x + half));
        const auto row = static_cast<std::ptrdiff_t>(std::floor(half - y));
        if (col < 0 || row < 0 || col >= static_cast<std::ptrdiff_t>(n) ||
            row >= static_cast<std::ptrdiff_t>(n))
            continue;
        const std::size_t pixel = static_cast<std::size_t>(row) * n + static_cast<std::size_t>(col);
        if (!hits.empty() && hits.back().pixel == pixel) {
            hits.back().length += len;
        } else {
            hits.push_back({pixel, len});
        }
    }
    return hits;
}

/// Detector offset of ray k (1-based) when `rays` parallel rays span the
/// grid diagonal.
inline double detector_offset(std::size_t n, std::size_t rays, std::size_t k) {
    const double dt = static_cast<double>(n) * std::numbers::sqrt2 / static_cast<double>(rays);
    return (static_cast<double>(k) - (static_cast<double>(rays) + 1.0) / 2.0) * dt;
}

/// (angles*rays) x n^2 parallel-beam projection matrix; entry (r, j) is the
/// intersection length of ray r with pixel j. Angles at equal intervals over
/// [0, 2pi); rays that miss the grid leave all-zero rows (filtered later).
inline DenseMatrix parallel_projector(std::size_t n, std::size_t angles, std::size_t rays) {
    detail::require(n >= 1 && angles >= 1 && rays >= 1,
                    "parallel_projector: n, angles, rays must be positive");
    DenseMatrix a(angles * rays, n * n);
    std::size_t r = 0;
    for (std::size_t ja = 0; ja < angles; ++ja) {
        const double theta = 2.0 * std::numbers::pi * static_cast<double>(ja) /
                             static_cast<double>(angles);
        for (std::size_t k = 1; k <= rays; ++k, ++r) {
            const double t = detector_offset(n, rays, k);
            for (const RayHit& hit : ray_pixel_intersections(n, theta, t)) {
                a(r, hit.pixel) = hit.length;
            }
        }
    }
    return a;
}

/// Head-phantom reconstruction problem: projector rows that miss the grid
/// are removed (their indices retained in grid_meta.kept_rows) and the exact
/// sinogram b = A * phantom is formed from the filtered matrix.
inline ProblemSpec model_problem_3(std::size_t n, std::size_t angles, std::size_t rays) {
    const DenseMatrix raw = parallel_projector(n, angles, rays);
    const DenseVector phantom = shepp_logan_phantom(n);

    std::vector<std::size_t> kept;
    kept.reserve(raw.rows());
    for (std::size_t i = 0; i < raw.rows(); ++i) {
        double nrm_sq = 0.0;
        for (std::size_t j = 0; j < raw.cols(); ++j) nrm_sq += raw(i, j) * raw(i, j);
        if (nrm_sq > 0.0) kept.push_back(i);
    }
    DenseMatrix a(kept.size(), raw.cols());
    for (std::size_t r = 0; r < kept.size(); ++r)
        for (std::size_t j = 0; j < raw.cols(); ++j) a(r, j) = raw(kept[r], j);

    ProblemSpec spec;
    spec.b = matvec(a, phantom);
    spec.a = std::move(a);
    spec.true_solution = phantom;
    spec.label = "mp3";
    GridMeta meta;
    meta.grid_n = n;
    meta.angles = angles;
    meta.rays = rays;
    meta.spacing = static_cast<double>(n) * std::numbers::sqrt2 / static_cast<double>(rays);
    meta.kept_rows = std::move(kept);
    spec.grid_meta = std::move(meta);
    return spec;
}

struct Perturbed {
    DenseVector b;
    double norm = 0.0; // ||b_delta - b||_2
};

/// Shifts every component by delta * max_i |b_i|, so the perturbation norm
/// is exactly delta * max_i |b_i| * sqrt(m).
inline Perturbed perturb_uniform(const DenseVector& b, double delta) {
    detail::require(delta >= 0.0, "perturb_uniform: delta must be nonnegative");
    double peak = 0.0;
    for (double v : b) peak = std::max(peak, std::abs(v));
    const double shift = delta * peak;
    std::vector<double> out(b.size());
    for (std::size_t i = 0; i < b.size(); ++i) out[i] = b[i] + shift;
    return {DenseVector(std::move(out)), shift * std::sqrt(static_cast<double>(b.size()))};
}

namespace detail {

/// Deterministic standard normals independent of the standard library's
/// distribution internals (Box-Muller over the raw generator bits).
inline std::vector<double> standard_normals(std::size_t count, std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    auto canonical = [&gen]() {
        double u;
        do {
            u = (gen() >> 11) * 0x1.0p-53;
        } while (u <= 0.0);
        return u;
    };
    std::vector<double> out(count);
    for (std::size_t i = 0; i < count; i += 2) {
        const double u1 = canonical();
        const double u2 = canonical();
        const double radius = std::sqrt(-2.0 * std::log(u1));
        out[i] = radius * std::cos(2.0 * std::numbers::pi * u2);
        if (i + 1 < count) out[i + 1] = radius * std::sin(2.0 * std::numbers::pi * u2);
    }
    return out;
}

} // namespace detail

/// Gaussian noise scaled so that ||b_delta - b|| = eta * ||b|| exactly;
/// deterministic for a fixed seed.
inline Perturbed perturb_gaussian(const DenseVector& b, double eta, std::uint64_t seed) {
    detail::require(eta >= 0.0, "perturb_gaussian: eta must be nonnegative");
    if (eta == 0.0) return {b, 0.0};
    const double b_norm = norm2(b);
    detail::require(b_norm > 0.0, "perturb_gaussian: relative level undefined for b = 0");

    std::vector<double> w = detail::standard_normals(b.size(), seed);
    double w_norm = 0.0;
    for (double v : w) w_norm += v * v;
    w_norm = std::sqrt(w_norm);
    const double scale = eta * b_norm / w_norm;
    std::vector<double> out(b.size());
    for (std::size_t i = 0; i < b.size(); ++i) out[i] = b[i] + scale * w[i];
    return {DenseVector(std::move(out)), eta * b_norm};
}

} // namespace kt
