// SPDX-License-Identifier: Apache-2.0
//
// Synthetic complex-valued ground-truth images. Pixel centers map to
// [-1,1]^2 with x_j = (2j+1)/W - 1 and y_i = 1 - (2i+1)/H (row 0 on top).
// Magnitudes are normalized so both channels lie in [-1,1].
#pragma once

#include <cmath>
#include <string>

#include "suredip/core/tensor.hpp"

namespace suredip {

struct Phantom {
    Tensor image;      // [2,H,W]
    std::string name;
    double peak = 1.0; // max |value| over both channels, PSNR reference
};

namespace detail {

struct EllipseSpec {
    double intensity, a, b, x0, y0, phi_deg;
};

// The standard published Shepp-Logan ellipse table.
inline const EllipseSpec* shepp_logan_table(std::size_t& count) {
    static const EllipseSpec table[10] = {
        {2.0, 0.69, 0.92, 0.0, 0.0, 0.0},
        {-0.98, 0.6624, 0.8740, 0.0, -0.0184, 0.0},
        {-0.02, 0.1100, 0.3100, 0.22, 0.0, -18.0},
        {-0.02, 0.1600, 0.4100, -0.22, 0.0, 18.0},
        {0.01, 0.2100, 0.2500, 0.0, 0.35, 0.0},
        {0.01, 0.0460, 0.0460, 0.0, 0.1, 0.0},
        {0.01, 0.0460, 0.0460, 0.0, -0.1, 0.0},
        {0.01, 0.0460, 0.0230, -0.08, -0.605, 0.0},
        {0.01, 0.0230, 0.0230, 0.0, -0.606, 0.0},
        {0.01, 0.0230, 0.0460, 0.06, -0.605, 0.0},
    };
    count = 10;
    return table;
}

inline double ellipse_sum(double x, double y) {
    std::size_t count = 0;
    const EllipseSpec* table = shepp_logan_table(count);
    double v = 0.0;
    for (std::size_t i = 0; i < count; ++i) {
        const EllipseSpec& e = table[i];
        const double phi = e.phi_deg * 3.141592653589793238462643383279 / 180.0;
        const double dx = x - e.x0, dy = y - e.y0;
        const double xr = std::cos(phi) * dx + std::sin(phi) * dy;
        const double yr = -std::sin(phi) * dx + std::cos(phi) * dy;
        if ((xr * xr) / (e.a * e.a) + (yr * yr) / (e.b * e.b) <= 1.0) v += e.intensity;
    }
    return v;
}

struct BlobSpec {
    double amplitude, x0, y0, sigma;
};

inline double blob_sum(double x, double y) {
    static const BlobSpec blobs[7] = {
        {1.00, -0.35, 0.30, 0.28}, {0.80, 0.40, 0.35, 0.22},  {-0.50, 0.05, -0.05, 0.18},
        {0.65, -0.30, -0.45, 0.20}, {0.90, 0.45, -0.40, 0.25}, {-0.35, -0.55, -0.10, 0.12},
        {0.55, 0.00, 0.62, 0.15},
    };
    double v = 0.0;
    for (const BlobSpec& b : blobs) {
        const double dx = x - b.x0, dy = y - b.y0;
        v += b.amplitude * std::exp(-(dx * dx + dy * dy) / (2.0 * b.sigma * b.sigma));
    }
    return v;
}

// Smooth low-order phase field with values in [-1,1].
inline double phase_field(double x, double y) {
    return 0.7 * std::sin(1.1 * 3.141592653589793 * x + 0.4) *
               std::cos(0.8 * 3.141592653589793 * y - 0.2) +
           0.3 * x * y;
}

}  // namespace detail

inline Phantom make_phantom(const std::string& name, std::size_t height, std::size_t width,
                            double phase_amplitude) {
    if (height < 16 || width < 16)
        throw ShapeError("make_phantom: extents must be >= 16");
    double (*field)(double, double) = nullptr;
    if (name == "shepp_logan") field = &detail::ellipse_sum;
    else if (name == "blobs") field = &detail::blob_sum;
    else throw ConfigError("make_phantom: unknown phantom '" + name + "'", "phantom.name");

    Tensor mag({height, width});
    for (std::size_t i = 0; i < height; ++i) {
        const double y = 1.0 - (2.0 * static_cast<double>(i) + 1.0) / static_cast<double>(height);
        for (std::size_t j = 0; j < width; ++j) {
            const double x = (2.0 * static_cast<double>(j) + 1.0) / static_cast<double>(width) - 1.0;
            mag[i * width + j] = field(x, y);
        }
    }
    const double m = max_abs(mag);
    if (m > 0.0)
        for (std::size_t i = 0; i < mag.size(); ++i) mag[i] /= m;

    Phantom p;
    p.name = name;
    p.image = Tensor({2, height, width});
    double* re = p.image.data();
    double* im = re + height * width;
    for (std::size_t i = 0; i < height; ++i) {
        const double y = 1.0 - (2.0 * static_cast<double>(i) + 1.0) / static_cast<double>(height);
        for (std::size_t j = 0; j < width; ++j) {
            const double x = (2.0 * static_cast<double>(j) + 1.0) / static_cast<double>(width) - 1.0;
            const double phase = phase_amplitude == 0.0
                                     ? 0.0
                                     : phase_amplitude * detail::phase_field(x, y);
            const double v = mag[i * width + j];
            re[i * width + j] = v * std::cos(phase);
            im[i * width + j] = phase == 0.0 ? 0.0 : v * std::sin(phase);
        }
    }
    p.peak = max_abs(p.image);
    if (p.peak <= 0.0) throw StateError("make_phantom: degenerate all-zero phantom");
    return p;
}

}  // namespace suredip
