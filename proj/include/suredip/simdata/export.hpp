// SPDX-License-Identifier: Apache-2.0
//
// Visual exports: 8-bit grayscale PGM (P5) of the complex magnitude,
// min-max windowed.
#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <string>
#include <vector>

#include "suredip/core/errors.hpp"
#include "suredip/core/tensor.hpp"

namespace suredip {

inline void write_magnitude_pgm(const std::string& path, const Tensor& image) {
    if (image.rank() != 3 || image.extent(0) != 2)
        throw ShapeError("write_magnitude_pgm: need [2,H,W], got " + image.shape_str());
    const std::size_t h = image.extent(1), w = image.extent(2);
    std::vector<double> mag(h * w);
    const double* re = image.data();
    const double* im = image.data() + h * w;
    double lo = 0.0, hi = 0.0;
    for (std::size_t i = 0; i < h * w; ++i) {
        mag[i] = std::sqrt(re[i] * re[i] + im[i] * im[i]);
        if (i == 0) lo = hi = mag[0];
        lo = std::min(lo, mag[i]);
        hi = std::max(hi, mag[i]);
    }
    const double span = hi > lo ? hi - lo : 1.0;
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("write_magnitude_pgm: cannot open " + path);
    f << "P5\n" << w << " " << h << "\n255\n";
    for (std::size_t i = 0; i < h * w; ++i) {
        const double v = (mag[i] - lo) / span;
        const int b = std::clamp(static_cast<int>(std::lround(v * 255.0)), 0, 255);
        f.put(static_cast<char>(b));
    }
    if (!f) throw IoError("write_magnitude_pgm: short write to " + path);
}

}  // namespace suredip
