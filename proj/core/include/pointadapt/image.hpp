#pragma once

#include <vector>

namespace pointadapt {

// Channel-major, row-major real image. Intensities live in [0, 1] for
// generated scenes; augmented views may momentarily leave that range before
// the final clamp.
struct Image {
    int channels = 0;
    int height = 0;
    int width = 0;
    std::vector<double> values;  // channels * height * width

    Image() = default;
    Image(int c, int h, int w)
        : channels(c), height(h), width(w),
          values(static_cast<std::size_t>(c) * h * w, 0.0) {}

    double at(int c, int y, int x) const {
        return values[(static_cast<std::size_t>(c) * height + y) * width + x];
    }
    double& at(int c, int y, int x) {
        return values[(static_cast<std::size_t>(c) * height + y) * width + x];
    }
};

}  // namespace pointadapt
