#pragma once

#include "markerlens/image.hpp"

namespace markerlens {

// Classic four-stage Canny: Gaussian smoothing (sigma 1.0), Sobel gradients,
// non-maximum suppression over four direction bins, then double-threshold
// hysteresis (strong >= high; weak in [low, high) kept only when 8-connected
// to a strong pixel). Edge pixels come back as 255.
//
// Throws invalid_thresholds unless 0 < low < high.
BinaryImage canny(const ImageGray& img, double low, double high);

}  // namespace markerlens
