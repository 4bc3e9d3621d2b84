#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

namespace pointadapt {

// Thrown for malformed or corrupt input data (files, manifests). The CLI maps
// this to exit code 2; contract violations by callers use std::invalid_argument
// and map to exit code 1.
class DataError : public std::runtime_error {
public:
    explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

inline double sigmoid(double x) {
    if (x >= 0.0) {
        return 1.0 / (1.0 + std::exp(-x));
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

// log(1 + exp(x)) without overflow for large |x|.
inline double softplus(double x) {
    if (x > 30.0) return x + std::exp(-x);
    if (x < -30.0) return std::exp(x);
    return std::log1p(std::exp(x));
}

// log(sigmoid(x)) = -softplus(-x)
inline double log_sigmoid(double x) { return -softplus(-x); }

}  // namespace pointadapt
