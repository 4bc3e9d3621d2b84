#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace pointadapt {

struct Tensor {
    std::vector<std::uint32_t> dims;
    std::vector<double> data;  // row-major, promoted from the f32 payload
};

// Binary tensor file: magic "PTAD", one version byte (1), u32 little-endian
// rank, rank u32 dims, then the payload as f32 little-endian in row-major
// order. Malformed files raise DataError naming the failing byte offset.
void write_tensor(const std::string& path, std::span<const std::uint32_t> dims,
                  std::span<const double> data);

Tensor read_tensor(const std::string& path);

}  // namespace pointadapt
