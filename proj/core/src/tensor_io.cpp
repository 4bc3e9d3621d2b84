#include "pointadapt/tensor_io.hpp"

#include <bit>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "pointadapt/util.hpp"

namespace pointadapt {

namespace {

constexpr char kMagic[4] = {'P', 'T', 'A', 'D'};
constexpr std::uint8_t kVersion = 1;

void put_u32(std::string& out, std::uint32_t v) {
    out.push_back(static_cast<char>(v & 0xff));
    out.push_back(static_cast<char>((v >> 8) & 0xff));
    out.push_back(static_cast<char>((v >> 16) & 0xff));
    out.push_back(static_cast<char>((v >> 24) & 0xff));
}

[[noreturn]] void fail(const std::string& path, std::size_t offset, const std::string& what) {
    throw DataError(path + ": " + what + " at byte offset " + std::to_string(offset));
}

struct ByteReader {
    const std::string& path;
    const std::string& bytes;
    std::size_t pos = 0;

    std::uint8_t u8(const char* what) {
        if (pos + 1 > bytes.size()) fail(path, pos, std::string("truncated ") + what);
        return static_cast<std::uint8_t>(bytes[pos++]);
    }
    std::uint32_t u32(const char* what) {
        if (pos + 4 > bytes.size()) fail(path, pos, std::string("truncated ") + what);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) {
            v |= static_cast<std::uint32_t>(static_cast<std::uint8_t>(bytes[pos + i])) << (8 * i);
        }
        pos += 4;
        return v;
    }
};

}  // namespace

void write_tensor(const std::string& path, std::span<const std::uint32_t> dims,
                  std::span<const double> data) {
    std::uint64_t expect = 1;
    for (std::uint32_t d : dims) expect *= d;
    if (dims.empty() || expect != data.size()) {
        throw std::invalid_argument("write_tensor: dims do not match data size");
    }

    std::string out;
    out.append(kMagic, 4);
    out.push_back(static_cast<char>(kVersion));
    put_u32(out, static_cast<std::uint32_t>(dims.size()));
    for (std::uint32_t d : dims) put_u32(out, d);
    for (double x : data) {
        put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(x)));
    }

    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw DataError(path + ": cannot open for writing");
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!f) throw DataError(path + ": short write");
}

Tensor read_tensor(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw DataError(path + ": cannot open");
    std::string bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());

    ByteReader r{path, bytes};
    for (int i = 0; i < 4; ++i) {
        if (r.pos >= bytes.size()) fail(path, r.pos, "truncated magic");
        if (bytes[r.pos] != kMagic[i]) fail(path, r.pos, "bad magic");
        ++r.pos;
    }
    if (const std::uint8_t v = r.u8("version"); v != kVersion) {
        fail(path, r.pos - 1, "unsupported version " + std::to_string(v));
    }

    Tensor t;
    const std::uint32_t rank = r.u32("rank");
    if (rank == 0 || rank > 8) fail(path, r.pos - 4, "rank " + std::to_string(rank) + " out of range");
    std::uint64_t count = 1;
    for (std::uint32_t i = 0; i < rank; ++i) {
        const std::uint32_t d = r.u32("dimension");
        if (d == 0) fail(path, r.pos - 4, "zero dimension");
        count *= d;
        if (count > (1ull << 32)) fail(path, r.pos - 4, "element count overflow");
        t.dims.push_back(d);
    }

    t.data.reserve(count);
    for (std::uint64_t i = 0; i < count; ++i) {
        const std::uint32_t raw = r.u32("payload");
        t.data.push_back(static_cast<double>(std::bit_cast<float>(raw)));
    }
    if (r.pos != bytes.size()) {
        fail(path, r.pos, "trailing bytes (" + std::to_string(bytes.size() - r.pos) + ")");
    }
    return t;
}

}  // namespace pointadapt
