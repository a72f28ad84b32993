// SPDX-License-Identifier: Apache-2.0
//
// SDT1 binary tensor container: magic "SDT1", u32 rank, u64 extents,
// little-endian float64 payload. Used for checkpoints and test fixtures.
#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>

#include "suredip/core/errors.hpp"
#include "suredip/core/tensor.hpp"

namespace suredip {

inline void write_tensor(const std::string& path, const Tensor& t) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("write_tensor: cannot open " + path);
    f.write("SDT1", 4);
    const std::uint32_t rank = static_cast<std::uint32_t>(t.rank());
    f.write(reinterpret_cast<const char*>(&rank), sizeof(rank));
    for (std::size_t e : t.shape()) {
        const std::uint64_t ext = e;
        f.write(reinterpret_cast<const char*>(&ext), sizeof(ext));
    }
    f.write(reinterpret_cast<const char*>(t.data()),
            static_cast<std::streamsize>(t.size() * sizeof(double)));
    if (!f) throw IoError("write_tensor: short write to " + path);
}

inline Tensor read_tensor(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError("read_tensor: cannot open " + path);
    char magic[4];
    f.read(magic, 4);
    if (!f || std::memcmp(magic, "SDT1", 4) != 0)
        throw IoError("read_tensor: bad magic in " + path);
    std::uint32_t rank = 0;
    f.read(reinterpret_cast<char*>(&rank), sizeof(rank));
    if (!f || rank > 8) throw IoError("read_tensor: bad rank in " + path);
    std::vector<std::size_t> shape(rank);
    for (std::uint32_t i = 0; i < rank; ++i) {
        std::uint64_t ext = 0;
        f.read(reinterpret_cast<char*>(&ext), sizeof(ext));
        if (!f || ext == 0) throw IoError("read_tensor: bad extent in " + path);
        shape[i] = static_cast<std::size_t>(ext);
    }
    Tensor t(shape);
    f.read(reinterpret_cast<char*>(t.data()),
           static_cast<std::streamsize>(t.size() * sizeof(double)));
    if (!f) throw IoError("read_tensor: truncated payload in " + path);
    return t;
}

}  // namespace suredip
