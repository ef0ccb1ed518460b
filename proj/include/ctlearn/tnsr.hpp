#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <vector>

#include "ctlearn/core.hpp"

namespace ctlearn {

// TNSR: magic "TNSR" | version u8 = 1 | dtype u8 (1 = f32, 2 = f64) |
// ndim u8 | reserved u8 | ndim x u32 little-endian dims | row-major payload.

enum class TnsrError {
    BadMagic,
    BadVersion,
    BadDtype,
    BadShape,
    Truncated,
    Io,
};

class TnsrFormatError : public std::runtime_error {
  public:
    TnsrFormatError(TnsrError code, const std::string& what) : std::runtime_error(what), code_(code) {}
    TnsrError code() const { return code_; }

  private:
    TnsrError code_;
};

namespace detail {

template <typename T>
constexpr std::uint8_t tnsr_dtype() {
    static_assert(std::is_same_v<T, float> || std::is_same_v<T, double>);
    return std::is_same_v<T, float> ? 1 : 2;
}

inline void put_u32_le(std::ostream& out, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v & 0xff), static_cast<unsigned char>((v >> 8) & 0xff),
                          static_cast<unsigned char>((v >> 16) & 0xff),
                          static_cast<unsigned char>((v >> 24) & 0xff)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

inline std::uint32_t get_u32_le(std::istream& in) {
    unsigned char b[4];
    if (!in.read(reinterpret_cast<char*>(b), 4))
        throw TnsrFormatError(TnsrError::Truncated, "tnsr: truncated header");
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

template <typename T>
void write_payload_le(std::ostream& out, const std::vector<T>& data) {
    // Little-endian host assumed (asserted at build configure time for the
    // supported targets); payload is written verbatim.
    out.write(reinterpret_cast<const char*>(data.data()),
              static_cast<std::streamsize>(data.size() * sizeof(T)));
}

}  // namespace detail

template <typename T>
void write_tensor(const std::string& path, const NdArray<T>& array) {
    if (array.shape().empty())
        throw TnsrFormatError(TnsrError::BadShape, "tnsr: empty shape not allowed");
    if (array.shape().size() > 255)
        throw TnsrFormatError(TnsrError::BadShape, "tnsr: too many dimensions");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw TnsrFormatError(TnsrError::Io, "tnsr: cannot open " + path + " for writing");
    out.write("TNSR", 4);
    const std::uint8_t header[4] = {1, detail::tnsr_dtype<T>(),
                                    static_cast<std::uint8_t>(array.shape().size()), 0};
    out.write(reinterpret_cast<const char*>(header), 4);
    for (int d : array.shape()) detail::put_u32_le(out, static_cast<std::uint32_t>(d));
    detail::write_payload_le(out, array.vec());
    if (!out) throw TnsrFormatError(TnsrError::Io, "tnsr: write failed for " + path);
}

struct TnsrInfo {
    std::uint8_t dtype = 0;
    Shape shape;
};

inline TnsrInfo read_tensor_header(std::istream& in, const std::string& path) {
    char magic[4];
    if (!in.read(magic, 4)) throw TnsrFormatError(TnsrError::Truncated, "tnsr: truncated file " + path);
    if (std::memcmp(magic, "TNSR", 4) != 0)
        throw TnsrFormatError(TnsrError::BadMagic, "tnsr: bad magic in " + path);
    std::uint8_t header[4];
    if (!in.read(reinterpret_cast<char*>(header), 4))
        throw TnsrFormatError(TnsrError::Truncated, "tnsr: truncated header in " + path);
    if (header[0] != 1)
        throw TnsrFormatError(TnsrError::BadVersion, "tnsr: unsupported version in " + path);
    if (header[1] != 1 && header[1] != 2)
        throw TnsrFormatError(TnsrError::BadDtype, "tnsr: unknown dtype in " + path);
    if (header[2] == 0) throw TnsrFormatError(TnsrError::BadShape, "tnsr: empty shape in " + path);
    TnsrInfo info;
    info.dtype = header[1];
    info.shape.resize(header[2]);
    for (auto& d : info.shape) {
        const std::uint32_t v = detail::get_u32_le(in);
        if (v == 0) throw TnsrFormatError(TnsrError::BadShape, "tnsr: zero dimension in " + path);
        d = static_cast<int>(v);
    }
    return info;
}

// Reads a tensor, converting the payload to T when the stored dtype differs.
template <typename T>
NdArray<T> read_tensor(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw TnsrFormatError(TnsrError::Io, "tnsr: cannot open " + path);
    const TnsrInfo info = read_tensor_header(in, path);
    const std::size_t n = numel(info.shape);
    auto read_exact = [&](char* dst, std::size_t bytes) {
        if (!in.read(dst, static_cast<std::streamsize>(bytes)))
            throw TnsrFormatError(TnsrError::Truncated, "tnsr: truncated payload in " + path);
    };
    if (info.dtype == detail::tnsr_dtype<T>()) {
        std::vector<T> data(n);
        read_exact(reinterpret_cast<char*>(data.data()), n * sizeof(T));
        return NdArray<T>(info.shape, std::move(data));
    }
    if (info.dtype == 1) {
        std::vector<float> raw(n);
        read_exact(reinterpret_cast<char*>(raw.data()), n * sizeof(float));
        std::vector<T> data(n);
        for (std::size_t i = 0; i < n; ++i) data[i] = static_cast<T>(raw[i]);
        return NdArray<T>(info.shape, std::move(data));
    }
    std::vector<double> raw(n);
    read_exact(reinterpret_cast<char*>(raw.data()), n * sizeof(double));
    std::vector<T> data(n);
    for (std::size_t i = 0; i < n; ++i) data[i] = static_cast<T>(raw[i]);
    return NdArray<T>(info.shape, std::move(data));
}

inline TnsrInfo read_tensor_info(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw TnsrFormatError(TnsrError::Io, "tnsr: cannot open " + path);
    return read_tensor_header(in, path);
}

}  // namespace ctlearn
