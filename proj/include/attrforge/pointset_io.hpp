#pragma once

#include <charconv>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include "attrforge/common.hpp"
#include "attrforge/metric.hpp"

namespace attrforge {

/// Shortest round-trip decimal text for a double.
inline std::string format_double(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view s) {
    double v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    require(res.ec == std::errc(), "cannot parse number: " + std::string(s));
    return v;
}

/// RFC-4180 flavored CSV: comma separated, CRLF line endings. Numeric
/// fields never need quoting.
inline std::string to_csv(const FinitePointSet& g) {
    std::string out;
    for (std::size_t i = 0; i < g.size(); ++i) {
        const auto p = g.point(i);
        for (int c = 0; c < g.dim; ++c) {
            if (c) out += ',';
            out += format_double(p[c]);
        }
        out += "\r\n";
    }
    return out;
}

inline void write_csv(const std::string& path, const FinitePointSet& g) {
    std::ofstream f(path, std::ios::binary);
    require(f.good(), "cannot open for writing: " + path);
    const auto body = to_csv(g);
    f.write(body.data(), std::streamsize(body.size()));
    require(f.good(), "write failed: " + path);
}

inline FinitePointSet read_csv(const std::string& path,
                               Metric metric = Metric::euclidean) {
    std::ifstream f(path, std::ios::binary);
    require(f.good(), "cannot open: " + path);
    std::string line;
    std::vector<double> rows;
    int dim = -1;
    while (std::getline(f, line)) {
        while (!line.empty() && (line.back() == '\r' || line.back() == '\n'))
            line.pop_back();
        if (line.empty()) continue;
        int cols = 0;
        std::size_t start = 0;
        while (start <= line.size()) {
            std::size_t comma = line.find(',', start);
            if (comma == std::string::npos) comma = line.size();
            rows.push_back(parse_double(std::string_view(line).substr(start, comma - start)));
            ++cols;
            start = comma + 1;
            if (comma == line.size()) break;
        }
        if (dim < 0) dim = cols;
        require(cols == dim, "ragged CSV row in " + path);
    }
    require(dim > 0, "empty CSV: " + path);
    return FinitePointSet::from_rows(dim, std::move(rows), metric);
}

// Binary layout: magic "ATRF", u16 version = 1, u32 dim, u64 count, then
// row-major little-endian IEEE-754 f64.
namespace detail {
inline void put_bytes(std::string& out, const void* p, std::size_t n) {
    out.append(static_cast<const char*>(p), n);
}
template <class T>
void put_le(std::string& out, T v) {
    unsigned char b[sizeof(T)];
    std::memcpy(b, &v, sizeof(T));
#if defined(__BYTE_ORDER__) && __BYTE_ORDER__ == __ORDER_BIG_ENDIAN__
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(b[i], b[sizeof(T) - 1 - i]);
#endif
    put_bytes(out, b, sizeof(T));
}
template <class T>
T get_le(const unsigned char* p) {
    unsigned char b[sizeof(T)];
    std::memcpy(b, p, sizeof(T));
#if defined(__BYTE_ORDER__) && __BYTE_ORDER__ == __ORDER_BIG_ENDIAN__
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(b[i], b[sizeof(T) - 1 - i]);
#endif
    T v;
    std::memcpy(&v, b, sizeof(T));
    return v;
}
}  // namespace detail

inline std::string to_binary(const FinitePointSet& g) {
    std::string out;
    out += "ATRF";
    detail::put_le<std::uint16_t>(out, 1);
    detail::put_le<std::uint32_t>(out, std::uint32_t(g.dim));
    detail::put_le<std::uint64_t>(out, std::uint64_t(g.size()));
    for (double v : g.data) {
        std::uint64_t bits;
        std::memcpy(&bits, &v, 8);
        detail::put_le<std::uint64_t>(out, bits);
    }
    return out;
}

inline void write_binary(const std::string& path, const FinitePointSet& g) {
    std::ofstream f(path, std::ios::binary);
    require(f.good(), "cannot open for writing: " + path);
    const auto body = to_binary(g);
    f.write(body.data(), std::streamsize(body.size()));
    require(f.good(), "write failed: " + path);
}

inline FinitePointSet from_binary(const std::string& bytes,
                                  Metric metric = Metric::euclidean) {
    require(bytes.size() >= 18, "truncated point-set blob");
    require(bytes.compare(0, 4, "ATRF") == 0, "bad magic, expected ATRF");
    const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
    const auto version = detail::get_le<std::uint16_t>(p + 4);
    require(version == 1, "unsupported version " + std::to_string(version));
    const auto dim = detail::get_le<std::uint32_t>(p + 6);
    const auto count = detail::get_le<std::uint64_t>(p + 10);
    require(dim > 0, "bad dimension");
    require(bytes.size() == 18 + 8 * dim * count, "size mismatch in point-set blob");
    FinitePointSet g(int(dim), metric);
    g.data.resize(std::size_t(dim) * count);
    for (std::size_t i = 0; i < g.data.size(); ++i) {
        const auto bits = detail::get_le<std::uint64_t>(p + 18 + 8 * i);
        std::memcpy(&g.data[i], &bits, 8);
    }
    return g;
}

inline FinitePointSet read_binary(const std::string& path,
                                  Metric metric = Metric::euclidean) {
    std::ifstream f(path, std::ios::binary);
    require(f.good(), "cannot open: " + path);
    std::ostringstream ss;
    ss << f.rdbuf();
    return from_binary(ss.str(), metric);
}

}  // namespace attrforge
