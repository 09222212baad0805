#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace attrforge {

/// Base class for all library errors.
class error : public std::runtime_error {
public:
    explicit error(const std::string& what) : std::runtime_error(what) {}
};

/// A trajectory left the representable range (coordinate above the
/// blow-up limit or non-finite). Carries the offending point index.
class blow_up_error : public error {
public:
    blow_up_error(std::size_t point_index, const std::string& what)
        : error(what), point_index(point_index) {}
    std::size_t point_index;
};

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw error(msg);
}

inline constexpr double kBlowUpLimit = 1e12;

/// Complex phase spaces are represented as 2n real coordinates; bounds
/// that depend on the real dimension double n in the complex case.
enum class ScalarField { real_field, complex_as_2n };

}  // namespace attrforge
