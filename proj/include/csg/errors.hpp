#ifndef CSG_ERRORS_HPP
#define CSG_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace csg {

// Malformed program text (bad token, trailing garbage, misplaced stop).
struct SyntaxError : std::runtime_error {
    explicit SyntaxError(const std::string& msg) : std::runtime_error(msg) {}
};

// Parameter off the configured grid while grid enforcement is active.
struct RangeError : std::runtime_error {
    explicit RangeError(const std::string& msg) : std::runtime_error(msg) {}
};

// Rasters of different dimensions fed to a cellwise operation.
struct DimMismatch : std::runtime_error {
    explicit DimMismatch(const std::string& msg) : std::runtime_error(msg) {}
};

// Requested dataset count exceeds the number of distinct programs.
struct CapacityError : std::runtime_error {
    explicit CapacityError(const std::string& msg) : std::runtime_error(msg) {}
};

struct EmptyIndex : std::runtime_error {
    explicit EmptyIndex(const std::string& msg) : std::runtime_error(msg) {}
};

struct IoError : std::runtime_error {
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace csg

#endif
