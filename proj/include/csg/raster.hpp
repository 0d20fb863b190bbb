#ifndef CSG_RASTER_HPP
#define CSG_RASTER_HPP

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace csg {

// Boolean occupancy grid. 2D grids are indexed (row, col); 3D grids are
// indexed (i, j, k) where cell (i, j, k) covers the unit cube whose center
// is (i+0.5, j+0.5, k+0.5) in (x, y, z) coordinates. For 2D, the center of
// cell (row r, col c) is (c+0.5, r+0.5) in (x, y) coordinates.
class Raster {
public:
    Raster() = default;
    static Raster make2d(int rows, int cols);
    static Raster make3d(int nx, int ny, int nz);

    int rank() const { return rank_; }
    const std::array<int, 3>& dims() const { return dims_; }
    std::size_t size() const { return cells_.size(); }

    bool at(int a, int b) const { return cells_[std::size_t(a) * dims_[1] + b] != 0; }
    bool at(int a, int b, int c) const {
        return cells_[(std::size_t(a) * dims_[1] + b) * dims_[2] + c] != 0;
    }
    void set(int a, int b, bool v) { cells_[std::size_t(a) * dims_[1] + b] = v ? 1 : 0; }
    void set(int a, int b, int c, bool v) {
        cells_[(std::size_t(a) * dims_[1] + b) * dims_[2] + c] = v ? 1 : 0;
    }

    // Flat access, row-major (last index fastest).
    const std::vector<std::uint8_t>& cells() const { return cells_; }
    std::vector<std::uint8_t>& cells() { return cells_; }

    std::size_t count() const;
    bool empty_occupancy() const { return count() == 0; }
    bool same_dims(const Raster& other) const {
        return rank_ == other.rank_ && dims_ == other.dims_;
    }

    friend bool operator==(const Raster&, const Raster&) = default;

private:
    int rank_ = 0;
    std::array<int, 3> dims_ = {0, 0, 0};  // 2D uses dims_[2] == 1
    std::vector<std::uint8_t> cells_;
};

// Packed-bit serialization. 16-byte little-endian header:
//   bytes 0-3   magic "CSGB"
//   byte  4     format version (1)
//   byte  5     rank (2 or 3)
//   bytes 6-7   reserved (0)
//   bytes 8-9   dim0, 10-11 dim1, 12-13 dim2 (uint16)
//   bytes 14-15 reserved (0)
// followed by ceil(ncells/8) bytes, row-major, MSB-first within a byte.
void write_packed(std::ostream& os, const Raster& r);
Raster read_packed(std::istream& is);
void save_packed(const std::string& path, const Raster& r);
Raster load_packed(const std::string& path);

// Binary PGM (P5), occupied = 255, empty = 0. 2D only.
void save_pgm(const std::string& path, const Raster& r);
Raster load_pgm(const std::string& path);

}  // namespace csg

#endif
