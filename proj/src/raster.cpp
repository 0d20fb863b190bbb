#include "csg/raster.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <numeric>
#include <sstream>

#include "csg/errors.hpp"

namespace csg {

Raster Raster::make2d(int rows, int cols) {
    Raster r;
    r.rank_ = 2;
    r.dims_ = {rows, cols, 1};
    r.cells_.assign(std::size_t(rows) * cols, 0);
    return r;
}

Raster Raster::make3d(int nx, int ny, int nz) {
    Raster r;
    r.rank_ = 3;
    r.dims_ = {nx, ny, nz};
    r.cells_.assign(std::size_t(nx) * ny * nz, 0);
    return r;
}

std::size_t Raster::count() const {
    return std::size_t(std::count_if(cells_.begin(), cells_.end(),
                                     [](std::uint8_t c) { return c != 0; }));
}

namespace {

void put_u16le(std::ostream& os, std::uint16_t v) {
    char b[2] = {char(v & 0xff), char((v >> 8) & 0xff)};
    os.write(b, 2);
}

std::uint16_t get_u16le(std::istream& is) {
    unsigned char b[2];
    is.read(reinterpret_cast<char*>(b), 2);
    return std::uint16_t(b[0] | (b[1] << 8));
}

}  // namespace

void write_packed(std::ostream& os, const Raster& r) {
    os.write("CSGB", 4);
    char vr[4] = {1, char(r.rank()), 0, 0};
    os.write(vr, 4);
    put_u16le(os, std::uint16_t(r.dims()[0]));
    put_u16le(os, std::uint16_t(r.dims()[1]));
    put_u16le(os, std::uint16_t(r.dims()[2]));
    put_u16le(os, 0);
    const auto& cells = r.cells();
    std::uint8_t acc = 0;
    int nbits = 0;
    for (std::uint8_t c : cells) {
        acc = std::uint8_t((acc << 1) | (c ? 1 : 0));
        if (++nbits == 8) {
            os.put(char(acc));
            acc = 0;
            nbits = 0;
        }
    }
    if (nbits > 0) os.put(char(acc << (8 - nbits)));
}

Raster read_packed(std::istream& is) {
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, "CSGB", 4) != 0)
        throw IoError("bad raster magic");
    char vr[4];
    is.read(vr, 4);
    if (vr[0] != 1) throw IoError("unsupported raster format version");
    int rank = vr[1];
    int d0 = get_u16le(is), d1 = get_u16le(is), d2 = get_u16le(is);
    get_u16le(is);
    if (!is || (rank != 2 && rank != 3)) throw IoError("bad raster header");
    Raster r = (rank == 2) ? Raster::make2d(d0, d1) : Raster::make3d(d0, d1, d2);
    std::size_t n = r.size();
    std::size_t nbytes = (n + 7) / 8;
    std::vector<char> buf(nbytes);
    is.read(buf.data(), std::streamsize(nbytes));
    if (!is) throw IoError("truncated raster payload");
    for (std::size_t i = 0; i < n; ++i) {
        std::uint8_t byte = std::uint8_t(buf[i / 8]);
        r.cells()[i] = (byte >> (7 - (i % 8))) & 1;
    }
    return r;
}

void save_packed(const std::string& path, const Raster& r) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open for write: " + path);
    write_packed(os, r);
}

Raster load_packed(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open: " + path);
    return read_packed(is);
}

void save_pgm(const std::string& path, const Raster& r) {
    if (r.rank() != 2) throw IoError("PGM output requires a 2D raster");
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open for write: " + path);
    os << "P5\n" << r.dims()[1] << " " << r.dims()[0] << "\n255\n";
    for (std::uint8_t c : r.cells()) os.put(c ? char(255) : char(0));
}

Raster load_pgm(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open: " + path);
    std::string magic;
    int w = 0, h = 0, maxv = 0;
    is >> magic >> w >> h >> maxv;
    if (magic != "P5" || w <= 0 || h <= 0 || maxv <= 0 || maxv > 255)
        throw IoError("not a binary PGM: " + path);
    is.get();  // single whitespace after maxval
    Raster r = Raster::make2d(h, w);
    std::vector<char> buf(std::size_t(w) * h);
    is.read(buf.data(), std::streamsize(buf.size()));
    if (!is) throw IoError("truncated PGM: " + path);
    for (std::size_t i = 0; i < buf.size(); ++i)
        r.cells()[i] = std::uint8_t(buf[i]) >= 128 ? 1 : 0;
    return r;
}

}  // namespace csg
