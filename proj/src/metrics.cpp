#include "csg/metrics.hpp"

#include <cmath>
#include <limits>

#include "csg/errors.hpp"
#include "csg/exec.hpp"

namespace csg {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace

EdgeMap edge_map(const Raster& r) {
    EdgeMap out = r.rank() == 2 ? Raster::make2d(r.dims()[0], r.dims()[1])
                                : Raster::make3d(r.dims()[0], r.dims()[1], r.dims()[2]);
    const auto& d = r.dims();
    auto occ = [&](int a, int b, int c) {
        if (a < 0 || b < 0 || c < 0 || a >= d[0] || b >= d[1] || c >= d[2]) return false;
        return r.rank() == 2 ? r.at(a, b) : r.at(a, b, c);
    };
    for (int a = 0; a < d[0]; ++a)
        for (int b = 0; b < d[1]; ++b)
            for (int c = 0; c < d[2]; ++c) {
                if (!occ(a, b, c)) continue;
                bool boundary = !occ(a - 1, b, c) || !occ(a + 1, b, c) ||
                                !occ(a, b - 1, c) || !occ(a, b + 1, c);
                if (r.rank() == 3)
                    boundary = boundary || !occ(a, b, c - 1) || !occ(a, b, c + 1);
                if (boundary) {
                    if (r.rank() == 2)
                        out.set(a, b, true);
                    else
                        out.set(a, b, c, true);
                }
            }
    return out;
}

namespace {

// 1D squared-distance transform (lower envelope of parabolas). Sources may
// be +inf; an all-inf row stays all-inf.
void dt1d(const double* f, double* d, int* v, double* z, int n, std::size_t fstride,
          std::size_t dstride) {
    int k = -1;
    for (int q = 0; q < n; ++q) {
        const double fq = f[std::size_t(q) * fstride];
        if (fq == kInf) continue;
        if (k < 0) {
            k = 0;
            v[0] = q;
            z[0] = -kInf;
            z[1] = kInf;
            continue;
        }
        double s;
        for (;;) {
            const double fv = f[std::size_t(v[k]) * fstride];
            s = ((fq + double(q) * q) - (fv + double(v[k]) * v[k])) /
                (2.0 * q - 2.0 * v[k]);
            if (s > z[k]) break;
            --k;
        }
        ++k;
        v[k] = q;
        z[k] = s;
        z[k + 1] = kInf;
    }
    if (k < 0) {
        for (int q = 0; q < n; ++q) d[std::size_t(q) * dstride] = kInf;
        return;
    }
    int j = 0;
    for (int q = 0; q < n; ++q) {
        while (z[j + 1] < q) ++j;
        const double dq = double(q) - v[j];
        d[std::size_t(q) * dstride] = dq * dq + f[std::size_t(v[j]) * fstride];
    }
}

}  // namespace

DistanceField distance_transform(const EdgeMap& e) {
    DistanceField out;
    out.rank = e.rank();
    out.dims = e.dims();
    const auto& d = out.dims;
    const std::size_t total = e.size();
    out.values.resize(total);
    for (std::size_t i = 0; i < total; ++i)
        out.values[i] = e.cells()[i] ? 0.0 : kInf;

    const int nmax = std::max({d[0], d[1], d[2]});
    std::vector<double> f(static_cast<std::size_t>(nmax));
    std::vector<int> v(static_cast<std::size_t>(nmax));
    std::vector<double> z(static_cast<std::size_t>(nmax) + 1);

    auto pass = [&](int axis) {
        const std::size_t stride = axis == 0   ? std::size_t(d[1]) * d[2]
                                   : axis == 1 ? std::size_t(d[2])
                                               : 1;
        const int n = d[axis];
        // Iterate over all lines along `axis`.
        for (int a = 0; a < (axis == 0 ? 1 : d[0]); ++a)
            for (int b = 0; b < (axis == 1 ? 1 : d[1]); ++b)
                for (int c = 0; c < (axis == 2 ? 1 : d[2]); ++c) {
                    const std::size_t base =
                        (std::size_t(a) * d[1] + std::size_t(b)) * d[2] + std::size_t(c);
                    double* line = out.values.data() + base;
                    for (int q = 0; q < n; ++q) f[std::size_t(q)] = line[std::size_t(q) * stride];
                    dt1d(f.data(), line, v.data(), z.data(), n, 1, stride);
                }
    };

    pass(0);
    pass(1);
    if (d[2] > 1) pass(2);

    for (double& val : out.values)
        if (val != kInf) val = std::sqrt(val);
    return out;
}

double canvas_diagonal(const Raster& r) {
    double s = 0;
    for (int axis = 0; axis < r.rank(); ++axis)
        s += double(r.dims()[axis]) * r.dims()[axis];
    return std::sqrt(s);
}

ChamferResult chamfer(const EdgeMap& x, const EdgeMap& y) {
    if (!x.same_dims(y)) throw DimMismatch("chamfer on edge maps of different dims");
    const double diag = canvas_diagonal(x);
    const std::size_t nx = x.count(), ny = y.count();
    ChamferResult res;
    if (nx == 0 || ny == 0) {
        res.normalized = 1.0;
        res.pixels = diag;
        return res;
    }
    const DistanceField dx = distance_transform(x);
    const DistanceField dy = distance_transform(y);
    double sum_xy = 0, sum_yx = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (x.cells()[i]) sum_xy += dy.values[i];
        if (y.cells()[i]) sum_yx += dx.values[i];
    }
    res.pixels = 0.5 * sum_xy / double(nx) + 0.5 * sum_yx / double(ny);
    res.normalized = res.pixels / diag;
    return res;
}

double iou(const Raster& a, const Raster& b) {
    if (!a.same_dims(b)) throw DimMismatch("iou on rasters of different dims");
    std::size_t inter = 0, uni = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const bool av = a.cells()[i] != 0, bv = b.cells()[i] != 0;
        inter += (av && bv) ? 1 : 0;
        uni += (av || bv) ? 1 : 0;
    }
    if (uni == 0) return 1.0;
    return double(inter) / double(uni);
}

double shape_reward(double chamfer_normalized, double gamma) {
    return std::pow(1.0 - chamfer_normalized, gamma);
}

double shaped_reward(const Program& p, const Raster& target, double gamma,
                     const GrammarConfig& cfg) {
    if (!validate(p, cfg).valid) return 0.0;
    const Raster rendered = execute(p, cfg).raster;
    if (rendered.empty_occupancy()) return 0.0;
    const ChamferResult cd = chamfer(edge_map(target), edge_map(rendered));
    return shape_reward(cd.normalized, gamma);
}

}  // namespace csg
