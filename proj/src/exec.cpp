#include "csg/exec.hpp"

#include <cmath>

#include "csg/errors.hpp"

namespace csg {

namespace {

// Edge function of segment (v0 -> v1) at p; zero on the line.
inline double edge_fn(double px, double py, double v0x, double v0y, double v1x,
                      double v1y) {
    return (v1x - v0x) * (py - v0y) - (v1y - v0y) * (px - v0x);
}

bool inside2d(const Instruction& instr, double px, double py) {
    const double dx = px - instr.x, dy = py - instr.y, r = instr.r;
    switch (instr.prim) {
        case PrimitiveKind::Circle:
            return dx * dx + dy * dy <= r * r;
        case PrimitiveKind::Square:
            // Circumscribing radius r => half-side r/sqrt(2).
            return dx * dx <= r * r / 2.0 && dy * dy <= r * r / 2.0;
        case PrimitiveKind::Triangle: {
            // Upright equilateral, apex toward decreasing row index.
            const double ax = instr.x, ay = instr.y - r;
            const double half = r * std::sqrt(3.0) / 2.0;
            const double bx = instr.x - half, by = instr.y + r / 2.0;
            const double cx = instr.x + half, cy = by;
            const double s1 = edge_fn(px, py, ax, ay, bx, by);
            const double s2 = edge_fn(px, py, bx, by, cx, cy);
            const double s3 = edge_fn(px, py, cx, cy, ax, ay);
            return (s1 >= 0 && s2 >= 0 && s3 >= 0) || (s1 <= 0 && s2 <= 0 && s3 <= 0);
        }
        default:
            return false;
    }
}

bool inside3d(const Instruction& instr, double px, double py, double pz) {
    const double dx = px - instr.x, dy = py - instr.y, dz = pz - instr.z;
    const double r = instr.r;
    switch (instr.prim) {
        case PrimitiveKind::Sphere:
            return dx * dx + dy * dy + dz * dz <= r * r;
        case PrimitiveKind::Cube: {
            // Side length r.
            const double half = r / 2.0;
            return std::abs(dx) <= half && std::abs(dy) <= half && std::abs(dz) <= half;
        }
        case PrimitiveKind::Cylinder:
            // Axis along z, radius r, extent h centered at the location.
            return dx * dx + dy * dy <= r * r && std::abs(dz) <= instr.h / 2.0;
        default:
            return false;
    }
}

}  // namespace

Raster render_primitive(const Instruction& instr, const GrammarConfig& cfg) {
    const int n = cfg.canvas_extent;
    if (!cfg.is3d()) {
        Raster out = Raster::make2d(n, n);
        for (int row = 0; row < n; ++row)
            for (int col = 0; col < n; ++col)
                out.set(row, col, inside2d(instr, col + 0.5, row + 0.5));
        return out;
    }
    Raster out = Raster::make3d(n, n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k)
                out.set(i, j, k, inside3d(instr, i + 0.5, j + 0.5, k + 0.5));
    return out;
}

Raster apply_op(OpKind kind, const Raster& b, const Raster& a) {
    if (!a.same_dims(b)) throw DimMismatch("boolean op on rasters of different dims");
    Raster out = b;
    const auto& av = a.cells();
    auto& ov = out.cells();
    switch (kind) {
        case OpKind::Union:
            for (std::size_t i = 0; i < ov.size(); ++i) ov[i] = ov[i] | av[i];
            break;
        case OpKind::Intersect:
            for (std::size_t i = 0; i < ov.size(); ++i) ov[i] = ov[i] & av[i];
            break;
        case OpKind::Subtract:
            for (std::size_t i = 0; i < ov.size(); ++i) ov[i] = ov[i] & (av[i] ^ 1);
            break;
    }
    return out;
}

ExecResult execute(const Program& p, const GrammarConfig& cfg) {
    const ValidityReport rep = validate(p, cfg);
    if (!rep.valid) throw InvalidProgram(rep);

    ExecResult res;
    ExecStack stack;
    for (const Instruction& instr : p.instructions) {
        if (instr.is_primitive()) {
            stack.push_back(render_primitive(instr, cfg));
        } else {
            Raster a = std::move(stack.back());
            stack.pop_back();
            Raster b = std::move(stack.back());
            stack.pop_back();
            stack.push_back(apply_op(instr.op, b, a));
        }
        res.trace.push_back({instr, int(stack.size()), stack.back()});
    }
    res.raster = std::move(stack.back());
    return res;
}

void advance_stack(ExecStack& stack, const Instruction& instr, const GrammarConfig& cfg) {
    if (instr.is_primitive()) {
        stack.push_back(render_primitive(instr, cfg));
    } else if (instr.is_op() && stack.size() >= 2) {
        Raster a = std::move(stack.back());
        stack.pop_back();
        Raster b = std::move(stack.back());
        stack.pop_back();
        stack.push_back(apply_op(instr.op, b, a));
    }
}

std::vector<Raster> stack_observation(const ExecStack& stack, int k,
                                      const GrammarConfig& cfg) {
    const int n = cfg.canvas_extent;
    const Raster zero = cfg.is3d() ? Raster::make3d(n, n, n) : Raster::make2d(n, n);
    std::vector<Raster> channels;
    channels.reserve(std::size_t(k));
    for (int i = 0; i < k; ++i) {
        if (i < int(stack.size()))
            channels.push_back(stack[stack.size() - 1 - std::size_t(i)]);
        else
            channels.push_back(zero);
    }
    return channels;
}

}  // namespace csg
