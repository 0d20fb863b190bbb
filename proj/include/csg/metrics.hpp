#ifndef CSG_METRICS_HPP
#define CSG_METRICS_HPP

#include <array>
#include <vector>

#include "csg/grammar.hpp"
#include "csg/raster.hpp"

namespace csg {

// Edge cells are occupied cells with at least one unoccupied face neighbor
// (4-neighborhood in 2D, 6 in 3D); outside the canvas counts as unoccupied.
using EdgeMap = Raster;

EdgeMap edge_map(const Raster& r);

// Exact Euclidean distance from each cell center to the nearest edge-cell
// center, in cell units; +infinity everywhere when the edge set is empty.
struct DistanceField {
    int rank = 0;
    std::array<int, 3> dims = {0, 0, 0};
    std::vector<double> values;

    double at(int a, int b) const { return values[std::size_t(a) * dims[1] + b]; }
    double at(int a, int b, int c) const {
        return values[(std::size_t(a) * dims[1] + b) * dims[2] + c];
    }
};

DistanceField distance_transform(const EdgeMap& e);

double canvas_diagonal(const Raster& r);

struct ChamferResult {
    double pixels = 0;      // cell units
    double normalized = 0;  // pixels / canvas diagonal, in [0, 1]
};

// Symmetric Chamfer distance between two edge maps; if either edge set is
// empty the normalized distance is maximal (1).
ChamferResult chamfer(const EdgeMap& x, const EdgeMap& y);

// |a n b| / |a u b|; 1 when both rasters are empty.
double iou(const Raster& a, const Raster& b);

// Reward shaping f(x) = (1-x)^gamma applied to the normalized Chamfer
// distance; invalid programs and empty renders score 0.
double shape_reward(double chamfer_normalized, double gamma);
double shaped_reward(const Program& p, const Raster& target, double gamma,
                     const GrammarConfig& cfg);

}  // namespace csg

#endif
