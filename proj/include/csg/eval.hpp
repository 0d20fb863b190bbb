#ifndef CSG_EVAL_HPP
#define CSG_EVAL_HPP

#include <array>
#include <map>
#include <string>
#include <vector>

#include "csg/grammar.hpp"
#include "csg/raster.hpp"
#include "csg/search.hpp"

namespace csg {

struct EvalItem {
    int index = 0;
    double cd_pixels = 0;
    double cd_normalized = 0;
    double iou = 0;
    int program_length = 0;
    Program program;  // best-of-beam, refined when requested
};

struct EvalReport {
    int beam_width = 1;
    int refine_iters = 0;
    std::vector<EvalItem> items;
    double mean_cd_pixels = 0;
    double mean_cd_normalized = 0;
    double mean_iou = 0;
    double mean_length = 0;

    void write_csv(const std::string& path) const;
    std::string summary() const;
};

// Per target: beam_search(k), pick the beam program with minimal Chamfer
// distance to the target, refine it for refine_iters cycles, record metrics.
// Invalid candidates (possible with the mask off) score as an empty render.
EvalReport eval_reconstruction(const TokenPolicy& policy, const std::vector<Raster>& targets,
                               int k, int refine_iters, const GrammarConfig& cfg,
                               bool grammar_mask = true);

struct Detection {
    Instruction instruction;            // the primitive
    std::array<double, 6> bbox{};       // x0,y0,z0,x1,y1,z1
    double score = 0;                   // beam occurrence count / k
};

// Monte-Carlo detection scores: each distinct primitive appearing in any of
// the k beam programs scores the fraction of beam programs containing it.
std::vector<Detection> detection_scores(const TokenPolicy& policy, const Raster& target,
                                        int k, bool grammar_mask = true);

// Axis-aligned box overlap; 2D boxes (zero z extent) compare by area.
double box_iou(const std::array<double, 6>& a, const std::array<double, 6>& b, bool is3d);

struct MapResult {
    std::map<PrimitiveKind, double> per_class_ap;
    double map = 0;  // mean over classes present in the ground truth
};

// PASCAL-style evaluation: detections ranked by score, greedy one-to-one
// matching against ground truth at the IoU threshold, AP as the full area
// under the precision envelope.
MapResult map_evaluation(const std::vector<std::vector<Detection>>& detections,
                         const std::vector<std::vector<Instruction>>& ground_truth,
                         double iou_threshold = 0.5);

// Rows: image_id, class, score, x0, y0, [z0,] x1, y1 [, z1].
void write_detections_csv(const std::string& path,
                          const std::vector<std::vector<Detection>>& detections);

}  // namespace csg

#endif
