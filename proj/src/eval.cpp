#include "csg/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "csg/errors.hpp"
#include "csg/exec.hpp"
#include "csg/metrics.hpp"

namespace csg {

void EvalReport::write_csv(const std::string& path) const {
    std::ofstream os(path);
    if (!os) throw IoError("cannot open report for writing: " + path);
    os << "index,cd_pixels,cd_normalized,iou,program_length,beam_width,refine_iters\n";
    for (const EvalItem& it : items)
        os << it.index << ',' << it.cd_pixels << ',' << it.cd_normalized << ',' << it.iou
           << ',' << it.program_length << ',' << beam_width << ',' << refine_iters << '\n';
}

std::string EvalReport::summary() const {
    std::ostringstream os;
    os << "items: " << items.size() << "\nbeam width: " << beam_width
       << "\nrefine iters: " << refine_iters << "\nmean CD (px): " << mean_cd_pixels
       << "\nmean CD (normalized): " << mean_cd_normalized << "\nmean IOU: " << mean_iou
       << "\nmean program length: " << mean_length << '\n';
    return os.str();
}

EvalReport eval_reconstruction(const TokenPolicy& policy, const std::vector<Raster>& targets,
                               int k, int refine_iters, const GrammarConfig& cfg,
                               bool grammar_mask) {
    EvalReport report;
    report.beam_width = k;
    report.refine_iters = refine_iters;

    for (std::size_t i = 0; i < targets.size(); ++i) {
        const Raster& target = targets[i];
        const EdgeMap tedges = edge_map(target);
        const double diag = canvas_diagonal(target);

        auto score = [&](const Program& p, Raster* out) {
            if (!validate(p, cfg).valid) return diag;
            Raster rendered = execute(p, cfg).raster;
            const ChamferResult cd = chamfer(tedges, edge_map(rendered));
            if (out) *out = std::move(rendered);
            return cd.pixels;
        };

        auto beam = beam_search(policy, target, k, grammar_mask);
        EvalItem item;
        item.index = int(i);
        double best_cd = diag;
        bool found = false;
        for (const auto& r : beam) {
            const double cd = score(r.program, nullptr);
            if (!found || cd < best_cd) {
                best_cd = cd;
                item.program = r.program;
                found = true;
            }
        }
        if (found && validate(item.program, cfg).valid && refine_iters > 0)
            item.program = refine(item.program, target, refine_iters, cfg);

        Raster rendered = target.rank() == 2
                              ? Raster::make2d(target.dims()[0], target.dims()[1])
                              : Raster::make3d(target.dims()[0], target.dims()[1],
                                               target.dims()[2]);
        if (found && validate(item.program, cfg).valid)
            rendered = execute(item.program, cfg).raster;
        const ChamferResult cd = chamfer(tedges, edge_map(rendered));
        item.cd_pixels = cd.pixels;
        item.cd_normalized = cd.normalized;
        item.iou = iou(target, rendered);
        item.program_length = int(item.program.length());
        report.items.push_back(std::move(item));
    }

    if (!report.items.empty()) {
        for (const EvalItem& it : report.items) {
            report.mean_cd_pixels += it.cd_pixels;
            report.mean_cd_normalized += it.cd_normalized;
            report.mean_iou += it.iou;
            report.mean_length += it.program_length;
        }
        const double n = double(report.items.size());
        report.mean_cd_pixels /= n;
        report.mean_cd_normalized /= n;
        report.mean_iou /= n;
        report.mean_length /= n;
    }
    return report;
}

std::vector<Detection> detection_scores(const TokenPolicy& policy, const Raster& target,
                                        int k, bool grammar_mask) {
    if (k < 1) throw std::invalid_argument("beam width must be >= 1");
    auto beam = beam_search(policy, target, k, grammar_mask);

    // Occurrence count of each distinct primitive, one per program at most.
    std::vector<std::pair<Instruction, int>> counts;
    for (const auto& r : beam) {
        std::vector<const Instruction*> seen;
        for (const auto& instr : r.program.instructions) {
            if (!instr.is_primitive()) continue;
            bool dup = false;
            for (const Instruction* s : seen)
                if (*s == instr) {
                    dup = true;
                    break;
                }
            if (dup) continue;
            seen.push_back(&instr);
            bool counted = false;
            for (auto& [key, n] : counts)
                if (key == instr) {
                    ++n;
                    counted = true;
                    break;
                }
            if (!counted) counts.emplace_back(instr, 1);
        }
    }

    std::vector<Detection> out;
    for (const auto& [instr, n] : counts) {
        Detection det;
        det.instruction = instr;
        det.bbox = primitive_bbox(instr);
        det.score = double(n) / double(k);
        out.push_back(std::move(det));
    }
    std::stable_sort(out.begin(), out.end(),
                     [](const Detection& a, const Detection& b) { return a.score > b.score; });
    return out;
}

double box_iou(const std::array<double, 6>& a, const std::array<double, 6>& b, bool is3d) {
    const int axes = is3d ? 3 : 2;
    double inter = 1, va = 1, vb = 1;
    for (int ax = 0; ax < axes; ++ax) {
        const double lo_a = a[std::size_t(ax)], hi_a = a[std::size_t(ax) + 3];
        const double lo_b = b[std::size_t(ax)], hi_b = b[std::size_t(ax) + 3];
        inter *= std::max(0.0, std::min(hi_a, hi_b) - std::max(lo_a, lo_b));
        va *= std::max(0.0, hi_a - lo_a);
        vb *= std::max(0.0, hi_b - lo_b);
    }
    const double uni = va + vb - inter;
    if (uni <= 0) return 0;
    return inter / uni;
}

MapResult map_evaluation(const std::vector<std::vector<Detection>>& detections,
                         const std::vector<std::vector<Instruction>>& ground_truth,
                         double iou_threshold) {
    if (detections.size() != ground_truth.size())
        throw DimMismatch("detection and ground-truth image counts differ");

    // Classes present in the ground truth define the MAP average.
    std::vector<PrimitiveKind> classes;
    for (const auto& image : ground_truth)
        for (const auto& instr : image)
            if (std::find(classes.begin(), classes.end(), instr.prim) == classes.end())
                classes.push_back(instr.prim);
    std::sort(classes.begin(), classes.end(), [](PrimitiveKind a, PrimitiveKind b) {
        return std::string(kind_name(a)) < kind_name(b);
    });

    MapResult result;
    for (PrimitiveKind cls : classes) {
        struct Ranked {
            double score;
            std::size_t image;
            std::array<double, 6> bbox;
            bool is3d;
        };
        std::vector<Ranked> ranked;
        std::size_t gt_total = 0;
        std::vector<std::vector<bool>> gt_used(ground_truth.size());
        std::vector<std::vector<std::array<double, 6>>> gt_boxes(ground_truth.size());
        for (std::size_t img = 0; img < ground_truth.size(); ++img) {
            for (const auto& instr : ground_truth[img]) {
                if (instr.prim != cls) continue;
                gt_boxes[img].push_back(primitive_bbox(instr));
                ++gt_total;
            }
            gt_used[img].assign(gt_boxes[img].size(), false);
            for (const auto& det : detections[img])
                if (det.instruction.prim == cls)
                    ranked.push_back({det.score, img, det.bbox, det.instruction.is3d()});
        }
        std::stable_sort(ranked.begin(), ranked.end(),
                         [](const Ranked& a, const Ranked& b) { return a.score > b.score; });

        std::vector<double> precision, recall;
        std::size_t tp = 0, fp = 0;
        for (const Ranked& det : ranked) {
            double best = 0;
            int best_j = -1;
            for (std::size_t j = 0; j < gt_boxes[det.image].size(); ++j) {
                if (gt_used[det.image][j]) continue;
                const double ov = box_iou(det.bbox, gt_boxes[det.image][j], det.is3d);
                if (ov > best) {
                    best = ov;
                    best_j = int(j);
                }
            }
            if (best_j >= 0 && best >= iou_threshold) {
                gt_used[det.image][std::size_t(best_j)] = true;
                ++tp;
            } else {
                ++fp;
            }
            precision.push_back(double(tp) / double(tp + fp));
            recall.push_back(gt_total == 0 ? 0.0 : double(tp) / double(gt_total));
        }

        double ap = 0;
        if (gt_total > 0 && !precision.empty()) {
            // Full area under the monotone precision envelope.
            for (std::size_t i = precision.size() - 1; i-- > 0;)
                precision[i] = std::max(precision[i], precision[i + 1]);
            double prev_recall = 0;
            for (std::size_t i = 0; i < precision.size(); ++i) {
                ap += (recall[i] - prev_recall) * precision[i];
                prev_recall = recall[i];
            }
        }
        result.per_class_ap[cls] = ap;
    }

    if (!result.per_class_ap.empty()) {
        for (const auto& [cls, ap] : result.per_class_ap) result.map += ap;
        result.map /= double(result.per_class_ap.size());
    }
    return result;
}

void write_detections_csv(const std::string& path,
                          const std::vector<std::vector<Detection>>& detections) {
    std::ofstream os(path);
    if (!os) throw IoError("cannot open detection dump for writing: " + path);
    os << "image_id,class,score,x0,y0,z0,x1,y1,z1\n";
    for (std::size_t img = 0; img < detections.size(); ++img)
        for (const Detection& det : detections[img])
            os << img << ',' << kind_name(det.instruction.prim) << ',' << det.score << ','
               << det.bbox[0] << ',' << det.bbox[1] << ',' << det.bbox[2] << ','
               << det.bbox[3] << ',' << det.bbox[4] << ',' << det.bbox[5] << '\n';
}

}  // namespace csg
