#include "csg/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "csg/errors.hpp"
#include "csg/exec.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace csg {

DatasetSpec DatasetSpec::paper_small(const GrammarConfig& grammar, std::uint64_t seed) {
    DatasetSpec spec;
    spec.grammar = grammar;
    spec.seed = seed;
    if (!grammar.is3d()) {
        spec.counts["train"] = {{3, 250}, {5, 1000}, {7, 1500}, {9, 2500}, {11, 3500}, {13, 3500}};
        spec.counts["val"] = {{3, 50}, {5, 100}, {7, 200}, {9, 200}, {11, 200}, {13, 200}};
        spec.counts["test"] = {{3, 50}, {5, 500}, {7, 500}, {9, 500}, {11, 1000}, {13, 1000}};
    } else {
        spec.counts["train"] = {{3, 1000}, {5, 2000}, {7, 4000}};
        spec.counts["val"] = {{3, 100}, {5, 200}, {7, 400}};
        spec.counts["test"] = {{3, 200}, {5, 400}, {7, 800}};
    }
    return spec;
}

void DatasetSpec::check() const {
    grammar.check();
    for (const auto& [split, lens] : counts)
        for (const auto& [len, count] : lens) {
            if (len % 2 == 0 || len < 3)
                throw std::invalid_argument("program lengths must be odd and >= 3");
            if (len > grammar.max_length)
                throw std::invalid_argument("program length exceeds grammar max_length");
            if (count < 0) throw std::invalid_argument("negative record count");
        }
}

namespace {

std::size_t primitive_choices(const GrammarConfig& cfg) {
    const std::size_t locs = std::size_t(cfg.location.size());
    const std::size_t radii = std::size_t(cfg.radius.size());
    const std::size_t heights = std::size_t(cfg.height.size());
    std::size_t total = 0;
    for (PrimitiveKind k : cfg.primitive_kinds) {
        std::size_t per = cfg.is3d() ? locs * locs * locs * radii : locs * locs * radii;
        if (k == PrimitiveKind::Cylinder) per *= heights;
        total += per;
    }
    return total;
}

// Can a partial program at stack depth `depth` still reach a singleton
// stack using exactly `remaining` further instructions?
bool can_finish(int depth, int remaining) {
    if (depth < 1) return false;
    const int ops_needed = depth - 1;
    return remaining >= ops_needed && (remaining - ops_needed) % 2 == 0;
}

Instruction sample_primitive(Rng& rng, const GrammarConfig& cfg) {
    const PrimitiveKind kind =
        cfg.primitive_kinds[std::size_t(rng.uniform_int(int(cfg.primitive_kinds.size())))];
    const auto locs = cfg.location.values();
    const auto radii = cfg.radius.values();
    const int x = locs[std::size_t(rng.uniform_int(int(locs.size())))];
    const int y = locs[std::size_t(rng.uniform_int(int(locs.size())))];
    const int r = radii[std::size_t(rng.uniform_int(int(radii.size())))];
    if (!cfg.is3d()) return Instruction::primitive2d(kind, x, y, r);
    const int z = locs[std::size_t(rng.uniform_int(int(locs.size())))];
    if (kind != PrimitiveKind::Cylinder)
        return Instruction::primitive3d(kind, x, y, z, r);
    const auto heights = cfg.height.values();
    const int h = heights[std::size_t(rng.uniform_int(int(heights.size())))];
    return Instruction::primitive3d(kind, x, y, z, r, h);
}

}  // namespace

double count_distinct_programs(const GrammarConfig& cfg, int length) {
    const int p = (length + 1) / 2;
    // Catalan(p-1) postfix tree shapes.
    double catalan = 1;
    for (int i = 0; i < p - 1; ++i)
        catalan = catalan * 2.0 * (2.0 * i + 1.0) / (i + 2.0);
    return catalan * std::pow(double(primitive_choices(cfg)), p) *
           std::pow(double(cfg.op_kinds.size()), p - 1);
}

Program sample_program(int length, Rng& rng, const GrammarConfig& cfg) {
    Program p;
    int depth = 0;
    for (int t = 0; t < length; ++t) {
        const int remaining = length - t - 1;
        const bool prim_ok = can_finish(depth + 1, remaining);
        const bool op_ok = depth >= 2 && can_finish(depth - 1, remaining);
        bool pick_prim;
        if (prim_ok && op_ok)
            pick_prim = rng.uniform_int(2) == 0;
        else
            pick_prim = prim_ok;
        if (pick_prim) {
            p.instructions.push_back(sample_primitive(rng, cfg));
            ++depth;
        } else {
            p.instructions.push_back(Instruction::boolean(
                cfg.op_kinds[std::size_t(rng.uniform_int(int(cfg.op_kinds.size())))]));
            --depth;
        }
    }
    return p;
}

std::uint64_t fnv1a_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open: " + path);
    std::uint64_t h = 1469598103934665603ull;
    char buf[4096];
    while (is.read(buf, sizeof buf) || is.gcount() > 0) {
        for (std::streamsize i = 0; i < is.gcount(); ++i) {
            h ^= std::uint8_t(buf[std::size_t(i)]);
            h *= 1099511628211ull;
        }
        if (!is) break;
    }
    return h;
}

std::string config_hash(const GrammarConfig& cfg) {
    std::ostringstream key;
    key << (cfg.is3d() ? 3 : 2) << "|" << cfg.canvas_extent << "|" << cfg.location.start
        << ":" << cfg.location.step << ":" << cfg.location.stop << "|" << cfg.radius.start
        << ":" << cfg.radius.step << ":" << cfg.radius.stop << "|" << cfg.height.start
        << ":" << cfg.height.step << ":" << cfg.height.stop << "|" << cfg.max_length << "|"
        << cfg.containment_filter;
    for (PrimitiveKind k : cfg.primitive_kinds) key << "|" << kind_name(k);
    for (OpKind k : cfg.op_kinds) key << "|" << op_name(k);
    std::uint64_t h = 1469598103934665603ull;
    for (char c : key.str()) {
        h ^= std::uint8_t(c);
        h *= 1099511628211ull;
    }
    std::ostringstream hex;
    hex << std::hex << h;
    return hex.str();
}

void generate_dataset(const DatasetSpec& spec, const std::string& root,
                      bool write_rasters) {
    spec.check();
    const GrammarConfig& cfg = spec.grammar;

    // Up-front capacity check per length, across all splits.
    std::map<int, long> total_per_length;
    for (const auto& [split, lens] : spec.counts)
        for (const auto& [len, count] : lens) total_per_length[len] += count;
    for (const auto& [len, total] : total_per_length) {
        const double distinct = count_distinct_programs(cfg, len);
        if (double(total) > distinct)
            throw CapacityError("requested " + std::to_string(total) + " length-" +
                                std::to_string(len) + " programs but only " +
                                std::to_string(std::llround(distinct)) + " exist");
    }

    fs::create_directories(root);
    save_grammar((fs::path(root) / "grammar.cfg").string(), cfg);

    std::unordered_set<std::string> seen;
    std::uint64_t attempt = 0;
    json manifest;
    manifest["seed"] = spec.seed;
    manifest["config_hash"] = config_hash(cfg);
    json files = json::object();
    json counts_out = json::object();

    // Splits and lengths in sorted order (std::map) for reproducible output.
    for (const auto& [split, lens] : spec.counts) {
        fs::create_directories(fs::path(root) / split);
        for (const auto& [len, count] : lens) {
            const std::string prog_path =
                (fs::path(root) / split / ("programs_len" + std::to_string(len) + ".csg"))
                    .string();
            std::ofstream pos(prog_path);
            if (!pos) throw IoError("cannot open for write: " + prog_path);
            std::ofstream ros;
            std::string raster_path;
            if (write_rasters) {
                raster_path =
                    (fs::path(root) / split / ("rasters_len" + std::to_string(len) + ".bin"))
                        .string();
                ros.open(raster_path, std::ios::binary);
                if (!ros) throw IoError("cannot open for write: " + raster_path);
            }

            const std::uint64_t attempt_cap =
                attempt + 200 * std::uint64_t(count) + 100000;
            int produced = 0;
            while (produced < count) {
                if (attempt >= attempt_cap)
                    throw CapacityError("sampling exhausted before reaching " +
                                        std::to_string(count) + " unique length-" +
                                        std::to_string(len) + " programs");
                Rng rng = Rng::stream(spec.seed, attempt++);
                const Program p = sample_program(len, rng, cfg);
                const std::string text = format_program(p);
                if (!seen.insert(text).second) continue;
                pos << text << "\n";
                if (write_rasters) write_packed(ros, execute(p, cfg).raster);
                ++produced;
            }
            pos.close();
            files[split + "/programs_len" + std::to_string(len) + ".csg"] =
                fnv1a_file(prog_path);
            if (write_rasters) {
                ros.close();
                files[split + "/rasters_len" + std::to_string(len) + ".bin"] =
                    fnv1a_file(raster_path);
            }
            counts_out[split][std::to_string(len)] = count;
        }
    }

    manifest["counts"] = counts_out;
    manifest["files"] = files;
    std::ofstream mos(fs::path(root) / "manifest.json");
    if (!mos) throw IoError("cannot write manifest");
    mos << manifest.dump(2) << "\n";
}

std::vector<DatasetRecord> load_split(const std::string& root, const std::string& split,
                                      const GrammarConfig& cfg, bool render) {
    std::vector<DatasetRecord> out;
    const fs::path dir = fs::path(root) / split;
    if (!fs::exists(dir)) throw IoError("missing dataset split: " + dir.string());
    std::vector<fs::path> paths;
    for (const auto& entry : fs::directory_iterator(dir)) {
        const std::string name = entry.path().filename().string();
        if (name.starts_with("programs_len") && name.ends_with(".csg"))
            paths.push_back(entry.path());
    }
    std::sort(paths.begin(), paths.end());
    for (const auto& path : paths) {
        std::ifstream is(path);
        std::string line;
        while (std::getline(is, line)) {
            if (line.empty()) continue;
            DatasetRecord rec;
            rec.program = parse_program(line, cfg);
            rec.length = int(rec.program.length());
            rec.split = split;
            if (render) rec.raster = execute(rec.program, cfg).raster;
            out.push_back(std::move(rec));
        }
    }
    return out;
}

}  // namespace csg
