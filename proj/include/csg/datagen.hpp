#ifndef CSG_DATAGEN_HPP
#define CSG_DATAGEN_HPP

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "csg/grammar.hpp"
#include "csg/raster.hpp"
#include "csg/rng.hpp"

namespace csg {

struct DatasetSpec {
    GrammarConfig grammar;
    std::uint64_t seed = 0;
    // split name -> (program length -> record count)
    std::map<std::string, std::map<int, int>> counts;

    // Desk-scale spec: 1% of the full synthetic corpus sizes.
    static DatasetSpec paper_small(const GrammarConfig& grammar, std::uint64_t seed);

    void check() const;
};

struct DatasetRecord {
    Program program;
    Raster raster;
    std::string split;
    int length = 0;
};

// Number of distinct valid programs of the given odd length under the
// grammar (Catalan count of postfix shapes times leaf/op choices). May be
// +inf for large grammars.
double count_distinct_programs(const GrammarConfig& cfg, int length);

// Samples a valid program of exactly `length` instructions: at each position
// the feasible token class (primitive vs op) is chosen uniformly, then kind,
// location, size, and op kind are each uniform over their grids/sets.
Program sample_program(int length, Rng& rng, const GrammarConfig& cfg);

// Writes <root>/<split>/programs_len<L>.csg (one program per line), optional
// packed-bit raster archives, grammar.cfg, and manifest.json. Deterministic
// given the spec. Throws CapacityError when a length's total requested count
// exceeds the number of distinct programs.
void generate_dataset(const DatasetSpec& spec, const std::string& root,
                      bool write_rasters = false);

// Loads one split; renders rasters from programs when `render` is set.
std::vector<DatasetRecord> load_split(const std::string& root, const std::string& split,
                                      const GrammarConfig& cfg, bool render = true);

std::uint64_t fnv1a_file(const std::string& path);
std::string config_hash(const GrammarConfig& cfg);

}  // namespace csg

#endif
