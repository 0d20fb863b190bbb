#ifndef CSG_GRAMMAR_HPP
#define CSG_GRAMMAR_HPP

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace csg {

enum class Dim { D2, D3 };

enum class PrimitiveKind { Circle, Square, Triangle, Sphere, Cube, Cylinder };
enum class OpKind { Union, Intersect, Subtract };

const char* kind_name(PrimitiveKind k);
const char* op_name(OpKind k);

// Arithmetic sequence start, start+step, ..., stop (inclusive).
struct Grid {
    int start = 0;
    int step = 1;
    int stop = 0;

    std::vector<int> values() const;
    int size() const { return stop < start ? 0 : (stop - start) / step + 1; }
    bool contains(double v) const;
    friend bool operator==(const Grid&, const Grid&) = default;
};

struct GrammarConfig {
    Dim dim = Dim::D2;
    int canvas_extent = 64;
    Grid location{8, 8, 56};
    Grid radius{8, 4, 32};
    Grid height{8, 4, 32};  // cylinders only
    std::vector<PrimitiveKind> primitive_kinds;
    std::vector<OpKind> op_kinds;
    int max_length = 13;
    bool containment_filter = false;

    static GrammarConfig defaults2d();
    static GrammarConfig defaults3d();

    bool is3d() const { return dim == Dim::D3; }
    // Throws std::invalid_argument on violated invariants.
    void check() const;

    friend bool operator==(const GrammarConfig&, const GrammarConfig&) = default;
};

// Flat key-value serialization (integer values only); '#' starts a comment.
GrammarConfig load_grammar(const std::string& path);
void save_grammar(const std::string& path, const GrammarConfig& cfg);

struct Instruction {
    enum class Tag { Primitive, Op, Stop };

    Tag tag = Tag::Stop;
    PrimitiveKind prim = PrimitiveKind::Circle;
    OpKind op = OpKind::Union;
    double x = 0, y = 0, z = 0, r = 0, h = 0;
    // Set on refinement output; continuous parameters never come from a
    // vocabulary and are exempt from grid checks.
    bool continuous = false;

    static Instruction primitive2d(PrimitiveKind k, double x, double y, double r);
    static Instruction primitive3d(PrimitiveKind k, double x, double y, double z,
                                   double r, double h = 0);
    static Instruction boolean(OpKind k);
    static Instruction stop();

    bool is_primitive() const { return tag == Tag::Primitive; }
    bool is_op() const { return tag == Tag::Op; }
    bool is_stop() const { return tag == Tag::Stop; }
    bool is3d() const;

    friend bool operator==(const Instruction&, const Instruction&) = default;
};

// Tight axis-aligned bounding box of the primitive's membership region,
// as {x0, y0, z0, x1, y1, z1} (z fields are zero in 2D).
std::array<double, 6> primitive_bbox(const Instruction& instr);

struct Program {
    std::vector<Instruction> instructions;  // excludes the trailing stop
    bool terminated = false;

    std::size_t length() const { return instructions.size(); }
    bool empty() const { return instructions.empty(); }

    friend bool operator==(const Program&, const Program&) = default;
};

struct ValidityReport {
    enum class Failure { None, StackUnderflow, NonSingletonFinal, TooLong, Empty };

    bool valid = false;
    Failure failure = Failure::None;
    int position = -1;     // instruction index, for StackUnderflow
    int final_count = -1;  // final stack size, for NonSingletonFinal

    std::string describe() const;
};

struct InvalidProgram : std::runtime_error {
    ValidityReport report;
    explicit InvalidProgram(const ValidityReport& rep)
        : std::runtime_error("invalid program: " + rep.describe()), report(rep) {}
};

ValidityReport validate(const Program& p, const GrammarConfig& cfg);

std::string format_instruction(const Instruction& instr);
std::string format_program(const Program& p);

// Whitespace-separated tokens: `kind(a,b,c[,d[,e]])`, op words, `stop`.
// With allow_continuous, decimal parameters are accepted and off-grid
// instructions are tagged continuous instead of rejected.
Program parse_program(const std::string& text, const GrammarConfig& cfg,
                      bool allow_continuous = false);

class Vocabulary {
public:
    Vocabulary() = default;
    explicit Vocabulary(std::vector<Instruction> entries);

    int size() const { return int(entries_.size()); }
    const Instruction& at(int id) const { return entries_[std::size_t(id)]; }
    const std::vector<Instruction>& entries() const { return entries_; }
    // Returns -1 when absent.
    int id_of(const Instruction& instr) const;
    int stop_id() const { return size() - 1; }
    // FNV-1a over the formatted entry list; pins checkpoints to a vocabulary.
    std::uint64_t hash() const;

private:
    std::vector<Instruction> entries_;
    std::unordered_map<std::string, int> index_;
};

// Every (kind x location x size) primitive on the configured grids, sorted
// lexicographically by (kind name, x, y, z, r, h), then ops in the order
// union/intersect/subtract, then stop.
Vocabulary build_vocabulary(const GrammarConfig& cfg);

}  // namespace csg

#endif
