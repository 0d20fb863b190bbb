#ifndef CSG_EXEC_HPP
#define CSG_EXEC_HPP

#include <vector>

#include "csg/grammar.hpp"
#include "csg/raster.hpp"

namespace csg {

// Stack of intermediate shapes, bottom first; back() is the top.
using ExecStack = std::vector<Raster>;

struct TraceStep {
    Instruction instruction;
    int depth_after = 0;
    Raster top;  // top-of-stack snapshot after the step
};

using ExecTrace = std::vector<TraceStep>;

// Rasterizes one primitive by sampling the membership predicate at cell
// centers (inclusive boundary). Continuous parameters are allowed;
// off-canvas geometry is clipped silently.
Raster render_primitive(const Instruction& instr, const GrammarConfig& cfg);

// Cellwise boolean; operand order is (second-popped, first-popped).
Raster apply_op(OpKind kind, const Raster& b, const Raster& a);

struct ExecResult {
    Raster raster;
    ExecTrace trace;
};

// Shift-reduce execution: primitive => push, op => pop A, pop B,
// push apply_op(kind, B, A). Throws InvalidProgram unless validate() passes.
ExecResult execute(const Program& p, const GrammarConfig& cfg);

// Executes without validity check, skipping ops that lack two operands.
// This is the observation-side executor used while rolling out unmasked
// policies, where prefixes may be ungrammatical.
void advance_stack(ExecStack& stack, const Instruction& instr, const GrammarConfig& cfg);

// Top-K stack maps, channel 0 = top of stack; channels past the current
// depth are all-zero.
std::vector<Raster> stack_observation(const ExecStack& stack, int k,
                                      const GrammarConfig& cfg);

}  // namespace csg

#endif
