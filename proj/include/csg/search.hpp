#ifndef CSG_SEARCH_HPP
#define CSG_SEARCH_HPP

#include <vector>

#include "csg/exec.hpp"
#include "csg/grammar.hpp"
#include "csg/policy.hpp"
#include "csg/raster.hpp"
#include "csg/rng.hpp"

namespace csg {

// Step-wise token distribution source driving the decoders. Adapted from a
// PolicyNetwork below; tests substitute toy tabular policies.
class TokenPolicy {
public:
    virtual ~TokenPolicy() = default;

    struct State {
        PolicyNetwork::DecoderState dec;
        ExecStack stack;    // execution state for stack-conditioned policies
        nn::Vec code;       // cached encoding (target-only policies)
    };

    virtual const Vocabulary& vocab() const = 0;
    virtual const GrammarConfig& grammar() const = 0;
    virtual int start_token() const = 0;
    virtual State initial_state() const = 0;
    // Probability vector over vocabulary ids; advances `state` by one step
    // conditioned on prev_token (the token emitted at the previous step).
    virtual nn::Vec step(const Raster& target, State& state, int prev_token) const = 0;
};

class NetworkTokenPolicy : public TokenPolicy {
public:
    explicit NetworkTokenPolicy(const PolicyNetwork& net) : net_(&net) {}

    const Vocabulary& vocab() const override { return net_->vocab(); }
    const GrammarConfig& grammar() const override { return net_->grammar(); }
    int start_token() const override { return net_->start_token(); }
    State initial_state() const override;
    nn::Vec step(const Raster& target, State& state, int prev_token) const override;

private:
    const PolicyNetwork* net_;
};

struct DecodeResult {
    Program program;          // non-stop tokens, terminated set when stop emitted
    std::vector<int> tokens;  // emitted ids, including the stop token if any
    double log_prob = 0;
};

// Syntactic feasibility of emitting `instr` with `emitted` instructions so
// far at stack depth `depth`, under instruction budget T. Guarantees the
// sequence can still terminate as a valid program.
bool token_allowed(const Instruction& instr, int emitted, int depth, int max_length);

// Argmax decoding (ties break toward the lowest id); at most max_length
// instruction tokens plus the stop token.
DecodeResult greedy_decode(const TokenPolicy& policy, const Raster& target,
                           bool grammar_mask = true);

// Length-synchronous beam; finished hypotheses retire into a pool and are
// ranked by total log-probability (no length normalization). Unfinished
// cutoffs rank after any finished hypothesis. Returns at most k results.
std::vector<DecodeResult> beam_search(const TokenPolicy& policy, const Raster& target,
                                      int k, bool grammar_mask = true);

// Unmasked ancestral sampling, truncated at max_length tokens; invalid
// programs are allowed (they score zero reward downstream).
std::vector<DecodeResult> sample_rollouts(const TokenPolicy& policy, const Raster& target,
                                          int m, Rng& rng);

// Powell-style derivative-free minimization of the pixel Chamfer distance
// over the continuous primitive parameters, structure held fixed. Locations
// are bounded to [0, canvas], radii/heights to [1, canvas/2]. Never returns
// a program scoring worse than the input; max_iters counts full cycles.
Program refine(const Program& p, const Raster& target, int max_iters,
               const GrammarConfig& cfg);

}  // namespace csg

#endif
