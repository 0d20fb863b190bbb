#include "csg/search.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "csg/metrics.hpp"

namespace csg {

TokenPolicy::State NetworkTokenPolicy::initial_state() const {
    return State{net_->initial_state(), {}, {}};
}

nn::Vec NetworkTokenPolicy::step(const Raster& target, State& state, int prev_token) const {
    const int k = net_->arch().stack_channels;
    if (k > 0) {
        if (prev_token != net_->start_token())
            advance_stack(state.stack, net_->vocab().at(prev_token), grammar());
        Observation obs{&target, stack_observation(state.stack, k, grammar())};
        return net_->step(obs, state.dec, prev_token);
    }
    if (state.code.empty()) state.code = net_->encode(Observation{&target, {}});
    return net_->decode_step(state.code, state.dec, prev_token);
}

bool token_allowed(const Instruction& instr, int emitted, int depth, int max_length) {
    if (instr.is_stop()) return depth == 1;
    if (instr.is_op()) return depth >= 2 && emitted + depth - 1 <= max_length;
    return emitted + depth + 1 <= max_length;
}

namespace {

double safe_log(double p) { return std::log(std::max(p, 1e-300)); }

Program program_from_tokens(const std::vector<int>& tokens, const Vocabulary& vocab) {
    Program p;
    for (int id : tokens) {
        if (id == vocab.stop_id()) {
            p.terminated = true;
            break;
        }
        p.instructions.push_back(vocab.at(id));
    }
    return p;
}

int update_depth(const Instruction& instr, int depth) {
    if (instr.is_primitive()) return depth + 1;
    if (instr.is_op()) return depth >= 2 ? depth - 1 : depth;  // underflow: op skipped
    return depth;
}

}  // namespace

DecodeResult greedy_decode(const TokenPolicy& policy, const Raster& target,
                           bool grammar_mask) {
    const Vocabulary& vocab = policy.vocab();
    const int T = policy.grammar().max_length;
    TokenPolicy::State state = policy.initial_state();
    DecodeResult res;
    int prev = policy.start_token();
    int depth = 0, emitted = 0;
    for (int t = 0; t <= T; ++t) {
        const nn::Vec probs = policy.step(target, state, prev);
        int best = -1;
        for (int id = 0; id < vocab.size(); ++id) {
            if (grammar_mask && !token_allowed(vocab.at(id), emitted, depth, T)) continue;
            if (emitted == T && id != vocab.stop_id()) continue;  // hard cutoff
            if (best < 0 || probs[std::size_t(id)] > probs[std::size_t(best)]) best = id;
        }
        if (best < 0) break;  // masked out entirely (unreachable from a valid prefix)
        res.tokens.push_back(best);
        res.log_prob += safe_log(probs[std::size_t(best)]);
        if (best == vocab.stop_id()) break;
        depth = update_depth(vocab.at(best), depth);
        ++emitted;
        prev = best;
    }
    res.program = program_from_tokens(res.tokens, vocab);
    return res;
}

std::vector<DecodeResult> beam_search(const TokenPolicy& policy, const Raster& target,
                                      int k, bool grammar_mask) {
    if (k < 1) throw std::invalid_argument("beam width must be >= 1");
    const Vocabulary& vocab = policy.vocab();
    const int T = policy.grammar().max_length;

    struct Hypothesis {
        TokenPolicy::State state;
        int prev;
        std::vector<int> tokens;
        double log_prob = 0;
        int depth = 0;
    };
    std::vector<Hypothesis> active;
    active.push_back({policy.initial_state(), policy.start_token(), {}, 0.0, 0});

    std::vector<DecodeResult> finished;
    auto prune_finished = [&] {
        std::stable_sort(finished.begin(), finished.end(),
                         [](const DecodeResult& a, const DecodeResult& b) {
                             return a.log_prob > b.log_prob;
                         });
        if (int(finished.size()) > k) finished.resize(std::size_t(k));
    };

    for (int t = 0; t <= T && !active.empty(); ++t) {
        struct Candidate {
            int hyp, token;
            double log_prob;
        };
        std::vector<Candidate> expand;
        std::vector<TokenPolicy::State> stepped(active.size());
        for (std::size_t h = 0; h < active.size(); ++h) {
            Hypothesis& hyp = active[h];
            stepped[h] = hyp.state;
            const nn::Vec probs = policy.step(target, stepped[h], hyp.prev);
            const int emitted = int(hyp.tokens.size());
            for (int id = 0; id < vocab.size(); ++id) {
                if (grammar_mask && !token_allowed(vocab.at(id), emitted, hyp.depth, T))
                    continue;
                if (emitted == T && id != vocab.stop_id()) continue;  // hard cutoff
                expand.push_back({int(h), id, hyp.log_prob + safe_log(probs[std::size_t(id)])});
            }
        }

        // Stop expansions compete for the k slots like any other token; the
        // winners retire into the pool (so beam width 1 reduces to greedy).
        std::sort(expand.begin(), expand.end(), [](const Candidate& a, const Candidate& b) {
            if (a.log_prob != b.log_prob) return a.log_prob > b.log_prob;
            if (a.hyp != b.hyp) return a.hyp < b.hyp;
            return a.token < b.token;
        });
        if (int(expand.size()) > k) expand.resize(std::size_t(k));

        std::vector<Hypothesis> next;
        next.reserve(expand.size());
        for (const Candidate& c : expand) {
            if (c.token == vocab.stop_id()) {
                DecodeResult r;
                r.tokens = active[std::size_t(c.hyp)].tokens;
                r.tokens.push_back(c.token);
                r.log_prob = c.log_prob;
                r.program = program_from_tokens(r.tokens, vocab);
                finished.push_back(std::move(r));
                continue;
            }
            Hypothesis h;
            h.state = stepped[std::size_t(c.hyp)];
            h.prev = c.token;
            h.tokens = active[std::size_t(c.hyp)].tokens;
            h.tokens.push_back(c.token);
            h.log_prob = c.log_prob;
            h.depth = update_depth(vocab.at(c.token), active[std::size_t(c.hyp)].depth);
            next.push_back(std::move(h));
        }
        active = std::move(next);
        prune_finished();
    }

    // Unfinished cutoffs rank after every finished hypothesis.
    std::stable_sort(active.begin(), active.end(),
                     [](const Hypothesis& a, const Hypothesis& b) {
                         return a.log_prob > b.log_prob;
                     });
    for (const Hypothesis& h : active) {
        if (int(finished.size()) >= k) break;
        DecodeResult r;
        r.tokens = h.tokens;
        r.log_prob = h.log_prob;
        r.program = program_from_tokens(r.tokens, vocab);
        finished.push_back(std::move(r));
    }
    if (int(finished.size()) > k) finished.resize(std::size_t(k));
    return finished;
}

std::vector<DecodeResult> sample_rollouts(const TokenPolicy& policy, const Raster& target,
                                          int m, Rng& rng) {
    if (m < 1) throw std::invalid_argument("rollout count must be >= 1");
    const Vocabulary& vocab = policy.vocab();
    const int T = policy.grammar().max_length;
    std::vector<DecodeResult> out;
    out.reserve(std::size_t(m));
    for (int i = 0; i < m; ++i) {
        TokenPolicy::State state = policy.initial_state();
        DecodeResult res;
        int prev = policy.start_token();
        while (int(res.tokens.size()) < T) {
            const nn::Vec probs = policy.step(target, state, prev);
            const double u = rng.uniform_real();
            double acc = 0;
            int id = vocab.size() - 1;
            for (int j = 0; j < vocab.size(); ++j) {
                acc += probs[std::size_t(j)];
                if (u < acc) {
                    id = j;
                    break;
                }
            }
            res.tokens.push_back(id);
            res.log_prob += safe_log(probs[std::size_t(id)]);
            if (id == vocab.stop_id()) break;
            prev = id;
        }
        res.program = program_from_tokens(res.tokens, vocab);
        out.push_back(std::move(res));
    }
    return out;
}

// --- refinement ----------------------------------------------------------------

namespace {

struct ParamLayout {
    std::vector<std::pair<int, int>> slots;  // (instruction index, field index)
    std::vector<double> lo, hi, x0;
};

// Field order per primitive: x, y, [z,] r, [h (cylinder)].
ParamLayout build_layout(const Program& p, const GrammarConfig& cfg) {
    ParamLayout L;
    const double extent = cfg.canvas_extent;
    auto add = [&](int ii, int field, double v, double lo, double hi) {
        L.slots.emplace_back(ii, field);
        L.x0.push_back(v);
        L.lo.push_back(lo);
        L.hi.push_back(hi);
    };
    for (std::size_t i = 0; i < p.instructions.size(); ++i) {
        const Instruction& in = p.instructions[i];
        if (!in.is_primitive()) continue;
        add(int(i), 0, in.x, 0.0, extent);
        add(int(i), 1, in.y, 0.0, extent);
        if (in.is3d()) add(int(i), 2, in.z, 0.0, extent);
        add(int(i), 3, in.r, 1.0, extent / 2);
        if (in.prim == PrimitiveKind::Cylinder) add(int(i), 4, in.h, 1.0, extent / 2);
    }
    return L;
}

Program apply_params(Program p, const ParamLayout& L, const std::vector<double>& x) {
    for (std::size_t j = 0; j < L.slots.size(); ++j) {
        Instruction& in = p.instructions[std::size_t(L.slots[j].first)];
        in.continuous = true;
        switch (L.slots[j].second) {
            case 0: in.x = x[j]; break;
            case 1: in.y = x[j]; break;
            case 2: in.z = x[j]; break;
            case 3: in.r = x[j]; break;
            default: in.h = x[j]; break;
        }
    }
    return p;
}

}  // namespace

Program refine(const Program& p, const Raster& target, int max_iters,
               const GrammarConfig& cfg) {
    const ValidityReport rep = validate(p, cfg);
    if (!rep.valid) throw InvalidProgram(rep);
    if (max_iters <= 0) return p;

    const ParamLayout L = build_layout(p, cfg);
    const std::size_t n = L.slots.size();
    if (n == 0) return p;

    const EdgeMap tedges = edge_map(target);
    const DistanceField tdt = distance_transform(tedges);
    const std::size_t tcount = tedges.count();
    const double diag = canvas_diagonal(target);

    auto objective = [&](const std::vector<double>& x) {
        const Raster rendered = execute(apply_params(p, L, x), cfg).raster;
        const EdgeMap redges = edge_map(rendered);
        const std::size_t rcount = redges.count();
        if (tcount == 0 || rcount == 0) return diag;
        const DistanceField rdt = distance_transform(redges);
        double sum_tr = 0, sum_rt = 0;
        for (std::size_t i = 0; i < tedges.size(); ++i) {
            if (tedges.cells()[i]) sum_tr += rdt.values[i];
            if (redges.cells()[i]) sum_rt += tdt.values[i];
        }
        return 0.5 * sum_tr / double(tcount) + 0.5 * sum_rt / double(rcount);
    };

    std::vector<double> x = L.x0;
    double f = objective(x);
    const double f0 = f;
    std::vector<double> best_x = x;
    double best_f = f;

    // Golden-section minimization along direction u within the box bounds.
    auto line_min = [&](std::vector<double>& xc, double& fc, const std::vector<double>& u) {
        double tlo = -std::numeric_limits<double>::infinity();
        double thi = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < n; ++j) {
            if (std::fabs(u[j]) < 1e-12) continue;
            double a = (L.lo[j] - xc[j]) / u[j];
            double b = (L.hi[j] - xc[j]) / u[j];
            if (a > b) std::swap(a, b);
            tlo = std::max(tlo, a);
            thi = std::min(thi, b);
        }
        if (!(tlo < thi)) return;
        auto at = [&](double t) {
            std::vector<double> xt = xc;
            for (std::size_t j = 0; j < n; ++j)
                xt[j] = std::clamp(xt[j] + t * u[j], L.lo[j], L.hi[j]);
            return xt;
        };
        const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
        double a = tlo, b = thi;
        double t1 = b - gr * (b - a), t2 = a + gr * (b - a);
        double f1 = objective(at(t1)), f2 = objective(at(t2));
        for (int it = 0; it < 40 && b - a > 1e-4; ++it) {
            if (f1 < f2) {
                b = t2;
                t2 = t1;
                f2 = f1;
                t1 = b - gr * (b - a);
                f1 = objective(at(t1));
            } else {
                a = t1;
                t1 = t2;
                f1 = f2;
                t2 = a + gr * (b - a);
                f2 = objective(at(t2));
            }
        }
        const double tbest = f1 < f2 ? t1 : t2;
        const double fbest = std::min(f1, f2);
        if (fbest < fc) {
            xc = at(tbest);
            fc = fbest;
        }
        if (fc < best_f) {
            best_f = fc;
            best_x = xc;
        }
    };

    std::vector<std::vector<double>> dirs(n, std::vector<double>(n, 0.0));
    for (std::size_t j = 0; j < n; ++j) dirs[j][j] = 1.0;

    for (int cycle = 0; cycle < max_iters; ++cycle) {
        const std::vector<double> x_start = x;
        const double f_start = f;
        double biggest = 0;
        std::size_t biggest_i = 0;
        for (std::size_t i = 0; i < n; ++i) {
            const double fprev = f;
            line_min(x, f, dirs[i]);
            if (fprev - f > biggest) {
                biggest = fprev - f;
                biggest_i = i;
            }
        }
        // Conjugate direction from the cycle's net displacement.
        std::vector<double> d(n);
        double norm = 0;
        for (std::size_t j = 0; j < n; ++j) {
            d[j] = x[j] - x_start[j];
            norm += d[j] * d[j];
        }
        if (norm > 1e-16) {
            line_min(x, f, d);
            dirs[biggest_i] = std::move(d);
        }
        if (f_start - f < 1e-6) break;
    }

    if (best_f >= f0) return p;
    return apply_params(p, L, best_x);
}

}  // namespace csg
