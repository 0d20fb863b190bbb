// End-to-end acceptance harness. Runs one numbered check per criterion and
// prints a [PASS]/[FAIL] line for each; the exit code is the failure count.
//
// The desk-scale learning checks train real models on one CPU core; expect a
// total runtime around half an hour.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>
#include <string>
#include <unordered_set>
#include <vector>

#include "csg/datagen.hpp"
#include "csg/eval.hpp"
#include "csg/exec.hpp"
#include "csg/grammar.hpp"
#include "csg/metrics.hpp"
#include "csg/policy.hpp"
#include "csg/raster.hpp"
#include "csg/rng.hpp"
#include "csg/search.hpp"
#include "csg/training.hpp"
#include "oracle.hpp"

namespace fs = std::filesystem;
using namespace csg;
using Clock = std::chrono::steady_clock;

namespace {

double secs_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Check {
    bool ok = true;
    std::ostringstream detail;

    void require(bool cond, const std::string& what) {
        if (!cond) {
            ok = false;
            detail << (detail.str().empty() ? "" : "; ") << what;
        }
    }
    void note(const std::string& what) {
        detail << (detail.str().empty() ? "" : "; ") << what;
    }
};

// ---------------------------------------------------------------------------
// Shared fixtures
// ---------------------------------------------------------------------------

GrammarConfig tiny_grammar() {
    GrammarConfig cfg;
    cfg.canvas_extent = 16;
    cfg.location = Grid{4, 4, 12};
    cfg.radius = Grid{4, 4, 8};
    cfg.primitive_kinds = {PrimitiveKind::Circle, PrimitiveKind::Square};
    cfg.op_kinds = {OpKind::Union, OpKind::Intersect, OpKind::Subtract};
    cfg.max_length = 7;
    return cfg;
}

// Single-primitive vocabulary whose sampling space is fully enumerable.
GrammarConfig toy_grammar() {
    GrammarConfig cfg;
    cfg.canvas_extent = 16;
    cfg.location = Grid{8, 8, 8};
    cfg.radius = Grid{4, 4, 4};
    cfg.primitive_kinds = {PrimitiveKind::Circle};
    cfg.op_kinds = {OpKind::Union};
    cfg.max_length = 3;
    return cfg;
}

ArchConfig tiny_arch(int stack_channels) {
    ArchConfig a;
    a.conv_channels = {4};
    a.code_width = 12;
    a.embed_width = 6;
    a.hidden_width = 10;
    a.fc_width = 10;
    a.dropout = 0.0;
    a.stack_channels = stack_channels;
    return a;
}

// Desk-scale architecture (calibrated for single-core training).
ArchConfig desk_arch(int stack_channels) {
    ArchConfig a;
    a.conv_channels = {8, 16, 32};
    a.code_width = 128;
    a.embed_width = 32;
    a.hidden_width = 128;
    a.fc_width = 128;
    a.dropout = 0.0;
    a.stack_channels = stack_channels;
    return a;
}

// A program is degenerate when some op step yields an empty shape or leaves
// the result equal to one operand (the other operand is invisible in the
// render). Training targets mirror the original corpus cleaning and exclude
// such programs.
bool degenerate(const Program& p, const GrammarConfig& cfg) {
    ExecStack stack;
    for (const auto& in : p.instructions) {
        if (in.is_primitive()) {
            stack.push_back(render_primitive(in, cfg));
            if (stack.back().empty_occupancy()) return true;
            continue;
        }
        Raster a = stack.back();
        stack.pop_back();
        Raster b = stack.back();
        stack.pop_back();
        Raster r = apply_op(in.op, b, a);
        if (r.empty_occupancy() || r == a || r == b) return true;
        stack.push_back(std::move(r));
    }
    return false;
}

std::vector<DatasetRecord> sample_clean(const GrammarConfig& cfg, std::uint64_t seed,
                                        const std::vector<std::pair<int, int>>& counts,
                                        std::unordered_set<std::string>& seen,
                                        std::uint64_t& attempt) {
    std::vector<DatasetRecord> out;
    for (auto [len, want] : counts) {
        int made = 0;
        while (made < want) {
            Rng rng = Rng::stream(seed, attempt++);
            Program p = sample_program(len, rng, cfg);
            if (degenerate(p, cfg)) continue;
            const std::string text = format_program(p);
            if (!seen.insert(text).second) continue;
            DatasetRecord rec;
            rec.program = std::move(p);
            rec.raster = execute(rec.program, cfg).raster;
            rec.length = len;
            out.push_back(std::move(rec));
            ++made;
        }
    }
    return out;
}

// Fixed per-step categorical rows; row index saturates at the last row.
class TablePolicy : public TokenPolicy {
public:
    TablePolicy(const GrammarConfig& cfg, std::vector<nn::Vec> rows)
        : cfg_(cfg), vocab_(build_vocabulary(cfg)), rows_(std::move(rows)) {}

    const Vocabulary& vocab() const override { return vocab_; }
    const GrammarConfig& grammar() const override { return cfg_; }
    int start_token() const override { return vocab_.size(); }
    State initial_state() const override { return State{}; }
    nn::Vec step(const Raster&, State& state, int) const override {
        const std::size_t i = std::min(std::size_t(state.dec.step), rows_.size() - 1);
        ++state.dec.step;
        return rows_[i];
    }

private:
    GrammarConfig cfg_;
    Vocabulary vocab_;
    std::vector<nn::Vec> rows_;
};

// Shared state across criteria (the desk-scale model is reused downstream).
struct Context {
    GrammarConfig cfg2d = GrammarConfig::defaults2d();
    std::vector<DatasetRecord> desk_train, desk_test;
    PolicyNetwork desk_policy;  // trained by criterion 7
    bool desk_ready = false;
};

// ---------------------------------------------------------------------------
// Criterion 1: executor vs analytic boolean oracle
// ---------------------------------------------------------------------------

void criterion_1(Context& ctx, Check& c) {
    const auto t0 = Clock::now();
    const GrammarConfig& cfg = ctx.cfg2d;
    std::uint64_t attempt = 0;
    int mismatches = 0, total = 0;
    for (auto [len, count] : {std::pair(3, 1000), std::pair(5, 500)}) {
        for (int i = 0; i < count; ++i) {
            Rng rng = Rng::stream(1, attempt++);
            const Program p = sample_program(len, rng, cfg);
            if (execute(p, cfg).raster != oracle::render_program(p, cfg)) ++mismatches;
            ++total;
        }
    }
    const double elapsed = secs_since(t0);
    c.require(mismatches == 0, "bit mismatches on " + std::to_string(mismatches) + " programs");
    c.require(elapsed < 60.0, "runtime over one minute");
    c.note(std::to_string(total) + " programs bit-equal");
}

// ---------------------------------------------------------------------------
// Criterion 2: seven-instruction trace P1 - (P2 n (P3 u P4))
// ---------------------------------------------------------------------------

void criterion_2(Context& ctx, Check& c) {
    const GrammarConfig& cfg = ctx.cfg2d;
    const Program p = parse_program(
        "circle(32,32,16) square(16,16,8) circle(48,48,8) square(48,16,8) "
        "union intersect subtract",
        cfg);
    const ExecResult res = execute(p, cfg);
    const std::vector<int> want{1, 2, 3, 4, 3, 2, 1};
    c.require(res.trace.size() == want.size(), "trace length != 7");
    for (std::size_t i = 0; i < res.trace.size() && i < want.size(); ++i)
        c.require(res.trace[i].depth_after == want[i],
                  "depth[" + std::to_string(i) + "] != " + std::to_string(want[i]));

    // Oracle: P1 - (P2 n (P3 u P4)) evaluated per cell from the membership
    // predicates directly (no stack machine involved).
    const auto& ins = p.instructions;
    Raster expect = Raster::make2d(64, 64);
    for (int r = 0; r < 64; ++r)
        for (int col = 0; col < 64; ++col) {
            const double x = col + 0.5, y = r + 0.5;
            const bool v = oracle::member(ins[0], x, y, 0) &&
                           !(oracle::member(ins[1], x, y, 0) &&
                             (oracle::member(ins[2], x, y, 0) ||
                              oracle::member(ins[3], x, y, 0)));
            expect.set(r, col, v);
        }
    c.require(res.raster == expect, "final raster differs from the boolean oracle");
}

// ---------------------------------------------------------------------------
// Criterion 3: Chamfer / distance transform correctness
// ---------------------------------------------------------------------------

void criterion_3(Context& ctx, Check& c) {
    // (a) identity: Ch(x, x) = 0 exactly.
    const EdgeMap circle = edge_map(render_primitive(
        Instruction::primitive2d(PrimitiveKind::Circle, 32, 32, 20), ctx.cfg2d));
    c.require(chamfer(circle, circle).pixels == 0.0, "Ch(x,x) != 0");

    // (b) single-pixel sets at distance 5 on a 64x64 canvas.
    Raster e1 = Raster::make2d(64, 64), e2 = Raster::make2d(64, 64);
    e1.set(10, 10, true);
    e2.set(13, 14, true);  // 3-4-5 triangle
    const ChamferResult cd = chamfer(e1, e2);
    c.require(std::fabs(cd.pixels - 5.0) < 1e-9, "pixel distance != 5");
    c.require(std::fabs(cd.normalized - 5.0 / (64.0 * std::sqrt(2.0))) < 1e-9,
              "normalized distance != 5/(64*sqrt(2))");

    // (c) exact distance transform on 100 random 16x16 edge maps, compared
    // against exhaustive integer nearest-edge search.
    Rng rng(303);
    int bad = 0;
    for (int trial = 0; trial < 100; ++trial) {
        Raster e = Raster::make2d(16, 16);
        const int npts = rng.uniform_int(14);  // sometimes empty
        for (int i = 0; i < npts; ++i) e.set(rng.uniform_int(16), rng.uniform_int(16), true);
        const DistanceField dt = distance_transform(e);
        for (int r = 0; r < 16; ++r)
            for (int col = 0; col < 16; ++col) {
                long best = -1;
                for (int er = 0; er < 16; ++er)
                    for (int ec = 0; ec < 16; ++ec) {
                        if (!e.at(er, ec)) continue;
                        const long d2 = long(r - er) * (r - er) + long(col - ec) * (col - ec);
                        if (best < 0 || d2 < best) best = d2;
                    }
                const double got = dt.at(r, col);
                if (best < 0) {
                    if (!std::isinf(got)) ++bad;
                } else if (got != std::sqrt(double(best))) {
                    ++bad;
                }
            }
    }
    c.require(bad == 0, "distance transform differs from exhaustive search at " +
                            std::to_string(bad) + " cells");
}

// ---------------------------------------------------------------------------
// Criterion 4: reward shaping
// ---------------------------------------------------------------------------

void criterion_4(Context&, Check& c) {
    for (double gamma : {1.0, 5.0, 20.0}) {
        c.require(shape_reward(0.0, gamma) == 1.0, "f(0) != 1");
        c.require(shape_reward(1.0, gamma) == 0.0, "f(1) != 0");
    }
    c.require(std::fabs(shape_reward(0.1, 20.0) - std::pow(0.9, 20)) < 1e-12,
              "f(0.1; 20) != 0.9^20");

    const std::vector<double> gammas{1, 2, 5, 10, 20};
    for (double gamma : gammas)
        for (int i = 0; i + 1 <= 20; ++i) {
            const double a = shape_reward(i / 20.0, gamma);
            const double b = shape_reward((i + 1) / 20.0, gamma);
            c.require(a > b, "not strictly decreasing in CD");
        }
    for (std::size_t g = 0; g + 1 < gammas.size(); ++g)
        for (int i = 1; i < 20; ++i)
            c.require(shape_reward(i / 20.0, gammas[g]) > shape_reward(i / 20.0, gammas[g + 1]),
                      "not strictly decreasing in gamma");
}

// ---------------------------------------------------------------------------
// Criterion 5: analytic gradients vs central finite differences
// ---------------------------------------------------------------------------

void criterion_5(Context&, Check& c) {
    const GrammarConfig cfg = tiny_grammar();
    const Vocabulary vocab = build_vocabulary(cfg);
    DatasetRecord rec;
    rec.program = parse_program("circle(4,4,4) square(12,12,8) subtract", cfg);
    rec.raster = execute(rec.program, cfg).raster;
    const std::vector<PolicyNetwork::SequenceSample> batch{
        {&rec.raster, record_tokens(rec, vocab), 1.0}};

    for (int k : {0, 3}) {
        PolicyNetwork net(tiny_arch(k), cfg, vocab, 77 + std::uint64_t(k));
        // Jitter off zero so no relu pre-activation sits exactly on its kink
        // (zero biases over empty canvas would; the finite difference would
        // then see a spurious one-sided slope).
        Rng jitter = Rng::stream(5, 5);
        for (double& p : net.params()) p += 0.01 * jitter.normal();

        nn::Vec grads(net.param_count(), 0.0);
        net.supervised_grads(batch, grads, false, nullptr);

        Rng pick = Rng::stream(6, std::uint64_t(k));
        const double eps = 1e-4;
        double worst = 0;
        for (int i = 0; i < 120; ++i) {
            const std::size_t j = std::size_t(pick.uniform(net.param_count()));
            const double saved = net.params()[j];
            net.params()[j] = saved + eps;
            const double up = net.evaluate_loss(batch).first;
            net.params()[j] = saved - eps;
            const double dn = net.evaluate_loss(batch).first;
            net.params()[j] = saved;
            const double fd = (up - dn) / (2 * eps);
            const double rel = std::fabs(fd - grads[j]) /
                               std::max({std::fabs(fd), std::fabs(grads[j]), 1e-4});
            worst = std::max(worst, rel);
        }
        c.require(worst < 1e-4, "K=" + std::to_string(k) + " worst relative error " +
                                    std::to_string(worst));
        std::ostringstream note;
        note << "K=" << k << " worst rel " << worst << " over 120 coords";
        c.note(note.str());
    }
}

// ---------------------------------------------------------------------------
// Criterion 6: REINFORCE estimator unbiasedness on an enumerable toy space
// ---------------------------------------------------------------------------

void criterion_6(Context&, Check& c) {
    const GrammarConfig cfg = toy_grammar();
    const Vocabulary vocab = build_vocabulary(cfg);
    c.require(vocab.size() == 3, "toy vocabulary size != 3");
    const int stop = vocab.stop_id();
    PolicyNetwork policy(tiny_arch(0), cfg, vocab, 17);
    const Raster target = execute(parse_program("circle(8,8,4)", cfg), cfg).raster;

    auto reward = [stop](const Program& p, const Raster&) {
        double r = 0.1 + 0.2 * double(p.length());
        if (p.terminated) r += 0.4;
        return r;
    };

    // Exhaustive outcome space of truncated ancestral sampling.
    std::vector<std::vector<int>> outcomes;
    const int T = cfg.max_length;
    auto expand = [&](auto&& self, std::vector<int> prefix) -> void {
        for (int id = 0; id < 3; ++id) {
            auto ext = prefix;
            ext.push_back(id);
            if (id == stop || int(ext.size()) == T)
                outcomes.push_back(ext);
            else
                self(self, ext);
        }
    };
    expand(expand, {});
    c.require(outcomes.size() == 15, "outcome enumeration != 15");

    // Exact gradient of -J by full enumeration.
    NetworkTokenPolicy tp(policy);
    nn::Vec exact(policy.param_count(), 0.0);
    double prob_total = 0;
    for (const auto& tokens : outcomes) {
        TokenPolicy::State st = tp.initial_state();
        int prev = tp.start_token();
        double prob = 1;
        for (int id : tokens) {
            prob *= tp.step(target, st, prev)[std::size_t(id)];
            prev = id;
        }
        prob_total += prob;
        Program prog;
        for (int id : tokens) {
            if (id == stop) {
                prog.terminated = true;
                break;
            }
            prog.instructions.push_back(vocab.at(id));
        }
        PolicyNetwork::SequenceSample s{&target, tokens, prob * reward(prog, target)};
        policy.sequence_grads(s, exact, false, nullptr);
    }
    c.require(std::fabs(prob_total - 1.0) < 1e-12, "outcome probabilities do not sum to 1");

    TrainConfig tc = TrainConfig::reinforce_defaults();
    tc.rollouts = 1;

    const int trials = 100000;
    std::vector<std::size_t> coords;
    for (std::size_t i = 0; i < policy.param_count(); i += 29) coords.push_back(i);

    int run = 0;
    for (double baseline_value : {0.0, 0.3}) {
        std::vector<double> sum(coords.size(), 0.0), sumsq(coords.size(), 0.0);
        Rng rng = Rng::stream(99, std::uint64_t(run));
        nn::Vec g(policy.param_count(), 0.0);
        const BaselineState baseline{baseline_value, 0.9};
        for (int t = 0; t < trials; ++t) {
            std::fill(g.begin(), g.end(), 0.0);
            reinforce_gradients(policy, {&target}, tc, baseline, g, rng, reward);
            for (std::size_t i = 0; i < coords.size(); ++i) {
                sum[i] += g[coords[i]];
                sumsq[i] += g[coords[i]] * g[coords[i]];
            }
        }
        int violations = 0;
        double worst_z = 0;
        for (std::size_t i = 0; i < coords.size(); ++i) {
            const double mean = sum[i] / trials;
            const double var = sumsq[i] / trials - mean * mean;
            const double se = std::sqrt(var / trials) + 1e-15;
            const double z = std::fabs(mean - exact[coords[i]]) / se;
            worst_z = std::max(worst_z, z);
            if (z >= 3.0) ++violations;
        }
        std::ostringstream note;
        note << "baseline " << baseline_value << ": " << coords.size()
             << " coords, worst |z| " << worst_z;
        c.note(note.str());
        c.require(violations == 0, "coords outside 3 SE with baseline " +
                                       std::to_string(baseline_value));
        ++run;
    }
}

// ---------------------------------------------------------------------------
// Criterion 7: desk-scale supervised learning
// ---------------------------------------------------------------------------

void criterion_7(Context& ctx, Check& c) {
    const auto t0 = Clock::now();
    const GrammarConfig& cfg = ctx.cfg2d;
    const Vocabulary vocab = build_vocabulary(cfg);

    std::unordered_set<std::string> seen;
    std::uint64_t attempt = 0;
    ctx.desk_train = sample_clean(cfg, 100, {{3, 1000}, {5, 1000}}, seen, attempt);
    ctx.desk_test = sample_clean(cfg, 100, {{3, 100}, {5, 100}}, seen, attempt);

    PolicyNetwork policy(desk_arch(0), cfg, vocab, 1);
    TrainConfig tc = TrainConfig::supervised_defaults();
    tc.epochs = 60;
    tc.lr = 0.003;
    tc.seed = 1;
    train_supervised(policy, ctx.desk_train, {}, tc);
    tc.epochs = 40;
    tc.lr = 0.001;
    tc.seed = 2;
    const SupervisedResult res = train_supervised(policy, ctx.desk_train, {}, tc);
    const double acc = res.curve.back().train_acc;

    NetworkTokenPolicy tp(policy);
    std::vector<Raster> targets;
    for (const auto& rec : ctx.desk_test) targets.push_back(rec.raster);
    const EvalReport rep = eval_reconstruction(tp, targets, 10, 10, cfg);

    const double elapsed = secs_since(t0);
    std::ostringstream note;
    note << "train acc " << acc << ", held-out mean CD " << rep.mean_cd_pixels << " px, "
         << int(elapsed) << "s";
    c.note(note.str());
    c.require(acc >= 0.95, "train token accuracy below 0.95");
    c.require(rep.mean_cd_pixels <= 1.5, "held-out mean CD above 1.5 px");
    c.require(elapsed < 1800.0, "over 30 minutes");

    ctx.desk_policy = std::move(policy);
    ctx.desk_ready = true;
}

// ---------------------------------------------------------------------------
// Criterion 8: stack-augmented (K=3) vs target-only (K=0) policies
// ---------------------------------------------------------------------------

void criterion_8(Context& ctx, Check& c) {
    if (!ctx.desk_ready) {
        c.require(false, "criterion 7 state unavailable");
        return;
    }
    const GrammarConfig& cfg = ctx.cfg2d;
    const Vocabulary vocab = build_vocabulary(cfg);
    std::vector<Raster> targets;
    for (const auto& rec : ctx.desk_test) targets.push_back(rec.raster);

    // Median per-item CD: the per-item distribution has rare catastrophic
    // outliers (an empty decode scores the canvas diagonal, ~90 px, i.e.
    // ~0.45 px of mean over 200 items), which would swamp the comparison.
    auto run = [&](int stack_k, std::uint64_t seed) {
        PolicyNetwork policy(desk_arch(stack_k), cfg, vocab, seed);
        TrainConfig tc = TrainConfig::supervised_defaults();
        tc.epochs = 20;
        tc.lr = 0.003;
        tc.seed = seed;
        train_supervised(policy, ctx.desk_train, {}, tc);
        tc.epochs = 10;
        tc.lr = 0.001;
        tc.seed = seed + 10;
        train_supervised(policy, ctx.desk_train, {}, tc);
        NetworkTokenPolicy tp(policy);
        const EvalReport rep = eval_reconstruction(tp, targets, 10, 10, cfg);
        std::vector<double> cds;
        for (const auto& it : rep.items) cds.push_back(it.cd_pixels);
        std::sort(cds.begin(), cds.end());
        const std::size_t n = cds.size();
        return (cds[n / 2 - 1] + cds[n / 2]) / 2;
    };

    double cd0 = 0, cd3 = 0;
    for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
        cd0 += run(0, seed);
        cd3 += run(3, seed);
    }
    cd0 /= 3;
    cd3 /= 3;
    std::ostringstream note;
    note << "3-seed mean of median held-out CD: K=0 " << cd0 << " px, K=3 " << cd3 << " px";
    c.note(note.str());
    c.require(cd3 <= cd0 * 1.05, "stack-augmented CD worse than target-only beyond 5%");
}

// ---------------------------------------------------------------------------
// Criterion 9: beam and refinement monotonicity on held-out targets
// ---------------------------------------------------------------------------

void criterion_9(Context& ctx, Check& c) {
    if (!ctx.desk_ready) {
        c.require(false, "criterion 7 state unavailable");
        return;
    }
    const GrammarConfig& cfg = ctx.cfg2d;
    NetworkTokenPolicy tp(ctx.desk_policy);

    double sum1 = 0, sum10 = 0;
    int refine_increases = 0;
    for (int i = 0; i < 100; ++i) {
        const Raster& t = ctx.desk_test[std::size_t(i)].raster;
        const EdgeMap te = edge_map(t);
        auto best_of_beam = [&](int k) {
            double best = canvas_diagonal(t);
            Program bp;
            for (const auto& r : beam_search(tp, t, k)) {
                const double cd =
                    chamfer(te, edge_map(execute(r.program, cfg).raster)).pixels;
                if (bp.empty() || cd < best) {
                    best = cd;
                    bp = r.program;
                }
            }
            return std::pair(best, bp);
        };
        const auto [cd1, p1] = best_of_beam(1);
        const auto [cd10, p10] = best_of_beam(10);
        sum1 += cd1;
        sum10 += cd10;

        const Program refined = refine(p10, t, 10, cfg);
        const double cdr = chamfer(te, edge_map(execute(refined, cfg).raster)).pixels;
        if (cdr > cd10 + 1e-12) ++refine_increases;
    }
    std::ostringstream note;
    note << "mean best-of-beam CD: k=1 " << sum1 / 100 << " px, k=10 " << sum10 / 100
         << " px; refinement increased CD on " << refine_increases << "/100 items";
    c.note(note.str());
    c.require(sum10 <= sum1, "mean CD at k=10 above k=1");
    c.require(refine_increases == 0, "refinement increased CD on some item");
}

// ---------------------------------------------------------------------------
// Criterion 10: reward-shaping trend (gamma = 20 vs gamma = 1)
// ---------------------------------------------------------------------------

void criterion_10(Context&, Check& c) {
    const GrammarConfig cfg = tiny_grammar();
    const Vocabulary vocab = build_vocabulary(cfg);

    std::unordered_set<std::string> seen;
    std::uint64_t attempt = 0;
    const auto pretrain_recs = sample_clean(cfg, 500, {{1, 10}, {3, 140}}, seen, attempt);
    const auto target_recs = sample_clean(cfg, 500, {{3, 100}}, seen, attempt);
    std::vector<Raster> targets;
    for (const auto& rec : target_recs) targets.push_back(rec.raster);

    ArchConfig arch;
    arch.conv_channels = {6, 12};
    arch.code_width = 32;
    arch.embed_width = 12;
    arch.hidden_width = 32;
    arch.fc_width = 32;
    arch.dropout = 0.0;
    PolicyNetwork base(arch, cfg, vocab, 7);
    TrainConfig sup = TrainConfig::supervised_defaults();
    sup.epochs = 25;
    sup.lr = 0.003;
    sup.seed = 3;
    train_supervised(base, pretrain_recs, {}, sup);

    auto mean_greedy_cd = [&](const PolicyNetwork& policy) {
        NetworkTokenPolicy tp(policy);
        double sum = 0;
        for (const Raster& t : targets) {
            const auto r = greedy_decode(tp, t);
            sum += chamfer(edge_map(t), edge_map(execute(r.program, cfg).raster)).pixels;
        }
        return sum / double(targets.size());
    };

    double cd20 = 0, cd1 = 0;
    for (double gamma : {20.0, 1.0}) {
        double total = 0;
        for (std::uint64_t seed : {11ull, 12ull, 13ull}) {
            PolicyNetwork p = base;
            TrainConfig rl = TrainConfig::reinforce_defaults();
            rl.gamma = gamma;
            rl.batch_size = 8;
            rl.rollouts = 5;
            rl.seed = seed;
            train_reinforce(p, targets, rl, 500);
            total += mean_greedy_cd(p);
        }
        (gamma == 20.0 ? cd20 : cd1) = total / 3;
    }
    std::ostringstream note;
    note << "3-seed mean CD: gamma=20 " << cd20 << " px, gamma=1 " << cd1 << " px";
    c.note(note.str());
    c.require(cd20 <= cd1, "gamma=20 fine-tuning worse than gamma=1");
}

// ---------------------------------------------------------------------------
// Criterion 11: nearest-neighbor retrieval baseline
// ---------------------------------------------------------------------------

void criterion_11(Context&, Check& c) {
    const GrammarConfig cfg = tiny_grammar();
    NearestNeighborIndex index;
    std::vector<Program> programs;
    std::vector<Raster> rasters;
    std::uint64_t attempt = 0;
    while (programs.size() < 100) {
        // Alternate lengths by attempt, not by index: the length-1 space is
        // small and exhausts, so the index must be fillable from length 3.
        Rng rng = Rng::stream(42, attempt);
        Program p = sample_program(attempt % 2 ? 3 : 1, rng, cfg);
        ++attempt;
        Raster r = execute(p, cfg).raster;
        // Unique non-empty rendered shapes, so self-retrieval is unambiguous
        // (an empty shape has no edges and no finite self-distance).
        if (r.empty_occupancy()) continue;
        if (std::find(rasters.begin(), rasters.end(), r) != rasters.end()) continue;
        index.add(p, r);
        programs.push_back(std::move(p));
        rasters.push_back(std::move(r));
    }

    int self_misses = 0;
    for (std::size_t i = 0; i < programs.size(); ++i) {
        const auto m = index.best_match(rasters[i]);
        if (m.id != int(i) || m.cd_pixels != 0.0 || index.retrieve(rasters[i]) != programs[i])
            ++self_misses;
    }
    c.require(self_misses == 0,
              "self-retrieval failed on " + std::to_string(self_misses) + " entries");

    // Exhaustive scan replicating the tie-break (CD, then IOU, then id).
    std::vector<EdgeMap> edges;
    for (const auto& r : rasters) edges.push_back(edge_map(r));
    int disagreements = 0;
    for (int q = 0; q < 50; ++q) {
        Rng rng = Rng::stream(43, std::uint64_t(q));
        const Raster query = execute(sample_program(3, rng, cfg), cfg).raster;
        const EdgeMap qe = edge_map(query);
        int best_id = -1;
        double best_cd = 0, best_iou = 0;
        for (std::size_t i = 0; i < rasters.size(); ++i) {
            const double cd = chamfer(qe, edges[i]).pixels;
            const double ov = iou(query, rasters[i]);
            if (best_id < 0 || cd < best_cd || (cd == best_cd && ov > best_iou)) {
                best_id = int(i);
                best_cd = cd;
                best_iou = ov;
            }
        }
        const auto m = index.best_match(query);
        if (m.id != best_id || m.cd_pixels != best_cd) ++disagreements;
    }
    c.require(disagreements == 0,
              "index disagrees with exhaustive scan on " + std::to_string(disagreements) +
                  " queries");
}

// ---------------------------------------------------------------------------
// Criterion 12: detection scores and MAP fixture
// ---------------------------------------------------------------------------

void criterion_12(Context&, Check& c) {
    const GrammarConfig cfg = GrammarConfig::defaults2d();

    // Hand-constructed 5-image fixture.
    const Instruction c0 = Instruction::primitive2d(PrimitiveKind::Circle, 20, 20, 8);
    const Instruction c1 = Instruction::primitive2d(PrimitiveKind::Circle, 40, 40, 8);
    const Instruction c2 = Instruction::primitive2d(PrimitiveKind::Circle, 16, 48, 8);
    const Instruction s2 = Instruction::primitive2d(PrimitiveKind::Square, 48, 16, 16);
    const Instruction s3 = Instruction::primitive2d(PrimitiveKind::Square, 32, 32, 16);
    std::vector<std::vector<Instruction>> gt{{c0}, {c1}, {c2, s2}, {s3}, {}};

    auto det = [](const Instruction& in, double score) {
        Detection d;
        d.instruction = in;
        d.bbox = primitive_bbox(in);
        d.score = score;
        return d;
    };
    std::vector<std::vector<Detection>> dets(5);
    dets[0].push_back(det(c0, 0.9));   // TP (circle)
    dets[4].push_back(det(c0, 0.8));   // FP: image 4 has no ground truth
    dets[1].push_back(det(c1, 0.7));   // TP
    dets[2].push_back(det(c2, 0.6));   // TP
    dets[3].push_back(det(s3, 0.95));  // TP (square)
    dets[4].push_back(det(s3, 0.3));   // FP

    // Circle ranking: TP FP TP TP over 3 ground truths.
    //   precision 1, 1/2, 2/3, 3/4; recall 1/3, 1/3, 2/3, 1.
    //   envelope 1, 3/4, 3/4, 3/4 -> AP = 1/3 + 1/4 + 1/4 = 5/6.
    // Square ranking: TP FP over 2 ground truths.
    //   precision 1, 1/2; recall 1/2, 1/2 -> AP = 1/2. MAP = 2/3.
    const MapResult res = map_evaluation(dets, gt, 0.5);
    c.require(res.per_class_ap.size() == 2, "class count != 2");
    const double ap_circle = res.per_class_ap.at(PrimitiveKind::Circle);
    const double ap_square = res.per_class_ap.at(PrimitiveKind::Square);
    c.require(std::fabs(ap_circle - 5.0 / 6.0) < 1e-9, "circle AP != 5/6");
    c.require(std::fabs(ap_square - 0.5) < 1e-9, "square AP != 1/2");
    c.require(std::fabs(res.map - 2.0 / 3.0) < 1e-9, "MAP != 2/3");
    {
        std::ostringstream note;
        note << "AP circle " << ap_circle << ", square " << ap_square << ", MAP " << res.map;
        c.note(note.str());
    }

    // Score arithmetic on synthetic beams: every reported score must equal the
    // exact beam occurrence count divided by k.
    const GrammarConfig tiny = tiny_grammar();
    const Vocabulary vocab = build_vocabulary(tiny);
    const Raster target = execute(parse_program("circle(8,8,4)", tiny), tiny).raster;
    int score_errors = 0;
    for (int variant = 0; variant < 5; ++variant) {
        Rng rng = Rng::stream(55, std::uint64_t(variant));
        std::vector<nn::Vec> rows;
        for (int step = 0; step < tiny.max_length + 1; ++step) {
            nn::Vec row(std::size_t(vocab.size()), 0.0);
            double sum = 0;
            for (double& v : row) sum += (v = 0.05 + rng.uniform_real());
            for (double& v : row) v /= sum;
            rows.push_back(std::move(row));
        }
        const TablePolicy policy(tiny, rows);
        const int k = 10;
        const auto beam = beam_search(policy, target, k);
        const auto scores = detection_scores(policy, target, k);
        for (const Detection& d : scores) {
            int occurrences = 0;
            for (const auto& r : beam) {
                bool found = false;
                for (const auto& in : r.program.instructions)
                    if (in == d.instruction) {
                        found = true;
                        break;
                    }
                occurrences += found;
            }
            if (d.score != double(occurrences) / double(k)) ++score_errors;
            if (d.bbox != primitive_bbox(d.instruction)) ++score_errors;
        }
    }
    c.require(score_errors == 0, "detection score arithmetic mismatches");
}

// ---------------------------------------------------------------------------
// Criterion 13: dataset determinism and duplicate-free generation
// ---------------------------------------------------------------------------

void criterion_13(Context& ctx, Check& c) {
    DatasetSpec spec;
    spec.grammar = ctx.cfg2d;
    spec.seed = 2024;
    spec.counts["train"][3] = 400;
    spec.counts["train"][5] = 200;
    spec.counts["test"][3] = 100;

    const fs::path root = fs::temp_directory_path() / "csg_acceptance_ds";
    const fs::path a = root / "a", b = root / "b";
    fs::remove_all(root);
    generate_dataset(spec, a.string(), true);
    generate_dataset(spec, b.string(), true);

    auto slurp = [](const fs::path& p) {
        std::ifstream is(p, std::ios::binary);
        std::ostringstream os;
        os << is.rdbuf();
        return os.str();
    };
    int file_mismatches = 0, files = 0;
    for (const auto& entry : fs::recursive_directory_iterator(a)) {
        if (!entry.is_regular_file()) continue;
        ++files;
        const fs::path rel = fs::relative(entry.path(), a);
        if (!fs::exists(b / rel) || slurp(entry.path()) != slurp(b / rel)) ++file_mismatches;
    }
    c.require(files > 0, "no dataset files produced");
    c.require(file_mismatches == 0, "reruns differ on " + std::to_string(file_mismatches) +
                                        " files");

    std::unordered_set<std::string> seen;
    int duplicates = 0, programs = 0;
    for (const char* split : {"train", "test"})
        for (const auto& entry : fs::directory_iterator(a / split)) {
            if (entry.path().extension() != ".csg") continue;
            std::ifstream is(entry.path());
            std::string line;
            while (std::getline(is, line)) {
                if (line.empty()) continue;
                ++programs;
                if (!seen.insert(line).second) ++duplicates;
            }
        }
    c.require(programs == 700, "expected 700 programs, scanned " + std::to_string(programs));
    c.require(duplicates == 0, std::to_string(duplicates) + " duplicate programs");
    c.note(std::to_string(files) + " files byte-identical across reruns; " +
           std::to_string(programs) + " unique programs");
    fs::remove_all(root);
}

}  // namespace

int main(int argc, char** argv) {
    // Optional arguments select a subset of criteria (for debugging); the
    // default runs all of them.
    std::unordered_set<int> selected;
    for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));

    Context ctx;
    struct Entry {
        int id;
        const char* name;
        std::function<void(Context&, Check&)> fn;
    };
    const std::vector<Entry> entries{
        {1, "executor matches the analytic boolean oracle", criterion_1},
        {2, "seven-instruction program trace and final raster", criterion_2},
        {3, "chamfer distance and distance transform correctness", criterion_3},
        {4, "reward shaping endpoints and monotonicity", criterion_4},
        {5, "analytic gradients match finite differences (K=0 and K=3)", criterion_5},
        {6, "policy-gradient estimator is unbiased on the toy space", criterion_6},
        {7, "desk-scale supervised learning reaches accuracy and CD targets", criterion_7},
        {8, "stack-augmented policy matches or beats target-only", criterion_8},
        {9, "beam width and refinement never hurt held-out CD", criterion_9},
        {10, "gamma=20 fine-tuning matches or beats gamma=1", criterion_10},
        {11, "nearest-neighbor retrieval is exact and matches a full scan", criterion_11},
        {12, "detection scores and MAP fixture arithmetic", criterion_12},
        {13, "dataset generation is deterministic and duplicate-free", criterion_13},
    };

    int failures = 0;
    for (const Entry& e : entries) {
        if (!selected.empty() && !selected.count(e.id)) continue;
        Check check;
        const auto t0 = Clock::now();
        try {
            e.fn(ctx, check);
        } catch (const std::exception& ex) {
            check.require(false, std::string("exception: ") + ex.what());
        }
        const double elapsed = secs_since(t0);
        if (!check.ok) ++failures;
        std::printf("[%s] criterion %2d: %s (%.1fs)%s%s\n", check.ok ? "PASS" : "FAIL", e.id,
                    e.name, elapsed, check.detail.str().empty() ? "" : " — ",
                    check.detail.str().c_str());
        std::fflush(stdout);
    }
    if (failures)
        std::printf("%d criterion(s) failed\n", failures);
    else if (selected.empty())
        std::printf("all 13 criteria passed\n");
    return failures;
}
