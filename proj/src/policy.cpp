#include "csg/policy.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "csg/errors.hpp"

namespace csg {

namespace {

int argmax(const nn::Vec& v) {
    return int(std::max_element(v.begin(), v.end()) - v.begin());
}

void check_arch(const ArchConfig& a) {
    if (a.conv_channels.empty()) throw std::invalid_argument("conv_channels empty");
    for (int c : a.conv_channels)
        if (c <= 0) throw std::invalid_argument("conv channel count must be positive");
    if (a.code_width <= 0 || a.embed_width <= 0 || a.hidden_width <= 0 || a.fc_width <= 0)
        throw std::invalid_argument("layer widths must be positive");
    if (a.dropout < 0 || a.dropout >= 1) throw std::invalid_argument("dropout must be in [0,1)");
    if (a.stack_channels < 0) throw std::invalid_argument("stack_channels must be >= 0");
    if (a.voxel_downsample <= 0) throw std::invalid_argument("voxel_downsample must be >= 1");
}

}  // namespace

PolicyNetwork::PolicyNetwork(const ArchConfig& arch, const GrammarConfig& grammar,
                             const Vocabulary& vocab, std::uint64_t seed)
    : arch_(arch), grammar_(grammar), vocab_(vocab) {
    check_arch(arch_);
    grammar_.check();
    if (vocab_.size() < 2) throw std::invalid_argument("vocabulary too small");

    const int extent = grammar_.canvas_extent;
    if (grammar_.is3d()) {
        const int ds = arch_.voxel_downsample;
        const int p = (extent + ds - 1) / ds;
        input_rank_ = 3;
        input_sp_ = {p, p, p};
    } else {
        input_rank_ = 2;
        input_sp_ = {extent, extent, 1};
    }

    nn::ParamRegistry reg;
    const int in_ch0 = 1 + arch_.stack_channels;
    std::array<int, 3> sp = input_sp_;
    int ch = in_ch0;
    convs_.resize(arch_.conv_channels.size());
    for (std::size_t i = 0; i < convs_.size(); ++i) {
        convs_[i].init(reg, input_rank_, sp, ch, arch_.conv_channels[i]);
        sp = convs_[i].out_sp;
        ch = arch_.conv_channels[i];
    }
    to_code_.init(reg, int(convs_.back().out_size()), arch_.code_width);
    embed_.init(reg, vocab_.size() + 1, arch_.embed_width);  // +1: start sentinel
    gru_.init(reg, arch_.code_width + arch_.embed_width, arch_.hidden_width);
    fc1_.init(reg, arch_.hidden_width, arch_.fc_width);
    fc2_.init(reg, arch_.fc_width, arch_.fc_width);
    classifier_.init(reg, arch_.fc_width, vocab_.size());

    params_.assign(reg.total(), 0.0);
    Rng rng = Rng::stream(seed, 0x9e11);
    for (auto& c : convs_) c.init_params(params_.data(), rng);
    to_code_.init_params(params_.data(), rng);
    embed_.init_params(params_.data(), rng);
    gru_.init_params(params_.data(), rng);
    fc1_.init_params(params_.data(), rng);
    fc2_.init_params(params_.data(), rng);
    classifier_.init_params(params_.data(), rng);
}

PolicyNetwork::DecoderState PolicyNetwork::initial_state() const {
    DecoderState st;
    st.hidden.assign(std::size_t(arch_.hidden_width), 0.0);
    st.step = 0;
    return st;
}

nn::Vec PolicyNetwork::build_input(const Observation& obs) const {
    if (obs.target == nullptr) throw std::invalid_argument("observation without target");
    const int k = arch_.stack_channels;
    if (int(obs.stack.size()) != k)
        throw DimMismatch("observation stack channel count mismatch");

    const std::size_t spatial =
        std::size_t(input_sp_[0]) * input_sp_[1] * input_sp_[2];
    nn::Vec input(spatial * std::size_t(1 + k), 0.0);

    auto fill = [&](const Raster& r, double* out) {
        if (r.rank() != (grammar_.is3d() ? 3 : 2) || r.dims()[0] != grammar_.canvas_extent)
            throw DimMismatch("observation raster does not match grammar canvas");
        if (input_rank_ == 2) {
            for (std::size_t i = 0; i < r.size(); ++i) out[i] = r.cells()[i] ? 1.0 : 0.0;
            return;
        }
        // 3D: max-pool ds^3 blocks down to the network's input resolution.
        const int ds = arch_.voxel_downsample;
        const auto& d = r.dims();
        for (int a = 0; a < d[0]; ++a)
            for (int b = 0; b < d[1]; ++b)
                for (int c = 0; c < d[2]; ++c) {
                    if (!r.at(a, b, c)) continue;
                    const std::size_t idx =
                        (std::size_t(a / ds) * input_sp_[1] + std::size_t(b / ds)) *
                            input_sp_[2] +
                        std::size_t(c / ds);
                    out[idx] = 1.0;
                }
    };

    fill(*obs.target, input.data());
    for (int i = 0; i < k; ++i) fill(obs.stack[std::size_t(i)], input.data() + spatial * (i + 1));
    return input;
}

// --- inference -------------------------------------------------------------

nn::Vec PolicyNetwork::encode(const Observation& obs) const {
    nn::Vec act = build_input(obs);
    for (const auto& conv : convs_) {
        nn::Vec next(conv.out_size());
        conv.forward(params_.data(), act.data(), next.data());
        nn::relu(next.data(), next.size());
        act = std::move(next);
    }
    nn::Vec code(std::size_t(arch_.code_width));
    to_code_.forward(params_.data(), act.data(), code.data());
    nn::relu(code.data(), code.size());
    return code;
}

nn::Vec PolicyNetwork::decode_step(const nn::Vec& code, DecoderState& state,
                                   int prev_token) const {
    if (prev_token < 0 || prev_token > vocab_.size())
        throw std::out_of_range("previous token id out of range");
    if (int(code.size()) != arch_.code_width) throw DimMismatch("code width mismatch");

    nn::Vec x(code);
    const double* e = embed_.row(params_.data(), prev_token);
    x.insert(x.end(), e, e + arch_.embed_width);

    nn::Vec h(std::size_t(arch_.hidden_width));
    gru_.forward(params_.data(), x.data(), state.hidden.data(), h.data(), nullptr);
    state.hidden = h;
    ++state.step;

    nn::Vec a1(std::size_t(arch_.fc_width));
    fc1_.forward(params_.data(), h.data(), a1.data());
    nn::relu(a1.data(), a1.size());
    nn::Vec a2(std::size_t(arch_.fc_width));
    fc2_.forward(params_.data(), a1.data(), a2.data());
    nn::relu(a2.data(), a2.size());
    nn::Vec logits(std::size_t(vocab_.size()));
    classifier_.forward(params_.data(), a2.data(), logits.data());
    nn::Vec probs(logits.size());
    nn::softmax(logits.data(), probs.data(), logits.size());
    return probs;
}

nn::Vec PolicyNetwork::step(const Observation& obs, DecoderState& state,
                            int prev_token) const {
    return decode_step(encode(obs), state, prev_token);
}

// --- training --------------------------------------------------------------

namespace {

struct EncCache {
    nn::Vec input;
    std::vector<nn::Vec> acts;  // post-relu conv outputs
    nn::Vec code_relu;          // post-relu, pre-dropout
    nn::Vec code_mask;          // empty when dropout inactive
    nn::Vec code_out;
};

struct StepCache {
    int prev = 0, label = 0;
    const EncCache* enc = nullptr;
    nn::Vec x;
    nn::Gru::Cache gcache;
    nn::Vec h;
    nn::Vec relu1, mask1, out1;
    nn::Vec relu2, mask2, out2;
    nn::Vec probs;
};

}  // namespace

PolicyNetwork::SeqResult PolicyNetwork::sequence_grads(const SequenceSample& sample,
                                                       nn::Vec& grads, bool train_mode,
                                                       Rng* dropout_rng) const {
    if (sample.tokens.empty()) throw std::invalid_argument("empty token sequence");
    if (grads.size() != params_.size()) throw DimMismatch("gradient buffer size mismatch");
    const bool drop = train_mode && arch_.dropout > 0;
    if (drop && dropout_rng == nullptr)
        throw std::invalid_argument("dropout requires an rng in train mode");
    for (int t : sample.tokens)
        if (t < 0 || t >= vocab_.size()) throw std::out_of_range("token id out of range");

    const int k = arch_.stack_channels;
    const std::size_t T = sample.tokens.size();

    auto encode_cached = [&](const Observation& obs, EncCache& ec) {
        ec.input = build_input(obs);
        ec.acts.resize(convs_.size());
        const nn::Vec* src = &ec.input;
        for (std::size_t i = 0; i < convs_.size(); ++i) {
            ec.acts[i].assign(convs_[i].out_size(), 0.0);
            convs_[i].forward(params_.data(), src->data(), ec.acts[i].data());
            nn::relu(ec.acts[i].data(), ec.acts[i].size());
            src = &ec.acts[i];
        }
        nn::Vec code(std::size_t(arch_.code_width));
        to_code_.forward(params_.data(), src->data(), code.data());
        nn::relu(code.data(), code.size());
        ec.code_relu = code;
        if (drop) {
            ec.code_mask.assign(code.size(), 0.0);
            nn::dropout_forward(code.data(), ec.code_mask.data(), code.size(), arch_.dropout,
                                *dropout_rng);
        }
        ec.code_out = std::move(code);
    };

    // Forward.
    EncCache shared_enc;
    std::vector<EncCache> per_step_enc;
    if (k == 0) {
        encode_cached(Observation{sample.target, {}}, shared_enc);
    } else {
        per_step_enc.resize(T);
    }

    std::vector<StepCache> steps(T);
    ExecStack stack;
    nn::Vec hprev(std::size_t(arch_.hidden_width), 0.0);
    SeqResult res;
    for (std::size_t t = 0; t < T; ++t) {
        StepCache& sc = steps[t];
        sc.prev = t == 0 ? start_token() : sample.tokens[t - 1];
        sc.label = sample.tokens[t];
        if (k == 0) {
            sc.enc = &shared_enc;
        } else {
            Observation obs{sample.target, stack_observation(stack, k, grammar_)};
            encode_cached(obs, per_step_enc[t]);
            sc.enc = &per_step_enc[t];
        }

        sc.x = sc.enc->code_out;
        const double* e = embed_.row(params_.data(), sc.prev);
        sc.x.insert(sc.x.end(), e, e + arch_.embed_width);

        sc.h.assign(std::size_t(arch_.hidden_width), 0.0);
        gru_.forward(params_.data(), sc.x.data(), hprev.data(), sc.h.data(), &sc.gcache);
        hprev = sc.h;

        nn::Vec a1(std::size_t(arch_.fc_width));
        fc1_.forward(params_.data(), sc.h.data(), a1.data());
        nn::relu(a1.data(), a1.size());
        sc.relu1 = a1;
        if (drop) {
            sc.mask1.assign(a1.size(), 0.0);
            nn::dropout_forward(a1.data(), sc.mask1.data(), a1.size(), arch_.dropout,
                                *dropout_rng);
        }
        sc.out1 = std::move(a1);

        nn::Vec a2(std::size_t(arch_.fc_width));
        fc2_.forward(params_.data(), sc.out1.data(), a2.data());
        nn::relu(a2.data(), a2.size());
        sc.relu2 = a2;
        if (drop) {
            sc.mask2.assign(a2.size(), 0.0);
            nn::dropout_forward(a2.data(), sc.mask2.data(), a2.size(), arch_.dropout,
                                *dropout_rng);
        }
        sc.out2 = std::move(a2);

        nn::Vec logits(std::size_t(vocab_.size()));
        classifier_.forward(params_.data(), sc.out2.data(), logits.data());
        sc.probs.assign(logits.size(), 0.0);
        nn::softmax(logits.data(), sc.probs.data(), logits.size());

        res.nll_sum += -std::log(std::max(sc.probs[std::size_t(sc.label)], 1e-300));
        res.correct += argmax(sc.probs) == sc.label ? 1 : 0;
        ++res.tokens;

        if (k > 0) advance_stack(stack, vocab_.at(sc.label), grammar_);
    }

    // Backward.
    auto encoder_backward = [&](const EncCache& ec, nn::Vec dcode) {
        if (drop)
            for (std::size_t i = 0; i < dcode.size(); ++i) dcode[i] *= ec.code_mask[i];
        nn::relu_backward(ec.code_relu.data(), dcode.data(), dcode.size());
        nn::Vec d(convs_.back().out_size());
        to_code_.backward(params_.data(), ec.acts.back().data(), dcode.data(), grads.data(),
                          d.data());
        for (std::size_t i = convs_.size(); i-- > 0;) {
            nn::relu_backward(ec.acts[i].data(), d.data(), d.size());
            const nn::Vec& in = i == 0 ? ec.input : ec.acts[i - 1];
            if (i == 0) {
                convs_[0].backward(params_.data(), in.data(), d.data(), grads.data(), nullptr);
            } else {
                nn::Vec dprev(convs_[i - 1].out_size(), 0.0);
                convs_[i].backward(params_.data(), in.data(), d.data(), grads.data(),
                                   dprev.data());
                d = std::move(dprev);
            }
        }
    };

    const double w = sample.weight;
    nn::Vec dh_next(std::size_t(arch_.hidden_width), 0.0);
    nn::Vec dcode_sum(std::size_t(arch_.code_width), 0.0);
    for (std::size_t t = T; t-- > 0;) {
        const StepCache& sc = steps[t];
        nn::Vec dlogits = sc.probs;
        dlogits[std::size_t(sc.label)] -= 1.0;
        for (double& v : dlogits) v *= w;

        nn::Vec dout2(std::size_t(arch_.fc_width), 0.0);
        classifier_.backward(params_.data(), sc.out2.data(), dlogits.data(), grads.data(),
                             dout2.data());
        if (drop)
            for (std::size_t i = 0; i < dout2.size(); ++i) dout2[i] *= sc.mask2[i];
        nn::relu_backward(sc.relu2.data(), dout2.data(), dout2.size());

        nn::Vec dout1(std::size_t(arch_.fc_width), 0.0);
        fc2_.backward(params_.data(), sc.out1.data(), dout2.data(), grads.data(), dout1.data());
        if (drop)
            for (std::size_t i = 0; i < dout1.size(); ++i) dout1[i] *= sc.mask1[i];
        nn::relu_backward(sc.relu1.data(), dout1.data(), dout1.size());

        nn::Vec dh(std::size_t(arch_.hidden_width), 0.0);
        fc1_.backward(params_.data(), sc.h.data(), dout1.data(), grads.data(), dh.data());
        for (std::size_t i = 0; i < dh.size(); ++i) dh[i] += dh_next[i];

        nn::Vec dx(sc.x.size(), 0.0);
        std::fill(dh_next.begin(), dh_next.end(), 0.0);
        gru_.backward(params_.data(), sc.gcache, dh.data(), grads.data(), dx.data(),
                      dh_next.data());

        embed_.backward(sc.prev, dx.data() + arch_.code_width, grads.data());
        if (k == 0) {
            for (int i = 0; i < arch_.code_width; ++i) dcode_sum[std::size_t(i)] += dx[std::size_t(i)];
        } else {
            encoder_backward(*sc.enc, nn::Vec(dx.begin(), dx.begin() + arch_.code_width));
        }
    }
    if (k == 0) encoder_backward(shared_enc, std::move(dcode_sum));
    return res;
}

std::pair<double, double> PolicyNetwork::supervised_grads(
    const std::vector<SequenceSample>& batch, nn::Vec& grads, bool train_mode,
    Rng* dropout_rng) const {
    grads.assign(params_.size(), 0.0);
    double nll = 0;
    std::size_t tokens = 0, correct = 0;
    for (const auto& sample : batch) {
        SeqResult r = sequence_grads(sample, grads, train_mode, dropout_rng);
        nll += r.nll_sum;
        tokens += r.tokens;
        correct += r.correct;
    }
    if (tokens == 0) return {0.0, 0.0};
    const double inv = 1.0 / double(tokens);
    for (double& g : grads) g *= inv;
    return {nll * inv, double(correct) * inv};
}

std::pair<double, double> PolicyNetwork::evaluate_loss(
    const std::vector<SequenceSample>& batch) const {
    const int k = arch_.stack_channels;
    double nll = 0;
    std::size_t tokens = 0, correct = 0;
    for (const auto& sample : batch) {
        DecoderState st = initial_state();
        ExecStack stack;
        nn::Vec code;
        if (k == 0) code = encode(Observation{sample.target, {}});
        for (std::size_t t = 0; t < sample.tokens.size(); ++t) {
            if (k > 0)
                code = encode(Observation{sample.target, stack_observation(stack, k, grammar_)});
            const int prev = t == 0 ? start_token() : sample.tokens[t - 1];
            const int label = sample.tokens[t];
            nn::Vec probs = decode_step(code, st, prev);
            nll += -std::log(std::max(probs[std::size_t(label)], 1e-300));
            correct += argmax(probs) == label ? 1 : 0;
            ++tokens;
            if (k > 0) advance_stack(stack, vocab_.at(label), grammar_);
        }
    }
    if (tokens == 0) return {0.0, 0.0};
    return {nll / double(tokens), double(correct) / double(tokens)};
}

// --- checkpoints -------------------------------------------------------------

namespace {

constexpr char kCkptMagic[4] = {'C', 'S', 'G', 'P'};
constexpr std::uint32_t kCkptVersion = 1;

template <typename T>
void put(std::ostream& os, T v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

template <typename T>
T get(std::istream& is) {
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof(v));
    if (!is) throw IoError("truncated checkpoint");
    return v;
}

}  // namespace

void save_checkpoint(const std::string& path, const PolicyNetwork& policy) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open checkpoint for writing: " + path);
    os.write(kCkptMagic, 4);
    put(os, kCkptVersion);
    put(os, policy.vocab().hash());
    put(os, std::uint32_t(policy.vocab_size()));
    const ArchConfig& a = policy.arch();
    put(os, std::uint32_t(a.conv_channels.size()));
    for (int c : a.conv_channels) put(os, std::uint32_t(c));
    put(os, std::uint32_t(a.code_width));
    put(os, std::uint32_t(a.embed_width));
    put(os, std::uint32_t(a.hidden_width));
    put(os, std::uint32_t(a.fc_width));
    put(os, a.dropout);
    put(os, std::uint32_t(a.stack_channels));
    put(os, std::uint32_t(a.voxel_downsample));
    put(os, std::uint64_t(policy.param_count()));
    os.write(reinterpret_cast<const char*>(policy.params().data()),
             std::streamsize(policy.param_count() * sizeof(double)));
    if (!os) throw IoError("checkpoint write failed: " + path);
}

PolicyNetwork load_checkpoint(const std::string& path, const GrammarConfig& grammar,
                              const Vocabulary& vocab) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open checkpoint: " + path);
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, kCkptMagic, 4) != 0)
        throw IoError("not a checkpoint file: " + path);
    if (get<std::uint32_t>(is) != kCkptVersion)
        throw IoError("unsupported checkpoint version: " + path);
    const std::uint64_t hash = get<std::uint64_t>(is);
    const std::uint32_t vsize = get<std::uint32_t>(is);
    if (hash != vocab.hash() || int(vsize) != vocab.size())
        throw IoError("checkpoint vocabulary mismatch: " + path);
    ArchConfig a;
    a.conv_channels.resize(get<std::uint32_t>(is));
    for (int& c : a.conv_channels) c = int(get<std::uint32_t>(is));
    a.code_width = int(get<std::uint32_t>(is));
    a.embed_width = int(get<std::uint32_t>(is));
    a.hidden_width = int(get<std::uint32_t>(is));
    a.fc_width = int(get<std::uint32_t>(is));
    a.dropout = get<double>(is);
    a.stack_channels = int(get<std::uint32_t>(is));
    a.voxel_downsample = int(get<std::uint32_t>(is));
    const std::uint64_t nparams = get<std::uint64_t>(is);

    PolicyNetwork policy(a, grammar, vocab, 0);
    if (policy.param_count() != nparams)
        throw IoError("checkpoint parameter count mismatch: " + path);
    is.read(reinterpret_cast<char*>(policy.params().data()),
            std::streamsize(nparams * sizeof(double)));
    if (!is) throw IoError("truncated checkpoint: " + path);
    return policy;
}

// --- nearest-neighbor retrieval ----------------------------------------------

void NearestNeighborIndex::add(const Program& program, const Raster& raster) {
    Entry e;
    e.program = program;
    e.raster = raster;
    e.edges = edge_map(raster);
    e.edge_count = e.edges.count();
    e.dt = distance_transform(e.edges);
    entries_.push_back(std::move(e));
}

NearestNeighborIndex::Match NearestNeighborIndex::best_match(const Raster& target) const {
    if (entries_.empty()) throw EmptyIndex("nearest-neighbor index is empty");
    const EdgeMap tedges = edge_map(target);
    const std::size_t tcount = tedges.count();
    const DistanceField tdt = distance_transform(tedges);
    const double diag = canvas_diagonal(target);

    Match best;
    for (std::size_t id = 0; id < entries_.size(); ++id) {
        const Entry& e = entries_[id];
        if (!e.raster.same_dims(target))
            throw DimMismatch("query raster does not match index dims");
        double cd;
        if (tcount == 0 || e.edge_count == 0) {
            cd = diag;
        } else {
            double sum_te = 0, sum_et = 0;
            for (std::size_t i = 0; i < tedges.size(); ++i) {
                if (tedges.cells()[i]) sum_te += e.dt.values[i];
                if (e.edges.cells()[i]) sum_et += tdt.values[i];
            }
            cd = 0.5 * sum_te / double(tcount) + 0.5 * sum_et / double(e.edge_count);
        }
        if (best.id >= 0 && cd > best.cd_pixels) continue;
        const double ov = iou(target, e.raster);
        if (best.id < 0 || cd < best.cd_pixels || ov > best.iou) {
            best.id = int(id);
            best.cd_pixels = cd;
            best.iou = ov;
        }
    }
    return best;
}

const Program& NearestNeighborIndex::retrieve(const Raster& target) const {
    return entries_[std::size_t(best_match(target).id)].program;
}

}  // namespace csg
