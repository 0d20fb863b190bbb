#ifndef CSG_POLICY_HPP
#define CSG_POLICY_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "csg/exec.hpp"
#include "csg/grammar.hpp"
#include "csg/metrics.hpp"
#include "csg/nn.hpp"
#include "csg/raster.hpp"
#include "csg/rng.hpp"

namespace csg {

struct ArchConfig {
    std::vector<int> conv_channels = {8, 16, 32};
    int code_width = 96;
    int embed_width = 32;
    int hidden_width = 96;
    int fc_width = 96;
    double dropout = 0.2;
    int stack_channels = 0;   // K; 0 = target-only observation
    int voxel_downsample = 2; // 3D inputs are max-pooled by this factor

    friend bool operator==(const ArchConfig&, const ArchConfig&) = default;
};

// Policy observation: the target shape plus the top-K execution stack maps.
struct Observation {
    const Raster* target = nullptr;
    std::vector<Raster> stack;  // size K (may be empty when K = 0)
};

// Convolutional encoder + GRU decoder emitting a categorical distribution
// over vocabulary ids at each step. The start-of-sequence sentinel is the
// id `vocab_size()` (one past the last vocabulary entry).
class PolicyNetwork {
public:
    PolicyNetwork() = default;
    PolicyNetwork(const ArchConfig& arch, const GrammarConfig& grammar,
                  const Vocabulary& vocab, std::uint64_t seed);

    const ArchConfig& arch() const { return arch_; }
    const GrammarConfig& grammar() const { return grammar_; }
    const Vocabulary& vocab() const { return vocab_; }
    int vocab_size() const { return vocab_.size(); }
    int start_token() const { return vocab_.size(); }

    nn::Vec& params() { return params_; }
    const nn::Vec& params() const { return params_; }
    std::size_t param_count() const { return params_.size(); }

    struct DecoderState {
        nn::Vec hidden;
        int step = 0;
    };
    DecoderState initial_state() const;

    // Inference path (deterministic; dropout disabled).
    nn::Vec encode(const Observation& obs) const;
    nn::Vec decode_step(const nn::Vec& code, DecoderState& state, int prev_token) const;
    nn::Vec step(const Observation& obs, DecoderState& state, int prev_token) const;

    struct SequenceSample {
        const Raster* target = nullptr;
        std::vector<int> tokens;  // labels; conditioning prefix is the same sequence
        double weight = 1.0;      // gradient weight (REINFORCE advantage / M)
    };

    // Teacher-forced negative log-likelihood of `tokens`; accumulates
    // weight * grad(-sum log pi) into `grads`. Stack channels (K > 0) are
    // produced by executing the token prefix. Returns the unweighted NLL sum
    // and token count.
    struct SeqResult {
        double nll_sum = 0;
        std::size_t tokens = 0;
        std::size_t correct = 0;  // argmax hits, for accuracy tracking
    };
    SeqResult sequence_grads(const SequenceSample& sample, nn::Vec& grads,
                             bool train_mode, Rng* dropout_rng) const;

    // Mean per-token cross-entropy over the batch; overwrites `grads` with
    // the per-token-averaged gradient. Returns (loss, accuracy).
    std::pair<double, double> supervised_grads(const std::vector<SequenceSample>& batch,
                                               nn::Vec& grads, bool train_mode,
                                               Rng* dropout_rng) const;

    // Forward-only NLL (no gradients), for validation curves.
    std::pair<double, double> evaluate_loss(const std::vector<SequenceSample>& batch) const;

private:
    struct Layers;

    nn::Vec build_input(const Observation& obs) const;
    ExecStack advance_prefix(const std::vector<int>& tokens, std::size_t upto) const;

    ArchConfig arch_;
    GrammarConfig grammar_;
    Vocabulary vocab_;
    int input_rank_ = 2;
    std::array<int, 3> input_sp_ = {1, 1, 1};
    std::vector<nn::Conv> convs_;
    nn::Dense to_code_;
    nn::Embedding embed_;
    nn::Gru gru_;
    nn::Dense fc1_, fc2_, classifier_;
    nn::Vec params_;
};

// Versioned binary checkpoint; refuses to load against a vocabulary whose
// hash differs from the one recorded at save time.
void save_checkpoint(const std::string& path, const PolicyNetwork& policy);
PolicyNetwork load_checkpoint(const std::string& path, const GrammarConfig& grammar,
                              const Vocabulary& vocab);

// Retrieval baseline: returns the stored program whose rendered shape has
// minimal Chamfer distance to the query (ties: higher IOU, then lowest id).
class NearestNeighborIndex {
public:
    void add(const Program& program, const Raster& raster);
    std::size_t size() const { return entries_.size(); }

    struct Match {
        int id = -1;
        double cd_pixels = 0;
        double iou = 0;
    };
    Match best_match(const Raster& target) const;
    const Program& retrieve(const Raster& target) const;
    const Program& program_at(int id) const { return entries_[std::size_t(id)].program; }

private:
    struct Entry {
        Program program;
        Raster raster;
        EdgeMap edges;
        DistanceField dt;
        std::size_t edge_count = 0;
    };
    std::vector<Entry> entries_;
};

}  // namespace csg

#endif
