#ifndef CSG_TRAINING_HPP
#define CSG_TRAINING_HPP

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "csg/datagen.hpp"
#include "csg/nn.hpp"
#include "csg/policy.hpp"
#include "csg/rng.hpp"

namespace csg {

enum class TrainMode { Supervised, Reinforce };

struct TrainConfig {
    TrainMode mode = TrainMode::Supervised;
    double lr = 0.001;           // adaptive-moment default (supervised)
    double momentum = 0.9;       // momentum SGD (reinforce; paper lr 0.01)
    int batch_size = 32;
    int epochs = 10;
    int rollouts = 5;            // M rollouts per target
    double gamma = 20.0;         // reward exponent
    double baseline_decay = 0.9;
    double clip_norm = 5.0;      // global-norm gradient clip
    std::uint64_t seed = 0;

    static TrainConfig supervised_defaults();
    static TrainConfig reinforce_defaults();
    void check() const;  // throws std::invalid_argument
};

struct BaselineState {
    double value = 0.0;
    double decay = 0.9;

    void update(double mean_reward) {
        value = decay * value + (1.0 - decay) * mean_reward;
    }
};

class AdamOptimizer {
public:
    AdamOptimizer(std::size_t n, double lr, double beta1 = 0.9, double beta2 = 0.999,
                  double eps = 1e-8);
    void step(nn::Vec& params, const nn::Vec& grads);

private:
    double lr_, beta1_, beta2_, eps_;
    std::uint64_t t_ = 0;
    nn::Vec m_, v_;
};

class MomentumSgd {
public:
    MomentumSgd(std::size_t n, double lr, double momentum);
    void step(nn::Vec& params, const nn::Vec& grads);

private:
    double lr_, momentum_;
    nn::Vec velocity_;
};

struct EpochLog {
    int epoch = 0;  // 0 = pre-training evaluation
    double train_loss = 0, train_acc = 0;
    double val_loss = 0, val_acc = 0;
};

struct SupervisedResult {
    std::vector<EpochLog> curve;
    double best_val_loss = 0;
    int best_epoch = 0;
};

// Minimizes mean per-token cross-entropy with teacher forcing; Adam with
// global-norm clipping. Logs one CSV row per epoch (epoch 0 is the initial
// evaluation); keeps the best-validation parameters in the policy at return
// and optionally checkpoints them. With no validation set, training loss
// drives model selection.
SupervisedResult train_supervised(PolicyNetwork& policy,
                                  const std::vector<DatasetRecord>& train,
                                  const std::vector<DatasetRecord>& val,
                                  const TrainConfig& cfg,
                                  const std::string& checkpoint_path = "",
                                  const std::string& csv_path = "");

// Episodic reward for a sampled program against a target; defaults to the
// shaped reward (1 - chamfer)^gamma with zeros for invalid/empty renders.
using RewardFn = std::function<double(const Program&, const Raster&)>;

// Accumulates the Monte-Carlo policy-gradient estimate for one batch of
// targets into `grads` (no parameter update): M unmasked rollouts per target,
// each token's grad(-log pi) weighted by (R - baseline) / (M * batch).
// Returns the mean reward over all rollouts.
double reinforce_gradients(const PolicyNetwork& policy,
                           const std::vector<const Raster*>& targets,
                           const TrainConfig& cfg, const BaselineState& baseline,
                           nn::Vec& grads, Rng& rng, const RewardFn& reward = {});

struct ReinforceStats {
    double mean_reward = 0;
    double baseline = 0;  // after the update
    double grad_norm = 0; // before clipping
};

// One REINFORCE update: estimate gradients, clip, apply with momentum SGD,
// then fold the batch mean reward into the running-average baseline.
ReinforceStats reinforce_step(PolicyNetwork& policy,
                              const std::vector<const Raster*>& targets,
                              const TrainConfig& cfg, BaselineState& baseline,
                              MomentumSgd& opt, Rng& rng, const RewardFn& reward = {});

struct ReinforceResult {
    std::vector<double> rewards;    // per-step batch mean
    std::vector<double> baselines;  // after each step
};

// RL fine-tuning loop over a fixed target set; each step draws batch_size
// targets uniformly. CSV columns: step, reward, baseline, lr.
ReinforceResult train_reinforce(PolicyNetwork& policy, const std::vector<Raster>& targets,
                                const TrainConfig& cfg, int steps,
                                const std::string& csv_path = "",
                                const RewardFn& reward = {});

// Token ids (stop-terminated) for a dataset record under a vocabulary.
std::vector<int> record_tokens(const DatasetRecord& rec, const Vocabulary& vocab);

}  // namespace csg

#endif
