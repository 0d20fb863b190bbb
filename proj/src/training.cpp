#include "csg/training.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "csg/errors.hpp"
#include "csg/metrics.hpp"
#include "csg/search.hpp"

namespace csg {

TrainConfig TrainConfig::supervised_defaults() {
    TrainConfig cfg;
    cfg.mode = TrainMode::Supervised;
    cfg.lr = 0.001;
    return cfg;
}

TrainConfig TrainConfig::reinforce_defaults() {
    TrainConfig cfg;
    cfg.mode = TrainMode::Reinforce;
    cfg.lr = 0.01;
    cfg.momentum = 0.9;
    return cfg;
}

void TrainConfig::check() const {
    if (lr <= 0) throw std::invalid_argument("learning rate must be positive");
    if (batch_size < 1) throw std::invalid_argument("batch size must be >= 1");
    if (epochs < 0) throw std::invalid_argument("epoch count must be >= 0");
    if (rollouts < 1) throw std::invalid_argument("rollouts per target must be >= 1");
    if (gamma <= 0) throw std::invalid_argument("reward exponent must be positive");
    if (baseline_decay < 0 || baseline_decay >= 1)
        throw std::invalid_argument("baseline decay must be in [0,1)");
    if (momentum < 0 || momentum >= 1)
        throw std::invalid_argument("momentum must be in [0,1)");
    if (clip_norm <= 0) throw std::invalid_argument("clip norm must be positive");
}

AdamOptimizer::AdamOptimizer(std::size_t n, double lr, double beta1, double beta2, double eps)
    : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps), m_(n, 0.0), v_(n, 0.0) {}

void AdamOptimizer::step(nn::Vec& params, const nn::Vec& grads) {
    if (params.size() != m_.size() || grads.size() != m_.size())
        throw DimMismatch("optimizer state size mismatch");
    ++t_;
    const double c1 = 1.0 - std::pow(beta1_, double(t_));
    const double c2 = 1.0 - std::pow(beta2_, double(t_));
    for (std::size_t i = 0; i < params.size(); ++i) {
        m_[i] = beta1_ * m_[i] + (1 - beta1_) * grads[i];
        v_[i] = beta2_ * v_[i] + (1 - beta2_) * grads[i] * grads[i];
        params[i] -= lr_ * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + eps_);
    }
}

MomentumSgd::MomentumSgd(std::size_t n, double lr, double momentum)
    : lr_(lr), momentum_(momentum), velocity_(n, 0.0) {}

void MomentumSgd::step(nn::Vec& params, const nn::Vec& grads) {
    if (params.size() != velocity_.size() || grads.size() != velocity_.size())
        throw DimMismatch("optimizer state size mismatch");
    for (std::size_t i = 0; i < params.size(); ++i) {
        velocity_[i] = momentum_ * velocity_[i] + grads[i];
        params[i] -= lr_ * velocity_[i];
    }
}

std::vector<int> record_tokens(const DatasetRecord& rec, const Vocabulary& vocab) {
    std::vector<int> ids;
    ids.reserve(rec.program.length() + 1);
    for (const auto& instr : rec.program.instructions) {
        const int id = vocab.id_of(instr);
        if (id < 0) throw RangeError("program instruction absent from vocabulary");
        ids.push_back(id);
    }
    ids.push_back(vocab.stop_id());
    return ids;
}

SupervisedResult train_supervised(PolicyNetwork& policy,
                                  const std::vector<DatasetRecord>& train,
                                  const std::vector<DatasetRecord>& val,
                                  const TrainConfig& cfg, const std::string& checkpoint_path,
                                  const std::string& csv_path) {
    cfg.check();
    if (train.empty()) throw std::invalid_argument("training set is empty");

    std::vector<PolicyNetwork::SequenceSample> train_samples, val_samples;
    for (const auto& rec : train)
        train_samples.push_back({&rec.raster, record_tokens(rec, policy.vocab()), 1.0});
    for (const auto& rec : val)
        val_samples.push_back({&rec.raster, record_tokens(rec, policy.vocab()), 1.0});

    std::ofstream csv;
    if (!csv_path.empty()) {
        csv.open(csv_path);
        if (!csv) throw IoError("cannot open loss log for writing: " + csv_path);
        csv << "epoch,train_loss,train_acc,val_loss,val_acc\n";
    }

    SupervisedResult result;
    auto log_epoch = [&](const EpochLog& e) {
        result.curve.push_back(e);
        if (csv.is_open())
            csv << e.epoch << ',' << e.train_loss << ',' << e.train_acc << ','
                << e.val_loss << ',' << e.val_acc << '\n';
    };

    auto validate_now = [&](double fallback_loss, double fallback_acc) {
        return val_samples.empty() ? std::pair<double, double>{fallback_loss, fallback_acc}
                                   : policy.evaluate_loss(val_samples);
    };

    // Epoch 0: pre-training evaluation.
    auto [tl0, ta0] = policy.evaluate_loss(train_samples);
    auto [vl0, va0] = validate_now(tl0, ta0);
    log_epoch({0, tl0, ta0, vl0, va0});

    nn::Vec best_params = policy.params();
    result.best_val_loss = vl0;
    result.best_epoch = 0;

    AdamOptimizer opt(policy.param_count(), cfg.lr);
    Rng shuffle_rng = Rng::stream(cfg.seed, 0x5u);
    Rng dropout_rng = Rng::stream(cfg.seed, 0xd0u);
    std::vector<std::size_t> order(train_samples.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    nn::Vec grads(policy.param_count(), 0.0);
    std::vector<PolicyNetwork::SequenceSample> batch;
    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        // Fisher-Yates with the stream rng keeps runs reproducible.
        for (std::size_t i = order.size(); i > 1; --i)
            std::swap(order[i - 1], order[shuffle_rng.uniform(i)]);

        double loss_sum = 0, acc_sum = 0;
        std::size_t batches = 0;
        for (std::size_t at = 0; at < order.size(); at += std::size_t(cfg.batch_size)) {
            batch.clear();
            const std::size_t end =
                std::min(order.size(), at + std::size_t(cfg.batch_size));
            for (std::size_t i = at; i < end; ++i)
                batch.push_back(train_samples[order[i]]);
            auto [loss, acc] = policy.supervised_grads(batch, grads, true, &dropout_rng);
            nn::clip_by_global_norm(grads, cfg.clip_norm);
            opt.step(policy.params(), grads);
            loss_sum += loss;
            acc_sum += acc;
            ++batches;
        }
        const double train_loss = loss_sum / double(batches);
        const double train_acc = acc_sum / double(batches);
        auto [val_loss, val_acc] = validate_now(train_loss, train_acc);
        log_epoch({epoch, train_loss, train_acc, val_loss, val_acc});

        if (val_loss < result.best_val_loss) {
            result.best_val_loss = val_loss;
            result.best_epoch = epoch;
            best_params = policy.params();
        }
    }

    policy.params() = best_params;
    if (!checkpoint_path.empty()) save_checkpoint(checkpoint_path, policy);
    return result;
}

double reinforce_gradients(const PolicyNetwork& policy,
                           const std::vector<const Raster*>& targets,
                           const TrainConfig& cfg, const BaselineState& baseline,
                           nn::Vec& grads, Rng& rng, const RewardFn& reward) {
    cfg.check();
    if (targets.empty()) throw std::invalid_argument("empty target batch");
    RewardFn score = reward;
    if (!score) {
        score = [&policy, &cfg](const Program& p, const Raster& target) {
            return shaped_reward(p, target, cfg.gamma, policy.grammar());
        };
    }

    NetworkTokenPolicy rollout_policy(policy);
    const double scale = 1.0 / (double(cfg.rollouts) * double(targets.size()));
    double reward_sum = 0;
    for (const Raster* target : targets) {
        auto rollouts = sample_rollouts(rollout_policy, *target, cfg.rollouts, rng);
        for (const auto& r : rollouts) {
            const double R = score(r.program, *target);
            reward_sum += R;
            const double advantage = R - baseline.value;
            if (advantage == 0.0 || r.tokens.empty()) continue;
            PolicyNetwork::SequenceSample sample{target, r.tokens, advantage * scale};
            policy.sequence_grads(sample, grads, false, nullptr);
        }
    }
    return reward_sum * scale;
}

ReinforceStats reinforce_step(PolicyNetwork& policy,
                              const std::vector<const Raster*>& targets,
                              const TrainConfig& cfg, BaselineState& baseline,
                              MomentumSgd& opt, Rng& rng, const RewardFn& reward) {
    nn::Vec grads(policy.param_count(), 0.0);
    ReinforceStats stats;
    stats.mean_reward = reinforce_gradients(policy, targets, cfg, baseline, grads, rng, reward);
    stats.grad_norm = nn::global_norm(grads);
    nn::clip_by_global_norm(grads, cfg.clip_norm);
    opt.step(policy.params(), grads);
    baseline.update(stats.mean_reward);
    stats.baseline = baseline.value;
    return stats;
}

ReinforceResult train_reinforce(PolicyNetwork& policy, const std::vector<Raster>& targets,
                                const TrainConfig& cfg, int steps,
                                const std::string& csv_path, const RewardFn& reward) {
    cfg.check();
    if (targets.empty()) throw std::invalid_argument("empty target set");
    if (steps < 0) throw std::invalid_argument("step count must be >= 0");

    std::ofstream csv;
    if (!csv_path.empty()) {
        csv.open(csv_path);
        if (!csv) throw IoError("cannot open reward log for writing: " + csv_path);
        csv << "step,reward,baseline,lr\n";
    }

    MomentumSgd opt(policy.param_count(), cfg.lr, cfg.momentum);
    BaselineState baseline{0.0, cfg.baseline_decay};
    Rng rng = Rng::stream(cfg.seed, 0x51u);

    ReinforceResult result;
    std::vector<const Raster*> batch;
    for (int step = 0; step < steps; ++step) {
        batch.clear();
        const std::size_t bs = std::min(targets.size(), std::size_t(cfg.batch_size));
        for (std::size_t i = 0; i < bs; ++i)
            batch.push_back(&targets[rng.uniform(targets.size())]);
        ReinforceStats stats = reinforce_step(policy, batch, cfg, baseline, opt, rng, reward);
        result.rewards.push_back(stats.mean_reward);
        result.baselines.push_back(stats.baseline);
        if (csv.is_open())
            csv << step << ',' << stats.mean_reward << ',' << stats.baseline << ','
                << cfg.lr << '\n';
    }
    return result;
}

}  // namespace csg
