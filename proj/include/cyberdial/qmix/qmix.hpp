#pragma once

#include <cstdint>
#include <deque>
#include <memory>
#include <span>
#include <vector>

#include "cyberdial/dial/policy.hpp"
#include "cyberdial/learner.hpp"
#include "cyberdial/nn/ops.hpp"
#include "cyberdial/nn/optim.hpp"

namespace cyberdial::qmix {

struct QmixConfig {
    int batch_episodes = 128;   // collected per epoch
    int rollout_lanes = 8;      // episodes per collection group
    int sample_episodes = 128;  // replay batch per gradient step
    int buffer_capacity = 5000;
    double lr = 0.001;
    double gamma = 0.9;
    dial::EpsilonSchedule epsilon;
    int hidden = 64;
    int mixer_hidden = 32;
    int target_update_epochs = 200;
    int epochs = 5000;
    double grad_clip = 10.0;
    std::uint64_t seed = 1;

    void validate() const;
};

// Per-agent recurrent Q-network over [observation bits | one-hot previous
// action | one-hot agent id], shared across agents. Parameters live in the
// caller's store under "agent.".
struct AgentNetDims {
    int observation_bits = 0;
    int actions = 0;
    int agents = 0;
    int hidden = 64;

    int input_width() const { return observation_bits + actions + agents; }
};

void add_agent_params(nn::ParamStore& store, const AgentNetDims& dims, Rng& rng);
// Returns (q [rows, actions], hidden').
std::pair<nn::Value, nn::Value> agent_forward(nn::Tape& tape, nn::ParamStore& store, const AgentNetDims& dims,
                                              nn::Value inputs, nn::Value hidden);

// Monotonic mixer: Q_tot = elu(q W1 + b1) w2 + V(s), with W1 = |hyper(s)|,
// w2 = |hyper(s)|, b1 = hyper(s) and V a two-layer hypernetwork. Parameters
// live under "mixer.".
struct MixerDims {
    int agents = 0;
    int state_width = 0;
    int hidden = 32;
};

void add_mixer_params(nn::ParamStore& store, const MixerDims& dims, Rng& rng);
// agent_qs [B, agents], state [B, state_width] -> [B, 1]
nn::Value mix(nn::Tape& tape, nn::ParamStore& store, const MixerDims& dims, nn::Value agent_qs, nn::Value state);

// One collected episode, padded to the horizon.
struct EpisodeRecord {
    int length = 0;
    std::vector<double> observations;   // horizon x agents x observation_bits
    std::vector<double> state;          // horizon x state_width
    std::vector<int> actions;           // horizon x agents
    std::vector<std::uint8_t> masks;    // horizon x agents x actions
    std::vector<double> reward;         // horizon
    std::vector<std::uint8_t> terminal; // horizon
};

class ReplayBuffer {
public:
    explicit ReplayBuffer(std::size_t capacity) : capacity_(capacity) {}
    void push(EpisodeRecord episode);
    std::size_t size() const { return episodes_.size(); }
    std::size_t capacity() const { return capacity_; }
    // Uniform without replacement; n <= size().
    std::vector<const EpisodeRecord*> sample(std::size_t n, Rng& rng) const;

private:
    std::size_t capacity_;
    std::deque<EpisodeRecord> episodes_;
};

class QmixTrainer : public Learner {
public:
    QmixTrainer(QmixConfig config, TaskFactory factory);

    std::string algorithm() const override { return "qmix"; }
    void train_epoch() override;
    EvalResult evaluate(std::size_t episodes, std::uint64_t seed, const StepObserver* observer = nullptr,
                        const EpisodeReset& reset = {}) override;

    int epochs_done() const override { return epoch_; }
    std::uint64_t episodes_seen() const override { return episodes_; }
    std::uint64_t timesteps_seen() const override { return timesteps_; }
    double epsilon() const override { return config_.epsilon.at(timesteps_); }

    nn::ParamStore& params() override { return online_; }
    nn::CheckpointHeader checkpoint_header() const override;
    void sync_target() override { target_.copy_values_from(online_); }

    const QmixConfig& config() const { return config_; }
    const AgentNetDims& agent_dims() const { return agent_dims_; }
    const MixerDims& mixer_dims() const { return mixer_dims_; }
    const ReplayBuffer& buffer() const { return buffer_; }
    nn::ParamStore& target_params() { return target_; }
    std::uint64_t gradient_steps() const { return online_.version(); }

    // Collects one group of episodes into the buffer and trains once if the
    // buffer holds a full replay batch.
    void collect_and_train(std::span<Task* const> tasks);
    // TD loss on a replay batch; built on `tape`.
    nn::Value batch_loss(nn::Tape& tape, const std::vector<const EpisodeRecord*>& batch);

private:
    std::vector<EpisodeRecord> run_episodes(std::span<Task* const> tasks, bool explore, const StepObserver* observer,
                                            std::vector<double>* returns);

    QmixConfig config_;
    TaskFactory factory_;
    TaskLayout layout_;
    AgentNetDims agent_dims_;
    MixerDims mixer_dims_;
    nn::ParamStore online_;
    nn::ParamStore target_;
    ReplayBuffer buffer_;
    std::vector<std::unique_ptr<Task>> lanes_;
    Rng explore_rng_;
    Rng sample_rng_;
    int epoch_ = 0;
    std::uint64_t episodes_ = 0;
    std::uint64_t timesteps_ = 0;
};

}  // namespace cyberdial::qmix
