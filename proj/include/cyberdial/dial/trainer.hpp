#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "cyberdial/dial/cnet.hpp"
#include "cyberdial/dial/dru.hpp"
#include "cyberdial/dial/policy.hpp"
#include "cyberdial/learner.hpp"
#include "cyberdial/nn/optim.hpp"

namespace cyberdial::dial {

struct DialConfig {
    int batch_episodes = 128;  // per epoch
    int rollout_lanes = 8;     // episodes per optimizer step
    double lr = 0.0005;
    double gamma = 0.9;
    EpsilonSchedule epsilon;
    int hidden = 128;
    int target_update_epochs = 100;
    double dru_sigma = 2.0;
    int epochs = 5000;
    double grad_clip = 10.0;
    std::uint64_t seed = 1;

    void validate() const;  // throws std::invalid_argument
};

// One timestep of a batch of lanes; rows are (lane, agent) pairs, lane major.
struct StepRecord {
    std::vector<std::uint8_t> active;  // per lane: acted at this step
    std::vector<int> slots;            // rows x slot_count
    std::vector<int> prev_actions;     // rows
    std::vector<int> agent_ids;        // rows
    std::vector<std::vector<int>> sources;  // rows; indices into the previous step's rows
    std::vector<std::uint8_t> incoming_nonzero;  // rows
    std::vector<std::uint8_t> masks;   // rows x actions
    std::vector<int> actions;          // rows
    nn::Tensor noise;                  // rows x bits; train mode only
    nn::Tensor q_env;                  // rows x actions
    nn::Tensor q_msg;                  // rows x bits, pre-DRU
    nn::Tensor message;                // rows x bits, post-DRU (train form, or bits in exec)
    std::vector<std::uint8_t> message_bits;  // rows x bits, what went on the wire
    nn::Tensor hidden1, hidden2;       // rows x hidden, after this step
    std::vector<double> reward;        // per lane
    std::vector<std::uint8_t> terminal;  // per lane: episode ended with this step
    std::uint64_t param_version = 0;

    // Train mode graph handles.
    nn::Value q_env_node;
    nn::Value message_node;
};

struct WireMessage {
    int lane = 0;
    int timestep = 0;
    int sender = 0;
    std::vector<std::uint8_t> bits;
};

struct RolloutBatch {
    ChannelMode mode = ChannelMode::Train;
    int lanes = 0;
    int agents = 0;
    std::unique_ptr<nn::Tape> tape;  // train mode: graph of the whole batch
    std::vector<StepRecord> steps;
    std::vector<double> returns;     // per lane
    std::vector<WireMessage> wire;   // nonzero exec-mode messages only
    std::uint64_t env_steps = 0;

    int rows() const { return lanes * agents; }
};

struct RolloutOptions {
    ChannelMode mode = ChannelMode::Train;
    double sigma = 2.0;
    // Null schedule means greedy selection.
    const EpsilonSchedule* schedule = nullptr;
    // Environment timesteps so far; drives the schedule and is advanced here.
    std::uint64_t* timestep_counter = nullptr;
    const StepObserver* observer = nullptr;
};

// Runs already-reset tasks to completion. Messages sent at t are routed to
// their receivers' inputs at t+1; in train mode they stay on the graph so the
// loss reaches the sender's message head.
RolloutBatch run_rollout(CNet& net, std::span<Task* const> tasks, const RolloutOptions& options, Rng& rng);

// Q-values the given network produces when replaying the recorded inputs of a
// batch, generating its own messages with the recorded noise.
std::vector<nn::Tensor> replay_q_values(CNet& net, const RolloutBatch& batch, double sigma);

// TD targets per step and row: r + gamma * max over allowed next actions of
// the target Q, or r at episode end. Rows of inactive lanes are 0.
std::vector<std::vector<double>> td_targets(const RolloutBatch& batch, const std::vector<nn::Tensor>& target_q,
                                            double gamma);

// Sum over steps and agents of squared TD errors, divided by the lane count.
// Built on the batch tape.
nn::Value dial_loss(RolloutBatch& batch, CNet& target, double gamma, double sigma);

class DialTrainer : public Learner {
public:
    DialTrainer(DialConfig config, TaskFactory factory);

    std::string algorithm() const override { return "dial"; }
    void train_epoch() override;
    EvalResult evaluate(std::size_t episodes, std::uint64_t seed, const StepObserver* observer = nullptr,
                        const EpisodeReset& reset = {}) override;

    int epochs_done() const override { return epoch_; }
    std::uint64_t episodes_seen() const override { return episodes_; }
    std::uint64_t timesteps_seen() const override { return timesteps_; }
    double epsilon() const override { return config_.epsilon.at(timesteps_); }

    nn::ParamStore& params() override { return online_.params(); }
    nn::CheckpointHeader checkpoint_header() const override;
    void sync_target() override { target_.params().copy_values_from(online_.params()); }

    CNet& online() { return online_; }
    CNet& target() { return target_; }
    const DialConfig& config() const { return config_; }
    const TaskLayout& layout() const { return layout_; }
    // Wire log of the most recent evaluation.
    const std::vector<WireMessage>& last_wire_log() const { return last_wire_; }

    // One group: rollout, loss, backward, optimizer step. Returns the loss.
    double train_group(std::span<Task* const> tasks);

private:
    DialConfig config_;
    TaskFactory factory_;
    TaskLayout layout_;
    CNet online_;
    CNet target_;
    std::vector<std::unique_ptr<Task>> lanes_;
    Rng explore_rng_;
    int epoch_ = 0;
    std::uint64_t episodes_ = 0;
    std::uint64_t timesteps_ = 0;
    std::vector<WireMessage> last_wire_;
};

}  // namespace cyberdial::dial
