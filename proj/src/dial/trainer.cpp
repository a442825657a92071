#include "cyberdial/dial/trainer.hpp"

#include <algorithm>
#include <exception>
#include <stdexcept>

namespace cyberdial::dial {

void DialConfig::validate() const
{
    if (batch_episodes <= 0 || rollout_lanes <= 0 || hidden <= 0 || target_update_epochs <= 0 || epochs <= 0)
        throw std::invalid_argument("dial config: counts must be positive");
    if (!(lr > 0.0) || !(gamma >= 0.0 && gamma <= 1.0) || dru_sigma < 0.0)
        throw std::invalid_argument("dial config: lr, gamma or sigma out of range");
    if (epsilon.end > epsilon.start || epsilon.end < 0.0 || epsilon.start > 1.0)
        throw std::invalid_argument("dial config: epsilon_end must not exceed epsilon_start");
}

namespace {

nn::Tensor bits_to_tensor(const std::vector<std::uint8_t>& bits, int rows, int cols)
{
    nn::Tensor t(rows, cols);
    for (std::size_t i = 0; i < bits.size(); ++i) t.data[i] = bits[i];
    return t;
}

bool any_bit(const std::vector<std::uint8_t>& bits, int row, int width)
{
    for (int k = 0; k < width; ++k)
        if (bits[static_cast<std::size_t>(row) * width + k]) return true;
    return false;
}

}  // namespace

RolloutBatch run_rollout(CNet& net, std::span<Task* const> tasks, const RolloutOptions& options, Rng& rng)
{
    if (tasks.empty()) throw std::invalid_argument("run_rollout: no lanes");
    const TaskLayout& layout = tasks[0]->layout();
    const int L = static_cast<int>(tasks.size());
    const int A = layout.agents;
    const int R = L * A;
    const int S = net.slot_count();
    const int U = net.dims().actions;
    const int M = net.dims().message_bits;
    const int H = net.dims().hidden;
    const bool train = options.mode == ChannelMode::Train;

    RolloutBatch batch;
    batch.mode = options.mode;
    batch.lanes = L;
    batch.agents = A;
    batch.returns.assign(L, 0.0);
    if (train) batch.tape = std::make_unique<nn::Tape>(true);

    std::unique_ptr<nn::Tape> step_tape;
    nn::Value prev_message;
    CNet::Hidden hidden;
    nn::Tensor h1(R, H), h2(R, H);
    std::vector<std::uint8_t> prev_bits(static_cast<std::size_t>(R) * M, 0);
    std::vector<int> prev_actions(R, 0);
    std::vector<int> src;

    for (int t = 0; t < layout.horizon; ++t) {
        StepRecord rec;
        rec.active.resize(L);
        bool any_active = false;
        for (int l = 0; l < L; ++l) {
            rec.active[l] = tasks[l]->done() ? 0 : 1;
            any_active = any_active || rec.active[l];
        }
        if (!any_active) break;

        if (!train) step_tape = std::make_unique<nn::Tape>(false);
        nn::Tape& tape = train ? *batch.tape : *step_tape;

        rec.slots.assign(static_cast<std::size_t>(R) * S, -1);
        rec.prev_actions = prev_actions;
        rec.agent_ids.resize(R);
        rec.sources.assign(R, {});
        rec.incoming_nonzero.assign(R, 0);
        for (int l = 0; l < L; ++l)
            for (int a = 0; a < A; ++a) {
                const int row = l * A + a;
                rec.agent_ids[row] = a;
                if (!rec.active[l]) continue;
                tasks[l]->slots(a, std::span<int>(rec.slots.data() + static_cast<std::size_t>(row) * S, S));
                // nothing has been sent before the first step
                if (t == 0) continue;
                tasks[l]->message_sources(a, src);
                for (int s : src) {
                    rec.sources[row].push_back(l * A + s);
                    if (any_bit(prev_bits, l * A + s, M)) rec.incoming_nonzero[row] = 1;
                }
            }

        nn::Value message_in;
        if (train) {
            if (t == 0) {
                prev_message = tape.constant(nn::Tensor(R, M));
                hidden = net.zero_hidden(tape, R);
            }
            message_in = nn::route_rows(prev_message, rec.sources);
        } else {
            message_in = nn::route_rows(tape.constant(bits_to_tensor(prev_bits, R, M)), rec.sources);
            hidden = net.hidden_from(tape, h1, h2);
        }
        const nn::Value z = net.embed_input(tape, rec.slots, message_in, rec.prev_actions, rec.agent_ids);
        const CNet::Output out = net.forward(tape, z, hidden);
        rec.param_version = net.params().version();

        rec.masks.assign(static_cast<std::size_t>(R) * U, 0);
        for (int l = 0; l < L; ++l)
            for (int a = 0; a < A; ++a) {
                const int row = l * A + a;
                std::span<std::uint8_t> m(rec.masks.data() + static_cast<std::size_t>(row) * U, U);
                if (rec.active[l])
                    tasks[l]->mask(a, rec.incoming_nonzero[row] != 0, m);
                else
                    m[0] = 1;
            }

        const double eps =
            options.schedule && options.timestep_counter ? options.schedule->at(*options.timestep_counter) : 0.0;
        rec.actions.assign(R, 0);
        const nn::Tensor& q = out.q_env.data();
        for (int row = 0; row < R; ++row) {
            if (!rec.active[row / A]) continue;
            rec.actions[row] = select_action(q.row(row),
                                             std::span<const std::uint8_t>(rec.masks.data() + static_cast<std::size_t>(row) * U, U),
                                             eps, rng);
        }

        nn::Value message;
        if (train) {
            rec.noise = draw_message_noise(R, M, rng);
            message = dru_train(out.q_msg, options.sigma, rec.noise);
            rec.message_bits = discretize(message.data());
            rec.message = message.data();
        } else {
            rec.message_bits = dru_exec(out.q_msg.data());
        }
        for (int row = 0; row < R; ++row)
            if (!rec.active[row / A])
                std::fill_n(rec.message_bits.begin() + static_cast<std::ptrdiff_t>(row) * M, M, std::uint8_t{0});
        if (!train) rec.message = bits_to_tensor(rec.message_bits, R, M);

        rec.reward.assign(L, 0.0);
        rec.terminal.assign(L, 0);
        std::vector<std::exception_ptr> errors(L);
#pragma omp parallel for schedule(static) if (L > 1)
        for (int l = 0; l < L; ++l) {
            if (!rec.active[l]) continue;
            try {
                const std::size_t base = static_cast<std::size_t>(l) * A;
                rec.reward[l] = tasks[l]->step(std::span<const int>(rec.actions.data() + base, A),
                                               std::span<const std::uint8_t>(rec.incoming_nonzero.data() + base, A),
                                               std::span<const std::uint8_t>(rec.message_bits.data() + base * M, A * M));
                rec.terminal[l] = tasks[l]->done() ? 1 : 0;
            } catch (...) {
                errors[l] = std::current_exception();
            }
        }
        for (const auto& e : errors)
            if (e) std::rethrow_exception(e);

        std::uint64_t stepped = 0;
        for (int l = 0; l < L; ++l) {
            if (!rec.active[l]) continue;
            ++stepped;
            batch.returns[l] += rec.reward[l];
            const std::size_t base = static_cast<std::size_t>(l) * A;
            if (options.observer && *options.observer) {
                StepView view;
                view.lane = l;
                view.timestep = t;
                view.task = tasks[l];
                view.actions = std::span<const int>(rec.actions.data() + base, A);
                view.incoming_nonzero = std::span<const std::uint8_t>(rec.incoming_nonzero.data() + base, A);
                view.message_bits = std::span<const std::uint8_t>(rec.message_bits.data() + base * M, A * M);
                view.reward = rec.reward[l];
                (*options.observer)(view);
            }
            if (!train)
                for (int a = 0; a < A; ++a)
                    if (any_bit(rec.message_bits, static_cast<int>(base) + a, M)) {
                        auto first = rec.message_bits.begin() + static_cast<std::ptrdiff_t>((base + a) * M);
                        batch.wire.push_back({l, t, a, std::vector<std::uint8_t>(first, first + M)});
                    }
        }
        batch.env_steps += stepped;
        if (options.timestep_counter) *options.timestep_counter += stepped;

        rec.q_env = out.q_env.data();
        rec.q_msg = out.q_msg.data();
        rec.hidden1 = out.hidden.layer1.data();
        rec.hidden2 = out.hidden.layer2.data();
        if (train) {
            rec.q_env_node = out.q_env;
            rec.message_node = message;
            prev_message = message;
            hidden = out.hidden;
        } else {
            h1 = rec.hidden1;
            h2 = rec.hidden2;
        }
        prev_bits = rec.message_bits;
        prev_actions = rec.actions;
        batch.steps.push_back(std::move(rec));
    }
    return batch;
}

std::vector<nn::Tensor> replay_q_values(CNet& net, const RolloutBatch& batch, double sigma)
{
    const int R = batch.rows();
    const int M = net.dims().message_bits;
    const int H = net.dims().hidden;
    nn::Tensor h1(R, H), h2(R, H), prev_message(R, M);
    std::vector<nn::Tensor> q;
    q.reserve(batch.steps.size());
    for (const StepRecord& rec : batch.steps) {
        nn::Tape tape(false);
        const nn::Value message_in = nn::route_rows(tape.constant(prev_message), rec.sources);
        const nn::Value z = net.embed_input(tape, rec.slots, message_in, rec.prev_actions, rec.agent_ids);
        const CNet::Output out = net.forward(tape, z, net.hidden_from(tape, h1, h2));
        q.push_back(out.q_env.data());
        h1 = out.hidden.layer1.data();
        h2 = out.hidden.layer2.data();
        if (batch.mode == ChannelMode::Train) {
            prev_message = dru_train(out.q_msg, sigma, rec.noise).data();
        } else {
            prev_message = bits_to_tensor(dru_exec(out.q_msg.data()), R, M);
        }
        for (int row = 0; row < R; ++row)
            if (!rec.active[row / batch.agents])
                for (int k = 0; k < M; ++k) prev_message(row, k) = 0.0;
    }
    return q;
}

std::vector<std::vector<double>> td_targets(const RolloutBatch& batch, const std::vector<nn::Tensor>& target_q,
                                            double gamma)
{
    const int R = batch.rows();
    const int A = batch.agents;
    std::vector<std::vector<double>> y(batch.steps.size(), std::vector<double>(R, 0.0));
    for (std::size_t t = 0; t < batch.steps.size(); ++t) {
        const StepRecord& rec = batch.steps[t];
        for (int row = 0; row < R; ++row) {
            const int lane = row / A;
            if (!rec.active[lane]) continue;
            double target = rec.reward[lane];
            if (!rec.terminal[lane]) {
                if (t + 1 >= batch.steps.size()) throw std::logic_error("td_targets: episode cut before its end");
                const StepRecord& next = batch.steps[t + 1];
                const int U = target_q[t + 1].cols;
                target += gamma * masked_max(target_q[t + 1].row(row),
                                             std::span<const std::uint8_t>(next.masks.data() + static_cast<std::size_t>(row) * U, U));
            }
            y[t][row] = target;
        }
    }
    return y;
}

nn::Value dial_loss(RolloutBatch& batch, CNet& target, double gamma, double sigma)
{
    if (batch.mode != ChannelMode::Train || !batch.tape) throw std::invalid_argument("dial_loss: needs a train-mode batch");
    const std::vector<nn::Tensor> target_q = replay_q_values(target, batch, sigma);
    const auto y = td_targets(batch, target_q, gamma);
    const int R = batch.rows();
    const double per_lane = 1.0 / batch.lanes;
    std::vector<nn::Value> terms;
    for (std::size_t t = 0; t < batch.steps.size(); ++t) {
        const StepRecord& rec = batch.steps[t];
        nn::Tensor target_col(R, 1), weight(R, 1);
        for (int row = 0; row < R; ++row) {
            target_col(row, 0) = y[t][row];
            weight(row, 0) = rec.active[row / batch.agents] ? per_lane : 0.0;
        }
        const nn::Value chosen = nn::pick(rec.q_env_node, rec.actions);
        terms.push_back(nn::weighted_squared_error(chosen, target_col, weight));
    }
    if (terms.size() == 1) return terms[0];
    return nn::sum_elementwise(terms);
}

DialTrainer::DialTrainer(DialConfig config, TaskFactory factory)
    : config_(config),
      factory_(std::move(factory)),
      layout_(factory_()->layout()),
      online_(cnet_dims(layout_, config.hidden), derive_seed(config.seed, 0, "dial.init")),
      target_(cnet_dims(layout_, config.hidden), derive_seed(config.seed, 0, "dial.init")),
      explore_rng_(derive_seed(config.seed, 0, "dial.explore"))
{
    config_.validate();
    for (int l = 0; l < config_.rollout_lanes; ++l) lanes_.push_back(factory_());
}

double DialTrainer::train_group(std::span<Task* const> tasks)
{
    RolloutOptions options;
    options.mode = ChannelMode::Train;
    options.sigma = config_.dru_sigma;
    options.schedule = &config_.epsilon;
    options.timestep_counter = &timesteps_;
    RolloutBatch batch = run_rollout(online_, tasks, options, explore_rng_);
    const nn::Value loss = dial_loss(batch, target_, config_.gamma, config_.dru_sigma);
    batch.tape->backward(loss);
    nn::RmsPropConfig rms;
    rms.lr = config_.lr;
    rms.clip_norm = config_.grad_clip;
    nn::rms_step(online_.params(), rms);
    return loss.item();
}

void DialTrainer::train_epoch()
{
    int remaining = config_.batch_episodes;
    std::vector<Task*> group;
    while (remaining > 0) {
        const int n = std::min(remaining, config_.rollout_lanes);
        group.clear();
        for (int l = 0; l < n; ++l) {
            lanes_[l]->reset(derive_seed(config_.seed, episodes_ + l, "dial.train"));
            group.push_back(lanes_[l].get());
        }
        train_group(group);
        episodes_ += n;
        remaining -= n;
    }
    ++epoch_;
    if (epoch_ % config_.target_update_epochs == 0) sync_target();
}

EvalResult DialTrainer::evaluate(std::size_t episodes, std::uint64_t seed, const StepObserver* observer,
                                 const EpisodeReset& reset)
{
    constexpr std::size_t kEvalLanes = 128;
    EvalResult result;
    last_wire_.clear();
    std::vector<std::unique_ptr<Task>> pool;
    std::vector<Task*> group;
    Rng unused(0);
    const int M = layout_.message_bits;
    for (std::size_t first = 0; first < episodes; first += kEvalLanes) {
        const std::size_t n = std::min(kEvalLanes, episodes - first);
        while (pool.size() < n) pool.push_back(factory_());
        group.clear();
        for (std::size_t l = 0; l < n; ++l) {
            if (reset)
                reset(*pool[l], first + l);
            else
                pool[l]->reset(derive_seed(seed, first + l, "eval"));
            group.push_back(pool[l].get());
        }
        StepObserver shifted;
        if (observer && *observer)
            shifted = [&](const StepView& v) {
                StepView copy = v;
                copy.lane = static_cast<int>(first) + v.lane;
                (*observer)(copy);
            };
        RolloutOptions options;
        options.mode = ChannelMode::Exec;
        options.sigma = config_.dru_sigma;
        options.observer = &shifted;
        RolloutBatch batch = run_rollout(online_, group, options, unused);
        result.returns.insert(result.returns.end(), batch.returns.begin(), batch.returns.end());
        for (const StepRecord& rec : batch.steps)
            for (int row = 0; row < batch.rows(); ++row) {
                if (!rec.active[row / batch.agents]) continue;
                ++result.agent_steps;
                if (any_bit(rec.message_bits, row, M)) ++result.message_steps;
            }
        for (WireMessage w : batch.wire) {
            w.lane += static_cast<int>(first);
            last_wire_.push_back(std::move(w));
        }
    }
    return result;
}

nn::CheckpointHeader DialTrainer::checkpoint_header() const
{
    nn::CheckpointHeader h;
    h.scenario = layout_.name;
    h.algorithm = "dial";
    h.hidden_dim = config_.hidden;
    h.message_bits = layout_.message_bits;
    h.train_steps = online_.params().version();
    return h;
}

}  // namespace cyberdial::dial
