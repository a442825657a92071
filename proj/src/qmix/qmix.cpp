#include "cyberdial/qmix/qmix.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <numeric>
#include <stdexcept>
#include <string>

namespace cyberdial::qmix {

void QmixConfig::validate() const
{
    if (batch_episodes <= 0 || rollout_lanes <= 0 || sample_episodes <= 0 || hidden <= 0 || mixer_hidden <= 0 ||
        target_update_epochs <= 0 || epochs <= 0)
        throw std::invalid_argument("qmix config: counts must be positive");
    if (buffer_capacity < sample_episodes) throw std::invalid_argument("qmix config: buffer smaller than a replay batch");
    if (!(lr > 0.0) || !(gamma >= 0.0 && gamma <= 1.0)) throw std::invalid_argument("qmix config: lr or gamma out of range");
    if (epsilon.end > epsilon.start || epsilon.end < 0.0 || epsilon.start > 1.0)
        throw std::invalid_argument("qmix config: epsilon_end must not exceed epsilon_start");
}

namespace {

void add_affine(nn::ParamStore& store, const std::string& name, int in, int out, Rng& rng, bool bias = true)
{
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    nn::init_uniform(store.add(name + ".w", in, out), bound, rng);
    if (bias) nn::init_uniform(store.add(name + ".b", 1, out), bound, rng);
}

nn::Value affine(nn::Tape& tape, nn::ParamStore& store, const std::string& name, nn::Value x)
{
    return nn::affine(x, tape.param(store.get(name + ".w")), tape.param(store.get(name + ".b")));
}

}  // namespace

void add_agent_params(nn::ParamStore& store, const AgentNetDims& dims, Rng& rng)
{
    const int h = dims.hidden;
    add_affine(store, "agent.encoder", dims.input_width(), h, rng);
    const double bound = 1.0 / std::sqrt(static_cast<double>(h));
    nn::init_uniform(store.add("agent.gru.w_input", h, 3 * h), bound, rng);
    nn::init_uniform(store.add("agent.gru.w_hidden", h, 3 * h), bound, rng);
    nn::init_uniform(store.add("agent.gru.b_input", 1, 3 * h), bound, rng);
    nn::init_uniform(store.add("agent.gru.b_hidden", 1, 3 * h), bound, rng);
    add_affine(store, "agent.head", h, dims.actions, rng);
}

std::pair<nn::Value, nn::Value> agent_forward(nn::Tape& tape, nn::ParamStore& store, const AgentNetDims& dims,
                                              nn::Value inputs, nn::Value hidden)
{
    if (inputs.cols() != dims.input_width() || hidden.cols() != dims.hidden || inputs.rows() != hidden.rows())
        throw std::invalid_argument("agent_forward: shape mismatch");
    const nn::Value x = nn::relu(affine(tape, store, "agent.encoder", inputs));
    const nn::GruWeights gru{tape.param(store.get("agent.gru.w_input")), tape.param(store.get("agent.gru.w_hidden")),
                             tape.param(store.get("agent.gru.b_input")), tape.param(store.get("agent.gru.b_hidden"))};
    const nn::Value h = nn::gru_cell(gru, x, hidden);
    return {affine(tape, store, "agent.head", h), h};
}

void add_mixer_params(nn::ParamStore& store, const MixerDims& dims, Rng& rng)
{
    add_affine(store, "mixer.hyper_w1", dims.state_width, dims.agents * dims.hidden, rng);
    add_affine(store, "mixer.hyper_b1", dims.state_width, dims.hidden, rng);
    add_affine(store, "mixer.hyper_w2", dims.state_width, dims.hidden, rng);
    add_affine(store, "mixer.v1", dims.state_width, dims.hidden, rng);
    add_affine(store, "mixer.v2", dims.hidden, 1, rng);
}

nn::Value mix(nn::Tape& tape, nn::ParamStore& store, const MixerDims& dims, nn::Value agent_qs, nn::Value state)
{
    if (agent_qs.cols() != dims.agents || state.cols() != dims.state_width || agent_qs.rows() != state.rows())
        throw std::invalid_argument("mix: shape mismatch");
    const nn::Value w1 = nn::abs(affine(tape, store, "mixer.hyper_w1", state));
    const nn::Value b1 = affine(tape, store, "mixer.hyper_b1", state);
    const nn::Value hidden = nn::elu(nn::add(nn::batched_vecmat(agent_qs, w1, dims.hidden), b1));
    const nn::Value w2 = nn::abs(affine(tape, store, "mixer.hyper_w2", state));
    const nn::Value v = affine(tape, store, "mixer.v2", nn::relu(affine(tape, store, "mixer.v1", state)));
    return nn::add(nn::batched_vecmat(hidden, w2, 1), v);
}

void ReplayBuffer::push(EpisodeRecord episode)
{
    if (capacity_ == 0) return;
    if (episodes_.size() == capacity_) episodes_.pop_front();
    episodes_.push_back(std::move(episode));
}

std::vector<const EpisodeRecord*> ReplayBuffer::sample(std::size_t n, Rng& rng) const
{
    if (n > episodes_.size()) throw std::invalid_argument("replay sample larger than the buffer");
    // Partial Fisher-Yates over indices.
    std::vector<std::size_t> idx(episodes_.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::vector<const EpisodeRecord*> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t j = i + rng.index(idx.size() - i);
        std::swap(idx[i], idx[j]);
        out.push_back(&episodes_[idx[i]]);
    }
    return out;
}

namespace {

int state_width(const TaskLayout& layout)
{
    return std::accumulate(layout.agent_observation_bits.begin(), layout.agent_observation_bits.end(), 0);
}

// Rows (episode, agent) of [obs bits | one-hot previous action | one-hot agent].
nn::Tensor agent_inputs(const AgentNetDims& dims, int t, const std::vector<const EpisodeRecord*>& episodes)
{
    const int B = static_cast<int>(episodes.size());
    const int A = dims.agents;
    const int O = dims.observation_bits;
    nn::Tensor x(B * A, dims.input_width());
    for (int b = 0; b < B; ++b) {
        const EpisodeRecord& e = *episodes[b];
        for (int a = 0; a < A; ++a) {
            const int row = b * A + a;
            x(row, O + dims.actions + a) = 1.0;
            if (t >= e.length) continue;
            for (int k = 0; k < O; ++k) x(row, k) = e.observations[(static_cast<std::size_t>(t) * A + a) * O + k];
            if (t > 0) x(row, O + e.actions[static_cast<std::size_t>(t - 1) * A + a]) = 1.0;
        }
    }
    return x;
}

}  // namespace

QmixTrainer::QmixTrainer(QmixConfig config, TaskFactory factory)
    : config_(config),
      factory_(std::move(factory)),
      layout_(factory_()->layout()),
      buffer_(static_cast<std::size_t>(std::max(config.buffer_capacity, 0))),
      explore_rng_(derive_seed(config.seed, 0, "qmix.explore")),
      sample_rng_(derive_seed(config.seed, 0, "qmix.sample"))
{
    config_.validate();
    agent_dims_ = {layout_.observation_bits, layout_.action_count, layout_.agents, config_.hidden};
    mixer_dims_ = {layout_.agents, state_width(layout_), config_.mixer_hidden};
    Rng init(derive_seed(config_.seed, 0, "qmix.init"));
    add_agent_params(online_, agent_dims_, init);
    add_mixer_params(online_, mixer_dims_, init);
    Rng init_target(0);
    add_agent_params(target_, agent_dims_, init_target);
    add_mixer_params(target_, mixer_dims_, init_target);
    sync_target();
    for (int l = 0; l < config_.rollout_lanes; ++l) lanes_.push_back(factory_());
}

std::vector<EpisodeRecord> QmixTrainer::run_episodes(std::span<Task* const> tasks, bool explore,
                                                     const StepObserver* observer, std::vector<double>* returns)
{
    const int L = static_cast<int>(tasks.size());
    const int A = layout_.agents;
    const int O = layout_.observation_bits;
    const int U = layout_.action_count;
    const int T = layout_.horizon;
    const int W = state_width(layout_);

    std::vector<EpisodeRecord> episodes(L);
    for (EpisodeRecord& e : episodes) {
        e.observations.assign(static_cast<std::size_t>(T) * A * O, 0.0);
        e.state.assign(static_cast<std::size_t>(T) * W, 0.0);
        e.actions.assign(static_cast<std::size_t>(T) * A, 0);
        e.masks.assign(static_cast<std::size_t>(T) * A * U, 0);
        e.reward.assign(T, 0.0);
        e.terminal.assign(T, 0);
    }
    if (returns) returns->assign(L, 0.0);

    std::vector<const EpisodeRecord*> views;
    for (const EpisodeRecord& e : episodes) views.push_back(&e);
    nn::Tensor hidden(L * A, agent_dims_.hidden);
    const std::vector<std::uint8_t> no_messages(static_cast<std::size_t>(A) * std::max(layout_.message_bits, 1), 0);
    const std::vector<std::uint8_t> no_incoming(A, 0);
    std::vector<double> bits(O);

    for (int t = 0; t < T; ++t) {
        std::vector<std::uint8_t> active(L);
        bool any = false;
        for (int l = 0; l < L; ++l) {
            active[l] = tasks[l]->done() ? 0 : 1;
            any = any || active[l];
        }
        if (!any) break;

        for (int l = 0; l < L; ++l) {
            if (!active[l]) continue;
            EpisodeRecord& e = episodes[l];
            e.length = t + 1;
            int offset = 0;
            for (int a = 0; a < A; ++a) {
                tasks[l]->bits(a, bits);
                std::copy(bits.begin(), bits.end(), e.observations.begin() + (static_cast<std::ptrdiff_t>(t) * A + a) * O);
                const int own = layout_.agent_observation_bits[a];
                std::copy_n(bits.begin(), own, e.state.begin() + static_cast<std::ptrdiff_t>(t) * W + offset);
                offset += own;
                // No message channel: the Analyse unmask reduces to local threat visibility.
                tasks[l]->mask(a, false,
                               std::span<std::uint8_t>(e.masks.data() + (static_cast<std::size_t>(t) * A + a) * U, U));
            }
        }

        nn::Tape tape(false);
        // length was bumped for active lanes, so inputs at t are filled for them.
        const auto [q, h] = agent_forward(tape, online_, agent_dims_, tape.constant(agent_inputs(agent_dims_, t, views)),
                                          tape.constant(hidden));
        hidden = h.data();

        const double eps = explore ? config_.epsilon.at(timesteps_) : 0.0;
        std::vector<int> joint(static_cast<std::size_t>(L) * A, 0);
        for (int l = 0; l < L; ++l) {
            if (!active[l]) continue;
            for (int a = 0; a < A; ++a) {
                const int row = l * A + a;
                const std::span<const std::uint8_t> m(episodes[l].masks.data() + (static_cast<std::size_t>(t) * A + a) * U,
                                                      U);
                joint[row] = dial::select_action(q.data().row(row), m, eps, explore_rng_);
                episodes[l].actions[static_cast<std::size_t>(t) * A + a] = joint[row];
            }
        }

        std::vector<std::exception_ptr> errors(L);
#pragma omp parallel for schedule(static) if (L > 1)
        for (int l = 0; l < L; ++l) {
            if (!active[l]) continue;
            try {
                episodes[l].reward[t] = tasks[l]->step(std::span<const int>(joint.data() + static_cast<std::size_t>(l) * A, A),
                                                       no_incoming, no_messages);
                episodes[l].terminal[t] = tasks[l]->done() ? 1 : 0;
            } catch (...) {
                errors[l] = std::current_exception();
            }
        }
        for (const auto& e : errors)
            if (e) std::rethrow_exception(e);

        for (int l = 0; l < L; ++l) {
            if (!active[l]) continue;
            if (explore) ++timesteps_;
            if (returns) (*returns)[l] += episodes[l].reward[t];
            if (observer && *observer) {
                StepView view;
                view.lane = l;
                view.timestep = t;
                view.task = tasks[l];
                view.actions = std::span<const int>(joint.data() + static_cast<std::size_t>(l) * A, A);
                view.incoming_nonzero = no_incoming;
                view.message_bits = no_messages;
                view.reward = episodes[l].reward[t];
                (*observer)(view);
            }
        }
    }
    return episodes;
}

nn::Value QmixTrainer::batch_loss(nn::Tape& tape, const std::vector<const EpisodeRecord*>& batch)
{
    const int B = static_cast<int>(batch.size());
    const int A = layout_.agents;
    const int U = layout_.action_count;
    const int T = layout_.horizon;
    const int W = mixer_dims_.state_width;

    auto state_at = [&](int t) {
        nn::Tensor s(B, W);
        for (int b = 0; b < B; ++b)
            if (t < batch[b]->length)
                std::copy_n(batch[b]->state.begin() + static_cast<std::ptrdiff_t>(t) * W, W, s.row(b).begin());
        return s;
    };

    // Target side: max over allowed next actions, mixed by the target mixer.
    std::vector<nn::Tensor> target_next(T);
    {
        nn::Tensor hidden(B * A, agent_dims_.hidden);
        for (int t = 0; t < T; ++t) {
            nn::Tape target_tape(false);
            const auto [q, h] = agent_forward(target_tape, target_, agent_dims_,
                                              target_tape.constant(agent_inputs(agent_dims_, t, batch)),
                                              target_tape.constant(hidden));
            hidden = h.data();
            if (t == 0) continue;
            nn::Tensor best(B, A);
            for (int b = 0; b < B; ++b) {
                if (t >= batch[b]->length) continue;
                for (int a = 0; a < A; ++a) {
                    const std::span<const std::uint8_t> m(
                        batch[b]->masks.data() + (static_cast<std::size_t>(t) * A + a) * U, U);
                    best(b, a) = dial::masked_max(q.data().row(b * A + a), m);
                }
            }
            target_next[t - 1] =
                mix(target_tape, target_, mixer_dims_, target_tape.constant(best), target_tape.constant(state_at(t))).data();
        }
    }

    int valid = 0;
    for (const EpisodeRecord* e : batch) valid += e->length;
    if (valid == 0) throw std::invalid_argument("batch_loss: empty batch");

    std::vector<nn::Value> terms;
    nn::Value hidden = tape.constant(nn::Tensor(B * A, agent_dims_.hidden));
    std::vector<int> chosen(static_cast<std::size_t>(B) * A);
    for (int t = 0; t < T; ++t) {
        bool any = false;
        for (const EpisodeRecord* e : batch) any = any || t < e->length;
        if (!any) break;
        const auto [q, h] =
            agent_forward(tape, online_, agent_dims_, tape.constant(agent_inputs(agent_dims_, t, batch)), hidden);
        hidden = h;
        nn::Tensor y(B, 1), weight(B, 1);
        for (int b = 0; b < B; ++b) {
            const EpisodeRecord& e = *batch[b];
            for (int a = 0; a < A; ++a)
                chosen[b * A + a] = t < e.length ? e.actions[static_cast<std::size_t>(t) * A + a] : -1;
            if (t >= e.length) continue;
            weight(b, 0) = 1.0 / valid;
            y(b, 0) = e.reward[t];
            if (!e.terminal[t]) y(b, 0) += config_.gamma * target_next[t](b, 0);
        }
        const nn::Value qs = nn::reshape(nn::pick(q, chosen), B, A);
        const nn::Value total = mix(tape, online_, mixer_dims_, qs, tape.constant(state_at(t)));
        terms.push_back(nn::weighted_squared_error(total, y, weight));
    }
    if (terms.size() == 1) return terms[0];
    return nn::sum_elementwise(terms);
}

void QmixTrainer::collect_and_train(std::span<Task* const> tasks)
{
    for (EpisodeRecord& e : run_episodes(tasks, true, nullptr, nullptr)) buffer_.push(std::move(e));
    if (buffer_.size() < static_cast<std::size_t>(config_.sample_episodes)) return;
    const auto batch = buffer_.sample(static_cast<std::size_t>(config_.sample_episodes), sample_rng_);
    nn::Tape tape(true);
    const nn::Value loss = batch_loss(tape, batch);
    tape.backward(loss);
    nn::RmsPropConfig rms;
    rms.lr = config_.lr;
    rms.clip_norm = config_.grad_clip;
    nn::rms_step(online_, rms);
}

void QmixTrainer::train_epoch()
{
    int remaining = config_.batch_episodes;
    std::vector<Task*> group;
    while (remaining > 0) {
        const int n = std::min(remaining, config_.rollout_lanes);
        group.clear();
        for (int l = 0; l < n; ++l) {
            lanes_[l]->reset(derive_seed(config_.seed, episodes_ + l, "qmix.train"));
            group.push_back(lanes_[l].get());
        }
        collect_and_train(group);
        episodes_ += n;
        remaining -= n;
    }
    ++epoch_;
    if (epoch_ % config_.target_update_epochs == 0) sync_target();
}

EvalResult QmixTrainer::evaluate(std::size_t episodes, std::uint64_t seed, const StepObserver* observer,
                                 const EpisodeReset& reset)
{
    constexpr std::size_t kEvalLanes = 128;
    EvalResult result;
    std::vector<std::unique_ptr<Task>> pool;
    std::vector<Task*> group;
    std::vector<double> returns;
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
        const auto records = run_episodes(group, false, &shifted, &returns);
        result.returns.insert(result.returns.end(), returns.begin(), returns.end());
        for (const EpisodeRecord& e : records) result.agent_steps += static_cast<std::uint64_t>(e.length) * layout_.agents;
    }
    return result;
}

nn::CheckpointHeader QmixTrainer::checkpoint_header() const
{
    nn::CheckpointHeader h;
    h.scenario = layout_.name;
    h.algorithm = "qmix";
    h.hidden_dim = config_.hidden;
    h.mixer_dim = config_.mixer_hidden;
    h.message_bits = 0;
    h.train_steps = online_.version();
    return h;
}

}  // namespace cyberdial::qmix
