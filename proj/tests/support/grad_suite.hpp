#pragma once

// Central-difference checks for every differentiable operation and for the
// composed C-Net losses. Each case draws shapes and values from its seed.

#include <functional>
#include <string>
#include <vector>

#include "cyberdial/dial/cnet.hpp"
#include "cyberdial/dial/dru.hpp"
#include "cyberdial/nn/gradcheck.hpp"
#include "cyberdial/nn/ops.hpp"
#include "cyberdial/qmix/qmix.hpp"
#include "cyberdial/rng.hpp"

namespace gradsuite {

using namespace cyberdial;
using namespace cyberdial::nn;

inline int dim(Rng& rng, int lo, int hi) { return lo + static_cast<int>(rng.index(static_cast<std::size_t>(hi - lo + 1))); }

inline Tensor random_tensor(Rng& rng, int r, int c, double scale = 1.0)
{
    Tensor t(r, c);
    for (double& v : t.data) v = scale * (2.0 * rng.uniform() - 1.0);
    return t;
}

inline Parameter& random_param(ParamStore& store, const std::string& name, Rng& rng, int r, int c, double scale = 1.0)
{
    Parameter& p = store.add(name, r, c);
    p.value = random_tensor(rng, r, c, scale);
    return p;
}

inline std::vector<Parameter*> all_params(ParamStore& store)
{
    std::vector<Parameter*> out;
    for (std::size_t i = 0; i < store.size(); ++i) out.push_back(&store[i]);
    return out;
}

// Squared error against a random target turns any output into a scalar
// with generic (non-degenerate) gradients.
inline Value to_scalar(Value out, const Tensor& target) { return mse(out, target); }

struct Case {
    std::string name;
    std::function<GradCheckResult(std::uint64_t seed)> run;
};

template <typename Build>
GradCheckResult check_unary(std::uint64_t seed, Build build, double scale = 1.5)
{
    Rng rng(seed);
    ParamStore store;
    const int r = dim(rng, 1, 4), c = dim(rng, 1, 5);
    Parameter& x = random_param(store, "x", rng, r, c, scale);
    const Tensor target = random_tensor(rng, r, c);
    return finite_diff_check([&](Tape& t) { return to_scalar(build(t.param(x)), target); }, all_params(store));
}

inline std::vector<Case> op_cases()
{
    std::vector<Case> cases;
    cases.push_back({"lookup", [](std::uint64_t seed) {
                         Rng rng(seed);
                         ParamStore store;
                         const int rows = dim(rng, 2, 6), width = dim(rng, 1, 5), n = dim(rng, 1, 5);
                         Parameter& table = random_param(store, "table", rng, rows, width);
                         std::vector<int> idx(n);
                         for (int& i : idx) i = static_cast<int>(rng.index(rows + 1)) - 1;  // -1 pads
                         const Tensor target = random_tensor(rng, n, width);
                         return finite_diff_check([&](Tape& t) { return to_scalar(lookup(t.param(table), idx), target); },
                                                  all_params(store));
                     }});
    cases.push_back({"affine", [](std::uint64_t seed) {
                         Rng rng(seed);
                         ParamStore store;
                         const int r = dim(rng, 1, 4), in = dim(rng, 1, 6), out = dim(rng, 1, 5);
                         Parameter& x = random_param(store, "x", rng, r, in);
                         Parameter& w = random_param(store, "w", rng, in, out);
                         Parameter& b = random_param(store, "b", rng, 1, out);
                         const Tensor target = random_tensor(rng, r, out);
                         return finite_diff_check(
                             [&](Tape& t) { return to_scalar(affine(t.param(x), t.param(w), t.param(b)), target); },
                             all_params(store));
                     }});
    cases.push_back({"relu", [](std::uint64_t seed) { return check_unary(seed, [](Value v) { return relu(v); }); }});
    cases.push_back({"logistic", [](std::uint64_t seed) { return check_unary(seed, [](Value v) { return logistic(v); }, 3.0); }});
    cases.push_back({"tanh", [](std::uint64_t seed) { return check_unary(seed, [](Value v) { return nn::tanh(v); }, 2.0); }});
    cases.push_back({"abs", [](std::uint64_t seed) { return check_unary(seed, [](Value v) { return nn::abs(v); }); }});
    cases.push_back({"elu", [](std::uint64_t seed) { return check_unary(seed, [](Value v) { return elu(v); }, 2.0); }});
    cases.push_back({"scale", [](std::uint64_t seed) { return check_unary(seed, [](Value v) { return scale(v, -1.7); }); }});
    cases.push_back({"add_constant", [](std::uint64_t seed) {
                         Rng rng(seed + 1000);
                         const Tensor shift = random_tensor(rng, 8, 8);
                         return check_unary(seed, [&](Value v) {
                             Tensor s(v.rows(), v.cols());
                             for (std::size_t i = 0; i < s.size(); ++i) s.data[i] = shift.data[i];
                             return add_constant(v, s);
                         });
                     }});
    cases.push_back({"sum_all", [](std::uint64_t seed) {
                         Rng rng(seed);
                         ParamStore store;
                         Parameter& x = random_param(store, "x", rng, dim(rng, 1, 4), dim(rng, 1, 5), 1.5);
                         return finite_diff_check([&](Tape& t) { return sum_all(nn::tanh(t.param(x))); },
                                                  all_params(store));
                     }});
    cases.push_back({"sum_elementwise", [](std::uint64_t seed) {
                         Rng rng(seed);
                         ParamStore store;
                         const int r = dim(rng, 1, 4), c = dim(rng, 1, 5), k = dim(rng, 2, 4);
                         std::vector<Parameter*> ps;
                         for (int i = 0; i < k; ++i) ps.push_back(&random_param(store, "x" + std::to_string(i), rng, r, c));
                         const Tensor target = random_tensor(rng, r, c);
                         return finite_diff_check(
                             [&](Tape& t) {
                                 std::vector<Value> terms;
                                 for (Parameter* p : ps) terms.push_back(nn::tanh(t.param(*p)));
                                 // the same operand twice must accumulate
                                 terms.push_back(t.param(*ps[0]));
                                 return to_scalar(sum_elementwise(terms), target);
                             },
                             all_params(store));
                     }});
    cases.push_back({"add", [](std::uint64_t seed) {
                         Rng rng(seed);
                         ParamStore store;
                         const int r = dim(rng, 1, 4), c = dim(rng, 1, 5);
                         Parameter& a = random_param(store, "a", rng, r, c);
                         Parameter& b = random_param(store, "b", rng, r, c);
                         const Tensor target = random_tensor(rng, r, c);
                         return finite_diff_check(
                             [&](Tape& t) { return to_scalar(add(nn::tanh(t.param(a)), t.param(b)), target); },
                             all_params(store));
                     }});
    cases.push_back({"gru_cell", [](std::uint64_t seed) {
                         Rng rng(seed);
                         ParamStore store;
                         const int r = dim(rng, 1, 3), in = dim(rng, 1, 4), h = dim(rng, 1, 4);
                         Parameter& x = random_param(store, "x", rng, r, in);
                         Parameter& h0 = random_param(store, "h", rng, r, h);
                         Parameter& wi = random_param(store, "wi", rng, in, 3 * h);
                         Parameter& wh = random_param(store, "wh", rng, h, 3 * h);
                         Parameter& bi = random_param(store, "bi", rng, 1, 3 * h);
                         Parameter& bh = random_param(store, "bh", rng, 1, 3 * h);
                         const Tensor target = random_tensor(rng, r, h);
                         return finite_diff_check(
                             [&](Tape& t) {
                                 GruWeights g{t.param(wi), t.param(wh), t.param(bi), t.param(bh)};
                                 // two chained cells exercise the hidden path
                                 const Value h1 = gru_cell(g, t.param(x), t.param(h0));
                                 return to_scalar(gru_cell(g, t.param(x), h1), target);
                             },
                             all_params(store));
                     }});
    cases.push_back({"pick", [](std::uint64_t seed) {
                         Rng rng(seed);
                         ParamStore store;
                         const int r = dim(rng, 1, 5), c = dim(rng, 1, 5);
                         Parameter& x = random_param(store, "x", rng, r, c);
                         std::vector<int> col(r);
                         for (int& v : col) v = static_cast<int>(rng.index(c + 1)) - 1;
                         const Tensor target = random_tensor(rng, r, 1);
                         return finite_diff_check([&](Tape& t) { return to_scalar(pick(nn::tanh(t.param(x)), col), target); },
                                                  all_params(store));
                     }});
    cases.push_back({"route_rows", [](std::uint64_t seed) {
                         Rng rng(seed);
                         ParamStore store;
                         const int r = dim(rng, 1, 4), c = dim(rng, 1, 3);
                         Parameter& x = random_param(store, "x", rng, r, c);
                         std::vector<std::vector<int>> sources(dim(rng, 1, 4));
                         for (auto& s : sources) {
                             const int k = dim(rng, 0, 3);
                             for (int i = 0; i < k; ++i) s.push_back(static_cast<int>(rng.index(r)));
                         }
                         const Tensor target = random_tensor(rng, static_cast<int>(sources.size()), c);
                         return finite_diff_check([&](Tape& t) { return to_scalar(route_rows(t.param(x), sources), target); },
                                                  all_params(store));
                     }});
    cases.push_back({"reshape", [](std::uint64_t seed) {
                         Rng rng(seed);
                         ParamStore store;
                         const int r = dim(rng, 1, 4), c = 2 * dim(rng, 1, 3);
                         Parameter& x = random_param(store, "x", rng, r, c);
                         const Tensor target = random_tensor(rng, 2 * r, c / 2);
                         return finite_diff_check(
                             [&](Tape& t) { return to_scalar(reshape(nn::tanh(t.param(x)), 2 * r, c / 2), target); },
                             all_params(store));
                     }});
    cases.push_back({"batched_vecmat", [](std::uint64_t seed) {
                         Rng rng(seed);
                         ParamStore store;
                         const int b = dim(rng, 1, 4), n = dim(rng, 1, 4), cols = dim(rng, 1, 3);
                         Parameter& x = random_param(store, "x", rng, b, n);
                         Parameter& w = random_param(store, "w", rng, b, n * cols);
                         const Tensor target = random_tensor(rng, b, cols);
                         return finite_diff_check(
                             [&](Tape& t) { return to_scalar(batched_vecmat(t.param(x), t.param(w), cols), target); },
                             all_params(store));
                     }});
    cases.push_back({"weighted_squared_error", [](std::uint64_t seed) {
                         Rng rng(seed);
                         ParamStore store;
                         const int r = dim(rng, 1, 6);
                         Parameter& x = random_param(store, "x", rng, r, 1);
                         const Tensor target = random_tensor(rng, r, 1);
                         Tensor weight = random_tensor(rng, r, 1);
                         for (double& v : weight.data) v = std::abs(v);
                         return finite_diff_check(
                             [&](Tape& t) { return weighted_squared_error(nn::tanh(t.param(x)), target, weight); },
                             all_params(store));
                     }});
    cases.push_back({"mse", [](std::uint64_t seed) {
                         return check_unary(seed, [](Value v) { return nn::logistic(v); });
                     }});
    cases.push_back({"dru_train", [](std::uint64_t seed) {
                         Rng rng(seed);
                         const Tensor noise = dial::draw_message_noise(4, 2, rng);
                         return check_unary(seed, [&](Value v) {
                             Tensor n(v.rows(), v.cols());
                             for (std::size_t i = 0; i < n.size(); ++i) n.data[i] = noise.data[i % noise.size()];
                             return dial::dru_train(v, 2.0, n);
                         });
                     }});
    cases.push_back({"qmix_mixer", [](std::uint64_t seed) {
                         Rng rng(seed);
                         ParamStore store;
                         qmix::MixerDims dims{dim(rng, 2, 3), dim(rng, 2, 6), dim(rng, 2, 5)};
                         qmix::add_mixer_params(store, dims, rng);
                         const int b = dim(rng, 1, 4);
                         Parameter& qs = random_param(store, "qs", rng, b, dims.agents);
                         Parameter& state = random_param(store, "state", rng, b, dims.state_width);
                         const Tensor target = random_tensor(rng, b, 1);
                         return finite_diff_check(
                             [&](Tape& t) {
                                 return to_scalar(qmix::mix(t, store, dims, t.param(qs), t.param(state)), target);
                             },
                             all_params(store));
                     }});
    return cases;
}

// Small-scenario-shaped C-Net: 2 agents, 3 host slots + block slot, 11 actions, 1 bit.
inline dial::CNetDims cnet_test_dims(int hidden = 128)
{
    dial::CNetDims d;
    d.agents = 2;
    d.slot_cardinality = {16, 16, 16, 2};
    d.actions = 11;
    d.message_bits = 1;
    d.hidden = hidden;
    return d;
}

// TD-style loss of one or two C-Net steps for both agents. In the two-step
// version each agent's step-0 message reaches the other agent at step 1
// through the DRU, so message-head parameters get gradient only through the
// other agent's Q. Also checks the message input itself as a leaf.
inline GradCheckResult cnet_loss_check(std::uint64_t seed, int steps, int hidden = 128, int samples = 6)
{
    Rng rng(seed);
    dial::CNet net(cnet_test_dims(hidden), seed * 7919 + 1);
    // Spread parameters beyond the small init range so the check sees
    // non-trivial curvature.
    for (std::size_t i = 0; i < net.params().size(); ++i)
        for (double& v : net.params()[i].value.data) v *= 1.5;
    ParamStore extra;
    Parameter& m_in = random_param(extra, "message_in", rng, 2, 1);

    std::vector<std::vector<int>> slots(steps), prev(steps), actions(steps);
    std::vector<Tensor> targets, noise;
    for (int t = 0; t < steps; ++t) {
        for (int i = 0; i < 2 * 4; ++i)
            slots[t].push_back(i % 4 == 3 ? static_cast<int>(rng.index(2)) : static_cast<int>(rng.index(16)));
        for (int a = 0; a < 2; ++a) {
            prev[t].push_back(static_cast<int>(rng.index(11)));
            actions[t].push_back(static_cast<int>(rng.index(11)));
        }
        targets.push_back(random_tensor(rng, 2, 1));
        noise.push_back(dial::draw_message_noise(2, 1, rng));
    }
    const std::vector<int> agents{0, 1};
    const std::vector<std::vector<int>> swap{{1}, {0}};
    Tensor weight(2, 1, 1.0);

    auto loss = [&](Tape& tape) {
        std::vector<Value> terms;
        dial::CNet::Hidden h = net.zero_hidden(tape, 2);
        Value message = tape.param(m_in);
        for (int t = 0; t < steps; ++t) {
            const Value in = t == 0 ? message : route_rows(message, swap);
            const Value z = net.embed_input(tape, slots[t], in, prev[t], agents);
            const auto out = net.forward(tape, z, h);
            terms.push_back(weighted_squared_error(pick(out.q_env, actions[t]), targets[t], weight));
            message = dial::dru_train(out.q_msg, 2.0, noise[t]);
            h = out.hidden;
        }
        return terms.size() == 1 ? terms[0] : sum_elementwise(terms);
    };
    std::vector<Parameter*> params = all_params(net.params());
    params.push_back(&m_in);
    GradCheckOptions opts;
    opts.samples_per_param = samples;
    opts.sample_seed = seed;
    return finite_diff_check(loss, params, opts);
}

}  // namespace gradsuite
