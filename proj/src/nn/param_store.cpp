#include "cyberdial/nn/param_store.hpp"

#include <cmath>
#include <cstring>
#include <stdexcept>

namespace cyberdial::nn {

Parameter& ParamStore::add(const std::string& name, int rows, int cols)
{
    if (index_.count(name)) throw std::invalid_argument("duplicate parameter name: " + name);
    auto p = std::make_unique<Parameter>();
    p->name = name;
    p->value = Tensor(rows, cols);
    p->grad = Tensor(rows, cols);
    p->sq_avg = Tensor(rows, cols);
    index_[name] = params_.size();
    params_.push_back(std::move(p));
    return *params_.back();
}

Parameter& ParamStore::get(const std::string& name)
{
    auto it = index_.find(name);
    if (it == index_.end()) throw std::out_of_range("no parameter named " + name);
    return *params_[it->second];
}

const Parameter& ParamStore::get(const std::string& name) const
{
    auto it = index_.find(name);
    if (it == index_.end()) throw std::out_of_range("no parameter named " + name);
    return *params_[it->second];
}

std::size_t ParamStore::scalar_count() const
{
    std::size_t n = 0;
    for (const auto& p : params_) n += p->value.size();
    return n;
}

void ParamStore::zero_grad()
{
    for (auto& p : params_) p->grad.zero();
}

double ParamStore::grad_norm() const
{
    double sum = 0.0;
    for (const auto& p : params_)
        for (double g : p->grad.data) sum += g * g;
    return std::sqrt(sum);
}

void ParamStore::scale_grad(double factor)
{
    for (auto& p : params_)
        for (double& g : p->grad.data) g *= factor;
}

void ParamStore::copy_values_from(const ParamStore& other)
{
    if (other.params_.size() != params_.size()) throw std::invalid_argument("parameter sets differ");
    for (std::size_t i = 0; i < params_.size(); ++i) {
        const auto& src = *other.params_[i];
        auto& dst = *params_[i];
        if (src.name != dst.name || !src.value.same_shape(dst.value))
            throw std::invalid_argument("parameter mismatch at " + dst.name);
        dst.value.data = src.value.data;
    }
}

std::uint64_t ParamStore::hash() const
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto feed = [&h](const void* bytes, std::size_t n) {
        const auto* p = static_cast<const unsigned char*>(bytes);
        for (std::size_t i = 0; i < n; ++i) {
            h ^= p[i];
            h *= 0x100000001b3ULL;
        }
    };
    for (const auto& p : params_) {
        feed(p->name.data(), p->name.size());
        feed(p->value.data.data(), p->value.data.size() * sizeof(double));
    }
    return h;
}

void init_uniform(Parameter& p, double bound, Rng& rng)
{
    for (double& v : p.value.data) v = (2.0 * rng.uniform() - 1.0) * bound;
}

}  // namespace cyberdial::nn
