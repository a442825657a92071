#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "cyberdial/nn/tensor.hpp"
#include "cyberdial/rng.hpp"

namespace cyberdial::nn {

struct Parameter {
    std::string name;
    Tensor value;
    Tensor grad;
    Tensor sq_avg;  // optimizer state
};

// Named parameters with stable addresses. version() counts optimizer steps
// and identifies which parameter set produced a forward pass.
class ParamStore {
public:
    ParamStore() = default;
    ParamStore(const ParamStore&) = delete;
    ParamStore& operator=(const ParamStore&) = delete;
    ParamStore(ParamStore&&) = default;
    ParamStore& operator=(ParamStore&&) = default;

    Parameter& add(const std::string& name, int rows, int cols);
    Parameter& get(const std::string& name);
    const Parameter& get(const std::string& name) const;
    bool contains(const std::string& name) const { return index_.count(name) != 0; }

    std::size_t size() const { return params_.size(); }
    std::size_t scalar_count() const;
    Parameter& operator[](std::size_t i) { return *params_[i]; }
    const Parameter& operator[](std::size_t i) const { return *params_[i]; }

    void zero_grad();
    double grad_norm() const;
    void scale_grad(double factor);

    // Copies values (not gradients or optimizer state); names and shapes must match.
    void copy_values_from(const ParamStore& other);

    // FNV-1a over names and value bits.
    std::uint64_t hash() const;

    std::uint64_t version() const { return version_; }
    void bump_version() { ++version_; }
    void set_version(std::uint64_t v) { version_ = v; }

private:
    std::vector<std::unique_ptr<Parameter>> params_;
    std::unordered_map<std::string, std::size_t> index_;
    std::uint64_t version_ = 0;
};

void init_uniform(Parameter& p, double bound, Rng& rng);

}  // namespace cyberdial::nn
