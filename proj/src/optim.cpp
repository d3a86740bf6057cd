// SPDX-License-Identifier: Apache-2.0
#include "upright/nn/params.hpp"

#include <cmath>

namespace upright::nn {

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ull * (index + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

TensorF ParamStore::add(const std::string& name, Shape shape, std::vector<float> values) {
    if (find(name)) throw std::invalid_argument("duplicate parameter name " + name);
    TensorF t(std::move(shape), std::move(values), true);
    params_.push_back({name, t, false});
    return t;
}

TensorF ParamStore::add_uniform(const std::string& name, Shape shape, int fan_in, Rng& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    std::vector<float> v(numel(shape));
    for (auto& x : v) x = static_cast<float>(rng.uniform(-bound, bound));
    return add(name, std::move(shape), std::move(v));
}

TensorF ParamStore::add_normal(const std::string& name, Shape shape, double stddev, Rng& rng) {
    std::vector<float> v(numel(shape));
    for (auto& x : v) x = static_cast<float>(rng.normal(0.0, stddev));
    return add(name, std::move(shape), std::move(v));
}

TensorF ParamStore::add_constant(const std::string& name, Shape shape, float value) {
    std::vector<float> v(numel(shape), value);
    return add(name, std::move(shape), std::move(v));
}

Parameter* ParamStore::find(const std::string& name) {
    for (auto& p : params_)
        if (p.name == name) return &p;
    return nullptr;
}

const Parameter* ParamStore::find(const std::string& name) const {
    for (const auto& p : params_)
        if (p.name == name) return &p;
    return nullptr;
}

void ParamStore::set_frozen(bool frozen) {
    for (auto& p : params_) {
        p.frozen = frozen;
        p.tensor.set_requires_grad(!frozen);
        p.tensor.zero_grad();
    }
}

void ParamStore::zero_grad() {
    for (auto& p : params_) p.tensor.zero_grad();
}

std::size_t ParamStore::count() const {
    std::size_t n = 0;
    for (const auto& p : params_) n += p.tensor.size();
    return n;
}

void ParamStore::copy_from(const ParamStore& other) {
    for (auto& p : params_) {
        const Parameter* q = other.find(p.name);
        if (!q || q->tensor.shape() != p.tensor.shape()) {
            throw std::invalid_argument("parameter " + p.name + " missing or mis-shaped in source store");
        }
        std::copy(q->tensor.values().begin(), q->tensor.values().end(), p.tensor.values().begin());
    }
}

void Adam::step(ParamStore& store) {
    auto& ps = store.params();
    if (m_.size() != ps.size()) {
        m_.resize(ps.size());
        v_.resize(ps.size());
    }
    ++t_;
    const float c1 = 1.0f - std::pow(beta1_, static_cast<float>(t_));
    const float c2 = 1.0f - std::pow(beta2_, static_cast<float>(t_));
    for (std::size_t k = 0; k < ps.size(); ++k) {
        Parameter& p = ps[k];
        if (p.frozen) continue;
        auto g = p.tensor.grad();
        if (g.empty()) continue;
        auto w = p.tensor.values();
        if (m_[k].empty()) {
            m_[k].assign(w.size(), 0.0f);
            v_[k].assign(w.size(), 0.0f);
        }
        auto& m = m_[k];
        auto& v = v_[k];
        for (std::size_t i = 0; i < w.size(); ++i) {
            m[i] = beta1_ * m[i] + (1.0f - beta1_) * g[i];
            v[i] = beta2_ * v[i] + (1.0f - beta2_) * g[i] * g[i];
            const float mh = m[i] / c1;
            const float vh = v[i] / c2;
            w[i] -= lr_ * mh / (std::sqrt(vh) + eps_);
        }
    }
    store.zero_grad();
}

void Sgd::step(ParamStore& store) {
    for (auto& p : store.params()) {
        if (p.frozen) continue;
        auto g = p.tensor.grad();
        if (g.empty()) continue;
        auto w = p.tensor.values();
        for (std::size_t i = 0; i < w.size(); ++i) w[i] -= lr_ * g[i];
    }
    store.zero_grad();
}

}  // namespace upright::nn
