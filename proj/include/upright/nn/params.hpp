// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "upright/nn/tensor.hpp"

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

namespace upright::nn {

/// Seeded generator used for all initialization and sampling. The engine is fixed
/// (mt19937_64) so runs are reproducible for a given standard library.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(engine_); }
    double normal(double mean, double stddev) { return std::normal_distribution<double>(mean, stddev)(engine_); }
    int uniform_int(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(engine_); }
    std::uint64_t next() { return engine_(); }
    std::mt19937_64& engine() { return engine_; }

private:
    std::mt19937_64 engine_;
};

/// splitmix64 finalizer; derives independent per-item seeds from (seed, index).
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index);

struct Parameter {
    std::string name;
    TensorF tensor;
    bool frozen = false;
};

/// Ordered, named parameter collection. Tensors are shared handles, so layers keep
/// copies of what add() returns and still see every update.
class ParamStore {
public:
    /// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)).
    TensorF add_uniform(const std::string& name, Shape shape, int fan_in, Rng& rng);
    TensorF add_normal(const std::string& name, Shape shape, double stddev, Rng& rng);
    TensorF add_constant(const std::string& name, Shape shape, float value);

    std::vector<Parameter>& params() { return params_; }
    const std::vector<Parameter>& params() const { return params_; }
    Parameter* find(const std::string& name);
    const Parameter* find(const std::string& name) const;

    /// Frozen parameters stop requiring gradients and are skipped by optimizers.
    void set_frozen(bool frozen);
    void zero_grad();
    std::size_t count() const;

    /// Copies values from another store with identical names and shapes.
    void copy_from(const ParamStore& other);

private:
    TensorF add(const std::string& name, Shape shape, std::vector<float> values);
    std::vector<Parameter> params_;
};

class Adam {
public:
    Adam(float lr, float beta1 = 0.9f, float beta2 = 0.999f, float eps = 1e-8f)
        : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

    /// One update over every non-frozen parameter; clears gradients afterwards.
    void step(ParamStore& store);
    float lr() const { return lr_; }
    int steps() const { return t_; }

private:
    float lr_, beta1_, beta2_, eps_;
    int t_ = 0;
    std::vector<std::vector<float>> m_, v_;
};

class Sgd {
public:
    explicit Sgd(float lr) : lr_(lr) {}
    void step(ParamStore& store);
    float lr() const { return lr_; }

private:
    float lr_;
};

class CheckpointError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// UCKP v1: magic, u32 version, config text, u32 count, then per parameter
/// name, u8 rank, u32 dims, u8 frozen, f32 payload. All little-endian.
void save_checkpoint(const ParamStore& store, const std::string& config_text, const std::filesystem::path& path);

/// Loads values into `store` by name; names and shapes must match exactly.
/// Returns the embedded config text.
std::string load_checkpoint(ParamStore& store, const std::filesystem::path& path);

/// Config text embedded in a checkpoint, without loading any parameters.
std::string read_checkpoint_config(const std::filesystem::path& path);

}  // namespace upright::nn
