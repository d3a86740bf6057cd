// SPDX-License-Identifier: Apache-2.0
#pragma once

// Central finite-difference checks for every differentiable op, in double precision.
// Shared by the unit tests and the acceptance run.

#include "upright/nn/ops.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <string>
#include <vector>

namespace gradcheck {

using namespace upright::nn;
using Fn = std::function<TensorD(const std::vector<TensorD>&)>;

struct OpResult {
    std::string op;
    double max_rel_error = 0.0;
    bool missing_grad = false;
};

inline TensorD random_tensor(Shape s, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
    std::uniform_real_distribution<double> u(lo, hi);
    std::vector<double> v(numel(s));
    for (auto& x : v) x = u(rng);
    return TensorD(std::move(s), std::move(v), true);
}

// Values bounded away from zero so kinked ops (relu, abs, ...) stay differentiable.
inline TensorD away_from_zero(Shape s, std::mt19937_64& rng) {
    TensorD t = random_tensor(std::move(s), rng);
    for (auto& v : t.values()) v = (v < 0 ? -1.0 : 1.0) * (0.1 + std::abs(v));
    return t;
}

// The op output is contracted with a fixed random tensor so every output element
// contributes with a distinct weight. Relative error uses max(|num|, |ana|, 1e-3).
inline OpResult check(const std::string& op, const Fn& f, std::vector<TensorD> inputs, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    TensorD probe;
    {
        NoGradGuard g;
        const TensorD out = f(inputs);
        probe = random_tensor(out.shape(), rng);
        probe.set_requires_grad(false);
    }
    auto objective = [&](const std::vector<TensorD>& in) {
        const TensorD out = f(in);
        return out.ndim() == 0 ? out : sum(mul(out, probe));
    };
    objective(inputs).backward();

    OpResult r{op};
    const double h = 1e-4;
    for (auto& input : inputs) {
        if (!input.requires_grad()) continue;
        const std::vector<double> analytic(input.grad().begin(), input.grad().end());
        if (analytic.size() != input.size()) {
            r.missing_grad = true;
            continue;
        }
        for (std::size_t i = 0; i < input.size(); ++i) {
            NoGradGuard g;
            auto vals = input.values();
            const double orig = vals[i];
            vals[i] = orig + h;
            const double fp = objective(inputs).item();
            vals[i] = orig - h;
            const double fm = objective(inputs).item();
            vals[i] = orig;
            const double numeric = (fp - fm) / (2 * h);
            const double denom = std::max({std::abs(numeric), std::abs(analytic[i]), 1e-3});
            r.max_rel_error = std::max(r.max_rel_error, std::abs(numeric - analytic[i]) / denom);
        }
    }
    return r;
}

// One random instance of every op.
inline std::vector<OpResult> run_suite(int seed) {
    std::vector<OpResult> out;
    auto c = [&](const std::string& op, const Fn& f, std::vector<TensorD> in) {
        out.push_back(check(op, f, std::move(in), static_cast<std::uint64_t>(seed)));
    };
    std::mt19937_64 rng(static_cast<std::uint64_t>(seed));

    c("add", [](auto& x) { return add(x[0], x[1]); }, {random_tensor({2, 3, 4}, rng), random_tensor({4}, rng)});
    c("sub", [](auto& x) { return sub(x[0], x[1]); }, {random_tensor({2, 3}, rng), random_tensor({2, 3}, rng)});
    c("mul", [](auto& x) { return mul(x[0], x[1]); }, {random_tensor({3, 2, 2}, rng), random_tensor({2, 2}, rng)});
    c("div", [](auto& x) { return div(x[0], x[1]); }, {random_tensor({5}, rng), random_tensor({5}, rng, 0.5, 2.0)});
    c("scale", [](auto& x) { return scale(x[0], 2.5); }, {random_tensor({4}, rng)});
    c("add_scalar", [](auto& x) { return add_scalar(x[0], -0.3); }, {random_tensor({4}, rng)});

    c("relu", [](auto& x) { return relu(x[0]); }, {away_from_zero({6}, rng)});
    c("leaky_relu", [](auto& x) { return leaky_relu(x[0], 0.2); }, {away_from_zero({6}, rng)});
    c("sigmoid", [](auto& x) { return sigmoid(x[0]); }, {random_tensor({6}, rng, -3, 3)});
    c("tanh", [](auto& x) { return upright::nn::tanh(x[0]); }, {random_tensor({6}, rng, -2, 2)});
    c("abs", [](auto& x) { return upright::nn::abs(x[0]); }, {away_from_zero({6}, rng)});
    c("square", [](auto& x) { return square(x[0]); }, {random_tensor({6}, rng)});
    TensorD s = random_tensor({8}, rng, -3, 3);
    for (auto& v : s.values())
        if (std::abs(std::abs(v) - 1.0) < 0.05) v += 0.2;
    c("smooth_l1", [](auto& x) { return smooth_l1(x[0]); }, {s});

    c("sum", [](auto& x) { return sum(x[0]); }, {random_tensor({3, 4}, rng)});
    c("mean", [](auto& x) { return mean(x[0]); }, {random_tensor({3, 4}, rng)});
    c("reshape", [](auto& x) { return reshape(x[0], {4, 3}); }, {random_tensor({3, 4}, rng)});
    c("permute", [](auto& x) { return permute(x[0], {2, 0, 1}); }, {random_tensor({2, 3, 4}, rng)});
    c("matmul", [](auto& x) { return matmul(x[0], x[1]); }, {random_tensor({2, 3, 4}, rng), random_tensor({2, 4, 5}, rng)});
    c("softmax_last", [](auto& x) { return softmax_last(x[0]); }, {random_tensor({3, 5}, rng, -2, 2)});
    c("embedding", [](auto& x) { return embedding(x[0], {2, 0, 2, 4}); }, {random_tensor({5, 3}, rng)});

    c("linear", [](auto& x) { return linear(x[0], x[1], &x[2]); },
      {random_tensor({2, 3, 4}, rng), random_tensor({5, 4}, rng), random_tensor({5}, rng)});
    c("linear_nobias", [](auto& x) { return linear(x[0], x[1], static_cast<const TensorD*>(nullptr)); },
      {random_tensor({3, 4}, rng), random_tensor({2, 4}, rng)});
    c("conv2d", [](auto& x) { return conv2d(x[0], x[1], &x[2], 1, 1); },
      {random_tensor({2, 2, 5, 6}, rng), random_tensor({3, 2, 3, 3}, rng), random_tensor({3}, rng)});
    c("conv2d_stride2", [](auto& x) { return conv2d(x[0], x[1], static_cast<const TensorD*>(nullptr), 2, 1); },
      {random_tensor({1, 2, 6, 8}, rng), random_tensor({2, 2, 4, 4}, rng)});
    // Distinct values keep the pooling argmax stable under the finite-difference step.
    TensorD pool_in = random_tensor({2, 2, 4, 6}, rng);
    auto pv = pool_in.values();
    for (std::size_t i = 0; i < pv.size(); ++i) pv[i] = 0.01 * static_cast<double>((i * 37) % pv.size()) + 0.001 * pv[i];
    c("maxpool2", [](auto& x) { return maxpool2(x[0]); }, {pool_in});
    c("global_avgpool", [](auto& x) { return global_avgpool(x[0]); }, {random_tensor({2, 3, 4, 4}, rng)});
    c("layer_norm", [](auto& x) { return layer_norm(x[0], x[1], x[2]); },
      {random_tensor({3, 6}, rng), random_tensor({6}, rng), random_tensor({6}, rng)});
    c("bilinear_upsample", [](auto& x) { return bilinear_upsample(x[0], 4); }, {random_tensor({1, 2, 3, 4}, rng)});
    c("bilinear_upsample_1row", [](auto& x) { return bilinear_upsample(x[0], 2); }, {random_tensor({1, 1, 1, 2}, rng)});

    c("bce_1", [](auto& x) { return bce(x[0], 1.0); }, {random_tensor({6}, rng, 0.1, 0.9)});
    c("bce_0", [](auto& x) { return bce(x[0], 0.0); }, {random_tensor({6}, rng, 0.1, 0.9)});
    c("mse", [](auto& x) { return mse(x[0], x[1]); }, {random_tensor({6}, rng), random_tensor({6}, rng)});
    TensorD a = random_tensor({6}, rng);
    TensorD b = random_tensor({6}, rng);
    for (std::size_t i = 0; i < 6; ++i)
        if (std::abs(a.values()[i] - b.values()[i]) < 0.05) a.values()[i] += 0.2;
    c("l1", [](auto& x) { return l1(x[0], x[1]); }, {a, b});

    const int D = 4;
    std::vector<TensorD> in{random_tensor({2, 3, D}, rng)};
    for (int i = 0; i < 4; ++i) {
        in.push_back(random_tensor({D, D}, rng, -0.7, 0.7));
        in.push_back(random_tensor({D}, rng, -0.3, 0.3));
    }
    c("multihead_self_attention",
      [](auto& x) { return multihead_self_attention(x[0], 2, x[1], x[2], x[3], x[4], x[5], x[6], x[7], x[8]); }, in);
    std::vector<TensorD> diag{random_tensor({2, 3, D}, rng)};
    for (int i = 0; i < 8; ++i) diag.push_back(random_tensor({D}, rng));
    c("diagonal_self_attention",
      [](auto& x) { return diagonal_self_attention(x[0], 2, x[1], x[2], x[3], x[4], x[5], x[6], x[7], x[8]); }, diag);
    return out;
}

}  // namespace gradcheck
