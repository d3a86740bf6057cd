// SPDX-License-Identifier: Apache-2.0
#include "upright/nn/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace upright::nn {

namespace {

template <typename T>
std::vector<T>* grad_of(Node<T>& n, std::size_t i) {
    Node<T>& p = *n.parents[i];
    return p.requires_grad ? &p.grad_buffer() : nullptr;
}

// Number of times b is repeated along a's leading dims; throws unless b's shape is a suffix of a's.
template <typename T>
std::size_t broadcast_outer(const Tensor<T>& a, const Tensor<T>& b, const char* op) {
    const Shape& sa = a.shape();
    const Shape& sb = b.shape();
    bool ok = sb.size() <= sa.size() && std::equal(sb.rbegin(), sb.rend(), sa.rbegin());
    if (!ok) throw ShapeError(std::string(op) + ": cannot broadcast " + shape_str(sb) + " onto " + shape_str(sa));
    return a.size() / std::max<std::size_t>(b.size(), 1);
}

template <typename T, typename Fwd, typename Dfdx>
Tensor<T> unary(const Tensor<T>& a, Fwd fwd, Dfdx dfdx) {
    std::vector<T> out(a.size());
    auto av = a.values();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = fwd(av[i]);
    return Tensor<T>::make(a.shape(), std::move(out), {a}, [dfdx](Node<T>& n) {
        auto* ga = grad_of(n, 0);
        if (!ga) return;
        const auto& x = n.parents[0]->value;
        for (std::size_t i = 0; i < n.grad.size(); ++i) (*ga)[i] += n.grad[i] * dfdx(x[i], n.value[i]);
    });
}

}  // namespace

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
    const std::size_t inner = b.size();
    broadcast_outer(a, b, "add");
    std::vector<T> out(a.size());
    auto av = a.values();
    auto bv = b.values();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] + bv[i % inner];
    return Tensor<T>::make(a.shape(), std::move(out), {a, b}, [inner](Node<T>& n) {
        if (auto* ga = grad_of(n, 0))
            for (std::size_t i = 0; i < n.grad.size(); ++i) (*ga)[i] += n.grad[i];
        if (auto* gb = grad_of(n, 1))
            for (std::size_t i = 0; i < n.grad.size(); ++i) (*gb)[i % inner] += n.grad[i];
    });
}

template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
    const std::size_t inner = b.size();
    broadcast_outer(a, b, "sub");
    std::vector<T> out(a.size());
    auto av = a.values();
    auto bv = b.values();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] - bv[i % inner];
    return Tensor<T>::make(a.shape(), std::move(out), {a, b}, [inner](Node<T>& n) {
        if (auto* ga = grad_of(n, 0))
            for (std::size_t i = 0; i < n.grad.size(); ++i) (*ga)[i] += n.grad[i];
        if (auto* gb = grad_of(n, 1))
            for (std::size_t i = 0; i < n.grad.size(); ++i) (*gb)[i % inner] -= n.grad[i];
    });
}

template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
    const std::size_t inner = b.size();
    broadcast_outer(a, b, "mul");
    std::vector<T> out(a.size());
    auto av = a.values();
    auto bv = b.values();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * bv[i % inner];
    return Tensor<T>::make(a.shape(), std::move(out), {a, b}, [inner](Node<T>& n) {
        const auto& x = n.parents[0]->value;
        const auto& y = n.parents[1]->value;
        if (auto* ga = grad_of(n, 0))
            for (std::size_t i = 0; i < n.grad.size(); ++i) (*ga)[i] += n.grad[i] * y[i % inner];
        if (auto* gb = grad_of(n, 1))
            for (std::size_t i = 0; i < n.grad.size(); ++i) (*gb)[i % inner] += n.grad[i] * x[i];
    });
}

template <typename T>
Tensor<T> div(const Tensor<T>& a, const Tensor<T>& b) {
    if (a.shape() != b.shape()) throw ShapeError("div: shape mismatch " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
    std::vector<T> out(a.size());
    auto av = a.values();
    auto bv = b.values();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] / bv[i];
    return Tensor<T>::make(a.shape(), std::move(out), {a, b}, [](Node<T>& n) {
        const auto& x = n.parents[0]->value;
        const auto& y = n.parents[1]->value;
        if (auto* ga = grad_of(n, 0))
            for (std::size_t i = 0; i < n.grad.size(); ++i) (*ga)[i] += n.grad[i] / y[i];
        if (auto* gb = grad_of(n, 1))
            for (std::size_t i = 0; i < n.grad.size(); ++i) (*gb)[i] -= n.grad[i] * x[i] / (y[i] * y[i]);
    });
}

template <typename T>
Tensor<T> scale(const Tensor<T>& a, T s) {
    return unary(a, [s](T x) { return x * s; }, [s](T, T) { return s; });
}

template <typename T>
Tensor<T> add_scalar(const Tensor<T>& a, T s) {
    return unary(a, [s](T x) { return x + s; }, [](T, T) { return T(1); });
}

template <typename T>
Tensor<T> relu(const Tensor<T>& a) {
    return unary(a, [](T x) { return x > T(0) ? x : T(0); }, [](T x, T) { return x > T(0) ? T(1) : T(0); });
}

template <typename T>
Tensor<T> leaky_relu(const Tensor<T>& a, T slope) {
    return unary(
        a, [slope](T x) { return x > T(0) ? x : slope * x; }, [slope](T x, T) { return x > T(0) ? T(1) : slope; });
}

template <typename T>
Tensor<T> sigmoid(const Tensor<T>& a) {
    return unary(
        a, [](T x) { return T(1) / (T(1) + std::exp(-x)); }, [](T, T y) { return y * (T(1) - y); });
}

template <typename T>
Tensor<T> tanh(const Tensor<T>& a) {
    return unary(a, [](T x) { return std::tanh(x); }, [](T, T y) { return T(1) - y * y; });
}

template <typename T>
Tensor<T> abs(const Tensor<T>& a) {
    return unary(
        a, [](T x) { return std::abs(x); },
        [](T x, T) { return x > T(0) ? T(1) : (x < T(0) ? T(-1) : T(0)); });
}

template <typename T>
Tensor<T> square(const Tensor<T>& a) {
    return unary(a, [](T x) { return x * x; }, [](T x, T) { return T(2) * x; });
}

template <typename T>
Tensor<T> smooth_l1(const Tensor<T>& a) {
    return unary(
        a, [](T x) { return std::abs(x) <= T(1) ? T(0.5) * x * x : std::abs(x) - T(0.5); },
        [](T x, T) { return std::abs(x) <= T(1) ? x : (x > T(0) ? T(1) : T(-1)); });
}

template <typename T>
Tensor<T> sum(const Tensor<T>& a) {
    auto av = a.values();
    T s = std::accumulate(av.begin(), av.end(), T(0));
    return Tensor<T>::make(Shape{}, {s}, {a}, [](Node<T>& n) {
        if (auto* ga = grad_of(n, 0))
            for (auto& g : *ga) g += n.grad[0];
    });
}

template <typename T>
Tensor<T> mean(const Tensor<T>& a) {
    auto av = a.values();
    const T inv = T(1) / static_cast<T>(a.size());
    T s = std::accumulate(av.begin(), av.end(), T(0)) * inv;
    return Tensor<T>::make(Shape{}, {s}, {a}, [inv](Node<T>& n) {
        if (auto* ga = grad_of(n, 0))
            for (auto& g : *ga) g += n.grad[0] * inv;
    });
}

template <typename T>
Tensor<T> reshape(const Tensor<T>& a, Shape shape) {
    if (numel(shape) != a.size()) {
        throw ShapeError("reshape: cannot view " + shape_str(a.shape()) + " as " + shape_str(shape));
    }
    std::vector<T> out(a.values().begin(), a.values().end());
    return Tensor<T>::make(std::move(shape), std::move(out), {a}, [](Node<T>& n) {
        if (auto* ga = grad_of(n, 0))
            for (std::size_t i = 0; i < n.grad.size(); ++i) (*ga)[i] += n.grad[i];
    });
}

template <typename T>
Tensor<T> permute(const Tensor<T>& a, const std::vector<int>& axes) {
    const Shape& in = a.shape();
    const int nd = static_cast<int>(in.size());
    if (static_cast<int>(axes.size()) != nd) throw ShapeError("permute: axis count mismatch");
    std::vector<int> seen(nd, 0);
    for (int ax : axes) {
        if (ax < 0 || ax >= nd || seen[ax]++) throw ShapeError("permute: invalid axis list");
    }
    Shape out_shape(nd);
    std::vector<std::size_t> in_stride(nd, 1);
    for (int d = nd - 2; d >= 0; --d) in_stride[d] = in_stride[d + 1] * in[d + 1];
    for (int d = 0; d < nd; ++d) out_shape[d] = in[axes[d]];

    const std::size_t n = a.size();
    std::vector<std::size_t> src(n);
    std::vector<int> idx(nd, 0);
    for (std::size_t o = 0; o < n; ++o) {
        std::size_t s = 0;
        for (int d = 0; d < nd; ++d) s += idx[d] * in_stride[axes[d]];
        src[o] = s;
        for (int d = nd - 1; d >= 0; --d) {
            if (++idx[d] < out_shape[d]) break;
            idx[d] = 0;
        }
    }
    std::vector<T> out(n);
    auto av = a.values();
    for (std::size_t o = 0; o < n; ++o) out[o] = av[src[o]];
    return Tensor<T>::make(std::move(out_shape), std::move(out), {a}, [src = std::move(src)](Node<T>& node) {
        if (auto* ga = grad_of(node, 0))
            for (std::size_t o = 0; o < node.grad.size(); ++o) (*ga)[src[o]] += node.grad[o];
    });
}

template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
    if (a.ndim() < 2 || a.ndim() != b.ndim()) throw ShapeError("matmul: rank mismatch");
    const Shape& sa = a.shape();
    const Shape& sb = b.shape();
    for (int d = 0; d + 2 < a.ndim(); ++d) {
        if (sa[d] != sb[d]) throw ShapeError("matmul: batch dims differ " + shape_str(sa) + " vs " + shape_str(sb));
    }
    const int M = sa[sa.size() - 2], K = sa.back(), K2 = sb[sb.size() - 2], N = sb.back();
    if (K != K2) throw ShapeError("matmul: inner dims differ " + shape_str(sa) + " vs " + shape_str(sb));
    const std::size_t batch = a.size() / (static_cast<std::size_t>(M) * K);
    Shape out_shape = sa;
    out_shape.back() = N;
    std::vector<T> out(batch * M * N, T(0));
    auto av = a.values();
    auto bv = b.values();
    for (std::size_t p = 0; p < batch; ++p) {
        const T* A = av.data() + p * M * K;
        const T* B = bv.data() + p * K * N;
        T* C = out.data() + p * M * N;
        for (int i = 0; i < M; ++i)
            for (int k = 0; k < K; ++k) {
                const T aik = A[i * K + k];
                for (int j = 0; j < N; ++j) C[i * N + j] += aik * B[k * N + j];
            }
    }
    return Tensor<T>::make(std::move(out_shape), std::move(out), {a, b}, [batch, M, K, N](Node<T>& n) {
        const auto& av = n.parents[0]->value;
        const auto& bv = n.parents[1]->value;
        auto* ga = grad_of(n, 0);
        auto* gb = grad_of(n, 1);
        for (std::size_t p = 0; p < batch; ++p) {
            const T* A = av.data() + p * M * K;
            const T* B = bv.data() + p * K * N;
            const T* G = n.grad.data() + p * M * N;
            if (ga) {
                T* GA = ga->data() + p * M * K;
                for (int i = 0; i < M; ++i)
                    for (int k = 0; k < K; ++k) {
                        T acc = 0;
                        for (int j = 0; j < N; ++j) acc += G[i * N + j] * B[k * N + j];
                        GA[i * K + k] += acc;
                    }
            }
            if (gb) {
                T* GB = gb->data() + p * K * N;
                for (int i = 0; i < M; ++i)
                    for (int k = 0; k < K; ++k) {
                        const T aik = A[i * K + k];
                        for (int j = 0; j < N; ++j) GB[k * N + j] += aik * G[i * N + j];
                    }
            }
        }
    });
}

template <typename T>
Tensor<T> softmax_last(const Tensor<T>& a) {
    const int L = a.dim(-1);
    const std::size_t rows = a.size() / L;
    std::vector<T> out(a.size());
    auto av = a.values();
    for (std::size_t r = 0; r < rows; ++r) {
        const T* x = av.data() + r * L;
        T* y = out.data() + r * L;
        const T mx = *std::max_element(x, x + L);
        T s = 0;
        for (int i = 0; i < L; ++i) s += (y[i] = std::exp(x[i] - mx));
        for (int i = 0; i < L; ++i) y[i] /= s;
    }
    return Tensor<T>::make(a.shape(), std::move(out), {a}, [rows, L](Node<T>& n) {
        auto* ga = grad_of(n, 0);
        if (!ga) return;
        for (std::size_t r = 0; r < rows; ++r) {
            const T* y = n.value.data() + r * L;
            const T* g = n.grad.data() + r * L;
            T dot = 0;
            for (int i = 0; i < L; ++i) dot += g[i] * y[i];
            for (int i = 0; i < L; ++i) (*ga)[r * L + i] += y[i] * (g[i] - dot);
        }
    });
}

template <typename T>
Tensor<T> linear(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>* bias) {
    if (weight.ndim() != 2) throw ShapeError("linear: weight must be 2-D");
    const int out_f = weight.dim(0), in_f = weight.dim(1);
    if (x.ndim() < 1 || x.dim(-1) != in_f) {
        throw ShapeError("linear: input " + shape_str(x.shape()) + " incompatible with weight " + shape_str(weight.shape()));
    }
    if (bias && (bias->ndim() != 1 || bias->dim(0) != out_f)) throw ShapeError("linear: bias shape mismatch");
    const std::size_t rows = x.size() / in_f;
    Shape out_shape = x.shape();
    out_shape.back() = out_f;
    std::vector<T> out(rows * out_f);
    auto xv = x.values();
    auto wv = weight.values();
    for (std::size_t r = 0; r < rows; ++r) {
        const T* xr = xv.data() + r * in_f;
        for (int o = 0; o < out_f; ++o) {
            const T* wo = wv.data() + static_cast<std::size_t>(o) * in_f;
            T acc = bias ? bias->values()[o] : T(0);
            for (int i = 0; i < in_f; ++i) acc += xr[i] * wo[i];
            out[r * out_f + o] = acc;
        }
    }
    std::vector<Tensor<T>> inputs{x, weight};
    if (bias) inputs.push_back(*bias);
    return Tensor<T>::make(std::move(out_shape), std::move(out), inputs, [rows, in_f, out_f](Node<T>& n) {
        const auto& xv = n.parents[0]->value;
        const auto& wv = n.parents[1]->value;
        auto* gx = grad_of(n, 0);
        auto* gw = grad_of(n, 1);
        auto* gb = n.parents.size() > 2 ? grad_of(n, 2) : nullptr;
        for (std::size_t r = 0; r < rows; ++r) {
            const T* g = n.grad.data() + r * out_f;
            const T* xr = xv.data() + r * in_f;
            for (int o = 0; o < out_f; ++o) {
                const T go = g[o];
                if (go == T(0)) continue;
                if (gx) {
                    T* gxr = gx->data() + r * in_f;
                    const T* wo = wv.data() + static_cast<std::size_t>(o) * in_f;
                    for (int i = 0; i < in_f; ++i) gxr[i] += go * wo[i];
                }
                if (gw) {
                    T* gwo = gw->data() + static_cast<std::size_t>(o) * in_f;
                    for (int i = 0; i < in_f; ++i) gwo[i] += go * xr[i];
                }
                if (gb) (*gb)[o] += go;
            }
        }
    });
}

namespace {

struct ConvGeom {
    int N, C, H, W, O, k, stride, pad, Ho, Wo;
    std::size_t col_rows() const { return static_cast<std::size_t>(C) * k * k; }
    std::size_t col_cols() const { return static_cast<std::size_t>(Ho) * Wo; }
};

template <typename T>
void im2col(const T* x, const ConvGeom& g, T* cols) {
    const std::size_t L = g.col_cols();
    for (int c = 0; c < g.C; ++c)
        for (int ky = 0; ky < g.k; ++ky)
            for (int kx = 0; kx < g.k; ++kx) {
                T* row = cols + ((static_cast<std::size_t>(c) * g.k + ky) * g.k + kx) * L;
                for (int oy = 0; oy < g.Ho; ++oy) {
                    const int iy = oy * g.stride - g.pad + ky;
                    T* dst = row + static_cast<std::size_t>(oy) * g.Wo;
                    if (iy < 0 || iy >= g.H) {
                        std::fill(dst, dst + g.Wo, T(0));
                        continue;
                    }
                    const T* src = x + (static_cast<std::size_t>(c) * g.H + iy) * g.W;
                    for (int ox = 0; ox < g.Wo; ++ox) {
                        const int ix = ox * g.stride - g.pad + kx;
                        dst[ox] = (ix >= 0 && ix < g.W) ? src[ix] : T(0);
                    }
                }
            }
}

template <typename T>
void col2im_add(const T* cols, const ConvGeom& g, T* gx) {
    const std::size_t L = g.col_cols();
    for (int c = 0; c < g.C; ++c)
        for (int ky = 0; ky < g.k; ++ky)
            for (int kx = 0; kx < g.k; ++kx) {
                const T* row = cols + ((static_cast<std::size_t>(c) * g.k + ky) * g.k + kx) * L;
                for (int oy = 0; oy < g.Ho; ++oy) {
                    const int iy = oy * g.stride - g.pad + ky;
                    if (iy < 0 || iy >= g.H) continue;
                    const T* src = row + static_cast<std::size_t>(oy) * g.Wo;
                    T* dst = gx + (static_cast<std::size_t>(c) * g.H + iy) * g.W;
                    for (int ox = 0; ox < g.Wo; ++ox) {
                        const int ix = ox * g.stride - g.pad + kx;
                        if (ix >= 0 && ix < g.W) dst[ix] += src[ox];
                    }
                }
            }
}

}  // namespace

template <typename T>
Tensor<T> conv2d(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>* bias, int stride, int padding) {
    if (x.ndim() != 4 || weight.ndim() != 4) throw ShapeError("conv2d: expected 4-D input and weight");
    if (weight.dim(1) != x.dim(1) || weight.dim(2) != weight.dim(3)) {
        throw ShapeError("conv2d: input " + shape_str(x.shape()) + " incompatible with weight " + shape_str(weight.shape()));
    }
    if (stride < 1 || padding < 0) throw ShapeError("conv2d: invalid stride/padding");
    ConvGeom g{x.dim(0), x.dim(1), x.dim(2), x.dim(3), weight.dim(0), weight.dim(2), stride, padding, 0, 0};
    g.Ho = (g.H + 2 * padding - g.k) / stride + 1;
    g.Wo = (g.W + 2 * padding - g.k) / stride + 1;
    if (g.H + 2 * padding < g.k || g.W + 2 * padding < g.k) throw ShapeError("conv2d: kernel larger than padded input");
    if (bias && (bias->ndim() != 1 || bias->dim(0) != g.O)) throw ShapeError("conv2d: bias shape mismatch");

    const std::size_t R = g.col_rows(), L = g.col_cols();
    std::vector<T> cols(R * L);
    std::vector<T> out(static_cast<std::size_t>(g.N) * g.O * L);
    auto xv = x.values();
    auto wv = weight.values();
    for (int n = 0; n < g.N; ++n) {
        im2col(xv.data() + static_cast<std::size_t>(n) * g.C * g.H * g.W, g, cols.data());
        for (int o = 0; o < g.O; ++o) {
            T* dst = out.data() + (static_cast<std::size_t>(n) * g.O + o) * L;
            std::fill(dst, dst + L, bias ? bias->values()[o] : T(0));
            const T* wo = wv.data() + static_cast<std::size_t>(o) * R;
            for (std::size_t r = 0; r < R; ++r) {
                const T w = wo[r];
                const T* src = cols.data() + r * L;
                for (std::size_t j = 0; j < L; ++j) dst[j] += w * src[j];
            }
        }
    }
    std::vector<Tensor<T>> inputs{x, weight};
    if (bias) inputs.push_back(*bias);
    return Tensor<T>::make({g.N, g.O, g.Ho, g.Wo}, std::move(out), inputs, [g](Node<T>& node) {
        const auto& xv = node.parents[0]->value;
        const auto& wv = node.parents[1]->value;
        auto* gx = grad_of(node, 0);
        auto* gw = grad_of(node, 1);
        auto* gb = node.parents.size() > 2 ? grad_of(node, 2) : nullptr;
        const std::size_t R = g.col_rows(), L = g.col_cols();
        std::vector<T> cols(gw ? R * L : 0);
        std::vector<T> dcols(gx ? R * L : 0);
        for (int n = 0; n < g.N; ++n) {
            const T* gout = node.grad.data() + static_cast<std::size_t>(n) * g.O * L;
            if (gw) im2col(xv.data() + static_cast<std::size_t>(n) * g.C * g.H * g.W, g, cols.data());
            if (gx) std::fill(dcols.begin(), dcols.end(), T(0));
            for (int o = 0; o < g.O; ++o) {
                const T* go = gout + static_cast<std::size_t>(o) * L;
                if (gb) {
                    T s = 0;
                    for (std::size_t j = 0; j < L; ++j) s += go[j];
                    (*gb)[o] += s;
                }
                const T* wo = wv.data() + static_cast<std::size_t>(o) * R;
                T* gwo = gw ? gw->data() + static_cast<std::size_t>(o) * R : nullptr;
                for (std::size_t r = 0; r < R; ++r) {
                    if (gwo) {
                        const T* c = cols.data() + r * L;
                        T s = 0;
                        for (std::size_t j = 0; j < L; ++j) s += go[j] * c[j];
                        gwo[r] += s;
                    }
                    if (gx) {
                        const T w = wo[r];
                        T* dc = dcols.data() + r * L;
                        for (std::size_t j = 0; j < L; ++j) dc[j] += w * go[j];
                    }
                }
            }
            if (gx) col2im_add(dcols.data(), g, gx->data() + static_cast<std::size_t>(n) * g.C * g.H * g.W);
        }
    });
}

template <typename T>
Tensor<T> maxpool2(const Tensor<T>& x) {
    if (x.ndim() != 4) throw ShapeError("maxpool2: expected (N, C, H, W)");
    const int N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
    const int Ho = H / 2, Wo = W / 2;
    if (Ho < 1 || Wo < 1) throw ShapeError("maxpool2: input too small " + shape_str(x.shape()));
    std::vector<T> out(static_cast<std::size_t>(N) * C * Ho * Wo);
    std::vector<std::size_t> arg(out.size());
    auto xv = x.values();
    std::size_t o = 0;
    for (int nc = 0; nc < N * C; ++nc) {
        const std::size_t base = static_cast<std::size_t>(nc) * H * W;
        for (int oy = 0; oy < Ho; ++oy)
            for (int ox = 0; ox < Wo; ++ox, ++o) {
                std::size_t best = base + static_cast<std::size_t>(2 * oy) * W + 2 * ox;
                for (int dy = 0; dy < 2; ++dy)
                    for (int dx = 0; dx < 2; ++dx) {
                        const std::size_t i = base + static_cast<std::size_t>(2 * oy + dy) * W + 2 * ox + dx;
                        if (xv[i] > xv[best]) best = i;  // strict: first maximum wins
                    }
                out[o] = xv[best];
                arg[o] = best;
            }
    }
    return Tensor<T>::make({N, C, Ho, Wo}, std::move(out), {x}, [arg = std::move(arg)](Node<T>& n) {
        if (auto* gx = grad_of(n, 0))
            for (std::size_t i = 0; i < n.grad.size(); ++i) (*gx)[arg[i]] += n.grad[i];
    });
}

template <typename T>
Tensor<T> global_avgpool(const Tensor<T>& x) {
    if (x.ndim() != 4) throw ShapeError("global_avgpool: expected (N, C, H, W)");
    const int N = x.dim(0), C = x.dim(1);
    const std::size_t HW = static_cast<std::size_t>(x.dim(2)) * x.dim(3);
    std::vector<T> out(static_cast<std::size_t>(N) * C);
    auto xv = x.values();
    for (std::size_t i = 0; i < out.size(); ++i) {
        T s = 0;
        for (std::size_t j = 0; j < HW; ++j) s += xv[i * HW + j];
        out[i] = s / static_cast<T>(HW);
    }
    return Tensor<T>::make({N, C}, std::move(out), {x}, [HW](Node<T>& n) {
        auto* gx = grad_of(n, 0);
        if (!gx) return;
        for (std::size_t i = 0; i < n.grad.size(); ++i) {
            const T g = n.grad[i] / static_cast<T>(HW);
            for (std::size_t j = 0; j < HW; ++j) (*gx)[i * HW + j] += g;
        }
    });
}

template <typename T>
Tensor<T> layer_norm(const Tensor<T>& x, const Tensor<T>& gain, const Tensor<T>& shift, T eps) {
    const int D = x.dim(-1);
    if (gain.size() != static_cast<std::size_t>(D) || shift.size() != static_cast<std::size_t>(D)) {
        throw ShapeError("layer_norm: gain/shift must have the last-dim size " + std::to_string(D));
    }
    const std::size_t rows = x.size() / D;
    std::vector<T> out(x.size()), xhat(x.size()), inv_std(rows);
    auto xv = x.values();
    auto gv = gain.values();
    auto sv = shift.values();
    for (std::size_t r = 0; r < rows; ++r) {
        const T* xr = xv.data() + r * D;
        T mu = 0;
        for (int i = 0; i < D; ++i) mu += xr[i];
        mu /= D;
        T var = 0;
        for (int i = 0; i < D; ++i) var += (xr[i] - mu) * (xr[i] - mu);
        var /= D;
        const T is = T(1) / std::sqrt(var + eps);
        inv_std[r] = is;
        for (int i = 0; i < D; ++i) {
            const T h = (xr[i] - mu) * is;
            xhat[r * D + i] = h;
            out[r * D + i] = h * gv[i] + sv[i];
        }
    }
    return Tensor<T>::make(x.shape(), std::move(out), {x, gain, shift},
                           [rows, D, xhat = std::move(xhat), inv_std = std::move(inv_std)](Node<T>& n) {
                               auto* gx = grad_of(n, 0);
                               auto* gg = grad_of(n, 1);
                               auto* gs = grad_of(n, 2);
                               const auto& gv = n.parents[1]->value;
                               for (std::size_t r = 0; r < rows; ++r) {
                                   const T* g = n.grad.data() + r * D;
                                   const T* h = xhat.data() + r * D;
                                   T m1 = 0, m2 = 0;
                                   for (int i = 0; i < D; ++i) {
                                       const T gh = g[i] * gv[i];
                                       m1 += gh;
                                       m2 += gh * h[i];
                                       if (gg) (*gg)[i] += g[i] * h[i];
                                       if (gs) (*gs)[i] += g[i];
                                   }
                                   if (!gx) continue;
                                   m1 /= D;
                                   m2 /= D;
                                   for (int i = 0; i < D; ++i) {
                                       (*gx)[r * D + i] += inv_std[r] * (g[i] * gv[i] - m1 - h[i] * m2);
                                   }
                               }
                           });
}

namespace {

struct AxisTaps {
    std::vector<int> i0, i1;
    std::vector<double> t;  // weight of i1; may fall outside [0, 1] at the borders
};

AxisTaps axis_taps(int in, int factor) {
    const int out = in * factor;
    AxisTaps a;
    a.i0.resize(out);
    a.i1.resize(out);
    a.t.resize(out);
    for (int o = 0; o < out; ++o) {
        if (in == 1) {
            a.i0[o] = a.i1[o] = 0;
            a.t[o] = 0.0;
            continue;
        }
        const double s = (o + 0.5) / factor - 0.5;
        const int i0 = std::clamp(static_cast<int>(std::floor(s)), 0, in - 2);
        a.i0[o] = i0;
        a.i1[o] = i0 + 1;
        a.t[o] = s - i0;
    }
    return a;
}

}  // namespace

template <typename T>
Tensor<T> bilinear_upsample(const Tensor<T>& x, int factor) {
    if (x.ndim() != 4) throw ShapeError("bilinear_upsample: expected (N, C, H, W)");
    if (factor < 1) throw ShapeError("bilinear_upsample: factor must be >= 1");
    const int NC = x.dim(0) * x.dim(1), h = x.dim(2), w = x.dim(3);
    const int H = h * factor, W = w * factor;
    const AxisTaps ty = axis_taps(h, factor);
    const AxisTaps tx = axis_taps(w, factor);
    std::vector<T> out(static_cast<std::size_t>(NC) * H * W);
    auto xv = x.values();
    for (int p = 0; p < NC; ++p) {
        const T* src = xv.data() + static_cast<std::size_t>(p) * h * w;
        T* dst = out.data() + static_cast<std::size_t>(p) * H * W;
        for (int Y = 0; Y < H; ++Y) {
            const T* r0 = src + static_cast<std::size_t>(ty.i0[Y]) * w;
            const T* r1 = src + static_cast<std::size_t>(ty.i1[Y]) * w;
            const T wy = static_cast<T>(ty.t[Y]);
            for (int X = 0; X < W; ++X) {
                const T wx = static_cast<T>(tx.t[X]);
                const T top = r0[tx.i0[X]] + wx * (r0[tx.i1[X]] - r0[tx.i0[X]]);
                const T bot = r1[tx.i0[X]] + wx * (r1[tx.i1[X]] - r1[tx.i0[X]]);
                dst[static_cast<std::size_t>(Y) * W + X] = top + wy * (bot - top);
            }
        }
    }
    return Tensor<T>::make({x.dim(0), x.dim(1), H, W}, std::move(out), {x}, [=](Node<T>& n) {
        auto* gx = grad_of(n, 0);
        if (!gx) return;
        for (int p = 0; p < NC; ++p) {
            T* g = gx->data() + static_cast<std::size_t>(p) * h * w;
            const T* go = n.grad.data() + static_cast<std::size_t>(p) * H * W;
            for (int Y = 0; Y < H; ++Y) {
                const T wy = static_cast<T>(ty.t[Y]);
                T* r0 = g + static_cast<std::size_t>(ty.i0[Y]) * w;
                T* r1 = g + static_cast<std::size_t>(ty.i1[Y]) * w;
                for (int X = 0; X < W; ++X) {
                    const T wx = static_cast<T>(tx.t[X]);
                    const T v = go[static_cast<std::size_t>(Y) * W + X];
                    r0[tx.i0[X]] += v * (1 - wy) * (1 - wx);
                    r0[tx.i1[X]] += v * (1 - wy) * wx;
                    r1[tx.i0[X]] += v * wy * (1 - wx);
                    r1[tx.i1[X]] += v * wy * wx;
                }
            }
        }
    });
}

template <typename T>
Tensor<T> embedding(const Tensor<T>& table, const std::vector<int>& indices) {
    if (table.ndim() != 2) throw ShapeError("embedding: table must be 2-D");
    const int V = table.dim(0), D = table.dim(1);
    std::vector<T> out(indices.size() * D);
    auto tv = table.values();
    for (std::size_t r = 0; r < indices.size(); ++r) {
        if (indices[r] < 0 || indices[r] >= V) throw ShapeError("embedding: index out of vocabulary");
        std::copy_n(tv.data() + static_cast<std::size_t>(indices[r]) * D, D, out.data() + r * D);
    }
    return Tensor<T>::make({static_cast<int>(indices.size()), D}, std::move(out), {table},
                           [indices, D](Node<T>& n) {
                               auto* gt = grad_of(n, 0);
                               if (!gt) return;
                               for (std::size_t r = 0; r < indices.size(); ++r)
                                   for (int i = 0; i < D; ++i)
                                       (*gt)[static_cast<std::size_t>(indices[r]) * D + i] += n.grad[r * D + i];
                           });
}

template <typename T>
Tensor<T> bce(const Tensor<T>& p, T target) {
    const T eps = T(1e-7);
    auto pv = p.values();
    const T inv = T(1) / static_cast<T>(p.size());
    T s = 0;
    for (T v : pv) {
        const T c = std::clamp(v, eps, T(1) - eps);
        s -= target * std::log(c) + (T(1) - target) * std::log(T(1) - c);
    }
    return Tensor<T>::make(Shape{}, {s * inv}, {p}, [target, eps, inv](Node<T>& n) {
        auto* gp = grad_of(n, 0);
        if (!gp) return;
        const auto& pv = n.parents[0]->value;
        for (std::size_t i = 0; i < pv.size(); ++i) {
            const T c = std::clamp(pv[i], eps, T(1) - eps);
            (*gp)[i] += n.grad[0] * inv * (-target / c + (T(1) - target) / (T(1) - c));
        }
    });
}

template <typename T>
Tensor<T> mse(const Tensor<T>& a, const Tensor<T>& b) {
    if (a.shape() != b.shape()) throw ShapeError("mse: shape mismatch");
    auto av = a.values();
    auto bv = b.values();
    const T inv = T(1) / static_cast<T>(a.size());
    T s = 0;
    for (std::size_t i = 0; i < av.size(); ++i) s += (av[i] - bv[i]) * (av[i] - bv[i]);
    return Tensor<T>::make(Shape{}, {s * inv}, {a, b}, [inv](Node<T>& n) {
        const auto& av = n.parents[0]->value;
        const auto& bv = n.parents[1]->value;
        auto* ga = grad_of(n, 0);
        auto* gb = grad_of(n, 1);
        for (std::size_t i = 0; i < av.size(); ++i) {
            const T d = T(2) * (av[i] - bv[i]) * inv * n.grad[0];
            if (ga) (*ga)[i] += d;
            if (gb) (*gb)[i] -= d;
        }
    });
}

template <typename T>
Tensor<T> l1(const Tensor<T>& a, const Tensor<T>& b) {
    if (a.shape() != b.shape()) throw ShapeError("l1: shape mismatch " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
    auto av = a.values();
    auto bv = b.values();
    const T inv = T(1) / static_cast<T>(a.size());
    T s = 0;
    for (std::size_t i = 0; i < av.size(); ++i) s += std::abs(av[i] - bv[i]);
    return Tensor<T>::make(Shape{}, {s * inv}, {a, b}, [inv](Node<T>& n) {
        const auto& av = n.parents[0]->value;
        const auto& bv = n.parents[1]->value;
        auto* ga = grad_of(n, 0);
        auto* gb = grad_of(n, 1);
        for (std::size_t i = 0; i < av.size(); ++i) {
            const T d = av[i] - bv[i];
            const T sg = d > T(0) ? T(1) : (d < T(0) ? T(-1) : T(0));
            if (ga) (*ga)[i] += sg * inv * n.grad[0];
            if (gb) (*gb)[i] -= sg * inv * n.grad[0];
        }
    });
}

namespace {

template <typename T>
Tensor<T> attend(const Tensor<T>& q, const Tensor<T>& k, const Tensor<T>& v, int heads) {
    const int N = q.dim(0), Tn = q.dim(1), D = q.dim(2);
    const int dh = D / heads;
    auto split = [&](const Tensor<T>& t) { return permute(reshape(t, {N, Tn, heads, dh}), {0, 2, 1, 3}); };
    const Tensor<T> qh = split(q);
    const Tensor<T> kt = permute(reshape(k, {N, Tn, heads, dh}), {0, 2, 3, 1});
    const Tensor<T> vh = split(v);
    const Tensor<T> attn = softmax_last(scale(matmul(qh, kt), T(1) / std::sqrt(static_cast<T>(dh))));
    return reshape(permute(matmul(attn, vh), {0, 2, 1, 3}), {N, Tn, D});
}

template <typename T>
void check_attention_input(const Tensor<T>& x, int heads) {
    if (x.ndim() != 3) throw ShapeError("self-attention expects (N, T, D), got " + shape_str(x.shape()));
    if (heads < 1 || x.dim(2) % heads != 0) {
        throw ShapeError("token dimension " + std::to_string(x.dim(2)) + " is not divisible by " +
                         std::to_string(heads) + " heads");
    }
}

}  // namespace

template <typename T>
Tensor<T> multihead_self_attention(const Tensor<T>& x, int heads, const Tensor<T>& wq, const Tensor<T>& bq,
                                   const Tensor<T>& wk, const Tensor<T>& bk, const Tensor<T>& wv,
                                   const Tensor<T>& bv, const Tensor<T>& wo, const Tensor<T>& bo) {
    check_attention_input(x, heads);
    const Tensor<T> ctx = attend(linear(x, wq, &bq), linear(x, wk, &bk), linear(x, wv, &bv), heads);
    return linear(ctx, wo, &bo);
}

template <typename T>
Tensor<T> diagonal_self_attention(const Tensor<T>& x, int heads, const Tensor<T>& wq, const Tensor<T>& bq,
                                  const Tensor<T>& wk, const Tensor<T>& bk, const Tensor<T>& wv,
                                  const Tensor<T>& bv, const Tensor<T>& wo, const Tensor<T>& bo) {
    check_attention_input(x, heads);
    auto proj = [&](const Tensor<T>& t, const Tensor<T>& w, const Tensor<T>& b) { return add(mul(t, w), b); };
    const Tensor<T> ctx = attend(proj(x, wq, bq), proj(x, wk, bk), proj(x, wv, bv), heads);
    return proj(ctx, wo, bo);
}

#define UPRIGHT_INSTANTIATE_OPS(T)                                                                              \
    template Tensor<T> add(const Tensor<T>&, const Tensor<T>&);                                                 \
    template Tensor<T> sub(const Tensor<T>&, const Tensor<T>&);                                                 \
    template Tensor<T> mul(const Tensor<T>&, const Tensor<T>&);                                                 \
    template Tensor<T> div(const Tensor<T>&, const Tensor<T>&);                                                 \
    template Tensor<T> scale(const Tensor<T>&, T);                                                              \
    template Tensor<T> add_scalar(const Tensor<T>&, T);                                                         \
    template Tensor<T> relu(const Tensor<T>&);                                                                  \
    template Tensor<T> leaky_relu(const Tensor<T>&, T);                                                         \
    template Tensor<T> sigmoid(const Tensor<T>&);                                                               \
    template Tensor<T> tanh(const Tensor<T>&);                                                                  \
    template Tensor<T> abs(const Tensor<T>&);                                                                   \
    template Tensor<T> square(const Tensor<T>&);                                                                \
    template Tensor<T> smooth_l1(const Tensor<T>&);                                                             \
    template Tensor<T> sum(const Tensor<T>&);                                                                   \
    template Tensor<T> mean(const Tensor<T>&);                                                                  \
    template Tensor<T> reshape(const Tensor<T>&, Shape);                                                        \
    template Tensor<T> permute(const Tensor<T>&, const std::vector<int>&);                                      \
    template Tensor<T> matmul(const Tensor<T>&, const Tensor<T>&);                                              \
    template Tensor<T> softmax_last(const Tensor<T>&);                                                          \
    template Tensor<T> linear(const Tensor<T>&, const Tensor<T>&, const Tensor<T>*);                            \
    template Tensor<T> conv2d(const Tensor<T>&, const Tensor<T>&, const Tensor<T>*, int, int);                  \
    template Tensor<T> maxpool2(const Tensor<T>&);                                                              \
    template Tensor<T> global_avgpool(const Tensor<T>&);                                                        \
    template Tensor<T> layer_norm(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, T);                     \
    template Tensor<T> bilinear_upsample(const Tensor<T>&, int);                                                \
    template Tensor<T> embedding(const Tensor<T>&, const std::vector<int>&);                                    \
    template Tensor<T> bce(const Tensor<T>&, T);                                                                \
    template Tensor<T> mse(const Tensor<T>&, const Tensor<T>&);                                                 \
    template Tensor<T> l1(const Tensor<T>&, const Tensor<T>&);                                                  \
    template Tensor<T> multihead_self_attention(const Tensor<T>&, int, const Tensor<T>&, const Tensor<T>&,      \
                                                const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,           \
                                                const Tensor<T>&, const Tensor<T>&, const Tensor<T>&);          \
    template Tensor<T> diagonal_self_attention(const Tensor<T>&, int, const Tensor<T>&, const Tensor<T>&,       \
                                               const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,            \
                                               const Tensor<T>&, const Tensor<T>&, const Tensor<T>&);

UPRIGHT_INSTANTIATE_OPS(float)
UPRIGHT_INSTANTIATE_OPS(double)

#undef UPRIGHT_INSTANTIATE_OPS

}  // namespace upright::nn
