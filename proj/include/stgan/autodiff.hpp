#pragma once

#include <cmath>
#include <functional>
#include <memory>
#include <unordered_set>
#include <utility>
#include <vector>

#include "stgan/errors.hpp"
#include "stgan/tensor.hpp"

namespace stgan {

// Define-by-run reverse-mode tape. Every op builds a Node whose backprop
// closure scatters the node's gradient into its parents; backward() walks the
// graph once in reverse topological order. Graphs are rebuilt per step and
// freed when the root goes out of scope.
template <class T>
struct Node {
  Tensor<T> value;
  Tensor<T> grad;  // allocated lazily; empty means "no gradient flowed"
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node<T>>> parents;
  std::function<void(Node<T>&)> backprop;
};

template <class T>
using Var = std::shared_ptr<Node<T>>;

template <class T>
Var<T> make_leaf(Tensor<T> value, bool requires_grad = false) {
  auto node = std::make_shared<Node<T>>();
  node->value = std::move(value);
  node->requires_grad = requires_grad;
  return node;
}

// When false, ops produce plain values without recording the tape. Saves the
// activation caches during evaluation-only forwards.
inline bool& grad_enabled() {
  static thread_local bool enabled = true;
  return enabled;
}

struct NoGradGuard {
  bool prev;
  NoGradGuard() : prev(grad_enabled()) { grad_enabled() = false; }
  ~NoGradGuard() { grad_enabled() = prev; }
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;
};

namespace addetail {

template <class T>
Tensor<T>& ensure_grad(Node<T>& node) {
  if (node.grad.size() == 0) node.grad = Tensor<T>::zeros(node.value.n, node.value.c, node.value.h, node.value.w);
  return node.grad;
}

template <class T>
Var<T> make_op(Tensor<T> value, std::vector<Var<T>> parents, std::function<void(Node<T>&)> backprop) {
  auto node = std::make_shared<Node<T>>();
  node->value = std::move(value);
  for (const Var<T>& p : parents) node->requires_grad = node->requires_grad || p->requires_grad;
  if (node->requires_grad) {
    node->parents = std::move(parents);
    node->backprop = std::move(backprop);
  }
  return node;
}

template <class T>
T stable_softplus(T x) {
  return x > T(0) ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

template <class T>
T stable_sigmoid(T x) {
  if (x >= T(0)) {
    T e = std::exp(-x);
    return T(1) / (T(1) + e);
  }
  T e = std::exp(x);
  return e / (T(1) + e);
}

}  // namespace addetail

template <class T>
void backward(const Var<T>& root) {
  if (root->value.size() != 1) throw ContractError("backward() expects a scalar root");
  // Post-order DFS for a reverse topological order.
  std::vector<Node<T>*> order;
  std::unordered_set<Node<T>*> visited;
  std::vector<std::pair<Node<T>*, size_t>> stack;
  stack.push_back({root.get(), 0});
  visited.insert(root.get());
  while (!stack.empty()) {
    auto& [node, next_child] = stack.back();
    if (next_child < node->parents.size()) {
      Node<T>* parent = node->parents[next_child++].get();
      if (parent->requires_grad && !visited.count(parent)) {
        visited.insert(parent);
        stack.push_back({parent, 0});
      }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
  root->grad = Tensor<T>::scalar(T(1));
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node<T>* node = *it;
    if (node->backprop && node->grad.size() != 0) node->backprop(*node);
  }
}

// ---------------------------------------------------------------------------
// Elementwise ops
// ---------------------------------------------------------------------------

template <class T>
Var<T> relu(const Var<T>& x) {
  Tensor<T> out = x->value;
  for (T& v : out.data) v = v > T(0) ? v : T(0);
  Var<T> xp = x;
  return addetail::make_op<T>(std::move(out), {x}, [xp](Node<T>& node) {
    if (!xp->requires_grad) return;
    Tensor<T>& gx = addetail::ensure_grad(*xp);
    for (size_t i = 0; i < gx.size(); ++i)
      if (xp->value.data[i] > T(0)) gx.data[i] += node.grad.data[i];
  });
}

template <class T>
Var<T> leaky_relu(const Var<T>& x, T slope = T(0.2)) {
  Tensor<T> out = x->value;
  for (T& v : out.data) v = v > T(0) ? v : slope * v;
  Var<T> xp = x;
  return addetail::make_op<T>(std::move(out), {x}, [xp, slope](Node<T>& node) {
    if (!xp->requires_grad) return;
    Tensor<T>& gx = addetail::ensure_grad(*xp);
    for (size_t i = 0; i < gx.size(); ++i)
      gx.data[i] += node.grad.data[i] * (xp->value.data[i] > T(0) ? T(1) : slope);
  });
}

template <class T>
Var<T> tanh_act(const Var<T>& x) {
  Tensor<T> out = x->value;
  for (T& v : out.data) v = std::tanh(v);
  Var<T> xp = x;
  return addetail::make_op<T>(std::move(out), {x}, [xp](Node<T>& node) {
    if (!xp->requires_grad) return;
    Tensor<T>& gx = addetail::ensure_grad(*xp);
    for (size_t i = 0; i < gx.size(); ++i) {
      T y = node.value.data[i];
      gx.data[i] += node.grad.data[i] * (T(1) - y * y);
    }
  });
}

template <class T>
Var<T> add(const Var<T>& a, const Var<T>& b) {
  if (!a->value.same_shape(b->value))
    throw ContractError("add: shapes differ " + a->value.shape_str() + " vs " + b->value.shape_str());
  Tensor<T> out = a->value;
  for (size_t i = 0; i < out.size(); ++i) out.data[i] += b->value.data[i];
  Var<T> ap = a, bp = b;
  return addetail::make_op<T>(std::move(out), {a, b}, [ap, bp](Node<T>& node) {
    for (const Var<T>& p : {ap, bp}) {
      if (!p->requires_grad) continue;
      Tensor<T>& g = addetail::ensure_grad(*p);
      for (size_t i = 0; i < g.size(); ++i) g.data[i] += node.grad.data[i];
    }
  });
}

template <class T>
Var<T> scale(const Var<T>& x, T s) {
  Tensor<T> out = x->value;
  for (T& v : out.data) v *= s;
  Var<T> xp = x;
  return addetail::make_op<T>(std::move(out), {x}, [xp, s](Node<T>& node) {
    if (!xp->requires_grad) return;
    Tensor<T>& gx = addetail::ensure_grad(*xp);
    for (size_t i = 0; i < gx.size(); ++i) gx.data[i] += s * node.grad.data[i];
  });
}

// Value copy with no gradient link to its producer.
template <class T>
Var<T> detach(const Var<T>& x) {
  return make_leaf<T>(x->value, false);
}

// ---------------------------------------------------------------------------
// Structure ops
// ---------------------------------------------------------------------------

template <class T>
Var<T> concat_channels(const std::vector<Var<T>>& xs) {
  if (xs.empty()) throw ContractError("concat_channels: no inputs");
  int n = xs[0]->value.n, h = xs[0]->value.h, w = xs[0]->value.w;
  int total_c = 0;
  for (const Var<T>& x : xs) {
    if (x->value.n != n || x->value.h != h || x->value.w != w)
      throw ContractError("concat_channels: spatial/batch shapes differ");
    total_c += x->value.c;
  }
  Tensor<T> out(n, total_c, h, w);
  size_t plane = size_t(h) * w;
  for (int in = 0; in < n; ++in) {
    size_t c_off = 0;
    for (const Var<T>& x : xs) {
      const T* src = x->value.sample(in);
      T* dst = out.sample(in) + c_off * plane;
      std::copy(src, src + size_t(x->value.c) * plane, dst);
      c_off += size_t(x->value.c);
    }
  }
  std::vector<Var<T>> parents = xs;
  return addetail::make_op<T>(std::move(out), parents, [parents, plane](Node<T>& node) {
    for (int in = 0; in < node.value.n; ++in) {
      size_t c_off = 0;
      for (const Var<T>& x : parents) {
        size_t span = size_t(x->value.c) * plane;
        if (x->requires_grad) {
          Tensor<T>& gx = addetail::ensure_grad(*x);
          const T* src = node.grad.sample(in) + c_off * plane;
          T* dst = gx.sample(in);
          for (size_t i = 0; i < span; ++i) dst[i] += src[i];
        }
        c_off += span;
      }
    }
  });
}

// ---------------------------------------------------------------------------
// Convolutions
// ---------------------------------------------------------------------------

// x: [N, Cin, H, W], weight: [Cout, Cin, k, k], bias: [1, Cout, 1, 1] or null.
template <class T>
Var<T> conv2d(const Var<T>& x, const Var<T>& weight, const Var<T>& bias, int stride, int pad) {
  const Tensor<T>& xt = x->value;
  const Tensor<T>& wt = weight->value;
  if (xt.c != wt.c) throw ContractError("conv2d: input channels " + std::to_string(xt.c) +
                                        " do not match weight " + std::to_string(wt.c));
  int k = wt.h;
  int ho = convdetail::conv_out_extent(xt.h, k, stride, pad);
  int wo = convdetail::conv_out_extent(xt.w, k, stride, pad);
  if (ho <= 0 || wo <= 0) throw ContractError("conv2d: output extent would be empty");

  int cout = wt.n;
  size_t krows = size_t(wt.c) * k * k;
  size_t cols = size_t(ho) * wo;
  Tensor<T> out(xt.n, cout, ho, wo);
  std::vector<T> col(krows * cols);
  for (int in = 0; in < xt.n; ++in) {
    convdetail::im2col(xt.sample(in), xt.c, xt.h, xt.w, k, stride, pad, col.data());
    blas::gemm_nn(wt.data.data(), col.data(), out.sample(in), cout, int(krows), int(cols), false);
    if (bias) {
      T* o = out.sample(in);
      for (int c = 0; c < cout; ++c) {
        T b = bias->value.data[size_t(c)];
        for (size_t i = 0; i < cols; ++i) o[size_t(c) * cols + i] += b;
      }
    }
  }

  std::vector<Var<T>> parents = bias ? std::vector<Var<T>>{x, weight, bias} : std::vector<Var<T>>{x, weight};
  Var<T> xp = x, wp = weight, bp = bias;
  return addetail::make_op<T>(std::move(out), std::move(parents), [xp, wp, bp, stride, pad, k](Node<T>& node) {
    const Tensor<T>& xt = xp->value;
    const Tensor<T>& wt = wp->value;
    int cout = wt.n;
    int ho = node.value.h, wo = node.value.w;
    size_t krows = size_t(wt.c) * k * k;
    size_t cols = size_t(ho) * wo;
    std::vector<T> col(krows * cols);
    std::vector<T> dcol(xp->requires_grad ? krows * cols : 0);
    for (int in = 0; in < xt.n; ++in) {
      const T* dout = node.grad.sample(in);
      if (wp->requires_grad || xp->requires_grad)
        convdetail::im2col(xt.sample(in), xt.c, xt.h, xt.w, k, stride, pad, col.data());
      if (wp->requires_grad) {
        Tensor<T>& gw = addetail::ensure_grad(*wp);
        blas::gemm_nt(dout, col.data(), gw.data.data(), cout, int(cols), int(krows), true);
      }
      if (xp->requires_grad) {
        Tensor<T>& gx = addetail::ensure_grad(*xp);
        blas::gemm_tn(wt.data.data(), dout, dcol.data(), int(krows), cout, int(cols), false);
        convdetail::col2im(dcol.data(), xt.c, xt.h, xt.w, k, stride, pad, gx.sample(in));
      }
      if (bp && bp->requires_grad) {
        Tensor<T>& gb = addetail::ensure_grad(*bp);
        for (int c = 0; c < cout; ++c) {
          double s = 0;
          for (size_t i = 0; i < cols; ++i) s += double(dout[size_t(c) * cols + i]);
          gb.data[size_t(c)] += T(s);
        }
      }
    }
  });
}

// x: [N, Cin, H, W], weight: [Cin, Cout, k, k] (gradient-of-conv layout),
// out extent: (H-1)*stride - 2*pad + k + outpad.
template <class T>
Var<T> conv_transpose2d(const Var<T>& x, const Var<T>& weight, const Var<T>& bias, int stride, int pad,
                        int outpad) {
  const Tensor<T>& xt = x->value;
  const Tensor<T>& wt = weight->value;
  if (xt.c != wt.n) throw ContractError("conv_transpose2d: input channels do not match weight");
  if (outpad < 0 || outpad >= stride) throw ContractError("conv_transpose2d: outpad must be in [0, stride)");
  int k = wt.h;
  int cout = wt.c;
  int ho = (xt.h - 1) * stride - 2 * pad + k + outpad;
  int wo = (xt.w - 1) * stride - 2 * pad + k + outpad;
  if (ho <= 0 || wo <= 0) throw ContractError("conv_transpose2d: output extent would be empty");

  size_t krows = size_t(cout) * k * k;
  size_t cols = size_t(xt.h) * xt.w;
  Tensor<T> out(xt.n, cout, ho, wo);
  std::vector<T> colmat(krows * cols);
  for (int in = 0; in < xt.n; ++in) {
    blas::gemm_tn(wt.data.data(), xt.sample(in), colmat.data(), int(krows), xt.c, int(cols), false);
    convdetail::col2im(colmat.data(), cout, ho, wo, k, stride, pad, out.sample(in));
    if (bias) {
      T* o = out.sample(in);
      size_t plane = size_t(ho) * wo;
      for (int c = 0; c < cout; ++c) {
        T b = bias->value.data[size_t(c)];
        for (size_t i = 0; i < plane; ++i) o[size_t(c) * plane + i] += b;
      }
    }
  }

  std::vector<Var<T>> parents = bias ? std::vector<Var<T>>{x, weight, bias} : std::vector<Var<T>>{x, weight};
  Var<T> xp = x, wp = weight, bp = bias;
  return addetail::make_op<T>(std::move(out), std::move(parents),
                              [xp, wp, bp, stride, pad, k, cout](Node<T>& node) {
    const Tensor<T>& xt = xp->value;
    int ho = node.value.h, wo = node.value.w;
    size_t krows = size_t(cout) * k * k;
    size_t cols = size_t(xt.h) * xt.w;
    std::vector<T> col(krows * cols);
    for (int in = 0; in < xt.n; ++in) {
      const T* dout = node.grad.sample(in);
      if (xp->requires_grad || wp->requires_grad)
        convdetail::im2col(dout, cout, ho, wo, k, stride, pad, col.data());
      if (xp->requires_grad) {
        Tensor<T>& gx = addetail::ensure_grad(*xp);
        blas::gemm_nn(wp->value.data.data(), col.data(), gx.sample(in), xt.c, int(krows), int(cols), true);
      }
      if (wp->requires_grad) {
        Tensor<T>& gw = addetail::ensure_grad(*wp);
        blas::gemm_nt(xt.sample(in), col.data(), gw.data.data(), xt.c, int(cols), int(krows), true);
      }
      if (bp && bp->requires_grad) {
        Tensor<T>& gb = addetail::ensure_grad(*bp);
        size_t plane = size_t(ho) * wo;
        for (int c = 0; c < cout; ++c) {
          double s = 0;
          for (size_t i = 0; i < plane; ++i) s += double(dout[size_t(c) * plane + i]);
          gb.data[size_t(c)] += T(s);
        }
      }
    }
  });
}

// ---------------------------------------------------------------------------
// Batch normalization
// ---------------------------------------------------------------------------

// Normalizes per channel over (N, H, W). In training mode batch statistics
// are used and the running buffers are updated in place; in evaluation mode
// the frozen running statistics are used, keeping forward a fixed function.
template <class T>
Var<T> batch_norm(const Var<T>& x, const Var<T>& gamma, const Var<T>& beta, Tensor<T>& running_mean,
                  Tensor<T>& running_var, bool training, T momentum = T(0.1), T eps = T(1e-5)) {
  const Tensor<T>& xt = x->value;
  int C = xt.c;
  size_t plane = size_t(xt.h) * xt.w;
  size_t m = size_t(xt.n) * plane;  // samples per channel

  std::vector<T> mean(size_t(C)), invstd(size_t(C));
  if (training) {
    for (int c = 0; c < C; ++c) {
      double sum = 0, sumsq = 0;
      for (int in = 0; in < xt.n; ++in) {
        const T* p = xt.sample(in) + size_t(c) * plane;
        for (size_t i = 0; i < plane; ++i) {
          sum += double(p[i]);
          sumsq += double(p[i]) * double(p[i]);
        }
      }
      double mu = sum / double(m);
      double var = sumsq / double(m) - mu * mu;
      if (var < 0) var = 0;
      mean[size_t(c)] = T(mu);
      invstd[size_t(c)] = T(1.0 / std::sqrt(var + double(eps)));
      running_mean.data[size_t(c)] = (T(1) - momentum) * running_mean.data[size_t(c)] + momentum * T(mu);
      running_var.data[size_t(c)] = (T(1) - momentum) * running_var.data[size_t(c)] + momentum * T(var);
    }
  } else {
    for (int c = 0; c < C; ++c) {
      mean[size_t(c)] = running_mean.data[size_t(c)];
      double var = double(running_var.data[size_t(c)]);
      if (var < 0) var = 0;
      invstd[size_t(c)] = T(1.0 / std::sqrt(var + double(eps)));
    }
  }

  auto xhat = std::make_shared<Tensor<T>>(xt.n, C, xt.h, xt.w);
  Tensor<T> out(xt.n, C, xt.h, xt.w);
  for (int in = 0; in < xt.n; ++in) {
    for (int c = 0; c < C; ++c) {
      const T* p = xt.sample(in) + size_t(c) * plane;
      T* xh = xhat->sample(in) + size_t(c) * plane;
      T* o = out.sample(in) + size_t(c) * plane;
      T mu = mean[size_t(c)], is = invstd[size_t(c)];
      T g = gamma->value.data[size_t(c)], b = beta->value.data[size_t(c)];
      for (size_t i = 0; i < plane; ++i) {
        xh[i] = (p[i] - mu) * is;
        o[i] = g * xh[i] + b;
      }
    }
  }

  Var<T> xp = x, gp = gamma, bp = beta;
  return addetail::make_op<T>(std::move(out), {x, gamma, beta},
                              [xp, gp, bp, xhat, invstd, plane, m, training](Node<T>& node) {
    int C = node.value.c;
    for (int c = 0; c < C; ++c) {
      // Per-channel reductions of dy and dy*xhat.
      double sum_dy = 0, sum_dy_xhat = 0;
      for (int in = 0; in < node.value.n; ++in) {
        const T* dy = node.grad.sample(in) + size_t(c) * plane;
        const T* xh = xhat->sample(in) + size_t(c) * plane;
        for (size_t i = 0; i < plane; ++i) {
          sum_dy += double(dy[i]);
          sum_dy_xhat += double(dy[i]) * double(xh[i]);
        }
      }
      if (gp->requires_grad) addetail::ensure_grad(*gp).data[size_t(c)] += T(sum_dy_xhat);
      if (bp->requires_grad) addetail::ensure_grad(*bp).data[size_t(c)] += T(sum_dy);
      if (!xp->requires_grad) continue;
      Tensor<T>& gx = addetail::ensure_grad(*xp);
      T g = gp->value.data[size_t(c)], is = invstd[size_t(c)];
      if (training) {
        T k1 = g * is / T(double(m));
        for (int in = 0; in < node.value.n; ++in) {
          const T* dy = node.grad.sample(in) + size_t(c) * plane;
          const T* xh = xhat->sample(in) + size_t(c) * plane;
          T* dst = gx.sample(in) + size_t(c) * plane;
          for (size_t i = 0; i < plane; ++i)
            dst[i] += k1 * (T(double(m)) * dy[i] - T(sum_dy) - xh[i] * T(sum_dy_xhat));
        }
      } else {
        T k = g * is;
        for (int in = 0; in < node.value.n; ++in) {
          const T* dy = node.grad.sample(in) + size_t(c) * plane;
          T* dst = gx.sample(in) + size_t(c) * plane;
          for (size_t i = 0; i < plane; ++i) dst[i] += k * dy[i];
        }
      }
    }
  });
}

// ---------------------------------------------------------------------------
// Pooling / linear / losses
// ---------------------------------------------------------------------------

template <class T>
Var<T> global_avg_pool(const Var<T>& x) {
  const Tensor<T>& xt = x->value;
  size_t plane = size_t(xt.h) * xt.w;
  Tensor<T> out(xt.n, xt.c, 1, 1);
  for (int in = 0; in < xt.n; ++in) {
    for (int c = 0; c < xt.c; ++c) {
      const T* p = xt.sample(in) + size_t(c) * plane;
      double s = 0;
      for (size_t i = 0; i < plane; ++i) s += double(p[i]);
      out.at(in, c, 0, 0) = T(s / double(plane));
    }
  }
  Var<T> xp = x;
  return addetail::make_op<T>(std::move(out), {x}, [xp, plane](Node<T>& node) {
    if (!xp->requires_grad) return;
    Tensor<T>& gx = addetail::ensure_grad(*xp);
    for (int in = 0; in < node.value.n; ++in) {
      for (int c = 0; c < node.value.c; ++c) {
        T g = node.grad.at(in, c, 0, 0) / T(double(plane));
        T* dst = gx.sample(in) + size_t(c) * plane;
        for (size_t i = 0; i < plane; ++i) dst[i] += g;
      }
    }
  });
}

// x: [N, C, 1, 1], weight: [K, C, 1, 1], bias: [1, K, 1, 1] -> [N, K, 1, 1].
template <class T>
Var<T> linear(const Var<T>& x, const Var<T>& weight, const Var<T>& bias) {
  const Tensor<T>& xt = x->value;
  const Tensor<T>& wt = weight->value;
  if (xt.h != 1 || xt.w != 1) throw ContractError("linear expects [N,C,1,1] input");
  if (xt.c != wt.c) throw ContractError("linear: feature count mismatch");
  int K = wt.n;
  Tensor<T> out(xt.n, K, 1, 1);
  blas::gemm_nt(xt.data.data(), wt.data.data(), out.data.data(), xt.n, xt.c, K, false);
  for (int in = 0; in < xt.n; ++in)
    for (int k = 0; k < K; ++k) out.at(in, k, 0, 0) += bias->value.data[size_t(k)];

  Var<T> xp = x, wp = weight, bp = bias;
  return addetail::make_op<T>(std::move(out), {x, weight, bias}, [xp, wp, bp, K](Node<T>& node) {
    const Tensor<T>& xt = xp->value;
    if (wp->requires_grad) {
      Tensor<T>& gw = addetail::ensure_grad(*wp);
      blas::gemm_tn(node.grad.data.data(), xt.data.data(), gw.data.data(), K, xt.n, xt.c, true);
    }
    if (xp->requires_grad) {
      Tensor<T>& gx = addetail::ensure_grad(*xp);
      blas::gemm_nn(node.grad.data.data(), wp->value.data.data(), gx.data.data(), xt.n, K, xt.c, true);
    }
    if (bp->requires_grad) {
      Tensor<T>& gb = addetail::ensure_grad(*bp);
      for (int in = 0; in < xt.n; ++in)
        for (int k = 0; k < K; ++k) gb.data[size_t(k)] += node.grad.at(in, k, 0, 0);
    }
  });
}

// mean(softplus(x)) or mean(softplus(-x)): the numerically safe building
// block for logistic GAN losses, computed from logits directly.
template <class T>
Var<T> mean_softplus(const Var<T>& x, bool negate) {
  const Tensor<T>& xt = x->value;
  double acc = 0;
  for (const T& v : xt.data) acc += double(addetail::stable_softplus(negate ? -v : v));
  Tensor<T> out = Tensor<T>::scalar(T(acc / double(xt.size())));
  Var<T> xp = x;
  return addetail::make_op<T>(std::move(out), {x}, [xp, negate](Node<T>& node) {
    if (!xp->requires_grad) return;
    Tensor<T>& gx = addetail::ensure_grad(*xp);
    T g = node.grad.data[0] / T(double(xp->value.size()));
    for (size_t i = 0; i < gx.size(); ++i) {
      T v = xp->value.data[i];
      T s = addetail::stable_sigmoid(negate ? -v : v);
      gx.data[i] += negate ? -g * s : g * s;
    }
  });
}

// mean(|a - b|); the gradient of |0| is taken as 0.
template <class T>
Var<T> l1_mean(const Var<T>& a, const Var<T>& b) {
  if (!a->value.same_shape(b->value)) throw ContractError("l1_mean: shapes differ");
  double acc = 0;
  for (size_t i = 0; i < a->value.size(); ++i) acc += std::abs(double(a->value.data[i]) - double(b->value.data[i]));
  Tensor<T> out = Tensor<T>::scalar(T(acc / double(a->value.size())));
  Var<T> ap = a, bp = b;
  return addetail::make_op<T>(std::move(out), {a, b}, [ap, bp](Node<T>& node) {
    T g = node.grad.data[0] / T(double(ap->value.size()));
    for (size_t i = 0; i < ap->value.size(); ++i) {
      T d = ap->value.data[i] - bp->value.data[i];
      T s = d > T(0) ? g : (d < T(0) ? -g : T(0));
      if (ap->requires_grad) addetail::ensure_grad(*ap).data[i] += s;
      if (bp->requires_grad) addetail::ensure_grad(*bp).data[i] -= s;
    }
  });
}

// Softmax cross-entropy over logits [N, K, 1, 1] against integer labels.
template <class T>
Var<T> cross_entropy_logits(const Var<T>& x, const std::vector<int>& labels) {
  const Tensor<T>& xt = x->value;
  if (xt.h != 1 || xt.w != 1) throw ContractError("cross_entropy_logits expects [N,K,1,1]");
  if (int(labels.size()) != xt.n) throw ContractError("cross_entropy_logits: label count mismatch");
  int K = xt.c;
  double acc = 0;
  for (int in = 0; in < xt.n; ++in) {
    if (labels[size_t(in)] < 0 || labels[size_t(in)] >= K) throw ContractError("label out of range");
    const T* row = xt.sample(in);
    double mx = double(row[0]);
    for (int k = 1; k < K; ++k) mx = std::max(mx, double(row[k]));
    double lse = 0;
    for (int k = 0; k < K; ++k) lse += std::exp(double(row[k]) - mx);
    lse = mx + std::log(lse);
    acc += lse - double(row[labels[size_t(in)]]);
  }
  Tensor<T> out = Tensor<T>::scalar(T(acc / double(xt.n)));
  Var<T> xp = x;
  return addetail::make_op<T>(std::move(out), {x}, [xp, labels, K](Node<T>& node) {
    if (!xp->requires_grad) return;
    Tensor<T>& gx = addetail::ensure_grad(*xp);
    T g = node.grad.data[0] / T(double(xp->value.n));
    for (int in = 0; in < xp->value.n; ++in) {
      const T* row = xp->value.sample(in);
      double mx = double(row[0]);
      for (int k = 1; k < K; ++k) mx = std::max(mx, double(row[k]));
      double denom = 0;
      for (int k = 0; k < K; ++k) denom += std::exp(double(row[k]) - mx);
      T* grow = gx.sample(in);
      for (int k = 0; k < K; ++k) {
        double soft = std::exp(double(row[k]) - mx) / denom;
        grow[k] += g * T(soft - (k == labels[size_t(in)] ? 1.0 : 0.0));
      }
    }
  });
}

}  // namespace stgan
