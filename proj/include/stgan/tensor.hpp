#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <array>
#include <cstdint>
#include <cstring>
#include <string>
#include <vector>

#include "stgan/errors.hpp"

namespace stgan {

// Dense NCHW tensor. The scalar type is templated so the same graph code can
// run in float for training and double for finite-difference verification.
template <class T>
struct Tensor {
  int n = 0, c = 0, h = 0, w = 0;
  std::vector<T> data;

  Tensor() = default;
  Tensor(int n_, int c_, int h_, int w_) : n(n_), c(c_), h(h_), w(w_), data(size_t(n_) * c_ * h_ * w_, T(0)) {}

  static Tensor zeros(int n, int c, int h, int w) { return Tensor(n, c, h, w); }
  static Tensor full(int n, int c, int h, int w, T v) {
    Tensor t(n, c, h, w);
    std::fill(t.data.begin(), t.data.end(), v);
    return t;
  }
  static Tensor scalar(T v) {
    Tensor t(1, 1, 1, 1);
    t.data[0] = v;
    return t;
  }

  size_t size() const { return data.size(); }
  bool same_shape(const Tensor& o) const { return n == o.n && c == o.c && h == o.h && w == o.w; }
  std::string shape_str() const {
    return "(" + std::to_string(n) + "," + std::to_string(c) + "," + std::to_string(h) + "," + std::to_string(w) + ")";
  }

  T& at(int in, int ic, int ih, int iw) {
    return data[((size_t(in) * c + ic) * h + ih) * w + iw];
  }
  T at(int in, int ic, int ih, int iw) const {
    return data[((size_t(in) * c + ic) * h + ih) * w + iw];
  }

  T* sample(int in) { return data.data() + size_t(in) * c * h * w; }
  const T* sample(int in) const { return data.data() + size_t(in) * c * h * w; }
};

namespace blas {

template <class T>
using MatMap = Eigen::Map<Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
template <class T>
using ConstMatMap = Eigen::Map<const Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

// C[m,n] = A[m,k] * B[k,n], optionally accumulating into C.
template <class T>
void gemm_nn(const T* A, const T* B, T* C, int m, int k, int n, bool accumulate) {
  ConstMatMap<T> a(A, m, k), b(B, k, n);
  MatMap<T> c(C, m, n);
  if (accumulate)
    c.noalias() += a * b;
  else
    c.noalias() = a * b;
}

// C[m,n] = A[m,k] * B[n,k]^T
template <class T>
void gemm_nt(const T* A, const T* B, T* C, int m, int k, int n, bool accumulate) {
  ConstMatMap<T> a(A, m, k), b(B, n, k);
  MatMap<T> c(C, m, n);
  if (accumulate)
    c.noalias() += a * b.transpose();
  else
    c.noalias() = a * b.transpose();
}

// C[m,n] = A[k,m]^T * B[k,n]
template <class T>
void gemm_tn(const T* A, const T* B, T* C, int m, int k, int n, bool accumulate) {
  ConstMatMap<T> a(A, k, m), b(B, k, n);
  MatMap<T> c(C, m, n);
  if (accumulate)
    c.noalias() += a.transpose() * b;
  else
    c.noalias() = a.transpose() * b;
}

}  // namespace blas

namespace convdetail {

inline int conv_out_extent(int in, int k, int stride, int pad) { return (in + 2 * pad - k) / stride + 1; }

// col has shape [C*kh*kw, Ho*Wo]; zero padding.
template <class T>
void im2col(const T* img, int C, int H, int W, int k, int stride, int pad, T* col) {
  int Ho = conv_out_extent(H, k, stride, pad);
  int Wo = conv_out_extent(W, k, stride, pad);
  size_t cols = size_t(Ho) * Wo;
  for (int c = 0; c < C; ++c) {
    for (int ki = 0; ki < k; ++ki) {
      for (int kj = 0; kj < k; ++kj) {
        T* row = col + (size_t(c) * k * k + size_t(ki) * k + kj) * cols;
        for (int oy = 0; oy < Ho; ++oy) {
          int iy = oy * stride - pad + ki;
          T* dst = row + size_t(oy) * Wo;
          if (iy < 0 || iy >= H) {
            std::fill(dst, dst + Wo, T(0));
            continue;
          }
          const T* src_row = img + (size_t(c) * H + iy) * W;
          for (int ox = 0; ox < Wo; ++ox) {
            int ix = ox * stride - pad + kj;
            dst[ox] = (ix >= 0 && ix < W) ? src_row[ix] : T(0);
          }
        }
      }
    }
  }
}

// Scatter-add inverse of im2col: img += unfold(col).
template <class T>
void col2im(const T* col, int C, int H, int W, int k, int stride, int pad, T* img) {
  int Ho = conv_out_extent(H, k, stride, pad);
  int Wo = conv_out_extent(W, k, stride, pad);
  size_t cols = size_t(Ho) * Wo;
  for (int c = 0; c < C; ++c) {
    for (int ki = 0; ki < k; ++ki) {
      for (int kj = 0; kj < k; ++kj) {
        const T* row = col + (size_t(c) * k * k + size_t(ki) * k + kj) * cols;
        for (int oy = 0; oy < Ho; ++oy) {
          int iy = oy * stride - pad + ki;
          if (iy < 0 || iy >= H) continue;
          T* dst_row = img + (size_t(c) * H + iy) * W;
          const T* src = row + size_t(oy) * Wo;
          for (int ox = 0; ox < Wo; ++ox) {
            int ix = ox * stride - pad + kj;
            if (ix >= 0 && ix < W) dst_row[ix] += src[ox];
          }
        }
      }
    }
  }
}

}  // namespace convdetail

}  // namespace stgan
