#pragma once

// Per-sample tensor kernels for the pose network, NCHW with a single image
// per call. Convolutions run as im2col plus a register-blocked GEMM the
// compiler can vectorize; `reference` holds the textbook loops they are
// tested against.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <limits>


namespace dockpilot::kernels {

template <typename T>
T dot(const T* a, const T* b, int n) {
  T acc[8] = {};
  int i = 0;
  for (; i + 8 <= n; i += 8)
    for (int k = 0; k < 8; ++k) acc[k] += a[i + k] * b[i + k];
  T sum = 0;
  for (; i < n; ++i) sum += a[i] * b[i];
  for (int k = 0; k < 8; ++k) sum += acc[k];
  return sum;
}

/// cols[(ci*9 + ky*3 + kx)][y*side + x] = in[ci][y+ky-1][x+kx-1], zero outside.
template <typename T>
void im2col3x3(const T* in, int c_in, int side, T* cols) {
  const int plane = side * side;
  for (int ci = 0; ci < c_in; ++ci) {
    const T* src = in + static_cast<std::ptrdiff_t>(ci) * plane;
    for (int ky = 0; ky < 3; ++ky)
      for (int kx = 0; kx < 3; ++kx) {
        T* dst = cols + static_cast<std::ptrdiff_t>(ci * 9 + ky * 3 + kx) * plane;
        const int x0 = std::max(0, 1 - kx), x1 = std::min(side, side + 1 - kx);
        for (int y = 0; y < side; ++y) {
          T* drow = dst + y * side;
          const int sy = y + ky - 1;
          if (sy < 0 || sy >= side) {
            std::fill(drow, drow + side, T(0));
            continue;
          }
          const T* srow = src + sy * side + (kx - 1);
          for (int x = 0; x < x0; ++x) drow[x] = T(0);
          for (int x = x0; x < x1; ++x) drow[x] = srow[x];
          for (int x = x1; x < side; ++x) drow[x] = T(0);
        }
      }
  }
}

/// Adjoint of im2col3x3: scatters column gradients back onto gin (accumulating).
template <typename T>
void col2im3x3_add(const T* cols, int c_in, int side, T* gin) {
  const int plane = side * side;
  for (int ci = 0; ci < c_in; ++ci) {
    T* dst = gin + static_cast<std::ptrdiff_t>(ci) * plane;
    for (int ky = 0; ky < 3; ++ky)
      for (int kx = 0; kx < 3; ++kx) {
        const T* src = cols + static_cast<std::ptrdiff_t>(ci * 9 + ky * 3 + kx) * plane;
        const int x0 = std::max(0, 1 - kx), x1 = std::min(side, side + 1 - kx);
        const int y0 = std::max(0, 1 - ky), y1 = std::min(side, side + 1 - ky);
        for (int y = y0; y < y1; ++y) {
          T* drow = dst + (y + ky - 1) * side + (kx - 1);
          const T* srow = src + y * side;
          for (int x = x0; x < x1; ++x) drow[x] += srow[x];
        }
      }
  }
}

/// Scratch floats conv3x3_forward/backward need for one call.
inline std::size_t conv3x3_scratch(int c_in, int side) {
  return static_cast<std::size_t>(c_in) * 9 * side * side;
}

/// 3x3 convolution, zero padding 1, stride 1. w is [c_out][c_in][3][3]; the
/// product runs as a blocked GEMM over an im2col buffer.
template <typename T>
void conv3x3_forward(const T* in, int c_in, int side, const T* w, const T* b, int c_out, T* out, T* scratch) {
  const int n = side * side, k_dim = c_in * 9;
  im2col3x3(in, c_in, side, scratch);
  int co = 0;
  for (; co + 4 <= c_out; co += 4) {
    T* __restrict o0 = out + static_cast<std::ptrdiff_t>(co) * n;
    T* __restrict o1 = o0 + n;
    T* __restrict o2 = o1 + n;
    T* __restrict o3 = o2 + n;
    std::fill(o0, o0 + n, b[co]);
    std::fill(o1, o1 + n, b[co + 1]);
    std::fill(o2, o2 + n, b[co + 2]);
    std::fill(o3, o3 + n, b[co + 3]);
    const T* w0 = w + static_cast<std::ptrdiff_t>(co) * k_dim;
    for (int k = 0; k < k_dim; ++k) {
      const T* __restrict c = scratch + static_cast<std::ptrdiff_t>(k) * n;
      const T a0 = w0[k], a1 = w0[k_dim + k], a2 = w0[2 * k_dim + k], a3 = w0[3 * k_dim + k];
      for (int i = 0; i < n; ++i) {
        const T v = c[i];
        o0[i] += a0 * v;
        o1[i] += a1 * v;
        o2[i] += a2 * v;
        o3[i] += a3 * v;
      }
    }
  }
  for (; co < c_out; ++co) {
    T* __restrict o = out + static_cast<std::ptrdiff_t>(co) * n;
    std::fill(o, o + n, b[co]);
    const T* wr = w + static_cast<std::ptrdiff_t>(co) * k_dim;
    for (int k = 0; k < k_dim; ++k) {
      const T* __restrict c = scratch + static_cast<std::ptrdiff_t>(k) * n;
      const T a = wr[k];
      for (int i = 0; i < n; ++i) o[i] += a * c[i];
    }
  }
}

/// Accumulates weight/bias gradients and, if gin is non-null, the input
/// gradient. scratch needs 2 * conv3x3_scratch(c_in, side) floats when gin is
/// set, one otherwise.
template <typename T>
void conv3x3_backward(const T* in, int c_in, int side, const T* w, int c_out, const T* gout, T* gw, T* gb, T* gin,
                      T* scratch) {
  const int n = side * side, k_dim = c_in * 9;
  T* cols = scratch;
  im2col3x3(in, c_in, side, cols);
  // weight gradient as a sum of outer products over pixels; transposing the
  // columns first turns every update into a contiguous axpy over k
  T* cols_t = scratch + static_cast<std::ptrdiff_t>(k_dim) * n;
  for (int k = 0; k < k_dim; ++k)
    for (int i = 0; i < n; ++i) cols_t[static_cast<std::ptrdiff_t>(i) * k_dim + k] = cols[static_cast<std::ptrdiff_t>(k) * n + i];
  for (int co = 0; co < c_out; ++co) {
    const T* g = gout + static_cast<std::ptrdiff_t>(co) * n;
    T bsum = 0;
    for (int i = 0; i < n; ++i) bsum += g[i];
    gb[co] += bsum;
  }
  int co = 0;
  for (; co + 4 <= c_out; co += 4) {
    const T* g0 = gout + static_cast<std::ptrdiff_t>(co) * n;
    T* __restrict w0 = gw + static_cast<std::ptrdiff_t>(co) * k_dim;
    T* __restrict w1 = w0 + k_dim;
    T* __restrict w2 = w1 + k_dim;
    T* __restrict w3 = w2 + k_dim;
    for (int i = 0; i < n; ++i) {
      const T* __restrict c = cols_t + static_cast<std::ptrdiff_t>(i) * k_dim;
      const T a0 = g0[i], a1 = g0[n + i], a2 = g0[2 * n + i], a3 = g0[3 * n + i];
      for (int k = 0; k < k_dim; ++k) {
        const T v = c[k];
        w0[k] += a0 * v;
        w1[k] += a1 * v;
        w2[k] += a2 * v;
        w3[k] += a3 * v;
      }
    }
  }
  for (; co < c_out; ++co) {
    const T* g0 = gout + static_cast<std::ptrdiff_t>(co) * n;
    T* __restrict w0 = gw + static_cast<std::ptrdiff_t>(co) * k_dim;
    for (int i = 0; i < n; ++i) {
      const T* __restrict c = cols_t + static_cast<std::ptrdiff_t>(i) * k_dim;
      const T a0 = g0[i];
      for (int k = 0; k < k_dim; ++k) w0[k] += a0 * c[k];
    }
  }
  if (!gin) return;
  T* gcols = scratch + static_cast<std::ptrdiff_t>(k_dim) * n;
  for (int k = 0; k < k_dim; ++k) {
    T* __restrict gc = gcols + static_cast<std::ptrdiff_t>(k) * n;
    std::fill(gc, gc + n, T(0));
    int co = 0;
    for (; co + 4 <= c_out; co += 4) {
      const T* __restrict g0 = gout + static_cast<std::ptrdiff_t>(co) * n;
      const T* __restrict g1 = g0 + n;
      const T* __restrict g2 = g1 + n;
      const T* __restrict g3 = g2 + n;
      const T a0 = w[static_cast<std::ptrdiff_t>(co) * k_dim + k], a1 = w[static_cast<std::ptrdiff_t>(co + 1) * k_dim + k],
              a2 = w[static_cast<std::ptrdiff_t>(co + 2) * k_dim + k], a3 = w[static_cast<std::ptrdiff_t>(co + 3) * k_dim + k];
      for (int i = 0; i < n; ++i) gc[i] += a0 * g0[i] + a1 * g1[i] + a2 * g2[i] + a3 * g3[i];
    }
    for (; co < c_out; ++co) {
      const T* __restrict g0 = gout + static_cast<std::ptrdiff_t>(co) * n;
      const T a0 = w[static_cast<std::ptrdiff_t>(co) * k_dim + k];
      for (int i = 0; i < n; ++i) gc[i] += a0 * g0[i];
    }
  }
  col2im3x3_add(gcols, c_in, side, gin);
}

template <typename T>
void relu_inplace(T* x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) x[i] = x[i] > T(0) ? x[i] : T(0);
}

/// 2x2 max pool, stride 2; idx holds the flat source index of each maximum
/// (first maximum wins on ties).
template <typename T>
void maxpool2_forward(const T* in, int channels, int side, T* out, std::int32_t* idx) {
  const int half = side / 2;
  for (int c = 0; c < channels; ++c) {
    const T* src = in + static_cast<std::ptrdiff_t>(c) * side * side;
    for (int y = 0; y < half; ++y) {
      for (int x = 0; x < half; ++x) {
        int best = (2 * y) * side + 2 * x;
        for (int dy = 0; dy < 2; ++dy)
          for (int dx = 0; dx < 2; ++dx) {
            const int i = (2 * y + dy) * side + 2 * x + dx;
            if (src[i] > src[best]) best = i;
          }
        const std::ptrdiff_t o = (static_cast<std::ptrdiff_t>(c) * half + y) * half + x;
        out[o] = src[best];
        idx[o] = static_cast<std::int32_t>(c * side * side + best);
      }
    }
  }
}

template <typename T>
void maxpool2_backward(const T* gout, const std::int32_t* idx, std::size_t out_count, T* gin) {
  for (std::size_t i = 0; i < out_count; ++i) gin[idx[i]] += gout[i];
}

/// y = W x + b, W is [n_out][n_in].
template <typename T>
void dense_forward(const T* w, const T* b, const T* x, int n_in, int n_out, T* y) {
  for (int o = 0; o < n_out; ++o) y[o] = b[o] + dot(w + static_cast<std::ptrdiff_t>(o) * n_in, x, n_in);
}

/// gW += gy x^T, gb += gy, gx = W^T gy (gx optional).
template <typename T>
void dense_backward(const T* w, const T* x, const T* gy, int n_in, int n_out, T* gw, T* gb, T* gx) {
  if (gx) std::fill(gx, gx + n_in, T(0));
  for (int o = 0; o < n_out; ++o) {
    const T g = gy[o];
    gb[o] += g;
    if (g == T(0)) continue;
    T* gwrow = gw + static_cast<std::ptrdiff_t>(o) * n_in;
    const T* wrow = w + static_cast<std::ptrdiff_t>(o) * n_in;
    for (int i = 0; i < n_in; ++i) gwrow[i] += g * x[i];
    if (gx)
      for (int i = 0; i < n_in; ++i) gx[i] += wrow[i] * g;
  }
}

namespace reference {

template <typename T>
void conv3x3_forward(const T* in, int c_in, int side, const T* w, const T* b, int c_out, T* out) {
  for (int co = 0; co < c_out; ++co)
    for (int y = 0; y < side; ++y)
      for (int x = 0; x < side; ++x) {
        T acc = b[co];
        for (int ci = 0; ci < c_in; ++ci)
          for (int ky = 0; ky < 3; ++ky)
            for (int kx = 0; kx < 3; ++kx) {
              const int sy = y + ky - 1, sx = x + kx - 1;
              if (sy < 0 || sy >= side || sx < 0 || sx >= side) continue;
              acc += w[((co * c_in + ci) * 3 + ky) * 3 + kx] * in[(ci * side + sy) * side + sx];
            }
        out[(co * side + y) * side + x] = acc;
      }
}

template <typename T>
void conv3x3_backward(const T* in, int c_in, int side, const T* w, int c_out, const T* gout, T* gw, T* gb, T* gin) {
  for (int co = 0; co < c_out; ++co)
    for (int y = 0; y < side; ++y)
      for (int x = 0; x < side; ++x) {
        const T g = gout[(co * side + y) * side + x];
        gb[co] += g;
        for (int ci = 0; ci < c_in; ++ci)
          for (int ky = 0; ky < 3; ++ky)
            for (int kx = 0; kx < 3; ++kx) {
              const int sy = y + ky - 1, sx = x + kx - 1;
              if (sy < 0 || sy >= side || sx < 0 || sx >= side) continue;
              const int wi = ((co * c_in + ci) * 3 + ky) * 3 + kx, ii = (ci * side + sy) * side + sx;
              gw[wi] += g * in[ii];
              if (gin) gin[ii] += w[wi] * g;
            }
      }
}

template <typename T>
void maxpool2_forward(const T* in, int channels, int side, T* out, std::int32_t* idx) {
  const int half = side / 2;
  for (int c = 0; c < channels; ++c)
    for (int y = 0; y < half; ++y)
      for (int x = 0; x < half; ++x) {
        T best = -std::numeric_limits<T>::infinity();
        int arg = -1;
        for (int dy = 0; dy < 2; ++dy)
          for (int dx = 0; dx < 2; ++dx) {
            const int i = (c * side + 2 * y + dy) * side + 2 * x + dx;
            if (arg < 0 || in[i] > best) {
              best = in[i];
              arg = i;
            }
          }
        out[(c * half + y) * half + x] = best;
        idx[(c * half + y) * half + x] = arg;
      }
}

template <typename T>
void dense_forward(const T* w, const T* b, const T* x, int n_in, int n_out, T* y) {
  for (int o = 0; o < n_out; ++o) {
    T acc = b[o];
    for (int i = 0; i < n_in; ++i) acc += w[o * n_in + i] * x[i];
    y[o] = acc;
  }
}

template <typename T>
void dense_backward(const T* w, const T* x, const T* gy, int n_in, int n_out, T* gw, T* gb, T* gx) {
  if (gx)
    for (int i = 0; i < n_in; ++i) gx[i] = 0;
  for (int o = 0; o < n_out; ++o) {
    gb[o] += gy[o];
    for (int i = 0; i < n_in; ++i) {
      gw[o * n_in + i] += gy[o] * x[i];
      if (gx) gx[i] += w[o * n_in + i] * gy[o];
    }
  }
}

}  // namespace reference
}  // namespace dockpilot::kernels
