#include "vulnformer/numerics/ops.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>

namespace vulnformer::numerics {

namespace {

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MapMat = Eigen::Map<RowMat<T>>;
template <typename T>
using ConstMapMat = Eigen::Map<const RowMat<T>>;

template <typename T>
using BackwardFn = std::function<void(TensorNode<T>&)>;

// Builds an op result, attaching `fn` only if some input needs a gradient.
template <typename T>
BasicTensor<T> record(Shape shape, std::vector<T> values, std::initializer_list<const BasicTensor<T>*> inputs,
                      BackwardFn<T> fn) {
  auto node = std::make_shared<TensorNode<T>>();
  node->shape = std::move(shape);
  node->value = std::move(values);
  if (grad_enabled()) {
    bool needed = std::any_of(inputs.begin(), inputs.end(), [](const BasicTensor<T>* t) { return t->requires_grad(); });
    if (needed) {
      node->requires_grad = true;
      for (const BasicTensor<T>* t : inputs) node->parents.push_back(t->handle());
      node->backward = std::move(fn);
    }
  }
  return BasicTensor<T>(std::move(node));
}

// Grad buffer of parent i, or nullptr if it takes no gradient.
template <typename T>
T* parent_grad(TensorNode<T>& self, std::size_t i) {
  TensorNode<T>& parent = *self.parents[i];
  if (!parent.requires_grad) return nullptr;
  parent.ensure_grad();
  return parent.grad.data();
}

template <typename T>
const std::vector<T>& parent_value(TensorNode<T>& self, std::size_t i) {
  return self.parents[i]->value;
}

[[noreturn]] void mismatch(const char* op, const Shape& a, const Shape& b) {
  throw Error(ErrorKind::kShapeMismatch, std::string(op) + ": " + shape_string(a) + " vs " + shape_string(b));
}

template <typename T>
void require_matrix(const char* op, const BasicTensor<T>& a) {
  if (a.rank() != 2) throw Error(ErrorKind::kShapeMismatch, std::string(op) + ": expected a matrix, got " + shape_string(a.shape()));
}

template <typename T>
BasicTensor<T> unary(const BasicTensor<T>& a, T (*f)(T), T (*df)(T x, T y)) {
  std::vector<T> out(a.size());
  auto in = a.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(in[i]);
  return record<T>(a.shape(), std::move(out), {&a}, [df](TensorNode<T>& self) {
    T* da = parent_grad(self, 0);
    if (!da) return;
    const auto& x = parent_value(self, 0);
    for (std::size_t i = 0; i < self.value.size(); ++i) da[i] += self.grad[i] * df(x[i], self.value[i]);
  });
}

// Shared backward for softmax and softmax-one: dx = y * (dy - <dy, y>).
template <typename T>
void softmax_backward(TensorNode<T>& self) {
  T* dx = parent_grad(self, 0);
  if (!dx) return;
  std::size_t rows = self.shape[0], cols = self.shape[1];
  for (std::size_t r = 0; r < rows; ++r) {
    const T* y = &self.value[r * cols];
    const T* dy = &self.grad[r * cols];
    T dot = 0;
    for (std::size_t c = 0; c < cols; ++c) dot += dy[c] * y[c];
    for (std::size_t c = 0; c < cols; ++c) dx[r * cols + c] += y[c] * (dy[c] - dot);
  }
}

}  // namespace

RowSegments single_segment(std::size_t rows) { return {0, rows}; }

void check_segments(std::span<const std::size_t> segments, std::size_t rows) {
  bool ok = segments.size() >= 2 && segments.front() == 0 && segments.back() == rows &&
            std::is_sorted(segments.begin(), segments.end());
  if (!ok) throw Error(ErrorKind::kShapeMismatch, "row segments do not cover " + std::to_string(rows) + " rows");
}

template <typename T>
BasicTensor<T> matmul(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  require_matrix("matmul", a);
  require_matrix("matmul", b);
  if (a.cols() != b.rows()) mismatch("matmul", a.shape(), b.shape());
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  std::vector<T> out(m * n);
  MapMat<T>(out.data(), m, n).noalias() = ConstMapMat<T>(a.values().data(), m, k) * ConstMapMat<T>(b.values().data(), k, n);
  return record<T>({m, n}, std::move(out), {&a, &b}, [m, k, n](TensorNode<T>& self) {
    ConstMapMat<T> dc(self.grad.data(), m, n);
    if (T* da = parent_grad(self, 0)) {
      MapMat<T>(da, m, k).noalias() += dc * ConstMapMat<T>(parent_value(self, 1).data(), k, n).transpose();
    }
    if (T* db = parent_grad(self, 1)) {
      MapMat<T>(db, k, n).noalias() += ConstMapMat<T>(parent_value(self, 0).data(), m, k).transpose() * dc;
    }
  });
}

template <typename T>
BasicTensor<T> transpose(const BasicTensor<T>& a) {
  require_matrix("transpose", a);
  const std::size_t m = a.rows(), n = a.cols();
  std::vector<T> out(m * n);
  MapMat<T>(out.data(), n, m) = ConstMapMat<T>(a.values().data(), m, n).transpose();
  return record<T>({n, m}, std::move(out), {&a}, [m, n](TensorNode<T>& self) {
    if (T* da = parent_grad(self, 0)) MapMat<T>(da, m, n) += ConstMapMat<T>(self.grad.data(), n, m).transpose();
  });
}

template <typename T>
BasicTensor<T> add(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  if (a.shape() != b.shape()) mismatch("add", a.shape(), b.shape());
  std::vector<T> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.values()[i] + b.values()[i];
  return record<T>(a.shape(), std::move(out), {&a, &b}, [](TensorNode<T>& self) {
    for (std::size_t p = 0; p < 2; ++p) {
      if (T* d = parent_grad(self, p)) {
        for (std::size_t i = 0; i < self.grad.size(); ++i) d[i] += self.grad[i];
      }
    }
  });
}

template <typename T>
BasicTensor<T> add_bias(const BasicTensor<T>& a, const BasicTensor<T>& bias) {
  require_matrix("add_bias", a);
  if (bias.size() != a.cols()) mismatch("add_bias", a.shape(), bias.shape());
  const std::size_t m = a.rows(), n = a.cols();
  std::vector<T> out(a.values().begin(), a.values().end());
  for (std::size_t r = 0; r < m; ++r)
    for (std::size_t c = 0; c < n; ++c) out[r * n + c] += bias.values()[c];
  return record<T>(a.shape(), std::move(out), {&a, &bias}, [m, n](TensorNode<T>& self) {
    if (T* da = parent_grad(self, 0)) {
      for (std::size_t i = 0; i < m * n; ++i) da[i] += self.grad[i];
    }
    if (T* db = parent_grad(self, 1)) {
      for (std::size_t r = 0; r < m; ++r)
        for (std::size_t c = 0; c < n; ++c) db[c] += self.grad[r * n + c];
    }
  });
}

template <typename T>
BasicTensor<T> mul(const BasicTensor<T>& a, const BasicTensor<T>& b) {
  if (a.shape() != b.shape()) mismatch("mul", a.shape(), b.shape());
  std::vector<T> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.values()[i] * b.values()[i];
  return record<T>(a.shape(), std::move(out), {&a, &b}, [](TensorNode<T>& self) {
    const auto& av = parent_value(self, 0);
    const auto& bv = parent_value(self, 1);
    if (T* da = parent_grad(self, 0)) {
      for (std::size_t i = 0; i < self.grad.size(); ++i) da[i] += self.grad[i] * bv[i];
    }
    if (T* db = parent_grad(self, 1)) {
      for (std::size_t i = 0; i < self.grad.size(); ++i) db[i] += self.grad[i] * av[i];
    }
  });
}

template <typename T>
BasicTensor<T> scale(const BasicTensor<T>& a, T factor) {
  std::vector<T> out(a.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.values()[i] * factor;
  return record<T>(a.shape(), std::move(out), {&a}, [factor](TensorNode<T>& self) {
    if (T* da = parent_grad(self, 0)) {
      for (std::size_t i = 0; i < self.grad.size(); ++i) da[i] += self.grad[i] * factor;
    }
  });
}

template <typename T>
BasicTensor<T> relu(const BasicTensor<T>& a) {
  return unary<T>(
      a, [](T x) { return x > T(0) ? x : T(0); }, [](T x, T) { return x > T(0) ? T(1) : T(0); });
}

template <typename T>
BasicTensor<T> sigmoid(const BasicTensor<T>& a) {
  return unary<T>(
      a,
      [](T x) {
        if (x >= T(0)) return T(1) / (T(1) + std::exp(-x));
        T e = std::exp(x);
        return e / (T(1) + e);
      },
      [](T, T y) { return y * (T(1) - y); });
}

template <typename T>
BasicTensor<T> softmax_rows(const BasicTensor<T>& a) {
  require_matrix("softmax", a);
  const std::size_t rows = a.rows(), cols = a.cols();
  std::vector<T> out(a.size());
  for (std::size_t r = 0; r < rows; ++r) {
    const T* x = &a.values()[r * cols];
    T* y = &out[r * cols];
    T peak = *std::max_element(x, x + cols);
    T total = 0;
    for (std::size_t c = 0; c < cols; ++c) total += (y[c] = std::exp(x[c] - peak));
    for (std::size_t c = 0; c < cols; ++c) y[c] /= total;
  }
  return record<T>(a.shape(), std::move(out), {&a}, softmax_backward<T>);
}

template <typename T>
BasicTensor<T> softmax_one_rows(const BasicTensor<T>& a) {
  require_matrix("softmax_one", a);
  const std::size_t rows = a.rows(), cols = a.cols();
  std::vector<T> out(a.size());
  for (std::size_t r = 0; r < rows; ++r) {
    const T* x = &a.values()[r * cols];
    T* y = &out[r * cols];
    // the implicit extra logit is 0
    T peak = std::max(T(0), *std::max_element(x, x + cols));
    T total = std::exp(-peak);
    for (std::size_t c = 0; c < cols; ++c) total += (y[c] = std::exp(x[c] - peak));
    for (std::size_t c = 0; c < cols; ++c) y[c] /= total;
  }
  return record<T>(a.shape(), std::move(out), {&a}, softmax_backward<T>);
}

template <typename T>
BasicTensor<T> layer_norm(const BasicTensor<T>& x, const BasicTensor<T>& gamma, const BasicTensor<T>& beta, T eps) {
  require_matrix("layer_norm", x);
  const std::size_t rows = x.rows(), cols = x.cols();
  if (gamma.size() != cols) mismatch("layer_norm", x.shape(), gamma.shape());
  if (beta.size() != cols) mismatch("layer_norm", x.shape(), beta.shape());
  std::vector<T> xhat(x.size()), inv_std(rows), out(x.size());
  for (std::size_t r = 0; r < rows; ++r) {
    const T* in = &x.values()[r * cols];
    T mu = 0;
    for (std::size_t c = 0; c < cols; ++c) mu += in[c];
    mu /= T(cols);
    T var = 0;
    for (std::size_t c = 0; c < cols; ++c) var += (in[c] - mu) * (in[c] - mu);
    var /= T(cols);
    inv_std[r] = T(1) / std::sqrt(var + eps);
    for (std::size_t c = 0; c < cols; ++c) {
      xhat[r * cols + c] = (in[c] - mu) * inv_std[r];
      out[r * cols + c] = gamma.values()[c] * xhat[r * cols + c] + beta.values()[c];
    }
  }
  return record<T>(x.shape(), std::move(out), {&x, &gamma, &beta},
                   [rows, cols, xhat = std::move(xhat), inv_std = std::move(inv_std)](TensorNode<T>& self) {
                     const auto& g = parent_value(self, 1);
                     T* dx = parent_grad(self, 0);
                     T* dg = parent_grad(self, 1);
                     T* db = parent_grad(self, 2);
                     std::vector<T> dxhat(cols);
                     for (std::size_t r = 0; r < rows; ++r) {
                       const T* dy = &self.grad[r * cols];
                       const T* xh = &xhat[r * cols];
                       if (dg || db) {
                         for (std::size_t c = 0; c < cols; ++c) {
                           if (dg) dg[c] += dy[c] * xh[c];
                           if (db) db[c] += dy[c];
                         }
                       }
                       if (!dx) continue;
                       T mean_d = 0, mean_dx = 0;
                       for (std::size_t c = 0; c < cols; ++c) {
                         dxhat[c] = dy[c] * g[c];
                         mean_d += dxhat[c];
                         mean_dx += dxhat[c] * xh[c];
                       }
                       mean_d /= T(cols);
                       mean_dx /= T(cols);
                       for (std::size_t c = 0; c < cols; ++c)
                         dx[r * cols + c] += inv_std[r] * (dxhat[c] - mean_d - xh[c] * mean_dx);
                     }
                   });
}

template <typename T>
BasicTensor<T> batch_norm(const BasicTensor<T>& x, const BasicTensor<T>& gamma, const BasicTensor<T>& beta,
                          BasicTensor<T>& running_mean, BasicTensor<T>& running_var, const BatchNormState& state) {
  require_matrix("batch_norm", x);
  const std::size_t rows = x.rows(), cols = x.cols();
  for (const BasicTensor<T>* p : std::initializer_list<const BasicTensor<T>*>{&gamma, &beta, &running_mean, &running_var}) {
    if (p->size() != cols) mismatch("batch_norm", x.shape(), p->shape());
  }
  const T eps = T(state.eps);
  std::vector<T> mu(cols, 0), inv_std(cols), xhat(x.size()), out(x.size());
  const bool batch_stats = state.training && rows > 0;
  if (batch_stats) {
    std::vector<T> var(cols, 0);
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < cols; ++c) mu[c] += x.values()[r * cols + c];
    for (std::size_t c = 0; c < cols; ++c) mu[c] /= T(rows);
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < cols; ++c) {
        T d = x.values()[r * cols + c] - mu[c];
        var[c] += d * d;
      }
    const T m = T(state.momentum);
    auto rm = running_mean.mutable_values();
    auto rv = running_var.mutable_values();
    for (std::size_t c = 0; c < cols; ++c) {
      T biased = var[c] / T(rows);
      T unbiased = rows > 1 ? var[c] / T(rows - 1) : biased;
      inv_std[c] = T(1) / std::sqrt(biased + eps);
      rm[c] = (T(1) - m) * rm[c] + m * mu[c];
      rv[c] = (T(1) - m) * rv[c] + m * unbiased;
    }
  } else {
    for (std::size_t c = 0; c < cols; ++c) {
      mu[c] = running_mean.values()[c];
      inv_std[c] = T(1) / std::sqrt(running_var.values()[c] + eps);
    }
  }
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) {
      std::size_t i = r * cols + c;
      xhat[i] = (x.values()[i] - mu[c]) * inv_std[c];
      out[i] = gamma.values()[c] * xhat[i] + beta.values()[c];
    }
  return record<T>(
      x.shape(), std::move(out), {&x, &gamma, &beta},
      [rows, cols, batch_stats, xhat = std::move(xhat), inv_std = std::move(inv_std)](TensorNode<T>& self) {
        const auto& g = parent_value(self, 1);
        T* dx = parent_grad(self, 0);
        T* dg = parent_grad(self, 1);
        T* db = parent_grad(self, 2);
        std::vector<T> sum_d(cols, 0), sum_dx(cols, 0);
        for (std::size_t r = 0; r < rows; ++r)
          for (std::size_t c = 0; c < cols; ++c) {
            std::size_t i = r * cols + c;
            T dy = self.grad[i];
            if (dg) dg[c] += dy * xhat[i];
            if (db) db[c] += dy;
            sum_d[c] += dy * g[c];
            sum_dx[c] += dy * g[c] * xhat[i];
          }
        if (!dx) return;
        for (std::size_t r = 0; r < rows; ++r)
          for (std::size_t c = 0; c < cols; ++c) {
            std::size_t i = r * cols + c;
            T dxhat = self.grad[i] * g[c];
            if (batch_stats) {
              dx[i] += inv_std[c] * (dxhat - sum_d[c] / T(rows) - xhat[i] * sum_dx[c] / T(rows));
            } else {
              dx[i] += inv_std[c] * dxhat;
            }
          }
      });
}

template <typename T>
BasicTensor<T> im2col(const BasicTensor<T>& x, std::size_t kernel, std::span<const std::size_t> segments) {
  require_matrix("im2col", x);
  if (kernel == 0 || kernel % 2 == 0) {
    throw Error(ErrorKind::kInvalidConfig, "conv kernel size must be odd, got " + std::to_string(kernel));
  }
  check_segments(segments, x.rows());
  const std::size_t rows = x.rows(), ch = x.cols(), half = kernel / 2;
  // source row for (t, j), or -1 for padding
  std::vector<std::ptrdiff_t> source(rows * kernel, -1);
  for (std::size_t s = 0; s + 1 < segments.size(); ++s) {
    auto lo = static_cast<std::ptrdiff_t>(segments[s]), hi = static_cast<std::ptrdiff_t>(segments[s + 1]);
    for (std::ptrdiff_t t = lo; t < hi; ++t)
      for (std::size_t j = 0; j < kernel; ++j) {
        std::ptrdiff_t src = t + static_cast<std::ptrdiff_t>(j) - static_cast<std::ptrdiff_t>(half);
        if (src >= lo && src < hi) source[static_cast<std::size_t>(t) * kernel + j] = src;
      }
  }
  std::vector<T> out(rows * kernel * ch, T(0));
  for (std::size_t i = 0; i < source.size(); ++i) {
    if (source[i] < 0) continue;
    std::copy_n(&x.values()[static_cast<std::size_t>(source[i]) * ch], ch, &out[i * ch]);
  }
  return record<T>({rows, kernel * ch}, std::move(out), {&x}, [ch, source = std::move(source)](TensorNode<T>& self) {
    T* dx = parent_grad(self, 0);
    if (!dx) return;
    for (std::size_t i = 0; i < source.size(); ++i) {
      if (source[i] < 0) continue;
      T* dst = dx + static_cast<std::size_t>(source[i]) * ch;
      const T* g = &self.grad[i * ch];
      for (std::size_t c = 0; c < ch; ++c) dst[c] += g[c];
    }
  });
}

template <typename T>
BasicTensor<T> concat_cols(std::span<const BasicTensor<T>> parts) {
  if (parts.empty()) throw Error(ErrorKind::kShapeMismatch, "concat_cols: no inputs");
  const std::size_t rows = parts[0].rows();
  std::vector<std::size_t> offsets{0};
  for (const auto& p : parts) {
    require_matrix("concat_cols", p);
    if (p.rows() != rows) mismatch("concat_cols", parts[0].shape(), p.shape());
    offsets.push_back(offsets.back() + p.cols());
  }
  const std::size_t total = offsets.back();
  std::vector<T> out(rows * total);
  for (std::size_t k = 0; k < parts.size(); ++k) {
    std::size_t w = parts[k].cols();
    for (std::size_t r = 0; r < rows; ++r) std::copy_n(&parts[k].values()[r * w], w, &out[r * total + offsets[k]]);
  }
  auto node = std::make_shared<TensorNode<T>>();
  node->shape = {rows, total};
  node->value = std::move(out);
  bool needed = grad_enabled() && std::any_of(parts.begin(), parts.end(), [](const auto& p) { return p.requires_grad(); });
  if (needed) {
    node->requires_grad = true;
    for (const auto& p : parts) node->parents.push_back(p.handle());
    node->backward = [rows, total, offsets](TensorNode<T>& self) {
      for (std::size_t k = 0; k + 1 < offsets.size(); ++k) {
        T* d = parent_grad(self, k);
        if (!d) continue;
        std::size_t w = offsets[k + 1] - offsets[k];
        for (std::size_t r = 0; r < rows; ++r)
          for (std::size_t c = 0; c < w; ++c) d[r * w + c] += self.grad[r * total + offsets[k] + c];
      }
    };
  }
  return BasicTensor<T>(std::move(node));
}

template <typename T>
BasicTensor<T> concat_rows(std::span<const BasicTensor<T>> parts) {
  if (parts.empty()) throw Error(ErrorKind::kShapeMismatch, "concat_rows: no inputs");
  const std::size_t cols = parts[0].cols();
  std::vector<std::size_t> offsets{0};
  for (const auto& p : parts) {
    require_matrix("concat_rows", p);
    if (p.cols() != cols) mismatch("concat_rows", parts[0].shape(), p.shape());
    offsets.push_back(offsets.back() + p.size());
  }
  std::vector<T> out;
  out.reserve(offsets.back());
  for (const auto& p : parts) out.insert(out.end(), p.values().begin(), p.values().end());
  auto node = std::make_shared<TensorNode<T>>();
  node->shape = {offsets.back() / std::max<std::size_t>(cols, 1), cols};
  node->value = std::move(out);
  bool needed = grad_enabled() && std::any_of(parts.begin(), parts.end(), [](const auto& p) { return p.requires_grad(); });
  if (needed) {
    node->requires_grad = true;
    for (const auto& p : parts) node->parents.push_back(p.handle());
    node->backward = [offsets](TensorNode<T>& self) {
      for (std::size_t k = 0; k + 1 < offsets.size(); ++k) {
        T* d = parent_grad(self, k);
        if (!d) continue;
        for (std::size_t i = offsets[k]; i < offsets[k + 1]; ++i) d[i - offsets[k]] += self.grad[i];
      }
    };
  }
  return BasicTensor<T>(std::move(node));
}

template <typename T>
BasicTensor<T> slice_cols(const BasicTensor<T>& a, std::size_t begin, std::size_t end) {
  require_matrix("slice_cols", a);
  if (begin > end || end > a.cols()) {
    throw Error(ErrorKind::kShapeMismatch, "slice_cols [" + std::to_string(begin) + ", " + std::to_string(end) +
                                               ") out of " + shape_string(a.shape()));
  }
  const std::size_t rows = a.rows(), cols = a.cols(), w = end - begin;
  std::vector<T> out(rows * w);
  for (std::size_t r = 0; r < rows; ++r) std::copy_n(&a.values()[r * cols + begin], w, &out[r * w]);
  return record<T>({rows, w}, std::move(out), {&a}, [rows, cols, begin, w](TensorNode<T>& self) {
    T* d = parent_grad(self, 0);
    if (!d) return;
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < w; ++c) d[r * cols + begin + c] += self.grad[r * w + c];
  });
}

template <typename T>
BasicTensor<T> slice_rows(const BasicTensor<T>& a, std::size_t begin, std::size_t end) {
  require_matrix("slice_rows", a);
  if (begin > end || end > a.rows()) {
    throw Error(ErrorKind::kShapeMismatch, "slice_rows [" + std::to_string(begin) + ", " + std::to_string(end) +
                                               ") out of " + shape_string(a.shape()));
  }
  const std::size_t cols = a.cols();
  std::vector<T> out(a.values().begin() + begin * cols, a.values().begin() + end * cols);
  return record<T>({end - begin, cols}, std::move(out), {&a}, [begin, cols](TensorNode<T>& self) {
    T* d = parent_grad(self, 0);
    if (!d) return;
    for (std::size_t i = 0; i < self.grad.size(); ++i) d[begin * cols + i] += self.grad[i];
  });
}

template <typename T>
BasicTensor<T> mean_pool_segments(const BasicTensor<T>& x, std::span<const std::size_t> segments) {
  require_matrix("mean_pool", x);
  check_segments(segments, x.rows());
  const std::size_t n = segments.size() - 1, cols = x.cols();
  std::vector<std::size_t> bounds(segments.begin(), segments.end());
  std::vector<T> out(n * cols, T(0));
  for (std::size_t s = 0; s < n; ++s) {
    std::size_t len = bounds[s + 1] - bounds[s];
    if (len == 0) continue;
    for (std::size_t r = bounds[s]; r < bounds[s + 1]; ++r)
      for (std::size_t c = 0; c < cols; ++c) out[s * cols + c] += x.values()[r * cols + c];
    for (std::size_t c = 0; c < cols; ++c) out[s * cols + c] /= T(len);
  }
  return record<T>({n, cols}, std::move(out), {&x}, [n, cols, bounds = std::move(bounds)](TensorNode<T>& self) {
    T* d = parent_grad(self, 0);
    if (!d) return;
    for (std::size_t s = 0; s < n; ++s) {
      std::size_t len = bounds[s + 1] - bounds[s];
      for (std::size_t r = bounds[s]; r < bounds[s + 1]; ++r)
        for (std::size_t c = 0; c < cols; ++c) d[r * cols + c] += self.grad[s * cols + c] / T(len);
    }
  });
}

template <typename T>
BasicTensor<T> sum(const BasicTensor<T>& a) {
  T total = 0;
  for (T v : a.values()) total += v;
  return record<T>({1}, {total}, {&a}, [](TensorNode<T>& self) {
    T* d = parent_grad(self, 0);
    if (!d) return;
    std::size_t n = self.parents[0]->value.size();
    for (std::size_t i = 0; i < n; ++i) d[i] += self.grad[0];
  });
}

template <typename T>
BasicTensor<T> mean(const BasicTensor<T>& a) {
  if (a.size() == 0) throw Error(ErrorKind::kEmptyInput, "mean of an empty tensor");
  return scale(sum(a), T(1) / T(a.size()));
}

template <typename T>
BasicTensor<T> embedding_lookup(const BasicTensor<T>& table, std::span<const std::int32_t> ids, std::int32_t pad_id) {
  require_matrix("embedding_lookup", table);
  const std::size_t vocab = table.rows(), dim = table.cols();
  std::vector<std::int32_t> kept(ids.begin(), ids.end());
  std::vector<T> out(kept.size() * dim, T(0));
  for (std::size_t i = 0; i < kept.size(); ++i) {
    std::int32_t id = kept[i];
    if (id < 0 || static_cast<std::size_t>(id) >= vocab) {
      throw Error(ErrorKind::kIndexOutOfVocabulary,
                  "token id " + std::to_string(id) + " outside vocabulary of " + std::to_string(vocab));
    }
    if (id == pad_id) continue;
    std::copy_n(&table.values()[static_cast<std::size_t>(id) * dim], dim, &out[i * dim]);
  }
  const std::size_t count = kept.size();
  return record<T>({count, dim}, std::move(out), {&table},
                   [dim, pad_id, kept = std::move(kept)](TensorNode<T>& self) {
                     T* d = parent_grad(self, 0);
                     if (!d) return;
                     for (std::size_t i = 0; i < kept.size(); ++i) {
                       if (kept[i] == pad_id) continue;
                       T* row = d + static_cast<std::size_t>(kept[i]) * dim;
                       for (std::size_t c = 0; c < dim; ++c) row[c] += self.grad[i * dim + c];
                     }
                   });
}

template <typename T>
BasicTensor<T> dropout(const BasicTensor<T>& a, double p, std::mt19937_64& rng) {
  if (p <= 0.0) return a;
  if (p >= 1.0) throw Error(ErrorKind::kInvalidConfig, "dropout rate must be below 1");
  std::bernoulli_distribution keep(1.0 - p);
  const T factor = T(1.0 / (1.0 - p));
  std::vector<T> mask(a.size());
  for (T& m : mask) m = keep(rng) ? factor : T(0);
  return mul(a, BasicTensor<T>::from_values(a.shape(), std::move(mask)));
}

template <typename T>
BasicTensor<T> bce_with_logits(const BasicTensor<T>& logits, std::span<const T> targets) {
  if (logits.size() != targets.size()) {
    throw Error(ErrorKind::kShapeMismatch, "bce: " + std::to_string(logits.size()) + " logits vs " +
                                               std::to_string(targets.size()) + " targets");
  }
  if (targets.empty()) throw Error(ErrorKind::kEmptyInput, "bce over an empty batch");
  const std::size_t n = targets.size();
  std::vector<T> y(targets.begin(), targets.end());
  T total = 0;
  for (std::size_t i = 0; i < n; ++i) {
    T z = logits.values()[i];
    total += std::max(z, T(0)) - z * y[i] + std::log1p(std::exp(-std::abs(z)));
  }
  return record<T>({1}, {total / T(n)}, {&logits}, [n, y = std::move(y)](TensorNode<T>& self) {
    T* d = parent_grad(self, 0);
    if (!d) return;
    const auto& z = parent_value(self, 0);
    for (std::size_t i = 0; i < n; ++i) {
      T s = z[i] >= T(0) ? T(1) / (T(1) + std::exp(-z[i])) : std::exp(z[i]) / (T(1) + std::exp(z[i]));
      d[i] += self.grad[0] * (s - y[i]) / T(n);
    }
  });
}

#define VULNFORMER_INSTANTIATE_OPS(T)                                                                                \
  template BasicTensor<T> matmul(const BasicTensor<T>&, const BasicTensor<T>&);                                      \
  template BasicTensor<T> transpose(const BasicTensor<T>&);                                                          \
  template BasicTensor<T> add(const BasicTensor<T>&, const BasicTensor<T>&);                                         \
  template BasicTensor<T> add_bias(const BasicTensor<T>&, const BasicTensor<T>&);                                    \
  template BasicTensor<T> mul(const BasicTensor<T>&, const BasicTensor<T>&);                                         \
  template BasicTensor<T> scale(const BasicTensor<T>&, T);                                                           \
  template BasicTensor<T> relu(const BasicTensor<T>&);                                                               \
  template BasicTensor<T> sigmoid(const BasicTensor<T>&);                                                            \
  template BasicTensor<T> softmax_rows(const BasicTensor<T>&);                                                       \
  template BasicTensor<T> softmax_one_rows(const BasicTensor<T>&);                                                   \
  template BasicTensor<T> layer_norm(const BasicTensor<T>&, const BasicTensor<T>&, const BasicTensor<T>&, T);        \
  template BasicTensor<T> batch_norm(const BasicTensor<T>&, const BasicTensor<T>&, const BasicTensor<T>&,            \
                                     BasicTensor<T>&, BasicTensor<T>&, const BatchNormState&);                       \
  template BasicTensor<T> im2col(const BasicTensor<T>&, std::size_t, std::span<const std::size_t>);                  \
  template BasicTensor<T> concat_cols(std::span<const BasicTensor<T>>);                                              \
  template BasicTensor<T> concat_rows(std::span<const BasicTensor<T>>);                                              \
  template BasicTensor<T> slice_cols(const BasicTensor<T>&, std::size_t, std::size_t);                               \
  template BasicTensor<T> slice_rows(const BasicTensor<T>&, std::size_t, std::size_t);                               \
  template BasicTensor<T> mean_pool_segments(const BasicTensor<T>&, std::span<const std::size_t>);                   \
  template BasicTensor<T> sum(const BasicTensor<T>&);                                                                \
  template BasicTensor<T> mean(const BasicTensor<T>&);                                                               \
  template BasicTensor<T> embedding_lookup(const BasicTensor<T>&, std::span<const std::int32_t>, std::int32_t);      \
  template BasicTensor<T> dropout(const BasicTensor<T>&, double, std::mt19937_64&);                                  \
  template BasicTensor<T> bce_with_logits(const BasicTensor<T>&, std::span<const T>);

VULNFORMER_INSTANTIATE_OPS(float)
VULNFORMER_INSTANTIATE_OPS(double)

}  // namespace vulnformer::numerics
