#include "mug/numerics/ops.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "mug/errors.h"

namespace mug::numerics {
namespace {

void require_matrix(const Tensor& t, const char* op) {
  if (t.rank() != 2) throw ShapeError(std::string(op) + ": expected a matrix, got " + shape_string(t.shape()));
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": " + shape_string(a.shape()) + " vs " + shape_string(b.shape()));
  }
}

// Trailing-axis view: (number of slices, slice width).
std::pair<std::size_t, std::size_t> slices_of(const Tensor& t) {
  if (t.rank() == 0) return {1, 1};
  const std::size_t k = t.shape().back();
  return {k == 0 ? 0 : t.size() / k, k};
}

void accumulate_matmul(std::span<const double> a, std::span<const double> b, std::span<double> out,
                       std::size_t n, std::size_t p, std::size_t q) {
  for (std::size_t i = 0; i < n; ++i) {
    double* o = out.data() + i * q;
    for (std::size_t j = 0; j < p; ++j) {
      const double aij = a[i * p + j];
      if (aij == 0.0) continue;
      const double* brow = b.data() + j * q;
      for (std::size_t k = 0; k < q; ++k) o[k] += aij * brow[k];
    }
  }
}

// da[n×p] += g[n×q]·b[p×q]ᵀ
void accumulate_grad_left(std::span<const double> g, std::span<const double> b, std::span<double> da,
                          std::size_t n, std::size_t p, std::size_t q) {
  for (std::size_t i = 0; i < n; ++i) {
    const double* gi = g.data() + i * q;
    for (std::size_t j = 0; j < p; ++j) {
      const double* bj = b.data() + j * q;
      double s = 0.0;
      for (std::size_t k = 0; k < q; ++k) s += gi[k] * bj[k];
      da[i * p + j] += s;
    }
  }
}

// db[p×q] += a[n×p]ᵀ·g[n×q]
void accumulate_grad_right(std::span<const double> a, std::span<const double> g, std::span<double> db,
                           std::size_t n, std::size_t p, std::size_t q) {
  for (std::size_t i = 0; i < n; ++i) {
    const double* gi = g.data() + i * q;
    for (std::size_t j = 0; j < p; ++j) {
      const double aij = a[i * p + j];
      if (aij == 0.0) continue;
      double* dbj = db.data() + j * q;
      for (std::size_t k = 0; k < q; ++k) dbj[k] += aij * gi[k];
    }
  }
}

void check_relation_index(std::span<const std::size_t> index, std::size_t m, std::size_t table_rows,
                          const char* op) {
  if (index.size() != m * m) {
    throw ShapeError(std::string(op) + ": relation index holds " + std::to_string(index.size()) +
                     " entries for " + std::to_string(m) + " positions");
  }
  for (std::size_t idx : index) {
    if (idx >= table_rows) throw IndexError(std::string(op) + ": relation index out of range");
  }
}

}  // namespace

// ---- Plain tensor kernels -------------------------------------------------

Tensor linear(const Tensor& x, const Tensor& w, const Tensor* b) {
  require_matrix(x, "linear");
  require_matrix(w, "linear");
  const std::size_t n = x.rows(), p = x.cols(), q = w.cols();
  if (w.rows() != p) {
    throw ShapeError("linear: inner dimensions " + shape_string(x.shape()) + " · " + shape_string(w.shape()));
  }
  if (b != nullptr && (b->rank() != 1 || b->size() != q)) {
    throw ShapeError("linear: bias " + shape_string(b->shape()) + " for output width " + std::to_string(q));
  }
  Tensor out(Shape{n, q});
  if (b != nullptr) {
    for (std::size_t i = 0; i < n; ++i) std::copy(b->data().begin(), b->data().end(), out.row(i).begin());
  }
  accumulate_matmul(x.data(), w.data(), out.data(), n, p, q);
  return out;
}

Tensor softmax(const Tensor& v, std::optional<std::size_t> valid_cols) {
  const auto [rows, k] = slices_of(v);
  if (k == 0) throw ShapeError("softmax: empty trailing axis");
  const std::size_t valid = std::min(valid_cols.value_or(k), k);
  if (valid == 0) throw ShapeError("softmax: every column masked");
  Tensor out(v.shape(), 0.0);
  for (std::size_t r = 0; r < rows; ++r) {
    const double* in = v.data().data() + r * k;
    double* o = out.data().data() + r * k;
    const double mx = *std::max_element(in, in + valid);
    double total = 0.0;
    for (std::size_t j = 0; j < valid; ++j) {
      o[j] = std::exp(in[j] - mx);
      total += o[j];
    }
    for (std::size_t j = 0; j < valid; ++j) o[j] /= total;
  }
  return out;
}

double cross_entropy(const Tensor& probs, std::span<const std::size_t> targets,
                     std::span<const std::uint8_t> mask) {
  const auto [rows, k] = slices_of(probs);
  if (targets.size() != rows || mask.size() != rows) {
    throw ShapeError("cross_entropy: " + std::to_string(rows) + " slices but " + std::to_string(targets.size()) +
                     " targets and " + std::to_string(mask.size()) + " mask entries");
  }
  double total = 0.0;
  std::size_t count = 0;
  for (std::size_t r = 0; r < rows; ++r) {
    if (mask[r] == 0) continue;
    if (targets[r] >= k) throw IndexError("cross_entropy: target " + std::to_string(targets[r]) + " out of range");
    total -= std::log(probs[r * k + targets[r]]);
    ++count;
  }
  return count == 0 ? 0.0 : total / static_cast<double>(count);
}

// ---- Differentiable ops ---------------------------------------------------

Var matmul(Var a, Var b) {
  const Tensor out = linear(a.value(), b.value());
  const std::size_t n = a.value().rows(), p = a.value().cols(), q = b.value().cols();
  return a.tape().record("matmul", out, {a, b}, [=](Tape& t, const Tensor&, const Tensor& g) {
    if (t.requires_grad(a)) accumulate_grad_left(g.data(), t.value(b).data(), t.grad_buffer(a).data(), n, p, q);
    if (t.requires_grad(b)) accumulate_grad_right(t.value(a).data(), g.data(), t.grad_buffer(b).data(), n, p, q);
  });
}

Var linear(Var x, Var w, std::optional<Var> b) {
  Tensor out = linear(x.value(), w.value(), b ? &b->value() : nullptr);
  const std::size_t n = x.value().rows(), p = x.value().cols(), q = w.value().cols();
  std::vector<Var> parents{x, w};
  if (b) parents.push_back(*b);
  return x.tape().record("linear", std::move(out), parents, [=](Tape& t, const Tensor&, const Tensor& g) {
    if (t.requires_grad(x)) accumulate_grad_left(g.data(), t.value(w).data(), t.grad_buffer(x).data(), n, p, q);
    if (t.requires_grad(w)) accumulate_grad_right(t.value(x).data(), g.data(), t.grad_buffer(w).data(), n, p, q);
    if (b && t.requires_grad(*b)) {
      auto db = t.grad_buffer(*b).data();
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 0; k < q; ++k) db[k] += g[i * q + k];
    }
  });
}

Var add(Var a, Var b) {
  require_same_shape(a.value(), b.value(), "add");
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += b.value()[i];
  return a.tape().record("add", std::move(out), {a, b}, [=](Tape& t, const Tensor&, const Tensor& g) {
    for (Var v : {a, b}) {
      if (!t.requires_grad(v)) continue;
      auto d = t.grad_buffer(v).data();
      for (std::size_t i = 0; i < g.size(); ++i) d[i] += g[i];
    }
  });
}

Var mul(Var a, Var b) {
  require_same_shape(a.value(), b.value(), "mul");
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= b.value()[i];
  return a.tape().record("mul", std::move(out), {a, b}, [=](Tape& t, const Tensor&, const Tensor& g) {
    if (t.requires_grad(a)) {
      auto d = t.grad_buffer(a).data();
      const auto& vb = t.value(b);
      for (std::size_t i = 0; i < g.size(); ++i) d[i] += g[i] * vb[i];
    }
    if (t.requires_grad(b)) {
      auto d = t.grad_buffer(b).data();
      const auto& va = t.value(a);
      for (std::size_t i = 0; i < g.size(); ++i) d[i] += g[i] * va[i];
    }
  });
}

Var scale(Var x, double s) {
  Tensor out = x.value();
  for (double& v : out.data()) v *= s;
  return x.tape().record("scale", std::move(out), {x}, [=](Tape& t, const Tensor&, const Tensor& g) {
    auto d = t.grad_buffer(x).data();
    for (std::size_t i = 0; i < g.size(); ++i) d[i] += g[i] * s;
  });
}

Var sum(Var x) {
  double total = 0.0;
  for (double v : x.value().data()) total += v;
  return x.tape().record("sum", Tensor::scalar(total), {x}, [=](Tape& t, const Tensor&, const Tensor& g) {
    for (double& d : t.grad_buffer(x).data()) d += g[0];
  });
}

Var add_row(Var x, Var b) {
  const Tensor& xv = x.value();
  require_matrix(xv, "add_row");
  const std::size_t n = xv.rows(), q = xv.cols();
  if (b.value().rank() != 1 || b.value().size() != q) throw ShapeError("add_row: bias width mismatch");
  Tensor out = xv;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < q; ++k) out[i * q + k] += b.value()[k];
  return x.tape().record("add_row", std::move(out), {x, b}, [=](Tape& t, const Tensor&, const Tensor& g) {
    if (t.requires_grad(x)) {
      auto d = t.grad_buffer(x).data();
      for (std::size_t i = 0; i < g.size(); ++i) d[i] += g[i];
    }
    if (t.requires_grad(b)) {
      auto d = t.grad_buffer(b).data();
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 0; k < q; ++k) d[k] += g[i * q + k];
    }
  });
}

Var relu(Var x) {
  Tensor out = x.value();
  for (double& v : out.data()) v = v > 0.0 ? v : 0.0;
  return x.tape().record("relu", std::move(out), {x}, [=](Tape& t, const Tensor&, const Tensor& g) {
    auto d = t.grad_buffer(x).data();
    const auto& in = t.value(x);
    for (std::size_t i = 0; i < g.size(); ++i) d[i] += in[i] > 0.0 ? g[i] : 0.0;
  });
}

Var gelu(Var x) {
  Tensor out = x.value();
  for (double& v : out.data()) v = 0.5 * v * (1.0 + std::erf(v / std::numbers::sqrt2));
  return x.tape().record("gelu", std::move(out), {x}, [=](Tape& t, const Tensor&, const Tensor& g) {
    auto d = t.grad_buffer(x).data();
    const auto& in = t.value(x);
    const double inv_sqrt_2pi = 0.5 * std::numbers::inv_sqrtpi * std::numbers::sqrt2;
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double v = in[i];
      const double cdf = 0.5 * (1.0 + std::erf(v / std::numbers::sqrt2));
      const double pdf = inv_sqrt_2pi * std::exp(-0.5 * v * v);
      d[i] += g[i] * (cdf + v * pdf);
    }
  });
}

Var softmax(Var x, std::optional<std::size_t> valid_cols) {
  Tensor out = softmax(x.value(), valid_cols);
  const auto [rows, k] = slices_of(out);
  return x.tape().record("softmax", std::move(out), {x}, [=](Tape& t, const Tensor& y, const Tensor& g) {
    auto d = t.grad_buffer(x).data();
    for (std::size_t r = 0; r < rows; ++r) {
      double dot = 0.0;
      for (std::size_t j = 0; j < k; ++j) dot += g[r * k + j] * y[r * k + j];
      for (std::size_t j = 0; j < k; ++j) d[r * k + j] += y[r * k + j] * (g[r * k + j] - dot);
    }
  });
}

Var layer_norm(Var x, Var gain, Var bias, double eps) {
  const Tensor& xv = x.value();
  require_matrix(xv, "layer_norm");
  const std::size_t n = xv.rows(), k = xv.cols();
  if (gain.value().size() != k || bias.value().size() != k) throw ShapeError("layer_norm: affine width mismatch");
  Tensor normed(Shape{n, k});
  std::vector<double> inv_std(n);
  for (std::size_t i = 0; i < n; ++i) {
    double mean = 0.0;
    for (std::size_t j = 0; j < k; ++j) mean += xv[i * k + j];
    mean /= static_cast<double>(k);
    double var = 0.0;
    for (std::size_t j = 0; j < k; ++j) var += (xv[i * k + j] - mean) * (xv[i * k + j] - mean);
    var /= static_cast<double>(k);
    inv_std[i] = 1.0 / std::sqrt(var + eps);
    for (std::size_t j = 0; j < k; ++j) normed[i * k + j] = (xv[i * k + j] - mean) * inv_std[i];
  }
  Tensor out(Shape{n, k});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < k; ++j)
      out[i * k + j] = normed[i * k + j] * gain.value()[j] + bias.value()[j];
  return x.tape().record(
      "layer_norm", std::move(out), {x, gain, bias},
      [=, normed = std::move(normed), inv_std = std::move(inv_std)](Tape& t, const Tensor&, const Tensor& g) {
        const auto& gv = t.value(gain);
        if (t.requires_grad(gain)) {
          auto d = t.grad_buffer(gain).data();
          for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < k; ++j) d[j] += g[i * k + j] * normed[i * k + j];
        }
        if (t.requires_grad(bias)) {
          auto d = t.grad_buffer(bias).data();
          for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < k; ++j) d[j] += g[i * k + j];
        }
        if (t.requires_grad(x)) {
          auto d = t.grad_buffer(x).data();
          const double inv_k = 1.0 / static_cast<double>(k);
          for (std::size_t i = 0; i < n; ++i) {
            double mean_dn = 0.0, mean_dn_n = 0.0;
            for (std::size_t j = 0; j < k; ++j) {
              const double dn = g[i * k + j] * gv[j];
              mean_dn += dn;
              mean_dn_n += dn * normed[i * k + j];
            }
            mean_dn *= inv_k;
            mean_dn_n *= inv_k;
            for (std::size_t j = 0; j < k; ++j) {
              const double dn = g[i * k + j] * gv[j];
              d[i * k + j] += inv_std[i] * (dn - mean_dn - normed[i * k + j] * mean_dn_n);
            }
          }
        }
      });
}

Var gather_rows(Var table, std::vector<std::size_t> ids) {
  const Tensor& tv = table.value();
  require_matrix(tv, "gather_rows");
  const std::size_t k = tv.cols();
  Tensor out(Shape{ids.size(), k});
  for (std::size_t r = 0; r < ids.size(); ++r) {
    if (ids[r] >= tv.rows()) throw IndexError("gather_rows: id " + std::to_string(ids[r]) + " out of range");
    std::copy(tv.row(ids[r]).begin(), tv.row(ids[r]).end(), out.row(r).begin());
  }
  return table.tape().record("gather_rows", std::move(out), {table},
                             [=, ids = std::move(ids)](Tape& t, const Tensor&, const Tensor& g) {
                               auto d = t.grad_buffer(table).data();
                               for (std::size_t r = 0; r < ids.size(); ++r)
                                 for (std::size_t j = 0; j < k; ++j) d[ids[r] * k + j] += g[r * k + j];
                             });
}

Var slice_cols(Var x, std::size_t offset, std::size_t length) {
  const Tensor& xv = x.value();
  require_matrix(xv, "slice_cols");
  const std::size_t n = xv.rows(), k = xv.cols();
  if (offset + length > k) throw ShapeError("slice_cols: range exceeds width");
  Tensor out(Shape{n, length});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < length; ++j) out[i * length + j] = xv[i * k + offset + j];
  return x.tape().record("slice_cols", std::move(out), {x}, [=](Tape& t, const Tensor&, const Tensor& g) {
    auto d = t.grad_buffer(x).data();
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < length; ++j) d[i * k + offset + j] += g[i * length + j];
  });
}

Var slice_rows(Var x, std::size_t offset, std::size_t length) {
  const Tensor& xv = x.value();
  require_matrix(xv, "slice_rows");
  const std::size_t k = xv.cols();
  if (offset + length > xv.rows()) throw ShapeError("slice_rows: range exceeds height");
  std::vector<double> data(xv.data().begin() + static_cast<std::ptrdiff_t>(offset * k),
                           xv.data().begin() + static_cast<std::ptrdiff_t>((offset + length) * k));
  return x.tape().record("slice_rows", Tensor(Shape{length, k}, std::move(data)), {x},
                         [=](Tape& t, const Tensor&, const Tensor& g) {
                           auto d = t.grad_buffer(x).data();
                           for (std::size_t i = 0; i < g.size(); ++i) d[offset * k + i] += g[i];
                         });
}

Var concat_cols(const std::vector<Var>& parts) {
  if (parts.empty()) throw ShapeError("concat_cols: no operands");
  const std::size_t n = parts.front().value().rows();
  std::size_t total = 0;
  for (const Var& p : parts) {
    require_matrix(p.value(), "concat_cols");
    if (p.value().rows() != n) throw ShapeError("concat_cols: row counts differ");
    total += p.value().cols();
  }
  Tensor out(Shape{n, total});
  std::size_t offset = 0;
  for (const Var& p : parts) {
    const std::size_t w = p.value().cols();
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < w; ++j) out[i * total + offset + j] = p.value()[i * w + j];
    offset += w;
  }
  return parts.front().tape().record("concat_cols", std::move(out), parts,
                                     [=](Tape& t, const Tensor&, const Tensor& g) {
                                       std::size_t off = 0;
                                       for (const Var& p : parts) {
                                         const std::size_t w = t.value(p).cols();
                                         if (t.requires_grad(p)) {
                                           auto d = t.grad_buffer(p).data();
                                           for (std::size_t i = 0; i < n; ++i)
                                             for (std::size_t j = 0; j < w; ++j) d[i * w + j] += g[i * total + off + j];
                                         }
                                         off += w;
                                       }
                                     });
}

Var concat_rows(const std::vector<Var>& parts) {
  if (parts.empty()) throw ShapeError("concat_rows: no operands");
  const std::size_t k = parts.front().value().cols();
  std::vector<double> data;
  std::size_t rows = 0;
  for (const Var& p : parts) {
    require_matrix(p.value(), "concat_rows");
    if (p.value().cols() != k) throw ShapeError("concat_rows: column counts differ");
    data.insert(data.end(), p.value().data().begin(), p.value().data().end());
    rows += p.value().rows();
  }
  return parts.front().tape().record("concat_rows", Tensor(Shape{rows, k}, std::move(data)), parts,
                                     [=](Tape& t, const Tensor&, const Tensor& g) {
                                       std::size_t off = 0;
                                       for (const Var& p : parts) {
                                         const std::size_t sz = t.value(p).size();
                                         if (t.requires_grad(p)) {
                                           auto d = t.grad_buffer(p).data();
                                           for (std::size_t i = 0; i < sz; ++i) d[i] += g[off + i];
                                         }
                                         off += sz;
                                       }
                                     });
}

Var attention_scores(Var q, Var k, double scale, std::optional<Var> relations,
                     std::span<const std::size_t> relation_index) {
  const Tensor& qv = q.value();
  const Tensor& kv = k.value();
  require_matrix(qv, "attention_scores");
  require_same_shape(qv, kv, "attention_scores");
  const std::size_t m = qv.rows(), d = qv.cols();
  std::vector<std::size_t> index;
  if (relations) {
    const Tensor& rv = relations->value();
    require_matrix(rv, "attention_scores");
    if (rv.cols() != d) throw ShapeError("attention_scores: relation width differs from head width");
    check_relation_index(relation_index, m, rv.rows(), "attention_scores");
    index.assign(relation_index.begin(), relation_index.end());
  }
  Tensor out(Shape{m, m});
  for (std::size_t i = 0; i < m; ++i) {
    const double* qi = qv.data().data() + i * d;
    for (std::size_t j = 0; j < m; ++j) {
      const double* kj = kv.data().data() + j * d;
      double s = 0.0;
      if (relations) {
        const double* r = relations->value().data().data() + index[i * m + j] * d;
        for (std::size_t a = 0; a < d; ++a) s += qi[a] * (kj[a] + r[a]);
      } else {
        for (std::size_t a = 0; a < d; ++a) s += qi[a] * kj[a];
      }
      out[i * m + j] = s * scale;
    }
  }
  std::vector<Var> parents{q, k};
  if (relations) parents.push_back(*relations);
  return q.tape().record(
      "attention_scores", std::move(out), parents,
      [=, index = std::move(index)](Tape& t, const Tensor&, const Tensor& g) {
        const double* qd = t.value(q).data().data();
        const double* kd = t.value(k).data().data();
        const double* rd = relations ? t.value(*relations).data().data() : nullptr;
        double* dq = t.requires_grad(q) ? t.grad_buffer(q).data().data() : nullptr;
        double* dk = t.requires_grad(k) ? t.grad_buffer(k).data().data() : nullptr;
        double* dr = relations && t.requires_grad(*relations) ? t.grad_buffer(*relations).data().data() : nullptr;
        for (std::size_t i = 0; i < m; ++i) {
          for (std::size_t j = 0; j < m; ++j) {
            const double gij = g[i * m + j] * scale;
            if (gij == 0.0) continue;
            const double* r = rd != nullptr ? rd + index[i * m + j] * d : nullptr;
            for (std::size_t a = 0; a < d; ++a) {
              const double key = r != nullptr ? kd[j * d + a] + r[a] : kd[j * d + a];
              if (dq != nullptr) dq[i * d + a] += gij * key;
              if (dk != nullptr) dk[j * d + a] += gij * qd[i * d + a];
              if (dr != nullptr) dr[index[i * m + j] * d + a] += gij * qd[i * d + a];
            }
          }
        }
      });
}

Var structured_scores(Var q, Var relations, std::span<const std::size_t> relation_index, double scale) {
  const Tensor& qv = q.value();
  const Tensor& rv = relations.value();
  require_matrix(qv, "structured_scores");
  require_matrix(rv, "structured_scores");
  const std::size_t m = qv.rows(), d = qv.cols();
  if (rv.cols() != d) throw ShapeError("structured_scores: relation width differs from head width");
  check_relation_index(relation_index, m, rv.rows(), "structured_scores");
  std::vector<std::size_t> index(relation_index.begin(), relation_index.end());
  Tensor out(Shape{m, m});
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      const double* r = rv.data().data() + index[i * m + j] * d;
      double s = 0.0;
      for (std::size_t a = 0; a < d; ++a) s += qv[i * d + a] * r[a];
      out[i * m + j] = s * scale;
    }
  }
  return q.tape().record("structured_scores", std::move(out), {q, relations},
                         [=, index = std::move(index)](Tape& t, const Tensor&, const Tensor& g) {
                           const auto& qd = t.value(q);
                           const auto& rd = t.value(relations);
                           for (std::size_t i = 0; i < m; ++i) {
                             for (std::size_t j = 0; j < m; ++j) {
                               const double gij = g[i * m + j] * scale;
                               const std::size_t row = index[i * m + j];
                               if (t.requires_grad(q)) {
                                 auto dq = t.grad_buffer(q).data();
                                 for (std::size_t a = 0; a < d; ++a) dq[i * d + a] += gij * rd[row * d + a];
                               }
                               if (t.requires_grad(relations)) {
                                 auto dr = t.grad_buffer(relations).data();
                                 for (std::size_t a = 0; a < d; ++a) dr[row * d + a] += gij * qd[i * d + a];
                               }
                             }
                           }
                         });
}

Var pair_bilinear(Var p, Var d, std::size_t labels) {
  const Tensor& pv = p.value();
  const Tensor& dv = d.value();
  require_matrix(pv, "pair_bilinear");
  require_matrix(dv, "pair_bilinear");
  const std::size_t n = pv.rows(), k = dv.cols();
  if (dv.rows() != n || pv.cols() != labels * k) throw ShapeError("pair_bilinear: operand shapes disagree");
  Tensor out(Shape{n * n, labels});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t l = 0; l < labels; ++l) {
        double s = 0.0;
        for (std::size_t c = 0; c < k; ++c) s += pv[i * labels * k + l * k + c] * dv[j * k + c];
        out[(i * n + j) * labels + l] = s;
      }
  return p.tape().record("pair_bilinear", std::move(out), {p, d}, [=](Tape& t, const Tensor&, const Tensor& g) {
    const auto& pd = t.value(p);
    const auto& dd = t.value(d);
    double* dp = t.requires_grad(p) ? t.grad_buffer(p).data().data() : nullptr;
    double* ddv = t.requires_grad(d) ? t.grad_buffer(d).data().data() : nullptr;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        for (std::size_t l = 0; l < labels; ++l) {
          const double gl = g[(i * n + j) * labels + l];
          for (std::size_t c = 0; c < k; ++c) {
            if (dp != nullptr) dp[i * labels * k + l * k + c] += gl * dd[j * k + c];
            if (ddv != nullptr) ddv[j * k + c] += gl * pd[i * labels * k + l * k + c];
          }
        }
  });
}

Var pair_sum(Var a, Var b) {
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  require_matrix(av, "pair_sum");
  require_same_shape(av, bv, "pair_sum");
  const std::size_t n = av.rows(), labels = av.cols();
  Tensor out(Shape{n * n, labels});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t l = 0; l < labels; ++l) out[(i * n + j) * labels + l] = av[i * labels + l] + bv[j * labels + l];
  return a.tape().record("pair_sum", std::move(out), {a, b}, [=](Tape& t, const Tensor&, const Tensor& g) {
    double* da = t.requires_grad(a) ? t.grad_buffer(a).data().data() : nullptr;
    double* db = t.requires_grad(b) ? t.grad_buffer(b).data().data() : nullptr;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        for (std::size_t l = 0; l < labels; ++l) {
          const double gl = g[(i * n + j) * labels + l];
          if (da != nullptr) da[i * labels + l] += gl;
          if (db != nullptr) db[j * labels + l] += gl;
        }
  });
}

Var cross_entropy(Var probs, std::vector<std::size_t> targets, std::vector<std::uint8_t> mask) {
  const double loss = cross_entropy(probs.value(), targets, mask);
  const auto [rows, k] = slices_of(probs.value());
  const auto count = static_cast<double>(std::count_if(mask.begin(), mask.end(), [](auto m) { return m != 0; }));
  return probs.tape().record(
      "cross_entropy", Tensor::scalar(loss), {probs},
      [=, targets = std::move(targets), mask = std::move(mask)](Tape& t, const Tensor&, const Tensor& g) {
        if (count == 0.0) return;
        auto d = t.grad_buffer(probs).data();
        const auto& p = t.value(probs);
        for (std::size_t r = 0; r < rows; ++r) {
          if (mask[r] == 0) continue;
          const std::size_t idx = r * k + targets[r];
          d[idx] -= g[0] / (p[idx] * count);
        }
      });
}

}  // namespace mug::numerics
