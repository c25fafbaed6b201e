#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "mug/numerics/tape.h"
#include "mug/numerics/tensor.h"

namespace mug::numerics {

// ---- Plain tensor kernels -------------------------------------------------

// x[n×p]·W[p×q] (+ b[q]).
Tensor linear(const Tensor& x, const Tensor& w, const Tensor* b = nullptr);

// Softmax over the trailing axis with max subtraction. Columns at index >= valid_cols
// receive exactly zero weight (additive -inf mask).
Tensor softmax(const Tensor& v, std::optional<std::size_t> valid_cols = std::nullopt);

// Mean of -ln(probs[r][target[r]]) over rows with mask[r] set; 0 when every row is masked.
double cross_entropy(const Tensor& probs, std::span<const std::size_t> targets,
                     std::span<const std::uint8_t> mask);

// ---- Differentiable ops ---------------------------------------------------

Var matmul(Var a, Var b);
Var linear(Var x, Var w, std::optional<Var> b = std::nullopt);
Var add(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var x, double s);
Var sum(Var x);
// x[n×q] + b[q] broadcast over rows.
Var add_row(Var x, Var b);

Var relu(Var x);
Var gelu(Var x);
Var softmax(Var x, std::optional<std::size_t> valid_cols = std::nullopt);
Var layer_norm(Var x, Var gain, Var bias, double eps);

// Rows of table[V×D] selected by ids.
Var gather_rows(Var table, std::vector<std::size_t> ids);
Var slice_cols(Var x, std::size_t offset, std::size_t length);
Var slice_rows(Var x, std::size_t offset, std::size_t length);
Var concat_cols(const std::vector<Var>& parts);
Var concat_rows(const std::vector<Var>& parts);

// Attention logits e[i][j] = scale · q_i·(k_j + r[index[i·m+j]]) for q,k ∈ R^{m×d}.
// Without a relation table the key is used as is.
Var attention_scores(Var q, Var k, double scale, std::optional<Var> relations = std::nullopt,
                     std::span<const std::size_t> relation_index = {});
// The relation term alone: scale · q_i·r[index[i·m+j]].
Var structured_scores(Var q, Var relations, std::span<const std::size_t> relation_index, double scale);

// Pairwise bilinear logits. p[n×(L·k)] holds h_i·U_l stacked by label, d[n×k];
// out[(i·n+j)][l] = Σ_c p[i][l·k+c]·d[j][c].
Var pair_bilinear(Var p, Var d, std::size_t labels);
// out[(i·n+j)][l] = a[i][l] + b[j][l].
Var pair_sum(Var a, Var b);

Var cross_entropy(Var probs, std::vector<std::size_t> targets, std::vector<std::uint8_t> mask);

}  // namespace mug::numerics
