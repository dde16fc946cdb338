#pragma once

#include <cstddef>
#include <vector>

#include "stoic/tape.hpp"

// Differentiable primitives. Every operand is viewed as a rows x cols matrix.
namespace stoic::ad {

Var matmul(Var a, Var b);     // a[m x k] * b[k x n]
Var matmul_nt(Var a, Var b);  // a[m x k] * b[n x k]^T

Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var add_row(Var x, Var row);  // row [1 x c] broadcast over rows of x
Var mul_col(Var x, Var col);  // col [r x 1] broadcast over columns of x
Var scale(Var x, double c);
Var add_scalar(Var x, double c);

Var neg(Var x);
Var tanh(Var x);
Var sigmoid(Var x);
Var relu(Var x);
Var softplus(Var x);
Var log_sigmoid(Var x);
Var exp(Var x);
Var log(Var x);
Var square(Var x);
Var clamp(Var x, double lo, double hi);

Var sum(Var x);
Var mean(Var x);
Var row_sum(Var x);                            // [r x 1]
Var segment_mean_rows(Var x, std::size_t block);  // mean of consecutive row blocks
Var transpose(Var x);
Var reshape(Var x, std::vector<std::size_t> shape);

Var concat_cols(const std::vector<Var>& parts);
Var slice_cols(Var x, std::size_t begin, std::size_t count);
Var gather_rows(Var x, std::vector<std::size_t> index);
// out.flat[k] = x.flat[index[k]], or 0 where index[k] < 0.
Var gather_elems(Var x, std::vector<long> index, std::vector<std::size_t> shape);

Var softmax_rows(Var x);

// For a stack of square blocks: a is [B*n x n], h is [B*n x d];
// row b*n+i of the result is sum_j a[b*n+i, j] * h[b*n+j].
Var block_matmul(Var a, Var h, std::size_t block);
// Symmetric GCN normalization D^-1/2 (A + I) D^-1/2 per block, with D the row
// sums of A + I. Entries of a must be nonnegative.
Var gcn_normalize(Var a, std::size_t block);

// Forward value 1{x > threshold}; backward passes the gradient through unchanged.
Var straight_through(Var x, double threshold);
Var stop_gradient(Var x);

inline Var operator+(Var a, Var b) { return add(a, b); }
inline Var operator-(Var a, Var b) { return sub(a, b); }
inline Var operator*(Var a, Var b) { return mul(a, b); }
inline Var operator*(double c, Var x) { return scale(x, c); }
inline Var operator-(Var x) { return neg(x); }

namespace kernel {
// C[m x n] += A[m x k] * B[k x n]
void gemm_nn(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
             std::size_t n);
// C[k x n] += A[m x k]^T * B[m x n]
void gemm_tn(const double* a, const double* b, double* c, std::size_t m, std::size_t k,
             std::size_t n);
Tensor transposed(const Tensor& x);
}  // namespace kernel

}  // namespace stoic::ad
