#pragma once

#include "uatd/core.hpp"

#include <vector>

// Compute kernels behind the models and losses. Every kernel exists twice:
// a serial reference under kernels::serial and an OpenMP variant under
// kernels::omp. The parallel variants split work over independent output
// elements only, so both paths produce bit-identical results; the unit tests
// assert that and the bench target compares their speed.
//
// The unqualified functions dispatch on use_parallel() (default: parallel
// when built with OpenMP).

namespace uatd::kernels {

bool use_parallel();
void set_parallel(bool enabled);

// y = x * w^T + b        x: T x I, w: O x I, b: O, y: T x O
void dense_forward(const Matrix& x, const Matrix& w, const std::vector<double>& b, Matrix& y);

// dx = dy * w
void dense_backward_input(const Matrix& dy, const Matrix& w, Matrix& dx);

// dw += dy^T * x, db += colsum(dy)
void dense_backward_params(const Matrix& dy, const Matrix& x, Matrix& dw, std::vector<double>& db);

// Dilated 1-D convolution over time, kernel size 3.
// Acausal taps {t-d, t, t+d}; causal taps {t-2d, t-d, t}. Zero padding.
// x: T x Cin, w: Cout x (3*Cin) laid out [tap0|tap1|tap2], b: Cout, y: T x Cout
void conv1d_forward(const Matrix& x, const Matrix& w, const std::vector<double>& b,
                    int dilation, bool causal, Matrix& y);
void conv1d_backward_input(const Matrix& dy, const Matrix& w, int dilation, bool causal, Matrix& dx);
void conv1d_backward_params(const Matrix& dy, const Matrix& x, int dilation, bool causal,
                            Matrix& dw, std::vector<double>& db);

// y = max(x, 0); backward masks dy where x <= 0
void relu_forward(const Matrix& x, Matrix& y);
void relu_backward(const Matrix& dy, const Matrix& x, Matrix& dx);

// Inverted dropout: y = x * mask / (1 - rate). mask entries are 0 or 1.
void dropout_forward(const Matrix& x, const std::vector<uint8_t>& mask, double rate, Matrix& y);
void dropout_backward(const Matrix& dy, const std::vector<uint8_t>& mask, double rate, Matrix& dx);

// Row-wise softmax.
void softmax_rows(const Matrix& logits, Matrix& probs);

// dL/dlogits given dL/dprobs, chained through the row-wise softmax.
void softmax_backward(const Matrix& dprobs, const Matrix& probs, Matrix& dlogits);

namespace serial {
void dense_forward(const Matrix& x, const Matrix& w, const std::vector<double>& b, Matrix& y);
void dense_backward_input(const Matrix& dy, const Matrix& w, Matrix& dx);
void dense_backward_params(const Matrix& dy, const Matrix& x, Matrix& dw, std::vector<double>& db);
void conv1d_forward(const Matrix& x, const Matrix& w, const std::vector<double>& b,
                    int dilation, bool causal, Matrix& y);
void conv1d_backward_input(const Matrix& dy, const Matrix& w, int dilation, bool causal, Matrix& dx);
void conv1d_backward_params(const Matrix& dy, const Matrix& x, int dilation, bool causal,
                            Matrix& dw, std::vector<double>& db);
void relu_forward(const Matrix& x, Matrix& y);
void relu_backward(const Matrix& dy, const Matrix& x, Matrix& dx);
void dropout_forward(const Matrix& x, const std::vector<uint8_t>& mask, double rate, Matrix& y);
void dropout_backward(const Matrix& dy, const std::vector<uint8_t>& mask, double rate, Matrix& dx);
void softmax_rows(const Matrix& logits, Matrix& probs);
void softmax_backward(const Matrix& dprobs, const Matrix& probs, Matrix& dlogits);
}  // namespace serial

namespace omp {
void dense_forward(const Matrix& x, const Matrix& w, const std::vector<double>& b, Matrix& y);
void dense_backward_input(const Matrix& dy, const Matrix& w, Matrix& dx);
void dense_backward_params(const Matrix& dy, const Matrix& x, Matrix& dw, std::vector<double>& db);
void conv1d_forward(const Matrix& x, const Matrix& w, const std::vector<double>& b,
                    int dilation, bool causal, Matrix& y);
void conv1d_backward_input(const Matrix& dy, const Matrix& w, int dilation, bool causal, Matrix& dx);
void conv1d_backward_params(const Matrix& dy, const Matrix& x, int dilation, bool causal,
                            Matrix& dw, std::vector<double>& db);
void relu_forward(const Matrix& x, Matrix& y);
void relu_backward(const Matrix& dy, const Matrix& x, Matrix& dx);
void dropout_forward(const Matrix& x, const std::vector<uint8_t>& mask, double rate, Matrix& y);
void dropout_backward(const Matrix& dy, const std::vector<uint8_t>& mask, double rate, Matrix& dx);
void softmax_rows(const Matrix& logits, Matrix& probs);
void softmax_backward(const Matrix& dprobs, const Matrix& probs, Matrix& dlogits);
}  // namespace omp

}  // namespace uatd::kernels
