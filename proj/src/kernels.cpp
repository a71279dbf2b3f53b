#include "uatd/kernels.hpp"

#include <atomic>
#include <cmath>

namespace uatd::kernels {

namespace {
std::atomic<bool> g_parallel{true};

// kernel size is fixed at 3 taps
inline int tap_offset(int tap, int dilation, bool causal) {
    // acausal: {-d, 0, +d}; causal: {-2d, -d, 0}
    return causal ? (tap - 2) * dilation : (tap - 1) * dilation;
}
}  // namespace

bool use_parallel() { return g_parallel.load(std::memory_order_relaxed); }
void set_parallel(bool enabled) { g_parallel.store(enabled, std::memory_order_relaxed); }

// ---------------------------------------------------------------------------
// serial reference
// ---------------------------------------------------------------------------

namespace serial {

void dense_forward(const Matrix& x, const Matrix& w, const std::vector<double>& b, Matrix& y) {
    const int t_len = x.rows, in = x.cols, out = w.rows;
    y = Matrix(t_len, out);
    for (int t = 0; t < t_len; ++t) {
        const double* xr = x.row(t);
        double* yr = y.row(t);
        for (int o = 0; o < out; ++o) {
            const double* wr = w.row(o);
            double acc = b[o];
            for (int i = 0; i < in; ++i) acc += xr[i] * wr[i];
            yr[o] = acc;
        }
    }
}

void dense_backward_input(const Matrix& dy, const Matrix& w, Matrix& dx) {
    const int t_len = dy.rows, out = dy.cols, in = w.cols;
    dx = Matrix(t_len, in);
    for (int t = 0; t < t_len; ++t) {
        const double* dyr = dy.row(t);
        double* dxr = dx.row(t);
        for (int o = 0; o < out; ++o) {
            const double g = dyr[o];
            const double* wr = w.row(o);
            for (int i = 0; i < in; ++i) dxr[i] += g * wr[i];
        }
    }
}

void dense_backward_params(const Matrix& dy, const Matrix& x, Matrix& dw, std::vector<double>& db) {
    const int t_len = dy.rows, out = dy.cols, in = x.cols;
    for (int o = 0; o < out; ++o) {
        double* dwr = dw.row(o);
        double acc_b = 0.0;
        for (int t = 0; t < t_len; ++t) {
            const double g = dy.at(t, o);
            acc_b += g;
            const double* xr = x.row(t);
            for (int i = 0; i < in; ++i) dwr[i] += g * xr[i];
        }
        db[o] += acc_b;
    }
}

void conv1d_forward(const Matrix& x, const Matrix& w, const std::vector<double>& b,
                    int dilation, bool causal, Matrix& y) {
    const int t_len = x.rows, cin = x.cols, cout = w.rows;
    y = Matrix(t_len, cout);
    for (int t = 0; t < t_len; ++t) {
        double* yr = y.row(t);
        for (int co = 0; co < cout; ++co) yr[co] = b[co];
        for (int tap = 0; tap < 3; ++tap) {
            const int src = t + tap_offset(tap, dilation, causal);
            if (src < 0 || src >= t_len) continue;
            const double* xr = x.row(src);
            for (int co = 0; co < cout; ++co) {
                const double* wr = w.row(co) + tap * cin;
                double acc = 0.0;
                for (int ci = 0; ci < cin; ++ci) acc += wr[ci] * xr[ci];
                yr[co] += acc;
            }
        }
    }
}

void conv1d_backward_input(const Matrix& dy, const Matrix& w, int dilation, bool causal, Matrix& dx) {
    const int t_len = dy.rows, cout = dy.cols, cin = w.cols / 3;
    dx = Matrix(t_len, cin);
    for (int t = 0; t < t_len; ++t) {
        double* dxr = dx.row(t);
        // x[t] feeds y[t - off(tap)] through tap
        for (int tap = 0; tap < 3; ++tap) {
            const int dst = t - tap_offset(tap, dilation, causal);
            if (dst < 0 || dst >= t_len) continue;
            const double* dyr = dy.row(dst);
            for (int co = 0; co < cout; ++co) {
                const double g = dyr[co];
                const double* wr = w.row(co) + tap * cin;
                for (int ci = 0; ci < cin; ++ci) dxr[ci] += g * wr[ci];
            }
        }
    }
}

void conv1d_backward_params(const Matrix& dy, const Matrix& x, int dilation, bool causal,
                            Matrix& dw, std::vector<double>& db) {
    const int t_len = dy.rows, cout = dy.cols, cin = x.cols;
    for (int co = 0; co < cout; ++co) {
        double* dwr = dw.row(co);
        double acc_b = 0.0;
        for (int t = 0; t < t_len; ++t) {
            const double g = dy.at(t, co);
            acc_b += g;
            for (int tap = 0; tap < 3; ++tap) {
                const int src = t + tap_offset(tap, dilation, causal);
                if (src < 0 || src >= t_len) continue;
                const double* xr = x.row(src);
                double* dwt = dwr + tap * cin;
                for (int ci = 0; ci < cin; ++ci) dwt[ci] += g * xr[ci];
            }
        }
        db[co] += acc_b;
    }
}

void relu_forward(const Matrix& x, Matrix& y) {
    y = Matrix(x.rows, x.cols);
    const size_t n = x.data.size();
    for (size_t i = 0; i < n; ++i) y.data[i] = x.data[i] > 0.0 ? x.data[i] : 0.0;
}

void relu_backward(const Matrix& dy, const Matrix& x, Matrix& dx) {
    dx = Matrix(x.rows, x.cols);
    const size_t n = x.data.size();
    for (size_t i = 0; i < n; ++i) dx.data[i] = x.data[i] > 0.0 ? dy.data[i] : 0.0;
}

void dropout_forward(const Matrix& x, const std::vector<uint8_t>& mask, double rate, Matrix& y) {
    y = Matrix(x.rows, x.cols);
    const double scale = 1.0 / (1.0 - rate);
    const size_t n = x.data.size();
    for (size_t i = 0; i < n; ++i) y.data[i] = mask[i] ? x.data[i] * scale : 0.0;
}

void dropout_backward(const Matrix& dy, const std::vector<uint8_t>& mask, double rate, Matrix& dx) {
    dx = Matrix(dy.rows, dy.cols);
    const double scale = 1.0 / (1.0 - rate);
    const size_t n = dy.data.size();
    for (size_t i = 0; i < n; ++i) dx.data[i] = mask[i] ? dy.data[i] * scale : 0.0;
}

void softmax_rows(const Matrix& logits, Matrix& probs) {
    probs = Matrix(logits.rows, logits.cols);
    const int c_len = logits.cols;
    for (int t = 0; t < logits.rows; ++t) {
        const double* zr = logits.row(t);
        double* pr = probs.row(t);
        double zmax = zr[0];
        for (int c = 1; c < c_len; ++c) zmax = std::max(zmax, zr[c]);
        double sum = 0.0;
        for (int c = 0; c < c_len; ++c) {
            pr[c] = std::exp(zr[c] - zmax);
            sum += pr[c];
        }
        const double inv = 1.0 / sum;
        for (int c = 0; c < c_len; ++c) pr[c] *= inv;
    }
}

void softmax_backward(const Matrix& dprobs, const Matrix& probs, Matrix& dlogits) {
    dlogits = Matrix(probs.rows, probs.cols);
    const int c_len = probs.cols;
    for (int t = 0; t < probs.rows; ++t) {
        const double* dp = dprobs.row(t);
        const double* p = probs.row(t);
        double* dz = dlogits.row(t);
        double dot = 0.0;
        for (int c = 0; c < c_len; ++c) dot += dp[c] * p[c];
        for (int c = 0; c < c_len; ++c) dz[c] = p[c] * (dp[c] - dot);
    }
}

}  // namespace serial

// ---------------------------------------------------------------------------
// OpenMP variants. Work is split over disjoint output elements only, so the
// accumulation order within each element matches the serial reference and the
// results are bit-identical.
// ---------------------------------------------------------------------------

namespace omp {

void dense_forward(const Matrix& x, const Matrix& w, const std::vector<double>& b, Matrix& y) {
    const int t_len = x.rows, in = x.cols, out = w.rows;
    y = Matrix(t_len, out);
    #pragma omp parallel for schedule(static)
    for (int t = 0; t < t_len; ++t) {
        const double* xr = x.row(t);
        double* yr = y.row(t);
        for (int o = 0; o < out; ++o) {
            const double* wr = w.row(o);
            double acc = b[o];
            for (int i = 0; i < in; ++i) acc += xr[i] * wr[i];
            yr[o] = acc;
        }
    }
}

void dense_backward_input(const Matrix& dy, const Matrix& w, Matrix& dx) {
    const int t_len = dy.rows, out = dy.cols, in = w.cols;
    dx = Matrix(t_len, in);
    #pragma omp parallel for schedule(static)
    for (int t = 0; t < t_len; ++t) {
        const double* dyr = dy.row(t);
        double* dxr = dx.row(t);
        for (int o = 0; o < out; ++o) {
            const double g = dyr[o];
            const double* wr = w.row(o);
            for (int i = 0; i < in; ++i) dxr[i] += g * wr[i];
        }
    }
}

void dense_backward_params(const Matrix& dy, const Matrix& x, Matrix& dw, std::vector<double>& db) {
    const int t_len = dy.rows, out = dy.cols, in = x.cols;
    #pragma omp parallel for schedule(static)
    for (int o = 0; o < out; ++o) {
        double* dwr = dw.row(o);
        double acc_b = 0.0;
        for (int t = 0; t < t_len; ++t) {
            const double g = dy.at(t, o);
            acc_b += g;
            const double* xr = x.row(t);
            for (int i = 0; i < in; ++i) dwr[i] += g * xr[i];
        }
        db[o] += acc_b;
    }
}

void conv1d_forward(const Matrix& x, const Matrix& w, const std::vector<double>& b,
                    int dilation, bool causal, Matrix& y) {
    const int t_len = x.rows, cin = x.cols, cout = w.rows;
    y = Matrix(t_len, cout);
    #pragma omp parallel for schedule(static)
    for (int t = 0; t < t_len; ++t) {
        double* yr = y.row(t);
        for (int co = 0; co < cout; ++co) yr[co] = b[co];
        for (int tap = 0; tap < 3; ++tap) {
            const int src = t + tap_offset(tap, dilation, causal);
            if (src < 0 || src >= t_len) continue;
            const double* xr = x.row(src);
            for (int co = 0; co < cout; ++co) {
                const double* wr = w.row(co) + tap * cin;
                double acc = 0.0;
                for (int ci = 0; ci < cin; ++ci) acc += wr[ci] * xr[ci];
                yr[co] += acc;
            }
        }
    }
}

void conv1d_backward_input(const Matrix& dy, const Matrix& w, int dilation, bool causal, Matrix& dx) {
    const int t_len = dy.rows, cout = dy.cols, cin = w.cols / 3;
    dx = Matrix(t_len, cin);
    #pragma omp parallel for schedule(static)
    for (int t = 0; t < t_len; ++t) {
        double* dxr = dx.row(t);
        for (int tap = 0; tap < 3; ++tap) {
            const int dst = t - tap_offset(tap, dilation, causal);
            if (dst < 0 || dst >= t_len) continue;
            const double* dyr = dy.row(dst);
            for (int co = 0; co < cout; ++co) {
                const double g = dyr[co];
                const double* wr = w.row(co) + tap * cin;
                for (int ci = 0; ci < cin; ++ci) dxr[ci] += g * wr[ci];
            }
        }
    }
}

void conv1d_backward_params(const Matrix& dy, const Matrix& x, int dilation, bool causal,
                            Matrix& dw, std::vector<double>& db) {
    const int t_len = dy.rows, cout = dy.cols, cin = x.cols;
    #pragma omp parallel for schedule(static)
    for (int co = 0; co < cout; ++co) {
        double* dwr = dw.row(co);
        double acc_b = 0.0;
        for (int t = 0; t < t_len; ++t) {
            const double g = dy.at(t, co);
            acc_b += g;
            for (int tap = 0; tap < 3; ++tap) {
                const int src = t + tap_offset(tap, dilation, causal);
                if (src < 0 || src >= t_len) continue;
                const double* xr = x.row(src);
                double* dwt = dwr + tap * cin;
                for (int ci = 0; ci < cin; ++ci) dwt[ci] += g * xr[ci];
            }
        }
        db[co] += acc_b;
    }
}

void relu_forward(const Matrix& x, Matrix& y) {
    y = Matrix(x.rows, x.cols);
    const long n = static_cast<long>(x.data.size());
    #pragma omp parallel for schedule(static)
    for (long i = 0; i < n; ++i) y.data[i] = x.data[i] > 0.0 ? x.data[i] : 0.0;
}

void relu_backward(const Matrix& dy, const Matrix& x, Matrix& dx) {
    dx = Matrix(x.rows, x.cols);
    const long n = static_cast<long>(x.data.size());
    #pragma omp parallel for schedule(static)
    for (long i = 0; i < n; ++i) dx.data[i] = x.data[i] > 0.0 ? dy.data[i] : 0.0;
}

void dropout_forward(const Matrix& x, const std::vector<uint8_t>& mask, double rate, Matrix& y) {
    y = Matrix(x.rows, x.cols);
    const double scale = 1.0 / (1.0 - rate);
    const long n = static_cast<long>(x.data.size());
    #pragma omp parallel for schedule(static)
    for (long i = 0; i < n; ++i) y.data[i] = mask[i] ? x.data[i] * scale : 0.0;
}

void dropout_backward(const Matrix& dy, const std::vector<uint8_t>& mask, double rate, Matrix& dx) {
    dx = Matrix(dy.rows, dy.cols);
    const double scale = 1.0 / (1.0 - rate);
    const long n = static_cast<long>(dy.data.size());
    #pragma omp parallel for schedule(static)
    for (long i = 0; i < n; ++i) dx.data[i] = mask[i] ? dy.data[i] * scale : 0.0;
}

void softmax_rows(const Matrix& logits, Matrix& probs) {
    probs = Matrix(logits.rows, logits.cols);
    const int c_len = logits.cols;
    #pragma omp parallel for schedule(static)
    for (int t = 0; t < logits.rows; ++t) {
        const double* zr = logits.row(t);
        double* pr = probs.row(t);
        double zmax = zr[0];
        for (int c = 1; c < c_len; ++c) zmax = std::max(zmax, zr[c]);
        double sum = 0.0;
        for (int c = 0; c < c_len; ++c) {
            pr[c] = std::exp(zr[c] - zmax);
            sum += pr[c];
        }
        const double inv = 1.0 / sum;
        for (int c = 0; c < c_len; ++c) pr[c] *= inv;
    }
}

void softmax_backward(const Matrix& dprobs, const Matrix& probs, Matrix& dlogits) {
    dlogits = Matrix(probs.rows, probs.cols);
    const int c_len = probs.cols;
    #pragma omp parallel for schedule(static)
    for (int t = 0; t < probs.rows; ++t) {
        const double* dp = dprobs.row(t);
        const double* p = probs.row(t);
        double* dz = dlogits.row(t);
        double dot = 0.0;
        for (int c = 0; c < c_len; ++c) dot += dp[c] * p[c];
        for (int c = 0; c < c_len; ++c) dz[c] = p[c] * (dp[c] - dot);
    }
}

}  // namespace omp

// ---------------------------------------------------------------------------
// dispatch
// ---------------------------------------------------------------------------

#define UATD_DISPATCH(fn, ...)              \
    do {                                    \
        if (use_parallel())                 \
            omp::fn(__VA_ARGS__);           \
        else                                \
            serial::fn(__VA_ARGS__);        \
    } while (0)

void dense_forward(const Matrix& x, const Matrix& w, const std::vector<double>& b, Matrix& y) {
    UATD_DISPATCH(dense_forward, x, w, b, y);
}
void dense_backward_input(const Matrix& dy, const Matrix& w, Matrix& dx) {
    UATD_DISPATCH(dense_backward_input, dy, w, dx);
}
void dense_backward_params(const Matrix& dy, const Matrix& x, Matrix& dw, std::vector<double>& db) {
    UATD_DISPATCH(dense_backward_params, dy, x, dw, db);
}
void conv1d_forward(const Matrix& x, const Matrix& w, const std::vector<double>& b,
                    int dilation, bool causal, Matrix& y) {
    UATD_DISPATCH(conv1d_forward, x, w, b, dilation, causal, y);
}
void conv1d_backward_input(const Matrix& dy, const Matrix& w, int dilation, bool causal, Matrix& dx) {
    UATD_DISPATCH(conv1d_backward_input, dy, w, dilation, causal, dx);
}
void conv1d_backward_params(const Matrix& dy, const Matrix& x, int dilation, bool causal,
                            Matrix& dw, std::vector<double>& db) {
    UATD_DISPATCH(conv1d_backward_params, dy, x, dilation, causal, dw, db);
}
void relu_forward(const Matrix& x, Matrix& y) { UATD_DISPATCH(relu_forward, x, y); }
void relu_backward(const Matrix& dy, const Matrix& x, Matrix& dx) {
    UATD_DISPATCH(relu_backward, dy, x, dx);
}
void dropout_forward(const Matrix& x, const std::vector<uint8_t>& mask, double rate, Matrix& y) {
    UATD_DISPATCH(dropout_forward, x, mask, rate, y);
}
void dropout_backward(const Matrix& dy, const std::vector<uint8_t>& mask, double rate, Matrix& dx) {
    UATD_DISPATCH(dropout_backward, dy, mask, rate, dx);
}
void softmax_rows(const Matrix& logits, Matrix& probs) { UATD_DISPATCH(softmax_rows, logits, probs); }
void softmax_backward(const Matrix& dprobs, const Matrix& probs, Matrix& dlogits) {
    UATD_DISPATCH(softmax_backward, dprobs, probs, dlogits);
}

#undef UATD_DISPATCH

}  // namespace uatd::kernels
