#pragma once

#include <cassert>
#include <cmath>
#include <cstddef>
#include <vector>

namespace occrec {

using Vec = std::vector<double>;

inline double dot(const Vec& a, const Vec& b) {
    assert(a.size() == b.size());
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double squared_norm(const Vec& a) { return dot(a, a); }

inline double norm(const Vec& a) { return std::sqrt(squared_norm(a)); }

// Convention: cosine of anything against a zero vector is 0.
inline double cosine(const Vec& a, const Vec& b) {
    const double na = norm(a);
    const double nb = norm(b);
    if (na == 0.0 || nb == 0.0) return 0.0;
    return dot(a, b) / (na * nb);
}

inline void axpy(double alpha, const Vec& x, Vec& y) {
    assert(x.size() == y.size());
    for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

inline Vec scaled(const Vec& x, double alpha) {
    Vec out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = alpha * x[i];
    return out;
}

inline bool all_finite(const Vec& x) {
    for (double v : x)
        if (!std::isfinite(v)) return false;
    return true;
}

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// Non-owning row-major matrix view over flat parameter storage.
struct MatView {
    double* data = nullptr;
    int rows = 0;
    int cols = 0;
    double& at(int r, int c) const { return data[static_cast<std::size_t>(r) * cols + c]; }
};

struct ConstMatView {
    const double* data = nullptr;
    int rows = 0;
    int cols = 0;
    double at(int r, int c) const { return data[static_cast<std::size_t>(r) * cols + c]; }
};

// out = M x
inline void matvec(ConstMatView m, const Vec& x, Vec& out) {
    assert(static_cast<int>(x.size()) == m.cols);
    out.assign(m.rows, 0.0);
    for (int r = 0; r < m.rows; ++r) {
        const double* row = m.data + static_cast<std::size_t>(r) * m.cols;
        double s = 0.0;
        for (int c = 0; c < m.cols; ++c) s += row[c] * x[c];
        out[r] = s;
    }
}

// out = M^T x
inline void mat_t_vec(ConstMatView m, const Vec& x, Vec& out) {
    assert(static_cast<int>(x.size()) == m.rows);
    out.assign(m.cols, 0.0);
    for (int r = 0; r < m.rows; ++r) {
        const double* row = m.data + static_cast<std::size_t>(r) * m.cols;
        const double xr = x[r];
        for (int c = 0; c < m.cols; ++c) out[c] += row[c] * xr;
    }
}

// M += u v^T
inline void add_outer(MatView m, const Vec& u, const Vec& v) {
    assert(static_cast<int>(u.size()) == m.rows && static_cast<int>(v.size()) == m.cols);
    for (int r = 0; r < m.rows; ++r) {
        double* row = m.data + static_cast<std::size_t>(r) * m.cols;
        const double ur = u[r];
        for (int c = 0; c < m.cols; ++c) row[c] += ur * v[c];
    }
}

struct SoftmaxCE {
    double loss = 0.0;
    Vec grad_logits;  // softmax(z) - onehot(label)
};

inline SoftmaxCE softmax_cross_entropy(const Vec& logits, int label) {
    assert(label >= 0 && label < static_cast<int>(logits.size()));
    double zmax = logits[0];
    for (double z : logits) zmax = std::max(zmax, z);
    double sum = 0.0;
    for (double z : logits) sum += std::exp(z - zmax);
    const double lse = zmax + std::log(sum);

    SoftmaxCE out;
    out.loss = lse - logits[label];
    out.grad_logits.resize(logits.size());
    for (std::size_t i = 0; i < logits.size(); ++i)
        out.grad_logits[i] = std::exp(logits[i] - lse);
    out.grad_logits[label] -= 1.0;
    return out;
}

}  // namespace occrec
