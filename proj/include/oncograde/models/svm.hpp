#ifndef ONCOGRADE_MODELS_SVM_HPP
#define ONCOGRADE_MODELS_SVM_HPP

// Soft-margin SVM trained by sequential minimal optimization, and the
// one-vs-rest wrapper used for the three-level target.
//
// The solver works on the dual
//     max  sum(a) - 1/2 sum_ij a_i a_j y_i y_j K_ij
//     s.t. 0 <= a_i <= C,  sum_i a_i y_i = 0
// and on every iteration optimizes the pair (i, j) chosen by maximal
// violation: i maximises -y_t G_t over the indices that may move up, j is
// the second-order choice among those that may move down. It stops once the
// violation gap m - M drops below tol, which bounds every per-point KKT
// residual by tol once the bias is placed inside [M, m].

#include "oncograde/core.hpp"
#include "oncograde/dataset.hpp"
#include "oncograde/models/kernel.hpp"

#include <limits>
#include <vector>

namespace oncograde {

struct SmoOptions {
    double tol = 1e-3;
    /// 0 picks max(100000, 100 n).
    std::size_t max_iterations = 0;
};

struct SmoResult {
    std::vector<double> alphas;
    double bias = 0.0;
    std::size_t iterations = 0;
    bool converged = false;
};

namespace detail {
inline constexpr double kTau = 1e-12;
}

/// Solves the dual for a precomputed Gram matrix. y holds -1/+1.
inline SmoResult smo_solve(const std::vector<double>& K, const std::vector<int>& y, double C,
                           const SmoOptions& opt = {}) {
    const std::size_t n = y.size();
    if (K.size() != n * n) throw Error("smo_solve: Gram matrix shape mismatch");
    if (!(C > 0.0)) throw Error("SVM C must be positive");
    bool has_pos = false, has_neg = false;
    for (int v : y) {
        if (v == 1) has_pos = true;
        else if (v == -1) has_neg = true;
        else throw Error("binary SVM labels must be -1 or +1");
    }
    if (!has_pos || !has_neg) throw Error("binary SVM needs both classes present");

    auto Q = [&](std::size_t i, std::size_t j) { return static_cast<double>(y[i] * y[j]) * K[i * n + j]; };
    auto is_upper = [&](std::size_t t, const std::vector<double>& a) { return a[t] >= C; };
    auto is_lower = [&](std::size_t t, const std::vector<double>& a) { return a[t] <= 0.0; };
    auto in_up = [&](std::size_t t, const std::vector<double>& a) {
        return y[t] == 1 ? !is_upper(t, a) : !is_lower(t, a);
    };
    auto in_low = [&](std::size_t t, const std::vector<double>& a) {
        return y[t] == 1 ? !is_lower(t, a) : !is_upper(t, a);
    };

    SmoResult res;
    std::vector<double>& a = res.alphas;
    a.assign(n, 0.0);
    std::vector<double> G(n, -1.0);  // gradient of 1/2 a'Qa - e'a
    const std::size_t max_iter = opt.max_iterations ? opt.max_iterations : std::max<std::size_t>(100000, 100 * n);

    while (res.iterations < max_iter) {
        // working set selection
        double gmax = -std::numeric_limits<double>::infinity();
        std::size_t i = n;
        for (std::size_t t = 0; t < n; ++t) {
            if (in_up(t, a) && -y[t] * G[t] > gmax) {
                gmax = -y[t] * G[t];
                i = t;
            }
        }
        double gmax2 = -std::numeric_limits<double>::infinity();
        double best_obj = std::numeric_limits<double>::infinity();
        std::size_t j = n;
        for (std::size_t t = 0; t < n; ++t) {
            if (!in_low(t, a)) continue;
            const double v = y[t] * G[t];
            gmax2 = std::max(gmax2, v);
            if (i == n) continue;
            const double grad_diff = gmax + v;
            if (grad_diff > 0.0) {
                double quad = K[i * n + i] + K[t * n + t] - 2.0 * K[i * n + t];
                if (quad <= 0.0) quad = detail::kTau;
                const double obj = -(grad_diff * grad_diff) / quad;
                if (obj < best_obj) {
                    best_obj = obj;
                    j = t;
                }
            }
        }
        if (i == n || j == n || gmax + gmax2 < opt.tol) {
            res.converged = true;
            break;
        }
        ++res.iterations;

        // analytic two-variable update
        const double old_ai = a[i], old_aj = a[j];
        double quad = K[i * n + i] + K[j * n + j] - 2.0 * K[i * n + j];
        if (quad <= 0.0) quad = detail::kTau;
        if (y[i] != y[j]) {
            const double delta = (-G[i] - G[j]) / quad;
            const double diff = a[i] - a[j];
            a[i] += delta;
            a[j] += delta;
            if (diff > 0.0) {
                if (a[j] < 0.0) { a[j] = 0.0; a[i] = diff; }
            } else {
                if (a[i] < 0.0) { a[i] = 0.0; a[j] = -diff; }
            }
            if (diff > 0.0) {
                if (a[i] > C) { a[i] = C; a[j] = C - diff; }
            } else {
                if (a[j] > C) { a[j] = C; a[i] = C + diff; }
            }
        } else {
            const double delta = (G[i] - G[j]) / quad;
            const double sum = a[i] + a[j];
            a[i] -= delta;
            a[j] += delta;
            if (sum > C) {
                if (a[i] > C) { a[i] = C; a[j] = sum - C; }
            } else {
                if (a[j] < 0.0) { a[j] = 0.0; a[i] = sum; }
            }
            if (sum > C) {
                if (a[j] > C) { a[j] = C; a[i] = sum - C; }
            } else {
                if (a[i] < 0.0) { a[i] = 0.0; a[j] = sum; }
            }
        }
        a[i] = std::clamp(a[i], 0.0, C);
        a[j] = std::clamp(a[j], 0.0, C);
        const double di = a[i] - old_ai, dj = a[j] - old_aj;
        for (std::size_t t = 0; t < n; ++t) G[t] += Q(t, i) * di + Q(t, j) * dj;
    }

    // bias: average over free vectors, else the middle of the feasible interval
    double sum_free = 0.0;
    std::size_t n_free = 0;
    double ub = std::numeric_limits<double>::infinity(), lb = -std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t < n; ++t) {
        const double yg = y[t] * G[t];
        if (is_upper(t, a)) {
            if (y[t] == -1) ub = std::min(ub, yg);
            else lb = std::max(lb, yg);
        } else if (is_lower(t, a)) {
            if (y[t] == 1) ub = std::min(ub, yg);
            else lb = std::max(lb, yg);
        } else {
            ++n_free;
            sum_free += yg;
        }
    }
    const double rho = n_free > 0 ? sum_free / static_cast<double>(n_free) : 0.5 * (ub + lb);
    res.bias = -rho;
    return res;
}

/// Dual objective sum(a) - 1/2 a'Qa.
inline double smo_dual_objective(const std::vector<double>& K, const std::vector<int>& y,
                                 const std::vector<double>& alphas) {
    const std::size_t n = y.size();
    double linear = 0.0, quad = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        linear += alphas[i];
        if (alphas[i] == 0.0) continue;
        for (std::size_t j = 0; j < n; ++j) quad += alphas[i] * alphas[j] * y[i] * y[j] * K[i * n + j];
    }
    return linear - 0.5 * quad;
}

/// A trained two-class machine. Only support vectors are kept.
struct BinarySvm {
    KernelSpec kernel;
    NumMatrix support_vectors;
    std::vector<double> coefficients;  // alpha_i * y_i
    std::vector<std::size_t> support_indices;  // rows of the training matrix
    double bias = 0.0;
    bool converged = true;
    std::size_t iterations = 0;

    [[nodiscard]] double decision(std::span<const double> x) const {
        double f = bias;
        for (std::size_t s = 0; s < coefficients.size(); ++s)
            f += coefficients[s] * kernel_eval(kernel, support_vectors.row(s), x);
        return f;
    }
};

inline BinarySvm make_binary_svm(const NumMatrix& X, const KernelSpec& kernel, const std::vector<int>& y,
                                 const SmoResult& res) {
    BinarySvm m;
    m.kernel = kernel;
    m.bias = res.bias;
    m.converged = res.converged;
    m.iterations = res.iterations;
    for (std::size_t t = 0; t < y.size(); ++t) {
        if (res.alphas[t] > 0.0) {
            m.support_indices.push_back(t);
            m.coefficients.push_back(res.alphas[t] * y[t]);
        }
    }
    m.support_vectors = X.select_rows(m.support_indices);
    return m;
}

inline BinarySvm train_svm_binary(const NumMatrix& X, const std::vector<int>& y, const KernelSpec& kernel,
                                  double C, const SmoOptions& opt = {}) {
    if (X.rows() != y.size()) throw Error("train_svm_binary: row count does not match label count");
    kernel.validate();
    const auto K = gram_matrix(kernel, X);
    return make_binary_svm(X, kernel, y, smo_solve(K, y, C, opt));
}

/// One machine per class (class c = +1). A class absent from the training
/// labels gets a constant decision of -1.
struct SvmOvr {
    std::array<BinarySvm, kNumClasses> machines;
    std::size_t n_features = 0;

    [[nodiscard]] std::array<double, kNumClasses> decisions(std::span<const double> x) const {
        std::array<double, kNumClasses> out{};
        for (std::size_t c = 0; c < kNumClasses; ++c) out[c] = machines[c].decision(x);
        return out;
    }
};

inline SvmOvr train_svm_ovr(const NumMatrix& X, const Labels& y, const KernelSpec& kernel, double C,
                            const SmoOptions& opt = {}) {
    if (X.rows() != y.size()) throw Error("train_svm_ovr: row count does not match label count");
    kernel.validate();
    const auto counts = class_counts(y);
    int present = 0;
    for (auto c : counts) present += c > 0 ? 1 : 0;
    if (present < 2) throw Error("SVM training needs at least 2 classes");

    const auto K = gram_matrix(kernel, X);
    SvmOvr model;
    model.n_features = X.cols();
    for (std::size_t c = 0; c < kNumClasses; ++c) {
        if (counts[c] == 0 || counts[c] == y.size()) {
            model.machines[c].kernel = kernel;
            model.machines[c].support_vectors = NumMatrix(0, X.cols());
            model.machines[c].bias = counts[c] == 0 ? -1.0 : 1.0;
            continue;
        }
        std::vector<int> binary(y.size());
        for (std::size_t t = 0; t < y.size(); ++t) binary[t] = static_cast<std::size_t>(y[t]) == c ? 1 : -1;
        model.machines[c] = make_binary_svm(X, kernel, binary, smo_solve(K, binary, C, opt));
    }
    return model;
}

}  // namespace oncograde

#endif  // ONCOGRADE_MODELS_SVM_HPP
