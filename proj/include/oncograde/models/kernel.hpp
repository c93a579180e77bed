#ifndef ONCOGRADE_MODELS_KERNEL_HPP
#define ONCOGRADE_MODELS_KERNEL_HPP

#include "oncograde/core.hpp"

#include <cmath>
#include <span>
#include <string>

namespace oncograde {

enum class KernelKind { linear, rbf, polynomial, sigmoid };

inline std::string to_string(KernelKind k) {
    switch (k) {
        case KernelKind::linear: return "linear";
        case KernelKind::rbf: return "rbf";
        case KernelKind::polynomial: return "polynomial";
        case KernelKind::sigmoid: return "sigmoid";
    }
    return "?";
}

inline KernelKind parse_kernel_kind(const std::string& s) {
    if (s == "linear") return KernelKind::linear;
    if (s == "rbf") return KernelKind::rbf;
    if (s == "polynomial") return KernelKind::polynomial;
    if (s == "sigmoid") return KernelKind::sigmoid;
    throw Error("unknown kernel '" + s + "'");
}

struct KernelSpec {
    KernelKind kind = KernelKind::rbf;
    double gamma = 1.0;
    int degree = 3;
    double coef0 = 0.0;

    void validate() const {
        if (kind != KernelKind::linear && !(gamma > 0.0 && std::isfinite(gamma)))
            throw Error("kernel gamma must be positive");
        if (kind == KernelKind::polynomial && degree < 1) throw Error("polynomial degree must be at least 1");
    }
};

inline double dot(std::span<const double> x, std::span<const double> z) noexcept {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * z[i];
    return s;
}

/// linear x.z | rbf exp(-g|x-z|^2) | poly (g x.z + c0)^d | sigmoid tanh(g x.z + c0)
inline double kernel_eval(const KernelSpec& spec, std::span<const double> x, std::span<const double> z) {
    if (x.size() != z.size())
        throw Error("kernel_eval: dimension mismatch (" + std::to_string(x.size()) + " vs " +
                    std::to_string(z.size()) + ")");
    switch (spec.kind) {
        case KernelKind::linear: return dot(x, z);
        case KernelKind::rbf: {
            double d2 = 0.0;
            for (std::size_t i = 0; i < x.size(); ++i) d2 += (x[i] - z[i]) * (x[i] - z[i]);
            return std::exp(-spec.gamma * d2);
        }
        case KernelKind::polynomial: {
            const double base = spec.gamma * dot(x, z) + spec.coef0;
            double out = 1.0;
            for (int k = 0; k < spec.degree; ++k) out *= base;
            return out;
        }
        case KernelKind::sigmoid: return std::tanh(spec.gamma * dot(x, z) + spec.coef0);
    }
    return 0.0;
}

/// Gram matrix of the rows of X, row-major n x n.
inline std::vector<double> gram_matrix(const KernelSpec& spec, const NumMatrix& X) {
    const std::size_t n = X.rows();
    std::vector<double> K(n * n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i; j < n; ++j) {
            const double v = kernel_eval(spec, X.row(i), X.row(j));
            K[i * n + j] = v;
            K[j * n + i] = v;
        }
    }
    return K;
}

/// 1 / (n_features * mean per-column population variance); 1 when the
/// training matrix has no variance at all.
inline double gamma_scale(const NumMatrix& X) {
    if (X.rows() == 0 || X.cols() == 0) return 1.0;
    double mean_var = 0.0;
    for (std::size_t c = 0; c < X.cols(); ++c) {
        const auto col = X.column(c);
        mean_var += column_stats(col).variance;
    }
    mean_var /= static_cast<double>(X.cols());
    if (!(mean_var > 0.0)) return 1.0;
    return 1.0 / (static_cast<double>(X.cols()) * mean_var);
}

}  // namespace oncograde

#endif  // ONCOGRADE_MODELS_KERNEL_HPP
