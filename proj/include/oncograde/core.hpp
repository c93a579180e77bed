#ifndef ONCOGRADE_CORE_HPP
#define ONCOGRADE_CORE_HPP

// Deterministic numeric substrate shared by every other module: seeded
// random streams, a finite-only row-major matrix, basic statistics and the
// tie-broken argmax used for every class decision.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <functional>
#include <numbers>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

namespace oncograde {

inline constexpr const char* kVersion = "1.0.0";

/// Number of target classes (Low, Medium, High).
inline constexpr int kNumClasses = 3;

using Label = int;
using Labels = std::vector<Label>;
using Index = std::size_t;
using IndexList = std::vector<Index>;

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Random streams
// ---------------------------------------------------------------------------

inline constexpr std::uint64_t kGoldenGamma = 0x9e3779b97f4a7c15ULL;

/// splitmix64 output finalizer.
constexpr std::uint64_t splitmix64_mix(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// First output of a splitmix64 generator seeded with `x`.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    return splitmix64_mix(x + kGoldenGamma);
}

/// A splitmix64 stream. Copying a stream forks it: both copies produce the
/// same sequence from that point on, so pass by reference when the caller
/// must observe the advance.
class RngStream {
public:
    explicit constexpr RngStream(std::uint64_t seed = 0) noexcept : state_(seed), origin_seed_(seed) {}

    /// Independent stream for task `index` of a job seeded with `seed`.
    static constexpr RngStream derive(std::uint64_t seed, std::uint64_t index) noexcept {
        return RngStream(splitmix64(seed ^ (index * kGoldenGamma)));
    }

    /// Sub-stream of this stream's origin seed; does not advance this stream.
    [[nodiscard]] constexpr RngStream derive(std::uint64_t index) const noexcept {
        return derive(origin_seed_, index);
    }

    constexpr std::uint64_t next_u64() noexcept {
        state_ += kGoldenGamma;
        return splitmix64_mix(state_);
    }

    /// Uniform real in [0, 1) with 53 random bits.
    constexpr double uniform() noexcept {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    /// Uniform integer in [0, n). n must be positive.
    std::uint64_t uniform_index(std::uint64_t n) noexcept {
        const auto wide = static_cast<unsigned __int128>(next_u64()) * n;
        return static_cast<std::uint64_t>(wide >> 64);
    }

    /// Standard normal via Box-Muller (one draw per call, the sine branch is
    /// discarded so the stream position stays a simple function of call count).
    double normal() noexcept {
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    [[nodiscard]] constexpr std::uint64_t state() const noexcept { return state_; }
    [[nodiscard]] constexpr std::uint64_t origin_seed() const noexcept { return origin_seed_; }

private:
    std::uint64_t state_;
    std::uint64_t origin_seed_;
};

inline double rng_uniform(RngStream& stream) noexcept { return stream.uniform(); }

/// Fisher-Yates permutation driven by `stream`.
inline IndexList shuffle(IndexList indices, RngStream& stream) {
    for (std::size_t i = indices.size(); i > 1; --i) {
        const auto j = static_cast<std::size_t>(stream.uniform_index(i));
        std::swap(indices[i - 1], indices[j]);
    }
    return indices;
}

inline IndexList iota_indices(std::size_t n) {
    IndexList out(n);
    std::iota(out.begin(), out.end(), Index{0});
    return out;
}

// ---------------------------------------------------------------------------
// Statistics
// ---------------------------------------------------------------------------

/// Index of the maximum; the lowest index wins among equal maxima.
inline std::size_t argmax_tiebreak_low(std::span<const double> values) {
    if (values.empty()) throw Error("empty input");
    std::size_t best = 0;
    for (std::size_t i = 1; i < values.size(); ++i) {
        if (values[i] > values[best]) best = i;
    }
    return best;
}

struct ColumnStats {
    double mean = 0.0;
    double variance = 0.0;  // population (divide by n)
};

inline ColumnStats column_stats(std::span<const double> col) {
    if (col.empty()) throw Error("column_stats: empty input");
    const double n = static_cast<double>(col.size());
    double sum = 0.0;
    for (double v : col) sum += v;
    const double mean = sum / n;
    double ss = 0.0;
    for (double v : col) ss += (v - mean) * (v - mean);
    return {mean, ss / n};
}

// ---------------------------------------------------------------------------
// NumMatrix
// ---------------------------------------------------------------------------

/// Row-major matrix of finite reals.
class NumMatrix {
public:
    NumMatrix() = default;

    NumMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {
        if (!std::isfinite(fill)) throw Error("NumMatrix: non-finite value");
    }

    NumMatrix(std::size_t rows, std::size_t cols, std::vector<double> data)
        : rows_(rows), cols_(cols), data_(std::move(data)) {
        if (data_.size() != rows_ * cols_) throw Error("NumMatrix: data length does not match shape");
        for (double v : data_) {
            if (!std::isfinite(v)) throw Error("NumMatrix: non-finite value");
        }
    }

    static NumMatrix from_rows(const std::vector<std::vector<double>>& rows) {
        if (rows.empty()) return {};
        const std::size_t cols = rows.front().size();
        std::vector<double> data;
        data.reserve(rows.size() * cols);
        for (const auto& r : rows) {
            if (r.size() != cols) throw Error("NumMatrix: ragged rows");
            data.insert(data.end(), r.begin(), r.end());
        }
        return NumMatrix(rows.size(), cols, std::move(data));
    }

    [[nodiscard]] std::size_t rows() const noexcept { return rows_; }
    [[nodiscard]] std::size_t cols() const noexcept { return cols_; }
    [[nodiscard]] bool empty() const noexcept { return rows_ == 0 || cols_ == 0; }

    double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

    /// Writes must stay finite; `set` checks, the raw reference does not.
    double& at(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }

    void set(std::size_t r, std::size_t c, double v) {
        if (!std::isfinite(v)) throw Error("NumMatrix: non-finite value");
        data_[r * cols_ + c] = v;
    }

    [[nodiscard]] std::span<const double> row(std::size_t r) const noexcept {
        return {data_.data() + r * cols_, cols_};
    }

    [[nodiscard]] std::vector<double> column(std::size_t c) const {
        std::vector<double> out(rows_);
        for (std::size_t r = 0; r < rows_; ++r) out[r] = data_[r * cols_ + c];
        return out;
    }

    [[nodiscard]] const std::vector<double>& data() const noexcept { return data_; }

    void append_row(std::span<const double> values) {
        if (rows_ == 0 && cols_ == 0) cols_ = values.size();
        if (values.size() != cols_) throw Error("NumMatrix: row width mismatch");
        for (double v : values) {
            if (!std::isfinite(v)) throw Error("NumMatrix: non-finite value");
        }
        data_.insert(data_.end(), values.begin(), values.end());
        ++rows_;
    }

    /// Copies the listed rows, in the given order (repeats allowed).
    [[nodiscard]] NumMatrix select_rows(std::span<const Index> indices) const {
        NumMatrix out;
        out.cols_ = cols_;
        out.rows_ = indices.size();
        out.data_.reserve(indices.size() * cols_);
        for (Index i : indices) {
            if (i >= rows_) throw Error("NumMatrix: row index out of range");
            const auto r = row(i);
            out.data_.insert(out.data_.end(), r.begin(), r.end());
        }
        return out;
    }

    /// Same rows with `extra` columns appended on the right.
    [[nodiscard]] NumMatrix with_columns(const std::vector<std::vector<double>>& extra) const {
        for (const auto& c : extra) {
            if (c.size() != rows_) throw Error("NumMatrix: appended column length mismatch");
        }
        const std::size_t new_cols = cols_ + extra.size();
        std::vector<double> data;
        data.reserve(rows_ * new_cols);
        for (std::size_t r = 0; r < rows_; ++r) {
            const auto src = row(r);
            data.insert(data.end(), src.begin(), src.end());
            for (const auto& c : extra) data.push_back(c[r]);
        }
        return NumMatrix(rows_, new_cols, std::move(data));
    }

    /// Rows of `a` followed by rows of `b`.
    static NumMatrix vstack(const NumMatrix& a, const NumMatrix& b) {
        if (a.rows() == 0) return b;
        if (b.rows() == 0) return a;
        if (a.cols() != b.cols()) throw Error("NumMatrix: vstack column mismatch");
        std::vector<double> data = a.data_;
        data.insert(data.end(), b.data_.begin(), b.data_.end());
        return NumMatrix(a.rows() + b.rows(), a.cols(), std::move(data));
    }

    friend bool operator==(const NumMatrix&, const NumMatrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

inline Labels select_labels(const Labels& y, std::span<const Index> indices) {
    Labels out;
    out.reserve(indices.size());
    for (Index i : indices) out.push_back(y.at(i));
    return out;
}

inline void require_labels(const Labels& y) {
    for (Label v : y) {
        if (v < 0 || v >= kNumClasses) throw Error("label out of range: " + std::to_string(v));
    }
}

// ---------------------------------------------------------------------------
// Worker pool
// ---------------------------------------------------------------------------

namespace detail {
inline std::atomic<int>& worker_limit_slot() {
    static std::atomic<int> slot{-1};
    return slot;
}
inline thread_local bool inside_parallel_region = false;
}  // namespace detail

/// Upper bound on worker threads. 0 means run everything on the calling
/// thread. Defaults to ONCOGRADE_THREADS (unset or unparsable = 0).
inline int worker_limit() {
    int v = detail::worker_limit_slot().load();
    if (v < 0) {
        v = 0;
        if (const char* env = std::getenv("ONCOGRADE_THREADS")) {
            char* end = nullptr;
            const long parsed = std::strtol(env, &end, 10);
            if (end != env && parsed > 0) v = static_cast<int>(std::min(parsed, 256L));
        }
        detail::worker_limit_slot().store(v);
    }
    return v;
}

inline void set_worker_limit(int n) { detail::worker_limit_slot().store(std::max(n, 0)); }

/// Runs body(i) for i in [0, n). Tasks must write only to their own slot;
/// results are then independent of scheduling. Nested calls run inline. If
/// any task throws, the exception of the lowest failing index is rethrown.
inline void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body) {
    const int limit = worker_limit();
    if (limit <= 1 || n <= 1 || detail::inside_parallel_region) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(limit), n);
    std::vector<std::exception_ptr> errors(n);
    std::atomic<std::size_t> next{0};
    auto drain = [&] {
        detail::inside_parallel_region = true;
        for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
            try {
                body(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
        detail::inside_parallel_region = false;
    };
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(drain);
    for (auto& t : pool) t.join();
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

}  // namespace oncograde

#endif  // ONCOGRADE_CORE_HPP
