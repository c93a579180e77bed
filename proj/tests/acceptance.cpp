// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits non-zero when any fails. Usage: acceptance [data_dir]
#include "oncograde/cli.hpp"
#include "oracles.hpp"

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>

using namespace oncograde;
namespace fs = std::filesystem;

#ifndef ONCOGRADE_TEST_DATA
#define ONCOGRADE_TEST_DATA "tests/data"
#endif

namespace {

struct Verdict {
    bool pass;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(double v, int prec = 4) {
    std::ostringstream s;
    s.precision(prec);
    s << std::fixed << v;
    return s.str();
}

std::string sci(double v) {
    std::ostringstream s;
    s.precision(2);
    s << std::scientific << v;
    return s.str();
}

int invoke(std::vector<std::string> args) {
    args.insert(args.begin(), "oncograde");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
    if (code != 0) std::cerr << err.str();
    return code;
}

Verdict split_arithmetic() {
    const auto t0 = Clock::now();
    const Dataset d = synth_generate(1000, 42, {0.303, 0.332, 0.365});
    const auto counts = class_counts(d);
    const PreparedData p = run_pipeline(d, {}, 42);
    const double secs = seconds_since(t0);
    const std::size_t total = p.y_train.size() + p.y_test.size();
    const bool ok = counts == ClassCounts{303, 332, 365} && total == 1095 && p.y_train.size() == 876 &&
                    p.y_test.size() == 219 && secs < 5.0;
    return {ok, "counts " + std::to_string(counts[0]) + "/" + std::to_string(counts[1]) + "/" +
                    std::to_string(counts[2]) + ", resampled " + std::to_string(total) + ", train " +
                    std::to_string(p.y_train.size()) + ", test " + std::to_string(p.y_test.size()) + ", " +
                    fmt(secs, 2) + " s"};
}

Verdict model_ordering() {
    const auto t0 = Clock::now();
    set_worker_limit(0);
    const Dataset d = synth_generate(1000, 42);
    const PreparedData p = run_pipeline(d, {}, 42);
    Hyperparams hp;
    hp.seed = 42;
    std::map<std::string, double> f1;
    for (const char* name : {"dnn", "voting", "bagging", "svm_sigmoid"}) {
        const auto model = train_model(spec_from_name(name, hp), p.X_train, p.y_train,
                                       RngStream::derive(hp.seed, cli::detail::kModelTask));
        f1[name] = evaluate_model(model, p.X_test, p.y_test).macro.f1;
    }
    const double secs = seconds_since(t0);
    const double best3_min = std::min({f1["dnn"], f1["voting"], f1["bagging"]});
    const bool ok = best3_min - f1["svm_sigmoid"] >= 0.15 && best3_min >= 0.90 && secs < 120.0;
    std::string detail;
    for (const auto& [k, v] : f1) detail += k + "=" + fmt(v) + " ";
    return {ok, "macro-F1 " + detail + "(" + fmt(secs, 1) + " s)"};
}

Verdict smo_correctness() {
    RngStream g(2024);
    double worst_eq = 0.0, worst_kkt = 0.0;
    bool box = true, converged = true;
    const double tol = SmoOptions{}.tol;
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t n = 4 + g.uniform_index(37), d = 1 + g.uniform_index(4);
        NumMatrix X(n, d);
        std::vector<int> y(n);
        for (std::size_t i = 0; i < n; ++i) {
            y[i] = g.uniform() < 0.5 ? -1 : 1;
            for (std::size_t k = 0; k < d; ++k) X.set(i, k, g.normal() + 0.7 * y[i]);
        }
        y[0] = -1;
        y[1] = 1;
        const KernelSpec kernel = trial % 2 ? KernelSpec{KernelKind::rbf, 0.2 + g.uniform()} : KernelSpec{KernelKind::linear};
        const double C = 0.1 + 5 * g.uniform();
        const auto K = gram_matrix(kernel, X);
        const auto res = smo_solve(K, y, C);
        converged = converged && res.converged;
        double eq = 0.0;
        std::vector<double> f(n, res.bias);
        for (std::size_t i = 0; i < n; ++i) {
            box = box && res.alphas[i] >= 0.0 && res.alphas[i] <= C;
            eq += res.alphas[i] * y[i];
            for (std::size_t j = 0; j < n; ++j) f[i] += res.alphas[j] * y[j] * K[j * n + i];
        }
        worst_eq = std::max(worst_eq, std::abs(eq));
        worst_kkt = std::max(worst_kkt, oracle::kkt_violation(res.alphas, y, f, C));
    }
    const auto X1 = NumMatrix::from_rows({{-1}, {1}});
    const auto r1 = smo_solve(gram_matrix({KernelKind::linear}, X1), {-1, 1}, 1.0);
    const bool analytic =
        std::abs(r1.alphas[0] - 0.5) < 1e-6 && std::abs(r1.alphas[1] - 0.5) < 1e-6 && std::abs(r1.bias) < 1e-6;
    const bool ok = converged && box && worst_eq < 1e-9 && worst_kkt <= tol && analytic;
    return {ok, "50 problems, max |sum a y| " + sci(worst_eq) + ", max KKT violation " + fmt(worst_kkt, 6) +
                    " (tol " + fmt(tol, 4) + "), box " + (box ? "ok" : "violated") + ", 1-D case " +
                    (analytic ? "ok" : "wrong")};
}

Verdict gradient_check() {
    RngStream g(77);
    double worst = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t d = 1 + g.uniform_index(5), batch = 1 + g.uniform_index(12);
        std::vector<std::size_t> sizes{d};
        const std::size_t depth = 1 + g.uniform_index(3);
        for (std::size_t l = 0; l < depth; ++l) sizes.push_back(2 + g.uniform_index(6));
        sizes.push_back(3);
        RngStream init = g.derive(static_cast<std::uint64_t>(trial));
        MlpNetwork net = init_mlp(sizes, init);
        // Zero init biases put a ReLU exactly on its kink whenever every unit
        // feeding it is dead; the loss has no derivative there. Random biases
        // move the check to generic, differentiable points.
        for (auto& layer : net.layers)
            for (double& b : layer.biases) b = 0.1 * init.normal();
        NumMatrix X(batch, d);
        Labels y(batch);
        for (std::size_t r = 0; r < batch; ++r) {
            for (std::size_t c = 0; c < d; ++c) X.set(r, c, g.normal());
            y[r] = static_cast<Label>(g.uniform_index(3));
        }
        const IndexList rows = iota_indices(batch);
        const auto lg = mlp_loss_gradient(net, X, y, rows);
        const auto params = net.flatten();
        const double eps = 1e-5;
        for (std::size_t k = 0; k < params.size(); ++k) {
            MlpNetwork plus = net, minus = net;
            auto p = params;
            p[k] += eps;
            plus.unflatten(p);
            p[k] -= 2 * eps;
            minus.unflatten(p);
            const double numeric =
                (mlp_loss_gradient(plus, X, y, rows).loss - mlp_loss_gradient(minus, X, y, rows).loss) / (2 * eps);
            const double denom = std::max({std::abs(numeric), std::abs(lg.gradient[k]), 1e-8});
            worst = std::max(worst, std::abs(numeric - lg.gradient[k]) / denom);
        }
    }
    return {worst < 1e-4, "20 configurations, max relative error " + sci(worst)};
}

Verdict smote_geometry() {
    RngStream g(5150);
    double worst = 0.0;
    bool balanced = true, originals = true;
    std::size_t synthetic = 0;
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t d = 1 + g.uniform_index(4);
        Labels y;
        for (int c = 0; c < 3; ++c) y.insert(y.end(), 2 + g.uniform_index(20), c);
        NumMatrix X(y.size(), d);
        for (std::size_t r = 0; r < y.size(); ++r)
            for (std::size_t k = 0; k < d; ++k) X.set(r, k, g.normal() * 2 + y[r]);
        RngStream s = g.derive(static_cast<std::uint64_t>(trial));
        const auto out = smote(X, y, 1 + g.uniform_index(6), s);
        const auto counts = class_counts(out.y);
        balanced = balanced && counts[0] == counts[1] && counts[1] == counts[2];
        for (std::size_t r = 0; r < X.rows(); ++r)
            originals = originals && out.y[r] == y[r] && std::ranges::equal(out.X.row(r), X.row(r));
        for (std::size_t r = X.rows(); r < out.y.size(); ++r, ++synthetic) {
            std::vector<double> same;
            for (std::size_t o = 0; o < X.rows(); ++o)
                if (y[o] == out.y[r]) same.insert(same.end(), X.row(o).begin(), X.row(o).end());
            worst = std::max(worst, oracle::nearest_segment(out.X.row(r).data(), same, d));
        }
    }
    const bool ok = balanced && originals && worst <= 1e-9;
    return {ok, "100 datasets, " + std::to_string(synthetic) + " synthetic rows, max segment distance " +
                    sci(worst) + (balanced ? ", balanced" : ", UNBALANCED")};
}

Verdict metrics_oracle() {
    RngStream g(6006);
    double worst = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t n = 1 + g.uniform_index(80);
        Labels t(n), p(n);
        for (std::size_t i = 0; i < n; ++i) {
            t[i] = static_cast<Label>(g.uniform_index(3));
            p[i] = g.uniform() < 0.5 ? t[i] : static_cast<Label>(g.uniform_index(3));
        }
        const auto m = metrics(confusion(t, p));
        const auto o = oracle::direct_scores(t, p);
        worst = std::max(worst, std::abs(m.accuracy - o.accuracy));
        worst = std::max(worst, std::abs(m.macro.f1 - o.macro_f1));
        for (std::size_t c = 0; c < 3; ++c) {
            worst = std::max({worst, std::abs(m.per_class[c].precision - o.precision[c]),
                              std::abs(m.per_class[c].recall - o.recall[c]), std::abs(m.per_class[c].f1 - o.f1[c])});
        }
    }
    const auto hand = metrics(confusion({0, 0, 1, 1, 2, 2}, {0, 1, 1, 1, 2, 0}));
    const bool hand_ok = std::abs(hand.accuracy - 0.6667) < 1e-4 && std::abs(hand.macro.f1 - 0.6556) < 1e-4;
    return {worst <= 1e-12 && hand_ok, "1000 pairs, max deviation " + sci(worst) + "; hand example accuracy " +
                                           fmt(hand.accuracy) + " macro-F1 " + fmt(hand.macro.f1)};
}

std::map<std::string, std::string> artifact_bytes(const fs::path& dir) {
    std::map<std::string, std::string> out;
    for (const auto& e : fs::directory_iterator(dir)) {
        const auto name = e.path().filename().string();
        if (name == "manifest.json") continue;  // carries wall-clock duration
        out[name] = cli::read_file(e.path());
    }
    return out;
}

Verdict thread_determinism(const fs::path& work) {
    const std::string cfg_path = (work / "threads.json").string();
    cli::ojson cfg = {{"seed", 11},
                      {"data", {{"synthetic", {{"n", 400}}}}},
                      {"model", {{"name", "bagging"}, {"hyperparams", {{"n_estimators", 8}}}}},
                      {"eval", {{"k", 5}, {"sweep", {{"learning_rate", {0.01, 0.1}}, {"min_child_weight", {1, 5, 10}}}}}}};
    std::ofstream(cfg_path) << cfg.dump(2);
    std::size_t compared = 0;
    for (const char* command : {"cv", "sweep", "train"}) {
        std::map<std::string, std::string> seen[2];
        for (int t = 0; t < 2; ++t) {
            const std::string threads = t == 0 ? "0" : "8";
            setenv("ONCOGRADE_THREADS", threads.c_str(), 1);
            const fs::path out = work / (std::string(command) + "_t" + threads);
            if (invoke({command, "--config", cfg_path, "--output-dir", out.string()}) != 0)
                return {false, std::string(command) + " failed with ONCOGRADE_THREADS=" + threads};
            seen[t] = artifact_bytes(out);
        }
        if (seen[0] != seen[1]) return {false, std::string(command) + " artifacts differ between 0 and 8 threads"};
        compared += seen[0].size();
    }
    unsetenv("ONCOGRADE_THREADS");
    set_worker_limit(0);
    return {true, "cv, sweep and bagging train: " + std::to_string(compared) + " artifacts identical at 0 and 8 threads"};
}

Verdict cv_protocol() {
    Labels y;
    for (int c = 0; c < 3; ++c) y.insert(y.end(), 365, c);
    RngStream s = RngStream::derive(42, cli::detail::kCvTask);
    const auto fold = stratified_folds(y, 5, s);
    std::array<std::array<std::size_t, 3>, 5> counts{};
    for (std::size_t r = 0; r < y.size(); ++r) ++counts[fold[r]][static_cast<std::size_t>(y[r])];
    bool ok = true;
    std::string sizes;
    for (const auto& f : counts) {
        const std::size_t total = f[0] + f[1] + f[2];
        ok = ok && total == 219 && f[0] == 73 && f[1] == 73 && f[2] == 73;
        sizes += std::to_string(total) + " ";
    }
    return {ok, "fold sizes " + sizes + "(73 per class each: " + (ok ? "yes" : "no") + ")"};
}

Verdict golden_run(const fs::path& data, const fs::path& work) {
    std::ifstream digests(data / "golden.sha256");
    if (!digests) return {false, "missing golden.sha256"};
    const fs::path out = work / "golden";
    if (invoke({"train", "--config", (data / "golden.json").string(), "--output-dir", out.string()}) != 0)
        return {false, "golden train run failed"};
    std::size_t checked = 0;
    std::vector<std::string> listed;
    std::string hex, name;
    while (digests >> hex >> name) {
        listed.push_back(name);
        if (!fs::exists(out / name)) return {false, name + " was not produced"};
        if (cli::sha256_hex(cli::read_file(out / name)) != hex) return {false, name + " digest differs"};
        ++checked;
    }
    for (const auto& e : fs::directory_iterator(out)) {
        const auto n = e.path().filename().string();
        const bool wanted = n == "metrics.json" || n == "confusion.csv" || e.path().extension() == ".svg";
        if (wanted && std::find(listed.begin(), listed.end(), n) == listed.end()) return {false, n + " has no golden digest"};
    }
    return {checked >= 3, std::to_string(checked) + " digests match"};
}

}  // namespace

int main(int argc, char** argv) {
    const fs::path data = argc > 1 ? fs::path(argv[1]) : fs::path(ONCOGRADE_TEST_DATA);
    const fs::path work = fs::temp_directory_path() / "oncograde_acceptance";
    fs::remove_all(work);
    fs::create_directories(work);
    set_worker_limit(0);

    const std::vector<std::pair<const char*, std::function<Verdict()>>> criteria{
        {"split arithmetic", split_arithmetic},
        {"model ordering", model_ordering},
        {"SMO correctness", smo_correctness},
        {"MLP gradient check", gradient_check},
        {"SMOTE geometry", smote_geometry},
        {"metrics oracle", metrics_oracle},
        {"determinism across thread counts", [&] { return thread_determinism(work); }},
        {"CV protocol", cv_protocol},
        {"golden CLI run", [&] { return golden_run(data, work); }},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Verdict v;
        try {
            v = criteria[i].second();
        } catch (const std::exception& e) {
            v = {false, std::string("threw: ") + e.what()};
        }
        failed += !v.pass;
        std::cout << (v.pass ? "PASS" : "FAIL") << " criterion " << i + 1 << ": " << criteria[i].first << " -- "
                  << v.detail << std::endl;
    }
    fs::remove_all(work);
    return failed == 0 ? 0 : 1;
}
