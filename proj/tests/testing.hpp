#pragma once

// Shared helpers for the unit-test binaries: scratch directories, randomized
// array filling, a finite-difference gradient comparator for tape programs,
// and an error-kind catcher.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "ecnp/array.hpp"
#include "ecnp/error.hpp"
#include "ecnp/rng.hpp"
#include "ecnp/tape.hpp"

namespace ecnp::testing {

/// Scratch directory under the system temp root, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        path_ = std::filesystem::temp_directory_path() /
                ("ecnp_test_" + tag + "_" + std::to_string(next_id()));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::string str() const { return path_.string(); }
    std::string file(const std::string& name) const { return (path_ / name).string(); }

private:
    static uint64_t next_id() {
        static uint64_t id = 0;
        return ++id;
    }
    std::filesystem::path path_;
};

inline Array random_array(Shape shape, CounterRng& rng, double lo = -1.0, double hi = 1.0) {
    Array a = Array::zeros(std::move(shape));
    for (int64_t i = 0; i < a.size(); ++i) a[i] = rng.uniform(lo, hi);
    return a;
}

/// A tape program under test: given the tape and the leaf ids of the inputs
/// (in order), return the output node (any shape).
using TapeProgram = std::function<NodeId(Tape&, const std::vector<NodeId>&)>;

/// Compare reverse-mode gradients of sum(w .* f(inputs)) against central
/// finite differences, coordinate by coordinate. The weights w are fixed
/// pseudo-random values so the adjoint seen by f is non-uniform. Inputs must
/// keep the program away from kinks (relu/abs at 0, clamp thresholds, min
/// ties); callers choose them accordingly.
inline void check_grads(const std::vector<Array>& inputs, const TapeProgram& program,
                        double tol = 1e-6) {
    // Contract the output against fixed weights so that every output
    // coordinate receives a distinct adjoint.
    Array weights;
    {
        Tape probe;
        std::vector<NodeId> leafs;
        for (const Array& a : inputs) leafs.push_back(probe.leaf(a.clone()));
        const Array& out = probe.value(program(probe, leafs));
        CounterRng wrng(0xC0FFEEULL, static_cast<uint64_t>(out.size()));
        weights = Array::zeros(out.shape());
        for (int64_t i = 0; i < weights.size(); ++i) weights[i] = wrng.uniform(0.5, 1.5);
    }
    auto weighted = [&](Tape& tape, const std::vector<NodeId>& leafs) {
        return tape.mul(program(tape, leafs), tape.constant(weights.clone()));
    };

    std::vector<Array> ad;
    {
        Tape tape;
        std::vector<NodeId> leafs;
        for (const Array& a : inputs) leafs.push_back(tape.leaf(a.clone()));
        const NodeId root = tape.sum_all(weighted(tape, leafs));
        const std::vector<Array> adj = tape.backward(root);
        for (size_t i = 0; i < inputs.size(); ++i) {
            const Array& g = adj[static_cast<size_t>(leafs[i])];
            ad.push_back(g.empty() ? Array::zeros(inputs[i].shape()) : g.clone());
        }
    }

    auto value_at = [&](const std::vector<Array>& xs) {
        Tape tape;
        std::vector<NodeId> leafs;
        for (const Array& a : xs) leafs.push_back(tape.leaf(a.clone()));
        const NodeId root = tape.sum_all(weighted(tape, leafs));
        return tape.value(root)[0];
    };

    std::vector<Array> xs;
    for (const Array& a : inputs) xs.push_back(a.clone());
    for (size_t i = 0; i < xs.size(); ++i) {
        for (int64_t j = 0; j < xs[i].size(); ++j) {
            const double orig = xs[i][j];
            const double h = 1e-5 * std::max(1.0, std::abs(orig));
            xs[i][j] = orig + h;
            const double up = value_at(xs);
            xs[i][j] = orig - h;
            const double down = value_at(xs);
            xs[i][j] = orig;
            const double fd = (up - down) / (2.0 * h);
            const double got = ad[i][j];
            const double err = std::abs(got - fd) / std::max({1.0, std::abs(got), std::abs(fd)});
            if (!(err <= tol))
                raise(Error::Kind::DomainError,
                      "gradient mismatch at input " + std::to_string(i) + "[" +
                          std::to_string(j) + "]: ad=" + std::to_string(got) +
                          " fd=" + std::to_string(fd));
        }
    }
}

/// Run f; if it throws an ecnp::Error, hand back the kind.
template <typename F>
std::optional<Error::Kind> thrown_kind(F&& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.kind();
    }
    return std::nullopt;
}

}  // namespace ecnp::testing
