#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <set>
#include <utility>
#include <vector>

#include "doctest.h"
#include "ecnp/error.hpp"
#include "ecnp/mnist.hpp"
#include "ecnp/rng.hpp"
#include "ecnp/tasks.hpp"
#include "testing.hpp"

using namespace ecnp;
using ecnp::testing::TempDir;
using ecnp::testing::thrown_kind;

namespace {

bool same_bytes(const Array& a, const Array& b) {
    return a.shape() == b.shape() &&
           std::memcmp(a.data(), b.data(), static_cast<size_t>(a.size()) * sizeof(double)) == 0;
}

bool same_task(const Task& a, const Task& b) {
    return same_bytes(a.xc, b.xc) && same_bytes(a.yc, b.yc) && same_bytes(a.xt, b.xt) &&
           same_bytes(a.yt, b.yt);
}

/// Least-squares fit of y = p sin(x) + q cos(x) over the task's targets.
/// Any A sin(x + phi) lies exactly in this basis with p = A cos(phi),
/// q = A sin(phi), so the residual isolates generator correctness and the
/// recovered (A, phi) expose the amplitude/phase ranges.
struct SinusoidFit {
    double amplitude;
    double sin_phi;  // q / A, sign reveals whether phi stayed in [0, pi]
    double max_residual;
};

SinusoidFit fit_sinusoid(const Task& task) {
    double sss = 0.0, ssc = 0.0, scc = 0.0, ssy = 0.0, scy = 0.0;
    for (int64_t i = 0; i < task.n_target(); ++i) {
        const double s = std::sin(task.xt[i]), c = std::cos(task.xt[i]), y = task.yt[i];
        sss += s * s;
        ssc += s * c;
        scc += c * c;
        ssy += s * y;
        scy += c * y;
    }
    const double det = sss * scc - ssc * ssc;
    REQUIRE(std::abs(det) > 1e-9);
    const double p = (scc * ssy - ssc * scy) / det;
    const double q = (sss * scy - ssc * ssy) / det;
    double max_res = 0.0;
    for (int64_t i = 0; i < task.n_target(); ++i) {
        const double fit = p * std::sin(task.xt[i]) + q * std::cos(task.xt[i]);
        max_res = std::max(max_res, std::abs(fit - task.yt[i]));
    }
    const double amp = std::hypot(p, q);
    return SinusoidFit{amp, q / amp, max_res};
}

}  // namespace

TEST_CASE("generator names round-trip and reject junk") {
    for (Generator g : {Generator::Sinusoid, Generator::Gp, Generator::Mnist})
        CHECK(generator_from_name(generator_name(g)) == g);
    CHECK(thrown_kind([] { generator_from_name("sinus"); }) == Error::Kind::TypeError);
}

TEST_CASE("sinusoid tasks are exact sinusoids with in-range parameters") {
    TaskGenConfig cfg;
    cfg.k = 5;
    cfg.seed = 71;
    for (uint64_t stream = 0; stream < 200; ++stream) {
        cfg.train = (stream % 2 == 0);
        const Task task = gen_sinusoid(cfg, stream);
        const SinusoidFit fit = fit_sinusoid(task);
        CHECK(fit.max_residual < 1e-8);
        CHECK(fit.amplitude >= 0.1);
        CHECK(fit.amplitude <= 5.0);
        CHECK(fit.sin_phi >= -1e-12);  // phi in [0, pi] means sin(phi) >= 0
        for (int64_t i = 0; i < task.n_target(); ++i) {
            CHECK(task.xt[i] >= -5.0);
            CHECK(task.xt[i] <= 5.0);
        }
    }
}

TEST_CASE("regression split: train shares context rows, test draws 400 fresh") {
    TaskGenConfig cfg;
    cfg.k = 5;
    cfg.seed = 11;
    for (Generator g : {Generator::Sinusoid, Generator::Gp}) {
        cfg.generator = g;
        cfg.train = true;
        for (uint64_t stream = 0; stream < 40; ++stream) {
            const Task task = gen_regression(cfg, stream);
            CHECK(task.n_context() == 5);
            CHECK(task.n_target() >= cfg.k + 3);
            CHECK(task.n_target() <= 2 * cfg.k);
            // Context points lead the target rows.
            for (int64_t i = 0; i < task.n_context(); ++i) {
                CHECK(task.xt[i] == task.xc[i]);
                CHECK(task.yt[i] == task.yc[i]);
            }
        }
        cfg.train = false;
        const Task test = gen_regression(cfg, 7);
        CHECK(test.n_target() == kTestTargets);
        for (int64_t i = 0; i < test.n_context(); ++i)
            for (int64_t j = 0; j < test.n_target(); ++j) CHECK(test.xc[i] != test.xt[j]);
    }
}

TEST_CASE("generators are deterministic in (seed, stream) and distinct across streams") {
    TaskGenConfig cfg;
    cfg.seed = 99;
    for (Generator g : {Generator::Sinusoid, Generator::Gp}) {
        cfg.generator = g;
        const Task a = gen_regression(cfg, 3);
        const Task b = gen_regression(cfg, 3);
        CHECK(same_task(a, b));
        CHECK(a.stream == 3);
        CHECK(a.generator == generator_name(g));
        const Task c = gen_regression(cfg, 4);
        CHECK_FALSE(same_bytes(a.xc, c.xc));
    }
}

TEST_CASE("gp kernel and marginals") {
    CHECK(se_kernel(0.0, 0.0) == 1.0);
    CHECK(se_kernel(0.0, 0.6) == doctest::Approx(std::exp(-0.5)).epsilon(1e-15));
    CHECK(se_kernel(1.0, 2.0) == se_kernel(2.0, 1.0));

    // Each marginal is N(0, 1); the mean square of the first context output
    // over many tasks must concentrate near 1.
    TaskGenConfig cfg;
    cfg.generator = Generator::Gp;
    cfg.seed = 5;
    double sum_sq = 0.0;
    const int n = 10000;
    for (int stream = 0; stream < n; ++stream) {
        const Task task = gen_gp(cfg, static_cast<uint64_t>(stream));
        sum_sq += task.yc[0] * task.yc[0];
        for (int64_t i = 0; i < task.n_context(); ++i) {
            CHECK(task.xc[i] >= -2.0);
            CHECK(task.xc[i] <= 2.0);
        }
    }
    const double var = sum_sq / n;
    CHECK(var > 0.94);
    CHECK(var < 1.06);
}

TEST_CASE("cholesky: hand example and non-PSD rejection") {
    std::vector<double> a{4.0, 2.0, 2.0, 3.0};
    REQUIRE(cholesky_lower(a, 2));
    CHECK(a[0] == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(a[2] == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(a[3] == doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));

    std::vector<double> bad{1.0, 2.0, 2.0, 1.0};  // eigenvalues 3, -1
    CHECK_FALSE(cholesky_lower(bad, 2));
}

TEST_CASE("image tasks tile the full grid exactly once") {
    Array img = Array::zeros({4, 4});
    for (int64_t i = 0; i < 16; ++i) img[i] = static_cast<double>(i) / 15.0;

    CounterRng rng(21, 0);
    const Task task = gen_image_task(img, 5, rng);
    CHECK(task.n_context() == 5);
    CHECK(task.n_target() == 11);
    CHECK(task.x_dim() == 2);

    // Every pixel appears exactly once across context + target, with
    // row/(H-1), col/(W-1) coordinates and the matching intensity.
    std::set<std::pair<int64_t, int64_t>> seen;
    auto visit = [&](const Array& x, const Array& y, int64_t n) {
        for (int64_t i = 0; i < n; ++i) {
            const double r = x[2 * i] * 3.0, c = x[2 * i + 1] * 3.0;
            const int64_t ri = std::llround(r), ci = std::llround(c);
            CHECK(std::abs(r - static_cast<double>(ri)) < 1e-12);
            CHECK(std::abs(c - static_cast<double>(ci)) < 1e-12);
            CHECK(y[i] == img[ri * 4 + ci]);
            CHECK(seen.emplace(ri, ci).second);  // no pixel twice
        }
    };
    visit(task.xc, task.yc, task.n_context());
    visit(task.xt, task.yt, task.n_target());
    CHECK(seen.size() == 16);

    CounterRng rng2(21, 1);
    CHECK(thrown_kind([&] { gen_image_task(img, 16, rng2); }) == Error::Kind::KTooLarge);

    Array big = Array::zeros({28, 28});
    CounterRng rng3(21, 2);
    const Task wide = gen_image_task(big, 50, rng3);
    CHECK(wide.n_context() == 50);
    CHECK(wide.n_target() == 28 * 28 - 50);
}

TEST_CASE("outlier injection shifts exactly one extra target row") {
    TaskGenConfig cfg;
    cfg.seed = 31;
    cfg.train = true;
    const Task clean = gen_sinusoid(cfg, 2);

    CounterRng rng0(77, 0);
    const Task same = inject_outlier(clean, 0.0, rng0);
    CHECK(same_task(clean, same));

    for (double severity : {5.0, 10.0, 20.0}) {
        CounterRng rng(77, static_cast<uint64_t>(severity));
        const Task shifted = inject_outlier(clean, severity, rng);
        CHECK(same_bytes(clean.xc, shifted.xc));
        CHECK(same_bytes(clean.yc, shifted.yc));
        CHECK(same_bytes(clean.xt, shifted.xt));
        int64_t changed = -1;
        for (int64_t i = 0; i < clean.n_target(); ++i) {
            if (clean.yt[i] != shifted.yt[i]) {
                CHECK(changed == -1);  // only one row moves
                changed = i;
                CHECK(shifted.yt[i] - clean.yt[i] == doctest::Approx(severity).epsilon(1e-12));
            }
        }
        REQUIRE(changed >= clean.n_context());  // never a context-shared row
    }

    // Same rng stream, same choice.
    CounterRng ra(77, 5), rb(77, 5);
    CHECK(same_task(inject_outlier(clean, 10.0, ra), inject_outlier(clean, 10.0, rb)));
}

TEST_CASE("context noise perturbs only context outputs, scaled by zeta") {
    TaskGenConfig cfg;
    cfg.seed = 13;
    cfg.train = false;
    const Task clean = gen_sinusoid(cfg, 0);

    CounterRng rng0(55, 0);
    CHECK(same_task(clean, noisy_context(clean, 0.0, rng0)));

    const double zeta = 0.5;
    double sum_sq = 0.0;
    int64_t count = 0;
    for (uint64_t rep = 0; rep < 4000; ++rep) {
        CounterRng rng(55, rep + 1);
        const Task noisy = noisy_context(clean, zeta, rng);
        CHECK(same_bytes(clean.xc, noisy.xc));
        CHECK(same_bytes(clean.xt, noisy.xt));
        CHECK(same_bytes(clean.yt, noisy.yt));
        for (int64_t i = 0; i < clean.n_context(); ++i) {
            const double d = noisy.yc[i] - clean.yc[i];
            sum_sq += d * d;
            ++count;
        }
    }
    const double sd = std::sqrt(sum_sq / static_cast<double>(count));
    CHECK(sd > zeta * 0.97);
    CHECK(sd < zeta * 1.03);
}

TEST_CASE("idx image files round-trip through write and load") {
    TempDir dir("idx");

    std::vector<Array> images;
    for (int k = 0; k < 3; ++k) {
        Array img = Array::zeros({5, 4});
        for (int64_t i = 0; i < img.size(); ++i)
            img[i] = static_cast<double>((static_cast<int64_t>(k) * 37 + i * 11) % 256) / 255.0;
        images.push_back(std::move(img));
    }
    const std::string path = dir.file("imgs.idx");
    write_idx_images(path, images);

    const std::vector<Array> loaded = load_mnist_images(path);
    REQUIRE(loaded.size() == 3);
    for (size_t k = 0; k < 3; ++k) {
        CHECK(loaded[k].shape() == Shape{5, 4});
        CHECK(same_bytes(loaded[k], images[k]));  // byte intensities survive exactly
        for (int64_t i = 0; i < loaded[k].size(); ++i) {
            CHECK(loaded[k][i] >= 0.0);
            CHECK(loaded[k][i] <= 1.0);
        }
    }
}

TEST_CASE("idx loader failure modes") {
    TempDir dir("idx_bad");
    CHECK(thrown_kind([&] { load_mnist_images(dir.file("missing.idx")); }) ==
          Error::Kind::IoError);

    const std::string magic_path = dir.file("magic.idx");
    {
        std::ofstream out(magic_path, std::ios::binary);
        const unsigned char bytes[]{0x00, 0x00, 0x08, 0x01, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0};
        out.write(reinterpret_cast<const char*>(bytes), sizeof(bytes));
    }
    CHECK(thrown_kind([&] { load_mnist_images(magic_path); }) == Error::Kind::BadMagic);

    std::vector<Array> one{Array::full({3, 3}, 0.5)};
    const std::string trunc_path = dir.file("trunc.idx");
    write_idx_images(trunc_path, one);
    {
        // Chop off the last two pixel bytes.
        std::ifstream in(trunc_path, std::ios::binary);
        std::vector<char> bytes((std::istreambuf_iterator<char>(in)),
                                std::istreambuf_iterator<char>());
        bytes.resize(bytes.size() - 2);
        std::ofstream out(trunc_path, std::ios::binary | std::ios::trunc);
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    }
    CHECK(thrown_kind([&] { load_mnist_images(trunc_path); }) == Error::Kind::TruncatedFile);

    const std::string header_path = dir.file("header.idx");
    {
        std::ofstream out(header_path, std::ios::binary);
        const unsigned char bytes[]{0x00, 0x00, 0x08, 0x03, 0, 0, 0};  // cut mid-header
        out.write(reinterpret_cast<const char*>(bytes), sizeof(bytes));
    }
    CHECK(thrown_kind([&] { load_mnist_images(header_path); }) == Error::Kind::TruncatedFile);
}
