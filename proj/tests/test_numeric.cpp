#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "colar/grad_check.hpp"
#include "colar/kernels.hpp"
#include "colar/ops.hpp"
#include "colar/rng.hpp"

using namespace colar;

TEST_CASE("cosine similarity basics") {
    CHECK(cosine_similarity(std::vector<double>{1, 0}, std::vector<double>{0, 1}) ==
          doctest::Approx(0.0).epsilon(1e-12));
    CHECK(cosine_similarity(std::vector<double>{2, 0}, std::vector<double>{1, 0}) ==
          doctest::Approx(1.0).epsilon(1e-9));
    // 11 / (sqrt(5) * 5)
    CHECK(cosine_similarity(std::vector<double>{1, 2}, std::vector<double>{3, 4}) ==
          doctest::Approx(0.98387).epsilon(1e-5));
    CHECK_THROWS_AS(cosine_similarity(std::vector<double>{1}, std::vector<double>{1, 2}),
                    DimensionError);
    // zero vector yields 0 via the epsilon denominator, not an error
    CHECK(cosine_similarity(std::vector<double>{0, 0}, std::vector<double>{1, 2}) == 0.0);
}

TEST_CASE("cosine similarity properties") {
    Rng rng(11);
    for (int i = 0; i < 200; ++i) {
        const std::size_t n = 1 + rng.below(8);
        std::vector<double> a(n), b(n);
        for (auto& v : a) v = rng.normal();
        for (auto& v : b) v = rng.normal();
        const double c = cosine_similarity(a, b);
        CHECK(std::abs(c) <= 1.0 + 1e-12);
        CHECK(c == cosine_similarity(b, a));
        double norm2 = 0.0;
        for (double v : a) norm2 += v * v;
        // the epsilon in the denominator shifts self-similarity away from 1
        // for norms near zero, so only generic vectors are asserted here
        if (norm2 > 1e-2) CHECK(cosine_similarity(a, a) == doctest::Approx(1.0).epsilon(1e-9));
    }
}

TEST_CASE("softmax basics") {
    const auto p = softmax(std::vector<double>{0, 0});
    CHECK(p[0] == doctest::Approx(0.5).epsilon(1e-12));

    const auto q = softmax(std::vector<double>{std::log(2.0), 0.0});
    CHECK(q[0] == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    CHECK(q[1] == doctest::Approx(1.0 / 3.0).epsilon(1e-12));

    const auto r = softmax(std::vector<double>{1000.0, 0.0});
    CHECK(std::isfinite(r[0]));
    CHECK(r[0] == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(r[1] == doctest::Approx(0.0).epsilon(1e-9));

    CHECK_THROWS_AS(softmax(std::vector<double>{}), DimensionError);
}

TEST_CASE("softmax sums to one and is shift invariant") {
    Rng rng(5);
    for (int i = 0; i < 200; ++i) {
        const std::size_t n = 1 + rng.below(10);
        std::vector<double> v(n), shifted(n);
        const double c = 10.0 * rng.normal();
        for (std::size_t j = 0; j < n; ++j) {
            v[j] = 5.0 * rng.normal();
            shifted[j] = v[j] + c;
        }
        const auto p = softmax(v);
        const auto q = softmax(shifted);
        double sum = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            CHECK(p[j] >= 0.0);
            sum += p[j];
            CHECK(p[j] == doctest::Approx(q[j]).epsilon(1e-12));
        }
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
    }
}

TEST_CASE("linear") {
    Tensor2D eye(2, 2);
    eye.at(0, 0) = eye.at(1, 1) = 1.0;
    Tensor2D zero_b(2, 1);
    auto y = linear(eye, std::vector<double>{3, -4}, zero_b);
    CHECK(y[0] == 3.0);
    CHECK(y[1] == -4.0);

    Tensor2D w(2, 2);
    w.at(0, 0) = 1;
    w.at(0, 1) = 2;
    w.at(1, 0) = 3;
    w.at(1, 1) = 4;
    y = linear(w, std::vector<double>{1, 1}, zero_b);
    CHECK(y[0] == 3.0);
    CHECK(y[1] == 7.0);

    Tensor2D zeros(2, 3), b(2, 1);
    b.at(0, 0) = 5;
    b.at(1, 0) = -2;
    y = linear(zeros, std::vector<double>{1, 2, 3}, b);
    CHECK(y[0] == 5.0);
    CHECK(y[1] == -2.0);

    CHECK_THROWS_AS(linear(w, std::vector<double>{1, 2, 3}, zero_b), DimensionError);
}

namespace {

Tensor2D conv(const Tensor2D& x, const Tensor2D& w, const Tensor2D& b) {
    Tensor2D y(w.rows(), x.cols());
    kernels::conv1d_forward(x, w, b, y);
    return y;
}

}  // namespace

TEST_CASE("temporal conv1d identity and bias") {
    const std::size_t d = 3, len = 6;
    Rng rng(3);
    Tensor2D x(d, len);
    x.fill_normal(rng);

    // center tap = identity, side taps = 0
    Tensor2D w(d, 3 * d), b(d, 1);
    for (std::size_t j = 0; j < d; ++j) w.at(j, d + j) = 1.0;
    const auto y = conv(x, w, b);
    for (std::size_t j = 0; j < d; ++j)
        for (std::size_t l = 0; l < len; ++l) CHECK(y.at(j, l) == doctest::Approx(x.at(j, l)));

    // zero input -> bias broadcast
    Tensor2D zeros(d, len), bias(d, 1);
    bias.at(0, 0) = 1.5;
    bias.at(1, 0) = -2.0;
    const auto yb = conv(zeros, w, bias);
    for (std::size_t l = 0; l < len; ++l) {
        CHECK(yb.at(0, l) == 1.5);
        CHECK(yb.at(1, l) == -2.0);
    }
}

TEST_CASE("temporal conv1d averaging kernel on a constant sequence") {
    const std::size_t len = 5;
    Tensor2D x(1, len);
    for (std::size_t l = 0; l < len; ++l) x.at(0, l) = 6.0;
    Tensor2D w(1, 3), b(1, 1);
    w.at(0, 0) = w.at(0, 1) = w.at(0, 2) = 1.0 / 3.0;
    const auto y = conv(x, w, b);
    for (std::size_t l = 1; l + 1 < len; ++l) CHECK(y.at(0, l) == doctest::Approx(6.0));
    // zero padding at the window edges
    CHECK(y.at(0, 0) == doctest::Approx(4.0));
    CHECK(y.at(0, len - 1) == doctest::Approx(4.0));
}

TEST_CASE("temporal conv1d is linear in its input") {
    Rng rng(17);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t d_in = 1 + rng.below(4), d_out = 1 + rng.below(4),
                          len = 1 + rng.below(7);
        Tensor2D x(d_in, len), y2(d_in, len), w(d_out, 3 * d_in), b(d_out, 1);
        x.fill_normal(rng);
        y2.fill_normal(rng);
        w.fill_normal(rng);
        const double alpha = rng.normal(), beta = rng.normal();

        Tensor2D mix(d_in, len);
        for (std::size_t i = 0; i < mix.size(); ++i)
            mix.raw()[i] = alpha * x.raw()[i] + beta * y2.raw()[i];

        Tensor2D zb(d_out, 1);
        const auto ca = conv(x, w, zb);
        const auto cb = conv(y2, w, zb);
        const auto cm = conv(mix, w, zb);
        for (std::size_t i = 0; i < cm.size(); ++i)
            CHECK(cm.raw()[i] ==
                  doctest::Approx(alpha * ca.raw()[i] + beta * cb.raw()[i]).epsilon(1e-9));
    }
}

TEST_CASE("serial references match the OpenMP kernels bit-exactly") {
    Rng rng(23);
    const std::size_t d_in = 7, d_out = 13, len = 40;
    Tensor2D x(d_in, len), w(d_out, 3 * d_in), b(d_out, 1);
    x.fill_normal(rng);
    w.fill_normal(rng);
    b.fill_normal(rng);

    Tensor2D y_par(d_out, len), y_ser(d_out, len);
    kernels::conv1d_forward(x, w, b, y_par);
    serial::conv1d_forward(x, w, b, y_ser);
    CHECK(y_par == y_ser);

    Tensor2D wm(300, 280), bm(300, 1);
    wm.fill_normal(rng);
    bm.fill_normal(rng);
    std::vector<double> xv(280), yp(300), ys(300);
    for (auto& v : xv) v = rng.normal();
    kernels::matvec(wm, xv.data(), bm, yp.data());
    serial::matvec(wm, xv.data(), bm, ys.data());
    CHECK(yp == ys);

    Tensor2D points(100, 5), centroids(7, 5);
    points.fill_normal(rng);
    centroids.fill_normal(rng);
    std::vector<std::size_t> ap, as;
    std::vector<double> dp, dsq;
    kernels::kmeans_assign(points, centroids, ap, dp);
    serial::kmeans_assign(points, centroids, as, dsq);
    CHECK(ap == as);
    CHECK(dp == dsq);
}

TEST_CASE("grad_check examples") {
    // f(theta) = theta^2 at theta = 3
    std::vector<double> theta{3.0};
    std::vector<double> analytic{6.0};
    auto f = [](std::span<const double> t) { return t[0] * t[0]; };
    CHECK(grad_check(f, theta, analytic) < 1e-7);

    // constant f -> zero gradient, zero error
    std::vector<double> zero{0.0};
    auto g = [](std::span<const double>) { return 42.0; };
    CHECK(grad_check(g, theta, zero) == 0.0);

    auto bad = [](std::span<const double>) { return std::nan(""); };
    CHECK_THROWS_AS(grad_check(bad, theta, analytic), NumericError);
}

TEST_CASE("grad_check on cross-entropy of softmax(linear(x))") {
    Rng rng(31);
    const std::size_t in = 4, out = 3;
    for (int trial = 0; trial < 10; ++trial) {
        std::vector<double> x(in);
        for (auto& v : x) v = rng.normal();
        const std::size_t label = rng.below(out);

        // theta = flattened W then b
        std::vector<double> theta(out * in + out);
        for (auto& v : theta) v = rng.normal();

        auto f = [&](std::span<const double> t) {
            std::vector<double> logits(out);
            for (std::size_t r = 0; r < out; ++r) {
                double acc = t[out * in + r];
                for (std::size_t c = 0; c < in; ++c) acc += t[r * in + c] * x[c];
                logits[r] = acc;
            }
            return -std::log(softmax(logits)[label]);
        };

        // analytic: dlogits = p - y; dW = dlogits x^T, db = dlogits
        std::vector<double> logits(out);
        for (std::size_t r = 0; r < out; ++r) {
            double acc = theta[out * in + r];
            for (std::size_t c = 0; c < in; ++c) acc += theta[r * in + c] * x[c];
            logits[r] = acc;
        }
        const auto p = softmax(logits);
        std::vector<double> analytic(theta.size());
        for (std::size_t r = 0; r < out; ++r) {
            const double dl = p[r] - (r == label ? 1.0 : 0.0);
            for (std::size_t c = 0; c < in; ++c) analytic[r * in + c] = dl * x[c];
            analytic[out * in + r] = dl;
        }
        CHECK(grad_check(f, theta, analytic) < 1e-6);
    }
}

TEST_CASE("rng determinism and substreams") {
    Rng a(99), b(99);
    for (int i = 0; i < 1000; ++i) CHECK(a.next_u64() == b.next_u64());

    Tensor2D t1(5, 7), t2(5, 7);
    Rng r1(1234), r2(1234);
    t1.fill_normal(r1);
    t2.fill_normal(r2);
    CHECK(t1 == t2);

    // substreams differ from the parent and from each other
    Rng parent(7);
    CHECK(parent.child(0).next_u64() != parent.child(1).next_u64());
}
