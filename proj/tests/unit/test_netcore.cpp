#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iterator>

#include "helpers.hpp"
#include "jad/autodiff.hpp"
#include "jad/checkpoint.hpp"
#include "jad/error.hpp"
#include "jad/network.hpp"
#include "jad/tensor.hpp"

using namespace jad;
using testutil::make_layer;

namespace {

Network identity2(Activation act, double alpha) {
    return Network({make_layer(2, 2, {1, 0, 0, 1}, {0, 0}, act, alpha)});
}

Network two_layer_example() {
    return Network({make_layer(2, 2, {1, 0, 0, 1}, {0, 0}, Activation::LeakyReLU, 0.01),
                    make_layer(2, 2, {2, 0, 0, 3}, {0, 0}, Activation::LeakyReLU, 0.01)});
}

std::filesystem::path temp_file(const std::string& name) {
    return std::filesystem::temp_directory_path() / ("jad_test_" + name);
}

std::vector<char> read_bytes(const std::filesystem::path& p) {
    std::ifstream f(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(f), {}};
}

}  // namespace

TEST_SUITE("tensor") {
    TEST_CASE("shape and data length must agree") {
        CHECK_THROWS_AS(Tensor({2, 3}, std::vector<double>(5)), DimensionError);
        CHECK_THROWS_AS(Tensor({0, 3}), DimensionError);
        const Tensor t({2, 3}, 1.5);
        CHECK(t.size() == 6);
        CHECK(t[5] == 1.5);
    }

    TEST_CASE("input tensors reject non-finite values") {
        CHECK_THROWS_AS(Tensor::input({2}, {1.0, std::nan("")}), NumericError);
        CHECK_THROWS_AS(Tensor::input({1}, {INFINITY}), NumericError);
        CHECK_NOTHROW(Tensor::input({2}, {1.0, 2.0}));
    }

    TEST_CASE("distances and argmax") {
        const std::vector<double> a{0, 0, 0}, b{3, -4, 0};
        CHECK(l2_distance(a, b) == doctest::Approx(5.0));
        CHECK(linf_distance(a, b) == 4.0);
        CHECK(argmax(std::vector<double>{1, 3, 3}) == 1);
    }
}

TEST_SUITE("forward") {
    TEST_CASE("identity layer") {
        const auto r = forward_with_trace(identity2(Activation::Identity, 1.0), Tensor::vector({3, -4}));
        CHECK(r.logits.data() == std::vector<double>{3, -4});
        REQUIRE(r.trace.z.size() == 1);
        CHECK(r.trace.z[0].data() == std::vector<double>{3, -4});
    }

    TEST_CASE("leaky layer scales negative part") {
        const auto r = forward_with_trace(identity2(Activation::LeakyReLU, 0.01), Tensor::vector({3, -4}));
        CHECK(r.logits[0] == 3.0);
        CHECK(r.logits[1] == doctest::Approx(-0.04).epsilon(1e-15));
    }

    TEST_CASE("two-layer trace") {
        const auto r = forward_with_trace(two_layer_example(), Tensor::vector({1, 1}));
        REQUIRE(r.trace.z.size() == 2);
        CHECK(r.trace.z[0].data() == std::vector<double>{1, 1});
        CHECK(r.trace.z[1].data() == std::vector<double>{2, 3});
    }

    TEST_CASE("softmax head appends probabilities") {
        const auto r = forward_with_trace(two_layer_example(), Tensor::vector({1, 1}), Head::Softmax);
        REQUIRE(r.trace.z.size() == 3);
        CHECK(r.trace.z[2][1] == doctest::Approx(1.0 / (1.0 + std::exp(-1.0))));
        CHECK(r.logits.data() == std::vector<double>{2, 3});
    }

    TEST_CASE("matches the oracle on random nets and is deterministic") {
        SplitMix64 rng(7);
        for (int trial = 0; trial < 20; ++trial) {
            const std::size_t dims[] = {5, 7, 4, 3};
            const Network net = testutil::random_net(dims, 0.1, rng);
            const auto x = testutil::random_vector(5, rng);
            const auto a = forward_with_trace(net, Tensor::vector(x));
            const auto b = forward_with_trace(net, Tensor::vector(x));
            const auto oracle = testutil::oracle_trace(net, x);
            for (std::size_t i = 0; i < oracle.size(); ++i) {
                CHECK(testutil::max_rel_err(a.trace.z[i].values(), oracle[i]) < 1e-14);
                CHECK(a.trace.z[i] == b.trace.z[i]);
            }
        }
    }

    TEST_CASE("input size mismatch is a dimension error") {
        CHECK_THROWS_AS(forward(two_layer_example(), Tensor::vector({1, 2, 3})), DimensionError);
    }

    TEST_CASE("network invariants") {
        CHECK_THROWS_AS(Network({make_layer(2, 2, {1, 0, 0, 1}, {0, 0}, Activation::Identity, 1),
                                 make_layer(2, 3, std::vector<double>(6), {0, 0}, Activation::Identity, 1)}),
                        DimensionError);
        CHECK_THROWS_AS(Network({make_layer(2, 2, {1, 0, 0, 1}, {0, 0}, Activation::LeakyReLU, 0.0)}),
                        ParameterError);
        CHECK_THROWS_AS(Network(std::vector<Layer>{}), DimensionError);
    }
}

TEST_SUITE("leaky_relu") {
    TEST_CASE("by cases") {
        const Tensor y = leaky_relu(Tensor::vector({-2, 0, 5}), 0.01);
        CHECK(y[0] == doctest::Approx(-0.02).epsilon(1e-15));
        CHECK(y[1] == 0.0);
        CHECK(y[2] == 5.0);
    }

    TEST_CASE("alpha one is the identity") {
        SplitMix64 rng(1);
        const auto u = testutil::random_vector(10, rng);
        CHECK(leaky_relu(Tensor::vector(u), 1.0).data() == u);
    }

    TEST_CASE("non-positive alpha rejected") {
        CHECK_THROWS_AS(leaky_relu(Tensor::vector({1}), 0.0), ParameterError);
        CHECK_THROWS_AS(leaky_relu(Tensor::vector({1}), -0.1), ParameterError);
    }

    TEST_CASE("expansion bounds: alpha |u-v| <= |f(u)-f(v)| <= |u-v|") {
        const Tensor u = Tensor::vector({1, -1}), v = Tensor::vector({-1, 1});
        const double lhs = l2_distance(leaky_relu(u, 0.01).values(), leaky_relu(v, 0.01).values());
        CHECK(lhs >= 0.01 * l2_distance(u.values(), v.values()));
        CHECK(0.01 * l2_distance(u.values(), v.values()) == doctest::Approx(0.028284).epsilon(1e-5));

        SplitMix64 rng(3);
        for (int t = 0; t < 200; ++t) {
            const double alpha = rng.uniform(1e-3, 1.0);
            const Tensor a = Tensor::vector(testutil::random_vector(6, rng));
            const Tensor b = Tensor::vector(testutil::random_vector(6, rng));
            const double d_in = l2_distance(a.values(), b.values());
            const double d_out = l2_distance(leaky_relu(a, alpha).values(), leaky_relu(b, alpha).values());
            CHECK(d_out >= alpha * d_in * (1 - 1e-12));
            CHECK(d_out <= d_in * (1 + 1e-12));
        }
    }
}

TEST_SUITE("autodiff") {
    TEST_CASE("op gradients match central differences") {
        SplitMix64 rng(11);
        for (int trial = 0; trial < 100; ++trial) {
            const auto x0 = testutil::random_vector(4, rng);
            const auto w = testutil::random_vector(12, rng);
            const auto target = testutil::random_vector(3, rng);
            // f(x) = ||W x||/max(||x||, eps) + CE(leaky(Wx)) + sum softmax(Wx)*2 + squared error
            auto build = [&](ad::Tape& t, ad::Var x) {
                const ad::Var y = ad::matvec(t, w, x, 3, 4);
                const ad::Var ratio = ad::divide(t, ad::l2_norm(t, y), ad::max_scalar(t, ad::l2_norm(t, x), 1e-12));
                const ad::Var ce = ad::cross_entropy(t, ad::leaky_relu(t, y, 0.1), trial % 3);
                const ad::Var sm = ad::scale(t, ad::sum(t, ad::softmax(t, y)), 2.0);
                const ad::Var se = ad::squared_error(t, ad::sub(t, y, ad::scale(t, y, 0.5)), target);
                return ad::add(t, ad::add(t, ratio, ce), ad::add(t, sm, se));
            };
            ad::Tape tape;
            const ad::Var x = tape.leaf(x0);
            const ad::Var out = build(tape, x);
            tape.backward(out);
            const std::vector<double> g(tape.grad(x).begin(), tape.grad(x).end());
            const auto fd = testutil::central_diff(
                [&](const std::vector<double>& xv) {
                    ad::Tape t;
                    return t.scalar(build(t, t.leaf(xv)));
                },
                x0);
            CHECK(testutil::max_rel_err(g, fd) < 1e-5);
        }
    }

    TEST_CASE("variable weights receive gradients") {
        ad::Tape t;
        const ad::Var w = t.leaf(std::vector<double>{1, 2, 3, 4});
        const ad::Var x = t.leaf(std::vector<double>{1, -1});
        t.backward(ad::sum(t, ad::matvec(t, w, x, 2, 2)));
        const std::vector<double> gw(t.grad(w).begin(), t.grad(w).end());
        CHECK(gw == std::vector<double>{1, -1, 1, -1});
        const std::vector<double> gx(t.grad(x).begin(), t.grad(x).end());
        CHECK(gx == std::vector<double>{4, 6});
    }

    TEST_CASE("l2_norm subgradient at zero is zero") {
        ad::Tape t;
        const ad::Var x = t.leaf(std::vector<double>{0, 0});
        t.backward(ad::l2_norm(t, x));
        CHECK(t.grad(x)[0] == 0.0);
        CHECK(t.grad(x)[1] == 0.0);
    }
}

TEST_SUITE("gradients") {
    TEST_CASE("constant network has zero input gradient") {
        const Network net({make_layer(3, 2, std::vector<double>(6, 0.0), {0.1, 0.2, 0.3}, Activation::Identity, 1)});
        const Tensor g = input_gradient(net, Tensor::vector({0.4, -0.7}), cross_entropy_loss(1));
        for (double v : g.values()) CHECK(v == 0.0);
    }

    TEST_CASE("squared error on an identity-activated layer: 2 W^T (Wx - t)") {
        const std::vector<double> w{1, 2, -1, 0.5, 3, 1};  // 2x3
        const Network net({make_layer(2, 3, w, {0, 0}, Activation::Identity, 1)});
        const std::vector<double> x{0.3, -0.2, 0.9}, target{1.0, -2.0};
        const Tensor g = input_gradient(net, Tensor::vector(x), squared_error_loss(target));
        const double r0 = w[0] * x[0] + w[1] * x[1] + w[2] * x[2] - target[0];
        const double r1 = w[3] * x[0] + w[4] * x[1] + w[5] * x[2] - target[1];
        for (std::size_t c = 0; c < 3; ++c) CHECK(g[c] == doctest::Approx(2 * (w[c] * r0 + w[3 + c] * r1)));
    }

    TEST_CASE("cross-entropy input gradient matches finite differences on random 3-layer nets") {
        SplitMix64 rng(5);
        for (int trial = 0; trial < 100; ++trial) {
            const std::size_t dims[] = {6, 5, 4, 3};
            const Network net = testutil::random_net(dims, 0.1, rng);
            const auto x = testutil::random_vector(6, rng);
            const std::size_t label = trial % 3;
            double loss = 0.0;
            const Tensor g = input_gradient(net, Tensor::vector(x), cross_entropy_loss(label), &loss);
            CHECK(loss == doctest::Approx(testutil::oracle_ce(net, x, label)).epsilon(1e-12));
            const auto fd = testutil::central_diff([&](const auto& v) { return testutil::oracle_ce(net, v, label); }, x);
            CHECK(testutil::max_rel_err(g.values(), fd) < 1e-5);
        }
    }

    TEST_CASE("single-sample logistic case: (softmax(z) - onehot(y)) outer x") {
        const std::vector<double> w{0.2, -0.1, 0.4, 0.3, 0.0, -0.5};  // 3x2
        const std::vector<double> x{0.7, -1.2};
        const Network net({make_layer(3, 2, w, {0.1, 0.0, -0.1}, Activation::Identity, 1)});
        const Tensor xt = Tensor::vector(x);
        const Sample s{&xt, 2};
        const auto bundle = param_gradients(net, std::span<const Sample>(&s, 1));
        const auto p = testutil::oracle_softmax(testutil::oracle_trace(net, x).back());
        for (std::size_t r = 0; r < 3; ++r) {
            const double e = p[r] - (r == 2 ? 1.0 : 0.0);
            CHECK(bundle.d_params[0].bias[r] == doctest::Approx(e).epsilon(1e-12));
            for (std::size_t c = 0; c < 2; ++c)
                CHECK(bundle.d_params[0].weight[r * 2 + c] == doctest::Approx(e * x[c]).epsilon(1e-12));
        }
    }

    TEST_CASE("batch weight gradients match finite differences on a 4-2-2 net") {
        SplitMix64 rng(9);
        for (int trial = 0; trial < 20; ++trial) {
            const std::size_t dims[] = {4, 2, 2};
            Network net = testutil::random_net(dims, 0.05, rng);
            std::vector<Tensor> xs;
            for (int k = 0; k < 3; ++k) xs.push_back(Tensor::vector(testutil::random_vector(4, rng)));
            const std::vector<Sample> batch{{&xs[0], 0}, {&xs[1], 1}, {&xs[2], 1}};
            double mean = 0.0;
            const auto bundle = param_gradients(net, batch, &mean);
            auto batch_loss = [&](const Network& n) {
                double s = 0.0;
                for (const auto& b : batch) s += testutil::oracle_ce(n, b.x->data(), b.label);
                return s / static_cast<double>(batch.size());
            };
            CHECK(mean == doctest::Approx(batch_loss(net)).epsilon(1e-12));
            for (std::size_t li = 0; li < net.depth(); ++li) {
                const auto fd = testutil::central_diff(
                    [&](const std::vector<double>& wv) {
                        Network m = net;
                        m.layer(li).weight = wv;
                        return batch_loss(m);
                    },
                    net.layer(li).weight);
                CHECK(testutil::max_rel_err(bundle.d_params[li].weight, fd) < 1e-5);
            }
        }
    }
}

TEST_SUITE("checkpoint") {
    TEST_CASE("save, load, save is byte identical and forward traces match") {
        const Network net = two_layer_example();
        const auto p1 = temp_file("a.jadn"), p2 = temp_file("b.jadn");
        save_checkpoint(net, p1);
        const Network back = load_checkpoint(p1);
        save_checkpoint(back, p2);
        CHECK(read_bytes(p1) == read_bytes(p2));
        CHECK(back == net);
        const auto a = forward_with_trace(net, Tensor::vector({1, 1}));
        const auto b = forward_with_trace(back, Tensor::vector({1, 1}));
        CHECK(a.trace.z[0] == b.trace.z[0]);
        CHECK(a.trace.z[1] == b.trace.z[1]);
        std::filesystem::remove(p1);
        std::filesystem::remove(p2);
    }

    TEST_CASE("byte layout") {
        const auto bytes = encode_checkpoint(identity2(Activation::LeakyReLU, 0.25));
        REQUIRE(bytes.size() == 4 + 1 + 4 + (4 + 4 + 1 + 8 + 4 * 8 + 2 * 8));
        CHECK(std::string(bytes.begin(), bytes.begin() + 4) == "JADN");
        CHECK(bytes[4] == 0x01);
        CHECK(bytes[5] == 1);  // layer count, little endian
        CHECK(bytes[9] == 2);  // out_dim
        CHECK(bytes[13] == 2); // in_dim
        CHECK(bytes[17] == 1); // LeakyReLU tag
    }

    TEST_CASE("random networks round trip bit-exactly") {
        SplitMix64 rng(2);
        const std::size_t dims[] = {7, 5, 3};
        const Network net = testutil::random_net(dims, 0.3, rng);
        CHECK(decode_checkpoint(encode_checkpoint(net)) == net);
    }

    TEST_CASE("malformed files are format errors") {
        auto bytes = encode_checkpoint(two_layer_example());
        auto bad_magic = bytes;
        bad_magic[0] = 'X';
        CHECK_THROWS_AS(decode_checkpoint(bad_magic), FormatError);
        auto bad_version = bytes;
        bad_version[4] = 2;
        CHECK_THROWS_AS(decode_checkpoint(bad_version), FormatError);
        auto truncated = bytes;
        truncated.pop_back();
        CHECK_THROWS_AS(decode_checkpoint(truncated), FormatError);
        auto trailing = bytes;
        trailing.push_back(0);
        CHECK_THROWS_AS(decode_checkpoint(trailing), FormatError);
        // second layer claims in_dim 3, breaking the chain
        auto broken = bytes;
        const std::size_t second = 9 + (4 + 4 + 1 + 8 + 4 * 8 + 2 * 8);
        broken[second + 4] = 3;
        CHECK_THROWS_AS(decode_checkpoint(broken), FormatError);
        CHECK_THROWS_AS(load_checkpoint(temp_file("does_not_exist.jadn")), FormatError);
    }
}
