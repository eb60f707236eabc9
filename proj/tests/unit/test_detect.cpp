#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>
#include <vector>

#include "helpers.hpp"
#include "jad/attacks.hpp"
#include "jad/corrupt.hpp"
#include "jad/dataset.hpp"
#include "jad/detect.hpp"
#include "jad/error.hpp"
#include "jad/impact.hpp"
#include "jad/jad_score.hpp"
#include "jad/jpeg.hpp"
#include "jad/spectral.hpp"
#include "jad/train.hpp"

using namespace jad;
using testutil::make_layer;

namespace {

Tensor random_image(std::size_t side, std::uint64_t seed) {
    SplitMix64 rng(seed);
    return Tensor({side, side, 1}, testutil::random_vector(side * side, rng, 0.0, 1.0));
}

Network small_net(std::uint64_t seed, double scale = 0.4) {
    const std::vector<std::size_t> dims = {64, 24, 16, 5};
    SplitMix64 rng(seed);
    return testutil::random_net(dims, 0.1, rng, scale);
}

Network two_layer_example() {
    return Network({make_layer(2, 2, {1, 0, 0, 1}, {0, 0}, Activation::LeakyReLU, 0.01),
                    make_layer(2, 2, {2, 0, 0, 3}, {0, 0}, Activation::LeakyReLU, 0.01)});
}

double brute_auroc(const std::vector<double>& neg, const std::vector<double>& pos) {
    double s = 0.0;
    for (double p : pos)
        for (double n : neg) s += p > n ? 1.0 : (p == n ? 0.5 : 0.0);
    return s / (pos.size() * neg.size());
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct Synth {
    Network net;
    Dataset test;
};

const Synth& synth_model() {
    static const Synth s = [] {
        auto [tr, te] = split_tail(synth_dataset(320, 8, 0), 64);
        TrainConfig cfg;
        cfg.epochs = 10;
        cfg.mode = TrainMode::Amplified;
        cfg.lambda = 1e-2;
        const std::vector<std::size_t> dims = {64, 32, 16, 2};
        return Synth{train(init_mlp(dims, 0.01, 1), tr, cfg).net, te};
    }();
    return s;
}

}  // namespace

TEST_SUITE("impacts") {
    TEST_CASE("identical inputs have zero impact") {
        const auto net = small_net(0);
        const auto x = random_image(8, 0);
        for (double d : layer_impacts(net, x, x)) CHECK(d == 0.0);
    }

    TEST_CASE("hand-evaluated two-layer example") {
        const auto d = layer_impacts(two_layer_example(), Tensor::vector({1, 1}), Tensor::vector({1.1, 1.1}));
        REQUIRE(d.size() == 2);
        CHECK(d[0] == doctest::Approx(0.141421).epsilon(1e-5));
        CHECK(d[1] == doctest::Approx(0.360555).epsilon(1e-5));
    }

    TEST_CASE("matches plain forward passes") {
        for (std::uint64_t s = 0; s < 20; ++s) {
            const auto net = small_net(s);
            const auto x = random_image(8, s), y = random_image(8, 100 + s);
            const auto a = testutil::oracle_trace(net, x.data()), b = testutil::oracle_trace(net, y.data());
            const auto d = layer_impacts(net, x, y);
            REQUIRE(d.size() == a.size());
            for (std::size_t i = 0; i < d.size(); ++i) CHECK(d[i] == doctest::Approx(testutil::dist(a[i], b[i])).epsilon(1e-12));
            const auto ds = layer_impacts(net, x, y, Head::Softmax);
            REQUIRE(ds.size() == a.size() + 1);
            CHECK(ds.back() == doctest::Approx(testutil::dist(testutil::oracle_softmax(a.back()),
                                                              testutil::oracle_softmax(b.back())))
                                   .epsilon(1e-12));
        }
    }

    TEST_CASE("sample order does not matter") {
        const auto net = small_net(3);
        std::vector<std::pair<Tensor, Tensor>> pairs;
        for (std::uint64_t s = 0; s < 6; ++s) pairs.emplace_back(random_image(8, s), random_image(8, 50 + s));
        std::vector<std::vector<double>> forward_order;
        for (const auto& [a, b] : pairs) forward_order.push_back(layer_impacts(net, a, b));
        for (std::size_t k = pairs.size(); k-- > 0;) CHECK(layer_impacts(net, pairs[k].first, pairs[k].second) == forward_order[k]);
    }

    TEST_CASE("shape mismatch") {
        CHECK_THROWS_AS(layer_impacts(small_net(0), random_image(8, 0), random_image(7, 0)), DimensionError);
    }
}

TEST_SUITE("amplification") {
    TEST_CASE("identity attack is degenerate with ratio 0") {
        const auto net = small_net(1);
        AttackConfig cfg;
        cfg.eps = 0.0;
        const auto r = net_amplification(net, random_image(8, 1), 0, cfg);
        CHECK(r.degenerate);
        CHECK(r.ratio == 0.0);
    }

    TEST_CASE("ratio is last over first impact and beta is the certificate") {
        const auto net = small_net(2);
        const auto x = random_image(8, 2), y = random_image(8, 3);
        const auto r = amplification_between(net, x, y);
        CHECK_FALSE(r.degenerate);
        CHECK(r.ratio == r.d.back() / r.d.front());
        CHECK(r.beta_certified == certify_beta(net).beta);
        for (double d : r.d) CHECK(d >= 0.0);
    }

    // Measured on class probabilities, the head the pipeline detects with.
    TEST_CASE("uniform noise is not amplified on average by a trained model") {
        const auto& m = synth_model();
        double mean = 0.0;
        for (std::size_t k = 0; k < m.test.size(); ++k) {
            const auto& x = m.test.images[k];
            const auto noisy = corrupt(x, {CorruptionKind::UniformLinf, 8.0 / 255.0, k});
            mean += amplification_between(m.net, x, noisy, Head::Softmax).ratio / m.test.size();
        }
        CHECK(mean < 1.0);
    }
}

TEST_SUITE("jad score") {
    TEST_CASE("flat mid-gray is degenerate with score 0") {
        const Tensor gray({8, 8, 1}, 128.0 / 255.0);
        const auto s = jad_score(small_net(0), gray, DetectorConfig{});
        CHECK(s.degenerate);
        CHECK(s.score == 0.0);
        CHECK(s.d_first == 0.0);
    }

    TEST_CASE("ratio of the sanitized impacts") {
        for (std::uint64_t s = 0; s < 10; ++s) {
            const auto net = small_net(s);
            const auto x = random_image(8, 10 + s);
            DetectorConfig cfg;
            cfg.quality = 40 + static_cast<int>(s);
            const auto san = jpeg_roundtrip(x, cfg.quality);
            const auto a = testutil::oracle_trace(net, x.data()), b = testutil::oracle_trace(net, san.data());
            const double want = testutil::dist(a.back(), b.back()) / testutil::dist(a.front(), b.front());
            const auto got = jad_score(net, x, cfg);
            CHECK(got.score == doctest::Approx(want).epsilon(1e-12));
            CHECK(got.quality == cfg.quality);
        }
    }

    TEST_CASE("layer indices select the measured pair") {
        const auto net = small_net(4);
        const auto x = random_image(8, 4);
        DetectorConfig cfg;
        cfg.first_layer = 2;
        cfg.last_layer = 3;
        const auto d = layer_impacts(net, x, jpeg_roundtrip(x, cfg.quality));
        CHECK(jad_score(net, x, cfg).score == doctest::Approx(d[2] / d[1]).epsilon(1e-12));
    }

    TEST_CASE("scale-free under a uniform scaling of every layer output") {
        // With zero biases and positively homogeneous activations, scaling W_1
        // by c scales every z_i by c, hence d_1 and d_n alike.
        auto net = small_net(5);
        for (std::size_t i = 0; i < net.depth(); ++i) std::fill(net.layer(i).bias.begin(), net.layer(i).bias.end(), 0.0);
        auto scaled = net;
        for (auto& w : scaled.layer(0).weight) w *= 3.5;
        const auto x = random_image(8, 5);
        const auto a = jad_score(net, x, DetectorConfig{}), b = jad_score(scaled, x, DetectorConfig{});
        CHECK(b.d_first == doctest::Approx(3.5 * a.d_first).epsilon(1e-12));
        CHECK(b.score == doctest::Approx(a.score).epsilon(1e-12));
    }

    TEST_CASE("deterministic, and randomized qualities stay in range") {
        const auto net = small_net(6);
        const auto x = random_image(8, 6);
        DetectorConfig cfg;
        CHECK(jad_score(net, x, cfg).score == jad_score(net, x, cfg).score);
        cfg.randomize = true;
        cfg.seed = 17;
        const auto first = jad_score(net, x, cfg);
        CHECK(first.score == jad_score(net, x, cfg).score);
        std::vector<int> seen;
        for (std::uint64_t s = 0; s < 200; ++s) {
            cfg.seed = s;
            const int q = jad_score(net, x, cfg).quality;
            CHECK(q >= cfg.q_lo);
            CHECK(q <= cfg.q_hi);
            seen.push_back(q);
        }
        std::sort(seen.begin(), seen.end());
        CHECK(std::unique(seen.begin(), seen.end()) - seen.begin() > 20);
    }

    TEST_CASE("configuration checks") {
        const auto net = small_net(0);
        DetectorConfig cfg;
        cfg.first_layer = 3;
        cfg.last_layer = 2;
        CHECK_THROWS_AS(cfg.validate(net), DimensionError);
        cfg = DetectorConfig{};
        cfg.last_layer = 9;
        CHECK_THROWS_AS(cfg.validate(net), DimensionError);
        cfg = DetectorConfig{};
        cfg.quality = 0;
        CHECK_THROWS_AS(cfg.validate(net), ParameterError);
        cfg = DetectorConfig{};
        cfg.randomize = true;
        cfg.q_lo = 90;
        CHECK_THROWS_AS(cfg.validate(net), ParameterError);
    }

    TEST_CASE("clean samples score below their pgd counterparts") {
        const auto& m = synth_model();
        DetectorConfig det;
        det.head = Head::Softmax;
        double clean = 0.0, adv = 0.0;
        for (std::size_t k = 0; k < m.test.size(); ++k) {
            AttackConfig cfg;
            cfg.seed = k;
            const auto& x = m.test.images[k];
            clean += jad_score(m.net, x, det).score;
            adv += jad_score(m.net, pgd(m.net, x, m.test.labels[k], cfg).x_adv, det).score;
        }
        CHECK(clean < adv);
    }
}

TEST_SUITE("threshold") {
    TEST_CASE("1..100 at 5% gives 95") {
        std::vector<double> s(100);
        std::iota(s.begin(), s.end(), 1.0);
        std::reverse(s.begin(), s.end());
        const double tau = calibrate_threshold(s, 0.05);
        CHECK(tau == 95.0);
        CHECK(std::count_if(s.begin(), s.end(), [&](double v) { return v > tau; }) == 5);
    }

    TEST_CASE("all-equal scores") {
        const std::vector<double> s(10, 0.7);
        CHECK(calibrate_threshold(s, 0.1) == 0.7);
    }

    TEST_CASE("achieved false-positive rate never exceeds the target") {
        SplitMix64 rng(1);
        for (int t = 0; t < 200; ++t) {
            const std::size_t n = 1 + rng() % 60;
            std::vector<double> s(n);
            for (auto& v : s) v = std::floor(rng.uniform(0, 10));  // plenty of ties
            const double fpr = rng.uniform(0.01, 0.5);
            const double tau = calibrate_threshold(s, fpr);
            const auto above = std::count_if(s.begin(), s.end(), [&](double v) { return v > tau; });
            CHECK(static_cast<double>(above) / n <= fpr + 1e-12);
            CHECK(std::find(s.begin(), s.end(), tau) != s.end());
        }
    }

    TEST_CASE("invalid inputs") {
        CHECK_THROWS_AS(calibrate_threshold(std::vector<double>{}, 0.05), ParameterError);
        CHECK_THROWS_AS(calibrate_threshold(std::vector<double>{1.0}, 0.0), ParameterError);
        CHECK_THROWS_AS(calibrate_threshold(std::vector<double>{1.0}, 1.0), ParameterError);
    }
}

TEST_SUITE("auroc") {
    TEST_CASE("worked example") {
        CHECK(auroc(std::vector<double>{0.1, 0.4}, std::vector<double>{0.3, 0.9}) == 0.75);
    }

    TEST_CASE("perfect separation and identical multisets") {
        CHECK(auroc(std::vector<double>{1, 2, 3}, std::vector<double>{4, 5}) == 1.0);
        CHECK(auroc(std::vector<double>{4, 5}, std::vector<double>{1, 2, 3}) == 0.0);
        CHECK(auroc(std::vector<double>{1, 2, 2, 7}, std::vector<double>{7, 2, 1, 2}) == 0.5);
    }

    TEST_CASE("rank formula equals the brute force on 500 random instances") {
        SplitMix64 rng(2024);
        for (int t = 0; t < 500; ++t) {
            std::vector<double> neg(1 + rng() % 50), pos(1 + rng() % 50);
            const bool ties = t % 2 == 0;
            for (auto& v : neg) v = ties ? std::floor(rng.uniform(0, 5)) : rng.uniform();
            for (auto& v : pos) v = ties ? std::floor(rng.uniform(0, 6)) : rng.uniform(0.2, 1.2);
            const double want = brute_auroc(neg, pos);
            CHECK(auroc(neg, pos) == doctest::Approx(want).epsilon(1e-12));
            CHECK(auroc_pairwise(neg, pos) == doctest::Approx(want).epsilon(1e-12));
            if (!ties) CHECK(auroc(neg, pos) + auroc(pos, neg) == doctest::Approx(1.0).epsilon(1e-12));
        }
    }

    TEST_CASE("empty side") {
        CHECK_THROWS_AS(auroc(std::vector<double>{}, std::vector<double>{1.0}), ParameterError);
        CHECK_THROWS_AS(auroc(std::vector<double>{1.0}, std::vector<double>{}), ParameterError);
    }
}

TEST_SUITE("prediction change") {
    TEST_CASE("mid-gray is never flagged") {
        const Tensor gray({8, 8, 1}, 128.0 / 255.0);
        for (std::uint64_t s = 0; s < 10; ++s) CHECK_FALSE(prediction_change_detector(small_net(s), gray, 75));
    }

    TEST_CASE("matches the definition and is deterministic") {
        for (std::uint64_t s = 0; s < 30; ++s) {
            const auto net = small_net(s, 2.0);
            const auto x = random_image(8, 200 + s);
            const bool want = predict(net, x) != predict(net, jpeg_roundtrip(x, 20));
            CHECK(prediction_change_detector(net, x, 20) == want);
            CHECK(prediction_change_detector(net, x, 20) == prediction_change_detector(net, x, 20));
        }
    }
}

TEST_SUITE("experiment") {
    TEST_CASE("eps = 0 attack reports asr 0 and no auroc") {
        const auto& m = synth_model();
        AttackConfig cfg;
        cfg.eps = 0.0;
        const auto reports = run_experiment(m.net, head(m.test, 16), {static_attack(cfg)}, ExperimentConfig{});
        REQUIRE(reports.size() == 1);
        CHECK(reports[0].asr == 0.0);
        CHECK(reports[0].n_adv == 0);
        CHECK_FALSE(reports[0].auroc.has_value());
        CHECK(reports[0].n_clean == 16);
    }

    TEST_CASE("counts, rates and the report files") {
        const auto& m = synth_model();
        AttackConfig strong;
        strong.eps = 0.3;
        strong.step = 0.05;
        AttackConfig none;
        none.eps = 0.0;
        ExperimentConfig ec;
        ec.seed = 3;
        const auto data = head(m.test, 24);
        const auto reports = run_experiment(m.net, data, {static_attack(strong), static_attack(none)}, ec);
        const auto& r = reports[0];
        CHECK(r.n_attacked == 24);
        CHECK(r.asr == doctest::Approx(static_cast<double>(r.n_adv) / 24));
        CHECK(r.n_adv > 0);
        REQUIRE(r.auroc.has_value());
        CHECK((*r.auroc >= 0.0 && *r.auroc <= 1.0));
        CHECK((r.fpr_at_tau <= 0.05 + 1e-12));

        // Recompute the AUROC from the stored scores.
        std::vector<double> neg, pos;
        for (const auto& s : r.scores) (s.adversarial ? pos : neg).push_back(s.jad.score);
        CHECK(neg.size() == r.n_clean);
        CHECK(pos.size() == r.n_adv);
        CHECK(*r.auroc == doctest::Approx(brute_auroc(neg, pos)).epsilon(1e-12));

        const auto dir = std::filesystem::temp_directory_path() / "jad_test_experiment";
        std::filesystem::remove_all(dir);
        write_experiment(reports, dir);
        const auto results = slurp(dir / "results.csv");
        CHECK(results.substr(0, results.find('\n')) ==
              "attack,norm,eps,n_clean,n_adv,asr,auroc,amp_success_rate,mean_amp_clean,mean_amp_adv,fpr_at_tau,tpr_at_tau");
        CHECK(results.find(",NA,") != std::string::npos);
        const auto scores = slurp(dir / "scores.csv");
        CHECK(scores.substr(0, scores.find('\n')) == "sample_id,label,attack,jad_score,degenerate");

        // Same seed, same bytes; threads do not change the output.
        ec.threads = 3;
        const auto dir2 = dir / "again";
        write_experiment(run_experiment(m.net, data, {static_attack(strong), static_attack(none)}, ec), dir2);
        CHECK(slurp(dir2 / "results.csv") == results);
        CHECK(slurp(dir2 / "scores.csv") == scores);
        CHECK(slurp(dir2 / "baseline.csv") == slurp(dir / "baseline.csv"));
        std::filesystem::remove_all(dir);
    }

    TEST_CASE("format_double round-trips") {
        for (double v : {0.1, 1.0 / 3.0, 8.0 / 255.0, 1e-300, 0.0}) CHECK(std::stod(format_double(v)) == v);
    }
}
