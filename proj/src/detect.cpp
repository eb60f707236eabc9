#include "jad/detect.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <exception>
#include <fstream>
#include <mutex>
#include <numeric>
#include <thread>

#include "jad/error.hpp"
#include "jad/impact.hpp"
#include "jad/jpeg.hpp"
#include "jad/rng.hpp"
#include "jad/spectral.hpp"

namespace jad {

namespace {

void require_nonempty(std::span<const double> s, const char* what) {
    if (s.empty()) throw ParameterError(std::string(what) + " must not be empty");
}

double mean(const std::vector<double>& v) {
    return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double fraction_above(const std::vector<double>& v, double tau) {
    if (v.empty()) return 0.0;
    const auto n = std::count_if(v.begin(), v.end(), [&](double s) { return s > tau; });
    return static_cast<double>(n) / static_cast<double>(v.size());
}

std::ofstream open_csv(const std::filesystem::path& p) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + p.string());
    return out;
}

std::string optional_text(const std::optional<double>& v) { return v ? format_double(*v) : "NA"; }

}  // namespace

std::string format_double(double v) {
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

AmplificationReport amplification_between(const Network& net, const Tensor& x, const Tensor& x_prime, Head head) {
    AmplificationReport r;
    r.d = layer_impacts(net, x, x_prime, head);
    if (net.depth() >= 2) r.beta_certified = certify_beta(net).beta;
    if (r.d.front() > 0.0) {
        r.ratio = r.d.back() / r.d.front();
    } else {
        r.degenerate = true;
    }
    return r;
}

AmplificationReport net_amplification(const Network& net, const Tensor& x, std::size_t label,
                                      const AttackConfig& attack, Head head) {
    const AttackResult adv = run_attack(net, x, label, attack);
    return amplification_between(net, x, adv.x_adv, head);
}

double calibrate_threshold(std::span<const double> clean_scores, double target_fpr) {
    require_nonempty(clean_scores, "calibration scores");
    if (!(target_fpr > 0.0 && target_fpr < 1.0)) throw ParameterError("target_fpr must lie in (0, 1)");
    std::vector<double> s(clean_scores.begin(), clean_scores.end());
    std::sort(s.begin(), s.end());
    const double n = static_cast<double>(s.size());
    // smallest k with k / n >= 1 - fpr; the small slack absorbs rounding in n * (1 - fpr)
    auto k = static_cast<std::size_t>(std::ceil(n * (1.0 - target_fpr) - 1e-9));
    k = std::clamp<std::size_t>(k, 1, s.size());
    return s[k - 1];
}

double auroc(std::span<const double> neg, std::span<const double> pos) {
    require_nonempty(neg, "negative scores");
    require_nonempty(pos, "positive scores");
    struct Item {
        double v;
        bool positive;
    };
    std::vector<Item> all;
    all.reserve(neg.size() + pos.size());
    for (double v : neg) all.push_back({v, false});
    for (double v : pos) all.push_back({v, true});
    std::sort(all.begin(), all.end(), [](const Item& a, const Item& b) { return a.v < b.v; });
    double rank_sum = 0.0;
    for (std::size_t i = 0; i < all.size();) {
        std::size_t j = i;
        while (j < all.size() && all[j].v == all[i].v) ++j;
        const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);  // mean of ranks i+1 .. j
        for (std::size_t k = i; k < j; ++k)
            if (all[k].positive) rank_sum += avg_rank;
        i = j;
    }
    const double np = static_cast<double>(pos.size());
    const double nn = static_cast<double>(neg.size());
    return (rank_sum - np * (np + 1.0) / 2.0) / (np * nn);
}

double auroc_pairwise(std::span<const double> neg, std::span<const double> pos) {
    require_nonempty(neg, "negative scores");
    require_nonempty(pos, "positive scores");
    double wins = 0.0;
    for (double p : pos)
        for (double n : neg) wins += p > n ? 1.0 : (p == n ? 0.5 : 0.0);
    return wins / (static_cast<double>(pos.size()) * static_cast<double>(neg.size()));
}

bool prediction_change_detector(const Network& net, const Tensor& x, int quality) {
    return predict(net, x) != predict(net, jpeg_roundtrip(x, quality));
}

AttackSpec static_attack(const AttackConfig& cfg) {
    cfg.validate();
    AttackSpec s;
    s.name = std::string(attack_name(cfg.kind));
    if (cfg.norm == Norm::L2) s.name += "_l2";
    s.norm = cfg.norm;
    s.eps = cfg.eps;
    s.craft = [cfg](const Network& net, const Tensor& x, std::size_t y, std::uint64_t seed) {
        AttackConfig c = cfg;
        c.seed = seed;
        return run_attack(net, x, y, c);
    };
    return s;
}

AttackSpec adaptive_attack(const AdaptiveConfig& cfg, const DetectorConfig& det) {
    cfg.validate();
    AttackSpec s;
    s.name = cfg.mode == AdaptiveMode::Eot ? "eot" : "classical";
    s.norm = cfg.base.norm;
    s.eps = cfg.base.eps;
    s.craft = [cfg, det](const Network& net, const Tensor& x, std::size_t y, std::uint64_t seed) {
        AdaptiveConfig c = cfg;
        c.base.seed = seed;
        return c.mode == AdaptiveMode::Eot ? eot_adaptive(net, x, y, c) : classical_adaptive(net, x, y, c, det);
    };
    return s;
}

void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& fn) {
    threads = std::max<std::size_t>(1, std::min(threads, n));
    if (threads == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lock(error_mutex);
                    if (!error) error = std::current_exception();
                }
            }
        });
    }
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
}

std::vector<EvalReport> run_experiment(const Network& net, const Dataset& data, const std::vector<AttackSpec>& attacks,
                                       const ExperimentConfig& cfg) {
    data.validate();
    cfg.detector.validate(net);
    if (data.input_dim() != net.input_dim()) throw DimensionError("dataset does not match the network input");
    const std::size_t n = data.size();

    auto detector_for = [&](std::size_t k) {
        DetectorConfig d = cfg.detector;
        d.seed = detect_seed(cfg.seed, k);
        return d;
    };

    std::vector<JadScore> clean(n);
    std::vector<char> clean_flag(n);
    parallel_for(n, cfg.threads, [&](std::size_t k) {
        const DetectorConfig d = detector_for(k);
        clean[k] = jad_score(net, data.images[k], d);
        clean_flag[k] = prediction_change_detector(net, data.images[k], clean[k].quality);
    });
    std::vector<double> all_clean(n);
    for (std::size_t k = 0; k < n; ++k) all_clean[k] = clean[k].score;
    const double tau = calibrate_threshold(all_clean, cfg.target_fpr);
    std::vector<double> clean_flag_scores(n);
    for (std::size_t k = 0; k < n; ++k) clean_flag_scores[k] = clean_flag[k] ? 1.0 : 0.0;

    std::vector<EvalReport> reports;
    for (const auto& spec : attacks) {
        struct PerSample {
            bool success = false;
            JadScore adv;
            bool adv_flag = false;
            double amp = 0.0;
            std::size_t grad_evals = 0;
        };
        std::vector<PerSample> ps(n);
        parallel_for(n, cfg.threads, [&](std::size_t k) {
            const Tensor& x = data.images[k];
            const AttackResult r = spec.craft(net, x, data.labels[k], attack_seed(cfg.seed, k));
            auto& p = ps[k];
            p.grad_evals = r.grad_evals;
            p.success = attack_success(net, x, r.x_adv);
            if (!p.success) return;
            const DetectorConfig d = detector_for(k);
            p.adv = jad_score(net, r.x_adv, d);
            p.adv_flag = prediction_change_detector(net, r.x_adv, p.adv.quality);
            p.amp = amplification_between(net, x, r.x_adv, cfg.detector.head).ratio;
        });

        EvalReport rep;
        rep.attack = spec.name;
        rep.norm = spec.norm;
        rep.eps = spec.eps;
        rep.n_attacked = n;
        rep.tau = tau;
        std::vector<double> pos, pos_flag;
        std::size_t amplified = 0;
        double evals = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            evals += static_cast<double>(ps[k].grad_evals);
            rep.scores.push_back({k, false, clean[k], clean_flag[k] != 0});
            if (!ps[k].success) continue;
            pos.push_back(ps[k].adv.score);
            pos_flag.push_back(ps[k].adv_flag ? 1.0 : 0.0);
            amplified += ps[k].amp > 1.0;
            rep.scores.push_back({k, true, ps[k].adv, ps[k].adv_flag});
        }
        rep.mean_grad_evals = n ? evals / static_cast<double>(n) : 0.0;
        const std::vector<double>& neg = all_clean;
        rep.n_clean = neg.size();
        rep.n_adv = pos.size();
        rep.asr = n ? static_cast<double>(pos.size()) / static_cast<double>(n) : 0.0;
        if (!pos.empty()) {
            rep.auroc = auroc(neg, pos);
            rep.baseline_auroc = auroc(clean_flag_scores, pos_flag);
            rep.amp_success_rate = static_cast<double>(amplified) / static_cast<double>(pos.size());
        }
        rep.mean_amp_clean = mean(neg);
        rep.mean_amp_adv = mean(pos);
        rep.fpr_at_tau = fraction_above(neg, tau);
        rep.tpr_at_tau = fraction_above(pos, tau);
        reports.push_back(std::move(rep));
    }
    return reports;
}

void write_experiment(const std::vector<EvalReport>& reports, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    auto results = open_csv(dir / "results.csv");
    results << "attack,norm,eps,n_clean,n_adv,asr,auroc,amp_success_rate,mean_amp_clean,mean_amp_adv,fpr_at_tau,"
               "tpr_at_tau\n";
    auto scores = open_csv(dir / "scores.csv");
    scores << "sample_id,label,attack,jad_score,degenerate\n";
    auto baseline = open_csv(dir / "baseline.csv");
    baseline << "attack,norm,eps,n_adv,auroc_jad,auroc_prediction_change\n";
    for (const auto& r : reports) {
        results << r.attack << ',' << norm_name(r.norm) << ',' << format_double(r.eps) << ',' << r.n_clean << ','
                << r.n_adv << ',' << format_double(r.asr) << ',' << optional_text(r.auroc) << ','
                << format_double(r.amp_success_rate) << ',' << format_double(r.mean_amp_clean) << ','
                << format_double(r.mean_amp_adv) << ',' << format_double(r.fpr_at_tau) << ','
                << format_double(r.tpr_at_tau) << '\n';
        for (const auto& s : r.scores) {
            scores << s.sample << ',' << (s.adversarial ? "adv" : "clean") << ',' << r.attack << ','
                   << format_double(s.jad.score) << ',' << (s.jad.degenerate ? 1 : 0) << '\n';
        }
        baseline << r.attack << ',' << norm_name(r.norm) << ',' << format_double(r.eps) << ',' << r.n_adv << ','
                 << optional_text(r.auroc) << ',' << optional_text(r.baseline_auroc) << '\n';
    }
}

}  // namespace jad
