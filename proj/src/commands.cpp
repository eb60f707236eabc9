#include "jad/commands.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "jad/checkpoint.hpp"
#include "jad/corrupt.hpp"
#include "jad/detect.hpp"
#include "jad/error.hpp"
#include "jad/rng.hpp"
#include "jad/spectral.hpp"
#include "jad/train.hpp"

namespace jad::cli {

namespace {

static_assert(std::endian::native == std::endian::little, "adv.f64 is written in native little-endian order");

std::ofstream open_out(const std::filesystem::path& p) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + p.string());
    return out;
}

void prepare_out(const RunConfig& cfg) {
    std::error_code ec;
    std::filesystem::create_directories(cfg.out_dir, ec);
    if (ec) throw ConfigError("cannot create output directory " + cfg.out_dir.string() + ": " + ec.message());
}

Network load_model(const RunConfig& cfg) {
    const auto path = cfg.resolved_model_path();
    if (!std::filesystem::exists(path)) throw ConfigError("checkpoint not found: " + path.string());
    return load_checkpoint(path);
}

void check_fit(const Network& net, const Dataset& data) {
    if (net.input_dim() != data.input_dim()) {
        throw DimensionError("checkpoint expects " + std::to_string(net.input_dim()) + " inputs but images have " +
                             std::to_string(data.input_dim()));
    }
}

DetectorConfig detector_for(const RunConfig& cfg, const Network& net) {
    DetectorConfig d = cfg.detector;
    d.validate(net);
    return d;
}

void write_spectral_csv(const SpectralReport& r, std::ostream& out) {
    out << "layer,sigma_min,sigma_max,L_f,cum_beta\n";
    for (const auto& l : r.per_layer) {
        out << l.layer << ',' << format_double(l.sigma_min) << ',' << format_double(l.sigma_max) << ','
            << format_double(l.lipschitz_lower) << ',' << format_double(l.cumulative_beta) << '\n';
    }
}

SpectralReport certified(const std::filesystem::path& checkpoint) {
    if (!std::filesystem::exists(checkpoint)) throw ConfigError("checkpoint not found: " + checkpoint.string());
    const Network net = load_checkpoint(checkpoint);
    if (net.depth() < 2) throw DimensionError("certification needs a network with at least two layers");
    return certify_beta(net);
}

}  // namespace

std::pair<Dataset, Dataset> load_run_data(const RunConfig& cfg) {
    Dataset data;
    if (cfg.source == DataSource::Idx) {
        data = load_idx(cfg.images_path, cfg.labels_path);
        if (cfg.n > 0) data = head(data, cfg.n);
    } else {
        data = synth_dataset(cfg.n, cfg.side, cfg.seed);
    }
    if (data.size() <= cfg.test_n) {
        throw ConfigError("dataset has " + std::to_string(data.size()) + " samples, not more than data.test_n = " +
                          std::to_string(cfg.test_n));
    }
    return split_tail(std::move(data), cfg.test_n);
}

Network build_network(const RunConfig& cfg, const Dataset& data) {
    std::vector<std::size_t> dims = cfg.dims;
    if (dims.empty()) dims = {data.input_dim(), 128, 64, data.num_classes};
    if (dims.front() != data.input_dim()) {
        throw DimensionError("model.dims starts with " + std::to_string(dims.front()) + " but images have " +
                             std::to_string(data.input_dim()) + " pixels");
    }
    if (dims.back() < data.num_classes) throw DimensionError("model.dims has fewer outputs than classes");
    Network net = init_mlp(dims, cfg.alpha, cfg.seed);
    if (cfg.hidden == Activation::Identity) {
        for (std::size_t i = 0; i + 1 < net.depth(); ++i) {
            net.layer(i).spec.activation = Activation::Identity;
            net.layer(i).spec.alpha = 1.0;
        }
    }
    return net;
}

void cmd_train(const RunConfig& cfg, std::ostream& log) {
    prepare_out(cfg);
    const auto [train_set, test_set] = load_run_data(cfg);
    TrainConfig tc = cfg.train;
    tc.seed = cfg.seed;
    const TrainResult r = train(build_network(cfg, train_set), train_set, tc);
    save_checkpoint(r.net, cfg.resolved_model_path());
    auto hist = open_out(cfg.out_dir / "history.csv");
    hist << "epoch,loss,accuracy,min_sigma_min\n";
    for (const auto& e : r.history) {
        hist << e.epoch << ',' << format_double(e.loss) << ',' << format_double(e.accuracy) << ','
             << format_double(e.min_sigma_min) << '\n';
    }
    log << "trained " << r.history.size() << " epochs; train accuracy " << r.history.back().accuracy
        << ", test accuracy " << accuracy(r.net, test_set) << ", min sigma_min " << r.history.back().min_sigma_min
        << '\n';
}

void cmd_certify(const std::filesystem::path& checkpoint, const std::filesystem::path& out_dir, std::ostream& log) {
    const SpectralReport r = certified(checkpoint);
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw ConfigError("cannot create output directory " + out_dir.string());
    auto out = open_out(out_dir / "spectral.csv");
    write_spectral_csv(r, out);
    log << "beta=" << format_double(r.beta) << " verdict=" << (r.amplifying ? "amplifying" : "not_amplifying")
        << (r.activations_expand ? "" : " (an activation has L_f = 0)") << '\n';
}

void cmd_report_spectral(const std::filesystem::path& checkpoint, std::ostream& out) {
    write_spectral_csv(certified(checkpoint), out);
}

void cmd_attack(const RunConfig& cfg, std::ostream& log) {
    prepare_out(cfg);
    const Network net = load_model(cfg);
    const Dataset test = load_run_data(cfg).second;
    check_fit(net, test);
    std::vector<AttackResult> results(test.size());
    parallel_for(test.size(), cfg.threads, [&](std::size_t k) {
        AttackConfig a = cfg.attack;
        a.seed = attack_seed(cfg.seed, k);
        results[k] = run_attack(net, test.images[k], test.labels[k], a);
    });
    auto csv = open_out(cfg.out_dir / "attacks.csv");
    auto bin = open_out(cfg.out_dir / "adv.f64");
    csv << "sample,success,linf,l2,steps_used\n";
    std::size_t successes = 0;
    for (std::size_t k = 0; k < test.size(); ++k) {
        const auto& x = test.images[k];
        const auto& xa = results[k].x_adv;
        const bool ok = attack_success(net, x, xa);
        successes += ok;
        csv << k << ',' << (ok ? 1 : 0) << ',' << format_double(linf_distance(x.values(), xa.values())) << ','
            << format_double(l2_distance(x.values(), xa.values())) << ',' << results[k].steps_used << '\n';
        bin.write(reinterpret_cast<const char*>(xa.data().data()),
                  static_cast<std::streamsize>(xa.size() * sizeof(double)));
    }
    log << attack_name(cfg.attack.kind) << '/' << norm_name(cfg.attack.norm) << ": " << successes << '/'
        << test.size() << " successful\n";
}

void cmd_amp(const RunConfig& cfg, std::ostream& log) {
    prepare_out(cfg);
    const Network net = load_model(cfg);
    const Dataset test = load_run_data(cfg).second;
    check_fit(net, test);
    const Head head = detector_for(cfg, net).head;
    std::vector<AmplificationReport> reps(test.size());
    std::vector<char> success(test.size());
    parallel_for(test.size(), cfg.threads, [&](std::size_t k) {
        AttackConfig a = cfg.attack;
        a.seed = attack_seed(cfg.seed, k);
        const AttackResult r = run_attack(net, test.images[k], test.labels[k], a);
        success[k] = attack_success(net, test.images[k], r.x_adv);
        reps[k] = amplification_between(net, test.images[k], r.x_adv, head);
    });
    auto csv = open_out(cfg.out_dir / "amp.csv");
    csv << "sample,success,d_first,d_last,ratio,degenerate\n";
    std::size_t n_success = 0, amplified = 0;
    for (std::size_t k = 0; k < test.size(); ++k) {
        const auto& r = reps[k];
        csv << k << ',' << (success[k] ? 1 : 0) << ',' << format_double(r.d.front()) << ','
            << format_double(r.d.back()) << ',' << format_double(r.ratio) << ',' << (r.degenerate ? 1 : 0) << '\n';
        if (success[k]) {
            ++n_success;
            amplified += r.ratio > 1.0;
        }
    }
    log << "successful attacks " << n_success << '/' << test.size() << ", amplified (ratio > 1) " << amplified;
    if (net.depth() >= 2) log << ", certified beta " << format_double(certify_beta(net).beta);
    log << '\n';
}

void cmd_eval(const RunConfig& cfg, std::ostream& log) {
    prepare_out(cfg);
    const Network net = load_model(cfg);
    const Dataset test = load_run_data(cfg).second;
    check_fit(net, test);
    std::vector<AttackSpec> specs;
    for (const auto& name : cfg.eval_attacks) {
        AttackSpec s = static_attack(cfg.attack_for(name));
        s.name = name;
        specs.push_back(std::move(s));
    }
    ExperimentConfig ec{detector_for(cfg, net), cfg.target_fpr, cfg.seed, cfg.threads};
    const auto reports = run_experiment(net, test, specs, ec);
    write_experiment(reports, cfg.out_dir);
    for (const auto& r : reports) {
        log << r.attack << ": asr " << r.asr << ", auroc " << (r.auroc ? format_double(*r.auroc) : "NA")
            << ", baseline auroc " << (r.baseline_auroc ? format_double(*r.baseline_auroc) : "NA") << '\n';
    }
}

void cmd_adaptive(const RunConfig& cfg, std::ostream& log) {
    prepare_out(cfg);
    const Network net = load_model(cfg);
    const Dataset test = load_run_data(cfg).second;
    check_fit(net, test);
    const DetectorConfig det = detector_for(cfg, net);
    const std::vector<double> eps_grid = cfg.adaptive_eps.empty() ? std::vector<double>{cfg.attack.eps} : cfg.adaptive_eps;
    struct Cell {
        double eps, lambda;
        std::size_t trials;
    };
    std::vector<Cell> cells;
    std::vector<AttackSpec> specs;
    for (double eps : eps_grid) {
        for (double lambda : cfg.adaptive_lambdas) {
            for (std::size_t t : cfg.adaptive_trials) {
                cells.push_back({eps, lambda, t});
                specs.push_back(adaptive_attack(cfg.adaptive_for(eps, lambda, t), det));
            }
        }
    }
    ExperimentConfig ec{det, cfg.target_fpr, cfg.seed, cfg.threads};
    const auto reports = run_experiment(net, test, specs, ec);
    auto csv = open_out(cfg.out_dir / "adaptive_results.csv");
    csv << "mode,eps,lambda,T,n_adv,asr,auroc,amp_success_rate,grad_evals\n";
    for (std::size_t i = 0; i < cells.size(); ++i) {
        const auto& r = reports[i];
        const auto& c = cells[i];
        csv << specs[i].name << ',' << format_double(c.eps) << ',' << format_double(c.lambda) << ',' << c.trials << ','
            << r.n_adv << ',' << format_double(r.asr) << ',' << (r.auroc ? format_double(*r.auroc) : "NA") << ','
            << format_double(r.amp_success_rate) << ',' << format_double(r.mean_grad_evals) << '\n';
        log << specs[i].name << " eps " << c.eps << " lambda " << c.lambda << " T " << c.trials << ": asr " << r.asr
            << ", auroc " << (r.auroc ? format_double(*r.auroc) : "NA") << '\n';
    }
}

void cmd_corrupt_study(const RunConfig& cfg, std::ostream& log) {
    prepare_out(cfg);
    const Network net = load_model(cfg);
    const Dataset test = load_run_data(cfg).second;
    check_fit(net, test);
    const Head head = detector_for(cfg, net).head;
    const std::size_t n = test.size();
    auto csv = open_out(cfg.out_dir / "corrupt_study.csv");
    csv << "perturbation,magnitude,n,amp_fraction,mean_ratio,n_degenerate\n";
    auto emit = [&](const std::string& name, double magnitude, const std::vector<AmplificationReport>& reps) {
        std::size_t amplified = 0, degenerate = 0;
        double sum = 0.0;
        for (const auto& r : reps) {
            amplified += r.ratio > 1.0;
            degenerate += r.degenerate;
            sum += r.ratio;
        }
        const double m = reps.empty() ? 0.0 : static_cast<double>(reps.size());
        const double frac = reps.empty() ? 0.0 : static_cast<double>(amplified) / m;
        const double mean = reps.empty() ? 0.0 : sum / m;
        csv << name << ',' << format_double(magnitude) << ',' << reps.size() << ',' << format_double(frac) << ','
            << format_double(mean) << ',' << degenerate << '\n';
        log << name << ": amplified fraction " << frac << ", mean ratio " << mean << '\n';
    };
    for (const CorruptionKind kind : cfg.corruptions) {
        const double magnitude = cfg.magnitude_for(kind);
        std::vector<AmplificationReport> reps(n);
        parallel_for(n, cfg.threads, [&](std::size_t k) {
            const CorruptionSpec spec{kind, magnitude, attack_seed(cfg.seed, k)};
            reps[k] = amplification_between(net, test.images[k], corrupt(test.images[k], spec), head);
        });
        emit(std::string(corruption_name(kind)), magnitude, reps);
    }
    // Reference row: successful static attacks with the configured attack.* settings.
    std::vector<AmplificationReport> adv(n);
    std::vector<char> ok(n);
    parallel_for(n, cfg.threads, [&](std::size_t k) {
        AttackConfig a = cfg.attack;
        a.seed = attack_seed(cfg.seed, k);
        const AttackResult r = run_attack(net, test.images[k], test.labels[k], a);
        ok[k] = attack_success(net, test.images[k], r.x_adv);
        adv[k] = amplification_between(net, test.images[k], r.x_adv, head);
    });
    std::vector<AmplificationReport> successful;
    for (std::size_t k = 0; k < n; ++k)
        if (ok[k]) successful.push_back(adv[k]);
    emit(std::string(attack_name(cfg.attack.kind)) + (cfg.attack.norm == Norm::L2 ? "_l2" : "") + "_successful",
         cfg.attack.eps, successful);
}

int run_guarded(const std::function<void()>& body, std::ostream& err) {
    try {
        body();
        return 0;
    } catch (const NumericError& e) {
        err << "numeric error: " << e.what() << '\n';
        return 3;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::filesystem::filesystem_error& e) {
        err << "I/O error: " << e.what() << '\n';
        return 2;
    } catch (const std::bad_alloc&) {
        err << "out of memory\n";
        return 3;
    }
}

}  // namespace jad::cli
