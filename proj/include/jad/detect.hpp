#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "jad/attacks.hpp"
#include "jad/dataset.hpp"
#include "jad/jad_score.hpp"

namespace jad {

/// Net amplification of one input pair: impacts of every traced layer and
/// d_last / d_first (0 and degenerate when d_first == 0).
struct AmplificationReport {
    std::vector<double> d;
    double ratio = 0.0;
    double beta_certified = 1.0;
    bool degenerate = false;
};

AmplificationReport amplification_between(const Network& net, const Tensor& x, const Tensor& x_prime,
                                          Head head = Head::Logits);

/// Crafts x_adv with `attack` and measures its amplification against x.
AmplificationReport net_amplification(const Network& net, const Tensor& x, std::size_t label,
                                      const AttackConfig& attack, Head head = Head::Logits);

/// Smallest score s such that at least (1 - target_fpr) of the scores are <= s.
/// A score is flagged adversarial iff it is strictly greater than tau.
double calibrate_threshold(std::span<const double> clean_scores, double target_fpr);

/// Probability that a random positive outscores a random negative (ties count
/// one half), computed from average ranks.
double auroc(std::span<const double> neg, std::span<const double> pos);

/// O(n m) pairwise reference for auroc().
double auroc_pairwise(std::span<const double> neg, std::span<const double> pos);

/// Flags x when the predicted class changes under a JPEG round trip.
bool prediction_change_detector(const Network& net, const Tensor& x, int quality);

/// One named way of producing x_adv from (x, label, per-sample seed).
struct AttackSpec {
    std::string name;
    Norm norm = Norm::Linf;
    double eps = 0.0;
    std::function<AttackResult(const Network&, const Tensor&, std::size_t, std::uint64_t)> craft;
};

AttackSpec static_attack(const AttackConfig& cfg);
AttackSpec adaptive_attack(const AdaptiveConfig& cfg, const DetectorConfig& det);

struct SampleScore {
    std::size_t sample = 0;
    bool adversarial = false;
    JadScore jad;
    bool baseline_flag = false;
};

struct EvalReport {
    std::string attack;
    Norm norm = Norm::Linf;
    double eps = 0.0;
    std::size_t n_attacked = 0;
    std::size_t n_clean = 0;
    std::size_t n_adv = 0;
    double asr = 0.0;
    std::optional<double> auroc;           // absent when no attack succeeded
    std::optional<double> baseline_auroc;  // prediction-change detector on the same samples
    double amp_success_rate = 0.0;         // successful x_adv with d_last/d_first(x, x_adv) > 1
    double mean_amp_clean = 0.0;           // mean JAD score, clean side
    double mean_amp_adv = 0.0;             // mean JAD score, adversarial side
    double fpr_at_tau = 0.0;
    double tpr_at_tau = 0.0;
    double tau = 0.0;
    double mean_grad_evals = 0.0;
    std::vector<SampleScore> scores;
};

struct ExperimentConfig {
    DetectorConfig detector;
    double target_fpr = 0.05;
    std::uint64_t seed = 0;
    std::size_t threads = 1;
};

/// For each attack: craft one x_adv per test sample and keep the successful
/// ones as positives. Negatives are the JAD scores of every clean test sample
/// (AUROC does not depend on class balance, and restricting the clean side to
/// the attacked-successfully subset would bias it toward boundary points).
/// tau is calibrated once on those clean scores.
std::vector<EvalReport> run_experiment(const Network& net, const Dataset& data, const std::vector<AttackSpec>& attacks,
                                       const ExperimentConfig& cfg);

/// results.csv, scores.csv and baseline.csv under `dir`.
void write_experiment(const std::vector<EvalReport>& reports, const std::filesystem::path& dir);

/// Runs fn(i) for i in [0, n) on up to `threads` workers. fn must only write
/// to per-index state.
void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& fn);

/// Shortest round-trip decimal text for a double.
std::string format_double(double v);

}  // namespace jad
