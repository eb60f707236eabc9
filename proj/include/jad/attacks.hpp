#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "jad/jad_score.hpp"
#include "jad/network.hpp"

namespace jad {

enum class AttackKind { Fgsm, Bim, Pgd };
enum class Norm { Linf, L2 };
enum class AdaptiveMode { Eot, Classical };

std::string_view attack_name(AttackKind k);
std::string_view norm_name(Norm n);
AttackKind parse_attack(std::string_view s);
Norm parse_norm(std::string_view s);

/// eps and step are on the [0, 1] pixel scale.
struct AttackConfig {
    AttackKind kind = AttackKind::Pgd;
    Norm norm = Norm::Linf;
    double eps = 8.0 / 255.0;
    double step = 2.0 / 255.0;
    std::size_t steps = 10;
    bool rand_init = true;
    std::uint64_t seed = 0;
    bool keep_iterates = false;

    void validate() const;
};

struct AdaptiveConfig {
    AttackConfig base;
    std::size_t trials = 1;  // T, JPEG qualities sampled per step
    double lambda = 0.5;
    int q_lo = 30;
    int q_hi = 80;
    AdaptiveMode mode = AdaptiveMode::Eot;

    void validate() const;
};

struct AttackResult {
    Tensor x_adv;
    std::size_t steps_used = 0;
    std::size_t grad_evals = 0;
    std::vector<Tensor> iterates;  // x after each step, when keep_iterates is set
};

/// x + eps * sign(grad CE), clamped to [0, 1]; sign(0) = 0.
AttackResult fgsm(const Network& net, const Tensor& x, std::size_t label, double eps);

/// Projected gradient ascent on cross-entropy. l_inf: signed steps and box
/// projection; l2: normalized-gradient steps and radial projection. Every
/// iterate is clamped to [0, 1].
AttackResult pgd(const Network& net, const Tensor& x, std::size_t label, const AttackConfig& cfg);

/// PGD without random start.
AttackResult bim(const Network& net, const Tensor& x, std::size_t label, const AttackConfig& cfg);

/// Dispatches on cfg.kind.
AttackResult run_attack(const Network& net, const Tensor& x, std::size_t label, const AttackConfig& cfg);

/// Expectation-over-transformation attack against the JPEG detector:
/// random start in the eps box, then per step f = grad CE(x_adv) and
/// f_robust = mean over T sampled qualities of grad CE(JPEG_ste(x_adv, q));
/// the update uses sign(f + lambda * f_robust). With lambda = 0 no qualities
/// are drawn, so the trajectory matches pgd() with the same seed.
AttackResult eot_adaptive(const Network& net, const Tensor& x, std::size_t label, const AdaptiveConfig& cfg);

/// Detector-aware PGD on CE(g(x_adv), y) - lambda * d_last / d_first, where the
/// impacts are measured against JPEG_ste(x_adv, det.quality) (fixed quality).
AttackResult classical_adaptive(const Network& net, const Tensor& x, std::size_t label, const AdaptiveConfig& cfg,
                                const DetectorConfig& det);

/// Prediction changed between x and x_adv.
bool attack_success(const Network& net, const Tensor& x, const Tensor& x_adv);

enum class LossKind { CrossEntropy, JadRatio, Composite };

/// Gradient of a scalar attack objective with respect to the input image:
/// cross_entropy: CE(g(x), y); jad_ratio: d_last / d_first against the
/// straight-through JPEG of x; composite: CE - lambda * jad_ratio.
/// The detector must use a fixed quality.
Tensor objective_gradient(const Network& net, const Tensor& x, std::size_t label, LossKind kind, double lambda,
                          const DetectorConfig& det, double* value = nullptr);

}  // namespace jad
