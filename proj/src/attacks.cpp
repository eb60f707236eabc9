#include "jad/attacks.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "jad/error.hpp"
#include "jad/jpeg.hpp"
#include "jad/rng.hpp"

namespace jad {

namespace {

constexpr double kGradGuard = 1e-12;

double sign(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

void check_image_range(const Tensor& x) {
    for (double v : x.values()) {
        if (!(v >= 0.0 && v <= 1.0)) throw ParameterError("attack input must lie in [0, 1]");
    }
}

// Random start: U(-eps, eps) per pixel (l_inf) or uniform in the l2 ball.
Tensor random_start(const Tensor& x, Norm norm, double eps, SplitMix64& rng) {
    Tensor out = x;
    auto& d = out.data();
    if (norm == Norm::Linf) {
        for (auto& v : d) v = std::clamp(v + rng.uniform(-eps, eps), 0.0, 1.0);
        return out;
    }
    std::vector<double> dir(d.size());
    double n = 0.0;
    while (n == 0.0) {
        for (auto& v : dir) v = rng.normal();
        n = l2_norm(dir);
    }
    const double r = eps * std::pow(rng.uniform(), 1.0 / static_cast<double>(d.size()));
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = std::clamp(d[i] + r * dir[i] / n, 0.0, 1.0);
    return out;
}

// One ascent step along `grad` followed by projection onto the eps ball
// around x and the [0, 1] box.
void step_and_project(Tensor& x_adv, const Tensor& x, std::span<const double> grad, Norm norm, double step,
                      double eps) {
    auto& a = x_adv.data();
    const auto& c = x.data();
    if (norm == Norm::Linf) {
        for (std::size_t i = 0; i < a.size(); ++i) {
            const double moved = a[i] + step * sign(grad[i]);
            a[i] = std::clamp(std::clamp(moved, c[i] - eps, c[i] + eps), 0.0, 1.0);
        }
        return;
    }
    const double gn = std::max(l2_norm(grad), kGradGuard);
    std::vector<double> delta(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) delta[i] = a[i] + step * grad[i] / gn - c[i];
    const double dn = l2_norm(delta);
    const double shrink = dn > eps ? eps / dn : 1.0;
    for (std::size_t i = 0; i < a.size(); ++i) a[i] = std::clamp(c[i] + delta[i] * shrink, 0.0, 1.0);
}

Tensor ce_gradient(const Network& net, const Tensor& x, std::size_t label) {
    return input_gradient(net, x, cross_entropy_loss(label));
}

template <class GradFn>
AttackResult iterate(const Tensor& x, const AttackConfig& cfg, Tensor start, GradFn&& grad_fn,
                     std::size_t evals_per_step) {
    AttackResult r;
    r.x_adv = std::move(start);
    for (std::size_t k = 0; k < cfg.steps; ++k) {
        const Tensor g = grad_fn(r.x_adv);
        step_and_project(r.x_adv, x, g.values(), cfg.norm, cfg.step, cfg.eps);
        if (cfg.keep_iterates) r.iterates.push_back(r.x_adv);
    }
    r.steps_used = cfg.steps;
    r.grad_evals = cfg.steps * evals_per_step;
    return r;
}

}  // namespace

std::string_view attack_name(AttackKind k) {
    switch (k) {
        case AttackKind::Fgsm: return "fgsm";
        case AttackKind::Bim: return "bim";
        case AttackKind::Pgd: return "pgd";
    }
    return "?";
}

std::string_view norm_name(Norm n) { return n == Norm::Linf ? "linf" : "l2"; }

AttackKind parse_attack(std::string_view s) {
    if (s == "fgsm") return AttackKind::Fgsm;
    if (s == "bim") return AttackKind::Bim;
    if (s == "pgd") return AttackKind::Pgd;
    throw ParameterError("unknown attack '" + std::string(s) + "'");
}

Norm parse_norm(std::string_view s) {
    if (s == "linf") return Norm::Linf;
    if (s == "l2") return Norm::L2;
    throw ParameterError("unknown norm '" + std::string(s) + "'");
}

void AttackConfig::validate() const {
    if (!std::isfinite(eps) || eps < 0.0) throw ParameterError("attack eps must be finite and >= 0");
    if (!std::isfinite(step) || step <= 0.0) throw ParameterError("attack step must be finite and > 0");
    if (steps < 1) throw ParameterError("attack needs at least one step");
}

void AdaptiveConfig::validate() const {
    base.validate();
    if (trials < 1) throw ParameterError("adaptive attack needs T >= 1");
    if (!std::isfinite(lambda) || lambda < 0.0) throw ParameterError("adaptive lambda must be finite and >= 0");
    if (mode == AdaptiveMode::Eot && lambda > 1.0) throw ParameterError("EOT lambda must lie in [0, 1]");
    if (q_lo < 1 || q_lo > q_hi || q_hi > 100) throw ParameterError("quality range must satisfy 1 <= lo <= hi <= 100");
}

AttackResult fgsm(const Network& net, const Tensor& x, std::size_t label, double eps) {
    if (!std::isfinite(eps) || eps < 0.0) throw ParameterError("fgsm eps must be finite and >= 0");
    check_image_range(x);
    AttackResult r;
    r.x_adv = x;
    const Tensor g = ce_gradient(net, x, label);
    for (std::size_t i = 0; i < x.size(); ++i) r.x_adv[i] = std::clamp(x[i] + eps * sign(g[i]), 0.0, 1.0);
    r.steps_used = 1;
    r.grad_evals = 1;
    return r;
}

AttackResult pgd(const Network& net, const Tensor& x, std::size_t label, const AttackConfig& cfg) {
    cfg.validate();
    check_image_range(x);
    SplitMix64 rng(cfg.seed);
    Tensor start = cfg.rand_init ? random_start(x, cfg.norm, cfg.eps, rng) : x;
    return iterate(x, cfg, std::move(start), [&](const Tensor& xa) { return ce_gradient(net, xa, label); }, 1);
}

AttackResult bim(const Network& net, const Tensor& x, std::size_t label, const AttackConfig& cfg) {
    AttackConfig c = cfg;
    c.rand_init = false;
    return pgd(net, x, label, c);
}

AttackResult run_attack(const Network& net, const Tensor& x, std::size_t label, const AttackConfig& cfg) {
    switch (cfg.kind) {
        case AttackKind::Fgsm: return fgsm(net, x, label, cfg.eps);
        case AttackKind::Bim: return bim(net, x, label, cfg);
        case AttackKind::Pgd: return pgd(net, x, label, cfg);
    }
    throw ParameterError("unknown attack kind");
}

AttackResult eot_adaptive(const Network& net, const Tensor& x, std::size_t label, const AdaptiveConfig& cfg) {
    cfg.validate();
    check_image_range(x);
    if (x.rank() != 3) throw DimensionError("eot_adaptive needs an HxWxC image");
    SplitMix64 rng(cfg.base.seed);
    Tensor start = random_start(x, cfg.base.norm, cfg.base.eps, rng);
    const bool robust = cfg.lambda > 0.0;
    auto grad = [&](const Tensor& xa) {
        Tensor f = ce_gradient(net, xa, label);
        if (!robust) return f;
        std::vector<double> f_robust(xa.size(), 0.0);
        for (std::size_t t = 0; t < cfg.trials; ++t) {
            const int q = rng.uniform_int(cfg.q_lo, cfg.q_hi);
            const JpegSte ste(xa, q);
            const Tensor g_san = ce_gradient(net, ste.value(), label);
            const Tensor g = ste.backward(g_san.values());
            for (std::size_t i = 0; i < f_robust.size(); ++i) f_robust[i] += g[i];
        }
        for (std::size_t i = 0; i < f.size(); ++i) f[i] += cfg.lambda * (f_robust[i] / static_cast<double>(cfg.trials));
        return f;
    };
    return iterate(x, cfg.base, std::move(start), grad, 1 + (robust ? cfg.trials : 0));
}

Tensor objective_gradient(const Network& net, const Tensor& x, std::size_t label, LossKind kind, double lambda,
                          const DetectorConfig& det, double* value) {
    if (kind != LossKind::CrossEntropy && det.randomize) {
        throw UnsupportedLossError("detector-based objectives need a fixed JPEG quality (randomize = false)");
    }
    if (kind != LossKind::CrossEntropy && x.rank() != 3) {
        throw UnsupportedLossError("detector-based objectives need an HxWxC image input");
    }
    const Shape shape = x.shape();
    const LossBuilder builder = [&](ad::Tape& t, const Network& n, ad::Var xv) -> ad::Var {
        switch (kind) {
            case LossKind::CrossEntropy: return ad::cross_entropy(t, forward_on_tape(t, n, xv).logits, label);
            case LossKind::JadRatio: return jad_ratio_on_tape(t, n, xv, shape, det.quality, det);
            case LossKind::Composite: {
                const ad::Var ce = ad::cross_entropy(t, forward_on_tape(t, n, xv).logits, label);
                const ad::Var ratio = jad_ratio_on_tape(t, n, xv, shape, det.quality, det);
                return ad::sub(t, ce, ad::scale(t, ratio, lambda));
            }
        }
        throw UnsupportedLossError("unknown loss kind");
    };
    return input_gradient(net, x, builder, value);
}

AttackResult classical_adaptive(const Network& net, const Tensor& x, std::size_t label, const AdaptiveConfig& cfg,
                                const DetectorConfig& det) {
    cfg.validate();
    check_image_range(x);
    DetectorConfig fixed = det;
    fixed.randomize = false;
    fixed.validate(net);
    SplitMix64 rng(cfg.base.seed);
    Tensor start = cfg.base.rand_init ? random_start(x, cfg.base.norm, cfg.base.eps, rng) : x;
    auto grad = [&](const Tensor& xa) {
        if (cfg.lambda == 0.0) return ce_gradient(net, xa, label);
        return objective_gradient(net, xa, label, LossKind::Composite, cfg.lambda, fixed);
    };
    return iterate(x, cfg.base, std::move(start), grad, 1);
}

bool attack_success(const Network& net, const Tensor& x, const Tensor& x_adv) {
    return predict(net, x) != predict(net, x_adv);
}

}  // namespace jad
