#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "jad/attacks.hpp"
#include "jad/corrupt.hpp"
#include "jad/jad_score.hpp"
#include "jad/train.hpp"

namespace jad {

enum class DataSource { Idx, Synth };

/// Typed view of a flat key=value run configuration. Every field has a
/// default, so an empty file is a valid synth run.
struct RunConfig {
    // data
    DataSource source = DataSource::Synth;
    std::filesystem::path images_path, labels_path;  // data.paths = images,labels
    std::size_t n = 512;        // synth sample count; cap on idx samples (0 = all)
    std::size_t side = 16;
    std::size_t test_n = 256;   // tail of the data held out for attacks and detection

    // model
    std::vector<std::size_t> dims;  // empty: input, 128, 64, classes
    double alpha = 0.01;
    Activation hidden = Activation::LeakyReLU;
    std::filesystem::path model_path;  // empty: <out.dir>/model.jadn

    TrainConfig train;

    AttackConfig attack;          // l_inf static attack (attack.*)
    double l2_eps = 1.0;          // attack.l2_eps / attack.l2_step for l2 runs
    double l2_step = 0.2;
    std::vector<std::string> eval_attacks{"pgd", "bim", "pgd_l2"};

    AdaptiveMode adaptive_mode = AdaptiveMode::Eot;
    std::vector<std::size_t> adaptive_trials{1};
    std::vector<double> adaptive_lambdas{0.5};
    std::vector<double> adaptive_eps;  // empty: {attack.eps}
    std::size_t adaptive_steps = 200;
    double adaptive_step_fraction = 0.1;  // per-step size as a fraction of eps
    int adaptive_q_lo = 30;
    int adaptive_q_hi = 80;

    DetectorConfig detector;
    double target_fpr = 0.05;

    std::vector<CorruptionKind> corruptions{CorruptionKind::UniformLinf, CorruptionKind::GaussianL2,
                                            CorruptionKind::SaltPepper,  CorruptionKind::GaussianBlur,
                                            CorruptionKind::Jpeg,        CorruptionKind::Laplacian};
    std::map<CorruptionKind, double> corruption_magnitude;  // missing kinds use defaults

    std::uint64_t seed = 0;
    std::filesystem::path out_dir = "out";
    std::size_t threads = 1;

    std::filesystem::path resolved_model_path() const;
    double magnitude_for(CorruptionKind k) const;
    /// Attack configuration for an eval attack name: fgsm|bim|pgd, optionally
    /// suffixed with _l2.
    AttackConfig attack_for(const std::string& name) const;
    AdaptiveConfig adaptive_for(double eps, double lambda, std::size_t trials) const;
};

/// Parses `key = value` lines; `#` starts a comment. Unknown keys, duplicate
/// keys and out-of-range values throw ConfigError.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::filesystem::path& path);

/// Applies one `key=value` override; call validate_config afterwards.
void apply_setting(RunConfig& cfg, const std::string& key, const std::string& value);

/// Cross-field checks run before any compute starts. Throws ConfigError.
void validate_config(const RunConfig& cfg);

/// Every accepted key, in documentation order.
const std::vector<std::string>& config_keys();

/// Number parser that also accepts a single fraction such as "8/255".
double parse_number(const std::string& text);

}  // namespace jad
