#include "jad/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include "jad/error.hpp"

namespace jad {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& v) {
    std::vector<std::string> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (item.empty()) throw ConfigError("empty item in list '" + v + "'");
        out.push_back(item);
    }
    if (out.empty()) throw ConfigError("empty list");
    return out;
}

double parse_plain(const std::string& t) {
    double v = 0.0;
    const auto r = std::from_chars(t.data(), t.data() + t.size(), v);
    if (r.ec != std::errc() || r.ptr != t.data() + t.size()) throw ConfigError("not a number: '" + t + "'");
    return v;
}

std::uint64_t parse_u64(const std::string& t) {
    std::uint64_t v = 0;
    const auto r = std::from_chars(t.data(), t.data() + t.size(), v);
    if (r.ec != std::errc() || r.ptr != t.data() + t.size()) throw ConfigError("not an unsigned integer: '" + t + "'");
    return v;
}

std::size_t parse_count(const std::string& t, std::size_t min = 1) {
    const auto v = parse_u64(t);
    if (v < min) throw ConfigError("value " + t + " must be >= " + std::to_string(min));
    return static_cast<std::size_t>(v);
}

int parse_quality(const std::string& t) {
    const auto v = parse_u64(t);
    if (v < 1 || v > 100) throw ConfigError("quality " + t + " must be in [1, 100]");
    return static_cast<int>(v);
}

bool parse_bool(const std::string& t) {
    if (t == "true" || t == "1") return true;
    if (t == "false" || t == "0") return false;
    throw ConfigError("not a boolean: '" + t + "'");
}

double nonneg(const std::string& t) {
    const double v = parse_number(t);
    if (!(v >= 0.0)) throw ConfigError("value " + t + " must be >= 0");
    return v;
}

double positive(const std::string& t) {
    const double v = parse_number(t);
    if (!(v > 0.0)) throw ConfigError("value " + t + " must be > 0");
    return v;
}

using Setter = std::function<void(RunConfig&, const std::string&)>;

const std::vector<std::pair<std::string, Setter>>& setters() {
    static const std::vector<std::pair<std::string, Setter>> table = {
        {"data.source",
         [](RunConfig& c, const std::string& v) {
             if (v == "idx") c.source = DataSource::Idx;
             else if (v == "synth") c.source = DataSource::Synth;
             else throw ConfigError("data.source must be idx or synth");
         }},
        {"data.paths",
         [](RunConfig& c, const std::string& v) {
             const auto p = split_list(v);
             if (p.size() != 2) throw ConfigError("data.paths needs images,labels");
             c.images_path = p[0];
             c.labels_path = p[1];
         }},
        {"data.n", [](RunConfig& c, const std::string& v) { c.n = parse_count(v, 0); }},
        {"data.side", [](RunConfig& c, const std::string& v) { c.side = parse_count(v); }},
        {"data.test_n", [](RunConfig& c, const std::string& v) { c.test_n = parse_count(v); }},
        {"model.dims",
         [](RunConfig& c, const std::string& v) {
             c.dims.clear();
             for (const auto& d : split_list(v)) c.dims.push_back(parse_count(d));
             if (c.dims.size() < 2) throw ConfigError("model.dims needs at least input and output widths");
         }},
        {"model.alpha",
         [](RunConfig& c, const std::string& v) {
             c.alpha = parse_number(v);
             if (!(c.alpha > 0.0 && c.alpha <= 1.0)) throw ConfigError("model.alpha must lie in (0, 1]");
         }},
        {"model.activation",
         [](RunConfig& c, const std::string& v) {
             if (v == "leaky_relu") c.hidden = Activation::LeakyReLU;
             else if (v == "identity") c.hidden = Activation::Identity;
             else throw ConfigError("model.activation must be leaky_relu or identity");
         }},
        {"model.path", [](RunConfig& c, const std::string& v) { c.model_path = v; }},
        {"train.mode",
         [](RunConfig& c, const std::string& v) {
             if (v == "default") c.train.mode = TrainMode::Default;
             else if (v == "amplified") c.train.mode = TrainMode::Amplified;
             else throw ConfigError("train.mode must be default or amplified");
         }},
        {"train.lambda", [](RunConfig& c, const std::string& v) { c.train.lambda = nonneg(v); }},
        {"train.lr", [](RunConfig& c, const std::string& v) { c.train.lr = nonneg(v); }},
        {"train.epochs", [](RunConfig& c, const std::string& v) { c.train.epochs = parse_count(v); }},
        {"train.batch", [](RunConfig& c, const std::string& v) { c.train.batch_size = parse_count(v); }},
        {"train.optimizer",
         [](RunConfig& c, const std::string& v) {
             if (v == "adam") c.train.optimizer = OptimizerKind::Adam;
             else if (v == "sgd") c.train.optimizer = OptimizerKind::Sgd;
             else throw ConfigError("train.optimizer must be adam or sgd");
         }},
        {"attack.kind", [](RunConfig& c, const std::string& v) { c.attack.kind = parse_attack(v); }},
        {"attack.norm", [](RunConfig& c, const std::string& v) { c.attack.norm = parse_norm(v); }},
        {"attack.eps", [](RunConfig& c, const std::string& v) { c.attack.eps = nonneg(v); }},
        {"attack.step", [](RunConfig& c, const std::string& v) { c.attack.step = positive(v); }},
        {"attack.steps", [](RunConfig& c, const std::string& v) { c.attack.steps = parse_count(v); }},
        {"attack.rand_init", [](RunConfig& c, const std::string& v) { c.attack.rand_init = parse_bool(v); }},
        {"attack.l2_eps", [](RunConfig& c, const std::string& v) { c.l2_eps = nonneg(v); }},
        {"attack.l2_step", [](RunConfig& c, const std::string& v) { c.l2_step = positive(v); }},
        {"eval.attacks", [](RunConfig& c, const std::string& v) { c.eval_attacks = split_list(v); }},
        {"adaptive.mode",
         [](RunConfig& c, const std::string& v) {
             if (v == "eot") c.adaptive_mode = AdaptiveMode::Eot;
             else if (v == "classical") c.adaptive_mode = AdaptiveMode::Classical;
             else throw ConfigError("adaptive.mode must be eot or classical");
         }},
        {"adaptive.T",
         [](RunConfig& c, const std::string& v) {
             c.adaptive_trials.clear();
             for (const auto& t : split_list(v)) c.adaptive_trials.push_back(parse_count(t));
         }},
        {"adaptive.lambda",
         [](RunConfig& c, const std::string& v) {
             c.adaptive_lambdas.clear();
             for (const auto& t : split_list(v)) c.adaptive_lambdas.push_back(nonneg(t));
         }},
        {"adaptive.eps",
         [](RunConfig& c, const std::string& v) {
             c.adaptive_eps.clear();
             for (const auto& t : split_list(v)) c.adaptive_eps.push_back(nonneg(t));
         }},
        {"adaptive.steps", [](RunConfig& c, const std::string& v) { c.adaptive_steps = parse_count(v); }},
        {"adaptive.step_fraction", [](RunConfig& c, const std::string& v) { c.adaptive_step_fraction = positive(v); }},
        {"adaptive.q_lo", [](RunConfig& c, const std::string& v) { c.adaptive_q_lo = parse_quality(v); }},
        {"adaptive.q_hi", [](RunConfig& c, const std::string& v) { c.adaptive_q_hi = parse_quality(v); }},
        {"detect.q", [](RunConfig& c, const std::string& v) { c.detector.quality = parse_quality(v); }},
        {"detect.q_lo", [](RunConfig& c, const std::string& v) { c.detector.q_lo = parse_quality(v); }},
        {"detect.q_hi", [](RunConfig& c, const std::string& v) { c.detector.q_hi = parse_quality(v); }},
        {"detect.randomize", [](RunConfig& c, const std::string& v) { c.detector.randomize = parse_bool(v); }},
        {"detect.target_fpr",
         [](RunConfig& c, const std::string& v) {
             c.target_fpr = parse_number(v);
             if (!(c.target_fpr > 0.0 && c.target_fpr < 1.0)) throw ConfigError("detect.target_fpr must lie in (0, 1)");
         }},
        {"detect.head",
         [](RunConfig& c, const std::string& v) {
             if (v == "logits") c.detector.head = Head::Logits;
             else if (v == "softmax") c.detector.head = Head::Softmax;
             else throw ConfigError("detect.head must be logits or softmax");
         }},
        {"detect.first", [](RunConfig& c, const std::string& v) { c.detector.first_layer = parse_count(v); }},
        {"detect.last", [](RunConfig& c, const std::string& v) { c.detector.last_layer = parse_count(v, 0); }},
        {"corrupt.kinds",
         [](RunConfig& c, const std::string& v) {
             c.corruptions.clear();
             for (const auto& t : split_list(v)) c.corruptions.push_back(parse_corruption(t));
         }},
        {"corrupt.uniform_linf", [](RunConfig& c, const std::string& v) { c.corruption_magnitude[CorruptionKind::UniformLinf] = nonneg(v); }},
        {"corrupt.gaussian_l2", [](RunConfig& c, const std::string& v) { c.corruption_magnitude[CorruptionKind::GaussianL2] = nonneg(v); }},
        {"corrupt.salt_pepper",
         [](RunConfig& c, const std::string& v) {
             const double p = nonneg(v);
             if (p > 1.0) throw ConfigError("corrupt.salt_pepper must lie in [0, 1]");
             c.corruption_magnitude[CorruptionKind::SaltPepper] = p;
         }},
        {"corrupt.gaussian_blur", [](RunConfig& c, const std::string& v) { c.corruption_magnitude[CorruptionKind::GaussianBlur] = nonneg(v); }},
        {"corrupt.jpeg", [](RunConfig& c, const std::string& v) { c.corruption_magnitude[CorruptionKind::Jpeg] = parse_quality(v); }},
        {"corrupt.laplacian", [](RunConfig& c, const std::string& v) { c.corruption_magnitude[CorruptionKind::Laplacian] = nonneg(v); }},
        {"seed", [](RunConfig& c, const std::string& v) { c.seed = parse_u64(v); }},
        {"out.dir", [](RunConfig& c, const std::string& v) { c.out_dir = v; }},
        {"threads", [](RunConfig& c, const std::string& v) { c.threads = parse_count(v); }},
    };
    return table;
}

}  // namespace

double parse_number(const std::string& text) {
    const std::string t = trim(text);
    const auto slash = t.find('/');
    double v = 0.0;
    if (slash == std::string::npos) {
        v = parse_plain(t);
    } else {
        const double den = parse_plain(trim(t.substr(slash + 1)));
        if (den == 0.0) throw ConfigError("division by zero in '" + t + "'");
        v = parse_plain(trim(t.substr(0, slash))) / den;
    }
    if (!std::isfinite(v)) throw ConfigError("value '" + t + "' is not finite");
    return v;
}

const std::vector<std::string>& config_keys() {
    static const std::vector<std::string> keys = [] {
        std::vector<std::string> k;
        for (const auto& [name, fn] : setters()) k.push_back(name);
        return k;
    }();
    return keys;
}

void apply_setting(RunConfig& cfg, const std::string& key, const std::string& value) {
    const auto& table = setters();
    const auto it = std::find_if(table.begin(), table.end(), [&](const auto& e) { return e.first == key; });
    if (it == table.end()) throw ConfigError("unknown config key '" + key + "'");
    if (value.empty()) throw ConfigError("empty value for '" + key + "'");
    try {
        it->second(cfg, value);
    } catch (const ConfigError& e) {
        throw ConfigError(key + ": " + e.what());
    } catch (const Error& e) {
        throw ConfigError(key + ": " + e.what());
    }
}

void validate_config(const RunConfig& c) {
    try {
        c.attack.validate();
        if (!(c.l2_step > 0.0)) throw ConfigError("attack.l2_step must be > 0");
        for (const auto& name : c.eval_attacks) c.attack_for(name);
        if (c.detector.q_lo > c.detector.q_hi) throw ConfigError("detect.q_lo must not exceed detect.q_hi");
        if (c.detector.last_layer != 0 && c.detector.first_layer >= c.detector.last_layer) {
            throw ConfigError("detect.first must be smaller than detect.last");
        }
        if (c.adaptive_q_lo > c.adaptive_q_hi) throw ConfigError("adaptive.q_lo must not exceed adaptive.q_hi");
        if (c.adaptive_mode == AdaptiveMode::Eot) {
            for (double l : c.adaptive_lambdas)
                if (l > 1.0) throw ConfigError("EOT adaptive.lambda values must lie in [0, 1]");
        }
        if (c.source == DataSource::Synth && c.n <= c.test_n) {
            throw ConfigError("data.n must exceed data.test_n so that a training split remains");
        }
        if (c.source == DataSource::Idx && (c.images_path.empty() || c.labels_path.empty())) {
            throw ConfigError("data.source = idx needs data.paths");
        }
        if (c.train.mode == TrainMode::Amplified && !(c.train.lambda > 0.0)) {
            throw ConfigError("train.mode = amplified needs train.lambda > 0");
        }
        if (c.train.mode == TrainMode::Amplified && c.hidden != Activation::LeakyReLU) {
            throw ConfigError("train.mode = amplified needs model.activation = leaky_relu");
        }
    } catch (const ConfigError&) {
        throw;
    } catch (const Error& e) {
        throw ConfigError(e.what());
    }
}

RunConfig parse_config(const std::string& text) {
    RunConfig cfg;
    std::set<std::string> seen;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        if (!seen.insert(key).second) throw ConfigError("line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
        try {
            apply_setting(cfg, key, trim(line.substr(eq + 1)));
        } catch (const ConfigError& e) {
            throw ConfigError("line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    validate_config(cfg);
    return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ConfigError("cannot read config " + path.string());
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_config(ss.str());
}

std::filesystem::path RunConfig::resolved_model_path() const {
    return model_path.empty() ? out_dir / "model.jadn" : model_path;
}

double RunConfig::magnitude_for(CorruptionKind k) const {
    if (const auto it = corruption_magnitude.find(k); it != corruption_magnitude.end()) return it->second;
    switch (k) {
        case CorruptionKind::UniformLinf: return attack.eps;
        case CorruptionKind::GaussianL2: return l2_eps;
        case CorruptionKind::SaltPepper: return 0.01;
        case CorruptionKind::GaussianBlur: return 0.5;
        case CorruptionKind::Jpeg: return 75.0;
        case CorruptionKind::Laplacian: return 0.02;
    }
    return 0.0;
}

AttackConfig RunConfig::attack_for(const std::string& name) const {
    AttackConfig a = attack;
    std::string kind = name;
    a.norm = Norm::Linf;
    if (kind.size() > 3 && kind.ends_with("_l2")) {
        kind.resize(kind.size() - 3);
        a.norm = Norm::L2;
        a.eps = l2_eps;
        a.step = l2_step;
    }
    try {
        a.kind = parse_attack(kind);
    } catch (const Error&) {
        throw ConfigError("unknown eval attack '" + name + "' (expected fgsm, bim or pgd, optionally with _l2)");
    }
    return a;
}

AdaptiveConfig RunConfig::adaptive_for(double eps, double lambda, std::size_t trials) const {
    AdaptiveConfig a;
    a.base = attack;
    a.base.kind = AttackKind::Pgd;
    a.base.norm = Norm::Linf;
    a.base.eps = eps;
    a.base.steps = adaptive_steps;
    a.base.step = eps > 0.0 ? eps * adaptive_step_fraction : attack.step;
    a.trials = trials;
    a.lambda = lambda;
    a.q_lo = adaptive_q_lo;
    a.q_hi = adaptive_q_hi;
    a.mode = adaptive_mode;
    return a;
}

}  // namespace jad
