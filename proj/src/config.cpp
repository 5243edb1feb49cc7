// SPDX-License-Identifier: Apache-2.0

#include "hcr/config.hpp"

#include <fstream>
#include <sstream>

#include "hcr/kvfile.hpp"

namespace hcr {

std::string to_string(LossVariant v) {
    switch (v) {
    case LossVariant::gdp: return "gdp";
    case LossVariant::twi: return "twi";
    case LossVariant::hci: return "hci";
    }
    return "hci";
}

LossVariant loss_variant_from_string(const std::string& s) {
    if (s == "gdp") return LossVariant::gdp;
    if (s == "twi") return LossVariant::twi;
    if (s == "hci") return LossVariant::hci;
    throw ConfigError("loss_variant must be one of gdp/twi/hci, got '" + s + "'");
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    ExperimentConfig cfg;
    for (const auto& [key, value] : read_kv_file(path)) {
        if (key == "train_manifest") cfg.train_manifest = value;
        else if (key == "test_manifest") cfg.test_manifest = value;
        else if (key == "out_dir") cfg.out_dir = value;
        else if (key == "dim") cfg.dim = kv_int(key, value);
        else if (key == "n_clips") cfg.n_clips = kv_int(key, value);
        else if (key == "n_phrases") cfg.n_phrases = kv_int(key, value);
        else if (key == "alpha") cfg.alpha = kv_double(key, value);
        else if (key == "beta") cfg.beta = kv_double(key, value);
        else if (key == "theta") cfg.theta = kv_double(key, value);
        else if (key == "lambda") cfg.lambda = kv_double(key, value);
        else if (key == "loss_variant") cfg.loss_variant = loss_variant_from_string(value);
        else if (key == "denoise") cfg.denoise = kv_bool(key, value);
        else if (key == "denoise_symmetric") cfg.denoise_symmetric = kv_bool(key, value);
        else if (key == "mse") cfg.mse = kv_bool(key, value);
        else if (key == "dsl") cfg.dsl = kv_bool(key, value);
        else if (key == "gamma") cfg.gamma = kv_double(key, value);
        else if (key == "temperature_learnable") cfg.temperature_learnable = kv_bool(key, value);
        else if (key == "positional") cfg.positional = kv_bool(key, value);
        else if (key == "batch_size") cfg.batch_size = kv_int(key, value);
        else if (key == "steps") cfg.steps = kv_int(key, value);
        else if (key == "learning_rate") cfg.learning_rate = kv_double(key, value);
        else if (key == "seed") cfg.seed = static_cast<std::uint64_t>(kv_int(key, value));
        else throw ConfigError("config: unknown key '" + key + "'");
    }
    validate_config(cfg);
    return cfg;
}

void validate_config(const ExperimentConfig& cfg) {
    if (cfg.dim < 1) throw ConfigError("config: dim must be >= 1");
    if (cfg.n_clips < 1 || cfg.n_phrases < 1) {
        throw ConfigError("config: n_clips and n_phrases must be >= 1");
    }
    if (cfg.alpha < 0.0 || cfg.beta < 0.0) throw ConfigError("config: alpha/beta must be >= 0");
    if (cfg.theta < 0.0) throw ConfigError("config: theta must be >= 0");
    if (cfg.lambda < 0.0) throw ConfigError("config: lambda must be >= 0");
    if (cfg.gamma <= 0.0) throw ConfigError("config: gamma must be > 0");
    if (cfg.batch_size < 2) throw ConfigError("config: batch_size must be >= 2");
    if (cfg.steps < 1) throw ConfigError("config: steps must be >= 1");
    if (cfg.learning_rate <= 0.0) throw ConfigError("config: learning_rate must be > 0");
}

void save_config(const ExperimentConfig& cfg, const std::filesystem::path& path) {
    std::ostringstream os;
    os << "train_manifest = " << cfg.train_manifest << "\n";
    os << "test_manifest = " << cfg.test_manifest << "\n";
    os << "out_dir = " << cfg.out_dir << "\n";
    os << "dim = " << cfg.dim << "\n";
    os << "n_clips = " << cfg.n_clips << "\n";
    os << "n_phrases = " << cfg.n_phrases << "\n";
    os << "alpha = " << cfg.alpha << "\n";
    os << "beta = " << cfg.beta << "\n";
    os << "theta = " << cfg.theta << "\n";
    os << "lambda = " << cfg.lambda << "\n";
    os << "loss_variant = " << to_string(cfg.loss_variant) << "\n";
    os << "denoise = " << (cfg.denoise ? "true" : "false") << "\n";
    os << "denoise_symmetric = " << (cfg.denoise_symmetric ? "true" : "false") << "\n";
    os << "mse = " << (cfg.mse ? "true" : "false") << "\n";
    os << "dsl = " << (cfg.dsl ? "true" : "false") << "\n";
    os << "gamma = " << cfg.gamma << "\n";
    os << "temperature_learnable = " << (cfg.temperature_learnable ? "true" : "false") << "\n";
    os << "positional = " << (cfg.positional ? "true" : "false") << "\n";
    os << "batch_size = " << cfg.batch_size << "\n";
    os << "steps = " << cfg.steps << "\n";
    os << "learning_rate = " << cfg.learning_rate << "\n";
    os << "seed = " << cfg.seed << "\n";
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot write config '" + path.string() + "'");
    out << os.str();
}

} // namespace hcr
