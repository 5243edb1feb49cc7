// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "hcr/objectives.hpp"

namespace hcr {

// Full experiment description, round-trippable through the `key = value`
// config format. Unknown keys are rejected by name.
struct ExperimentConfig {
    std::string train_manifest;
    std::string test_manifest;
    std::string out_dir;

    int dim = 32;       // embedding width (feature width comes from the data)
    int n_clips = 6;    // mid-level slots, visual
    int n_phrases = 6;  // mid-level slots, text

    double alpha = 0.5;
    double beta = 0.1;
    double theta = 0.1;
    double lambda = 0.1;

    LossVariant loss_variant = LossVariant::hci;
    bool denoise = false;
    bool denoise_symmetric = false;
    bool mse = false; // marginal sample enhancement (hard-negative triplet)
    bool dsl = false; // dual-softmax at evaluation time
    double gamma = 1.0;
    bool temperature_learnable = false;
    bool positional = true;

    int batch_size = 16;
    int steps = 2000;
    double learning_rate = 1e-3;
    std::uint64_t seed = 1;

    LossWeights loss_weights() const { return {alpha, beta, theta, lambda}; }
};

std::string to_string(LossVariant v);
LossVariant loss_variant_from_string(const std::string& s);

ExperimentConfig load_config(const std::filesystem::path& path);
void save_config(const ExperimentConfig& cfg, const std::filesystem::path& path);
// Range checks shared by load_config and programmatic configs.
void validate_config(const ExperimentConfig& cfg);

} // namespace hcr
