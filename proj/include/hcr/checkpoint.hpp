// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "hcr/config.hpp"
#include "hcr/mat.hpp"
#include "hcr/tensor.hpp"

namespace hcr {

// Checkpoint layout:
//   <dir>/config.cfg    originating experiment config
//   <dir>/params.json   [{name, rows, cols, blob, trainable}, ...]
//   <dir>/params/*.hcmb one feature blob per parameter (f32, the stored
//                       precision; load(save(x)) is bit-exact at f32)

struct ParamRecord {
    std::string name;
    Mat values;
    bool trainable = true;
};

struct LoadedCheckpoint {
    ExperimentConfig config;
    std::vector<ParamRecord> params;

    const ParamRecord& find(const std::string& name) const;
};

void save_checkpoint(const std::filesystem::path& dir, const ParamSet& params,
                     const ExperimentConfig& cfg);
LoadedCheckpoint load_checkpoint(const std::filesystem::path& dir);

} // namespace hcr
