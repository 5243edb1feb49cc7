// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <map>
#include <vector>

#include "hcr/checkpoint.hpp"
#include "hcr/config.hpp"
#include "hcr/dataset.hpp"
#include "hcr/evaluation.hpp"

namespace hcr {

struct Model {
    ParamSet params;
    ModalityHead video, text;
    Tensor logit_scale; // defined only when temperature_learnable
};

// Fresh model with seeded init. dim_in comes from the data; the positional
// tables cover max_frames / max_words rows.
Model build_model(const ExperimentConfig& cfg, int dim_in, int max_frames, int max_words);

// Rebuild a model and overwrite every parameter from a checkpoint.
Model model_from_checkpoint(const LoadedCheckpoint& ck);

// Adam with fixed hyperparameters besides the learning rate.
class Adam {
  public:
    explicit Adam(double lr) : lr_(lr) {}
    void step(ParamSet& params, const std::map<std::string, Mat>& grads);

  private:
    double lr_;
    double beta1_ = 0.9, beta2_ = 0.999, eps_ = 1e-8;
    long t_ = 0;
    std::map<std::string, std::vector<double>> m_, v_;
};

// All features of a manifest resident in memory, widened to f64.
struct LoadedData {
    Manifest manifest;
    std::vector<Mat> videos, texts;
};
LoadedData load_features(const std::filesystem::path& manifest_path);

std::vector<HierarchicalEmbedding> encode_all(const std::vector<Mat>& features,
                                              const ModalityHead& head);

struct TrainResult {
    std::filesystem::path checkpoint_dir;
    std::filesystem::path log_path;
    double first_loss = 0.0;
    double final_loss = 0.0;
    int steps = 0;
};

// Full training run: per batch encode both modalities, build labels (two-view
// denoising when enabled, detached), take the configured loss, Adam step.
// Logs `step,loss,loss_hci,loss_hsm` per step and writes a checkpoint at the
// end. Deterministic in (config, seed, dataset).
TrainResult run_train(const ExperimentConfig& cfg);

struct EvalResult {
    RetrievalReport text_to_video;
    RetrievalReport video_to_text;
};

// Embeds every manifest item with checkpoint parameters, scores at the
// granularity matching the trained variant (gdp: global, twi: token,
// hci: combined), optionally applies dual softmax, ranks both directions.
EvalResult run_eval(const std::filesystem::path& checkpoint_dir,
                    const std::filesystem::path& manifest_path, bool use_dsl, double gamma);

struct AblationRow {
    std::string condition;
    std::uint64_t seed;
    RetrievalReport text_to_video;
};

// Table-style ablation: conditions {gdp, twi, hci, hci+denoise,
// hci+denoise+mse, hci+denoise+mse+dsl} trained per seed on identical data
// (the dsl row re-evaluates the previous condition's checkpoint). Writes
// `condition,seed,r1,r5,r10,mdr,mnr` to <out_dir>/ablation.csv.
std::vector<AblationRow> run_ablate(const ExperimentConfig& cfg, int n_seeds);

std::string ablation_csv(const std::vector<AblationRow>& rows);

} // namespace hcr
