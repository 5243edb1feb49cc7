// SPDX-License-Identifier: Apache-2.0

#include "hcr/trainer.hpp"

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace hcr {

Model build_model(const ExperimentConfig& cfg, int dim_in, int max_frames, int max_words) {
    validate_config(cfg);
    Model m;
    Rng rng(cfg.seed);
    m.video = make_head(m.params, "video", dim_in, cfg.dim, cfg.n_clips, max_frames,
                        cfg.positional, rng);
    m.text = make_head(m.params, "text", dim_in, cfg.dim, cfg.n_phrases, max_words,
                       cfg.positional, rng);
    if (cfg.temperature_learnable) {
        m.logit_scale = m.params.add("logit_scale", Mat(1, 1, {1.0}));
    }
    return m;
}

Model model_from_checkpoint(const LoadedCheckpoint& ck) {
    const ParamRecord& proj = ck.find("video.proj");
    const int dim_in = proj.values.rows;
    int max_frames = 1, max_words = 1;
    if (ck.config.positional) {
        max_frames = ck.find("video.pos").values.rows;
        max_words = ck.find("text.pos").values.rows;
    }
    Model m = build_model(ck.config, dim_in, max_frames, max_words);
    for (const auto& name : m.params.names()) {
        m.params.set_values(name, ck.find(name).values.v);
    }
    if (ck.params.size() != m.params.names().size()) {
        throw ContractError("checkpoint holds " + std::to_string(ck.params.size()) +
                            " parameters, model expects " +
                            std::to_string(m.params.names().size()));
    }
    return m;
}

void Adam::step(ParamSet& params, const std::map<std::string, Mat>& grads) {
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (const auto& name : params.names()) {
        const auto it = grads.find(name);
        if (it == grads.end()) continue; // frozen parameter
        const Mat& g = it->second;
        auto& m = m_[name];
        auto& v = v_[name];
        if (m.empty()) {
            m.assign(g.size(), 0.0);
            v.assign(g.size(), 0.0);
        }
        std::vector<double> value = params.get(name).values();
        for (std::size_t i = 0; i < value.size(); ++i) {
            m[i] = beta1_ * m[i] + (1.0 - beta1_) * g.v[i];
            v[i] = beta2_ * v[i] + (1.0 - beta2_) * g.v[i] * g.v[i];
            const double mhat = m[i] / bc1;
            const double vhat = v[i] / bc2;
            value[i] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
        }
        params.set_values(name, value);
    }
}

LoadedData load_features(const std::filesystem::path& manifest_path) {
    LoadedData data;
    data.manifest = load_manifest(manifest_path);
    data.videos.reserve(data.manifest.samples.size());
    data.texts.reserve(data.manifest.samples.size());
    for (int i = 0; i < data.manifest.size(); ++i) {
        data.videos.push_back(read_blob(data.manifest.video_path(i)));
        data.texts.push_back(read_blob(data.manifest.text_path(i)));
    }
    return data;
}

std::vector<HierarchicalEmbedding> encode_all(const std::vector<Mat>& features,
                                              const ModalityHead& head) {
    std::vector<HierarchicalEmbedding> out;
    out.reserve(features.size());
    for (const auto& f : features) {
        out.push_back(encode_hierarchy(Tensor::from_mat(f), head));
    }
    return out;
}

namespace {

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
    std::uint64_t z = seed + salt * 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Detached view-level global embeddings of the batch videos; Eq-style label
// discovery consumes these as plain data.
BatchLabels denoise_labels(const ExperimentConfig& cfg, const LoadedData& data, const Batch& batch,
                           const ModalityHead& video_head) {
    const int n = static_cast<int>(batch.samples.size());
    Mat g1(n, cfg.dim), g2(n, cfg.dim);
    for (int i = 0; i < n; ++i) {
        const Mat& frames = data.videos[static_cast<std::size_t>(batch.samples[static_cast<std::size_t>(i)])];
        const ViewPlanEntry& plan = batch.views[static_cast<std::size_t>(i)];
        for (int view = 0; view < 2; ++view) {
            const auto& rows = view == 0 ? plan.view1 : plan.view2;
            const Tensor feats = Tensor::from_mat(gather_rows(frames, rows));
            const HierarchicalEmbedding emb = encode_hierarchy(feats, video_head);
            const auto& g = emb.global_n.values();
            Mat& target = view == 0 ? g1 : g2;
            for (int d = 0; d < cfg.dim; ++d) target.at(i, d) = g[static_cast<std::size_t>(d)];
        }
    }
    return build_positive_sets(g1, g2, cfg.denoise_symmetric);
}

Granularity eval_granularity(LossVariant v) {
    switch (v) {
    case LossVariant::gdp: return Granularity::global;
    case LossVariant::twi: return Granularity::token;
    case LossVariant::hci: return Granularity::combined;
    }
    return Granularity::combined;
}

} // namespace

TrainResult run_train(const ExperimentConfig& cfg) {
    validate_config(cfg);
    if (cfg.train_manifest.empty()) throw ConfigError("config: train_manifest is required");
    if (cfg.out_dir.empty()) throw ConfigError("config: out_dir is required");

    const LoadedData data = load_features(cfg.train_manifest);
    int max_frames = 1, max_words = 1;
    for (const auto& s : data.manifest.samples) {
        max_frames = std::max(max_frames, s.n_frames);
        max_words = std::max(max_words, s.n_words);
    }
    Model model = build_model(cfg, data.manifest.dim, max_frames, max_words);
    Adam opt(cfg.learning_rate);

    std::filesystem::create_directories(cfg.out_dir);
    const std::filesystem::path log_path = std::filesystem::path(cfg.out_dir) / "train_log.csv";
    std::ofstream log(log_path, std::ios::trunc);
    if (!log) throw IoError("cannot write training log '" + log_path.string() + "'");
    log << "step,loss,loss_hci,loss_hsm\n";

    TrainResult result;
    const LossWeights w = cfg.loss_weights();
    int step = 0;
    for (std::uint64_t epoch = 0; step < cfg.steps; ++epoch) {
        const auto batches = make_batches(data.manifest, cfg.batch_size,
                                          mix_seed(cfg.seed, epoch));
        for (const auto& batch : batches) {
            if (step >= cfg.steps) break;

            std::vector<HierarchicalEmbedding> vembs, tembs;
            vembs.reserve(batch.samples.size());
            tembs.reserve(batch.samples.size());
            for (int idx : batch.samples) {
                vembs.push_back(encode_hierarchy(
                    Tensor::from_mat(data.videos[static_cast<std::size_t>(idx)]), model.video));
                tembs.push_back(encode_hierarchy(
                    Tensor::from_mat(data.texts[static_cast<std::size_t>(idx)]), model.text));
            }

            const BatchLabels labels =
                cfg.denoise ? denoise_labels(cfg, data, batch, model.video)
                            : BatchLabels::identity(static_cast<int>(batch.samples.size()));

            const TotalLoss tl = total_loss(vembs, tembs, labels, w, cfg.loss_variant, cfg.mse,
                                            model.logit_scale);
            const double loss = tl.total.item();
            if (!std::isfinite(loss)) {
                throw Error("training aborted: non-finite loss at step " + std::to_string(step));
            }
            if (step == 0) result.first_loss = loss;
            result.final_loss = loss;

            opt.step(model.params, grad(tl.total, model.params));

            char line[128];
            std::snprintf(line, sizeof(line), "%d,%.17g,%.17g,%.17g\n", step, loss,
                          tl.contrastive.item(), tl.hsm.defined() ? tl.hsm.item() : 0.0);
            log << line;
            ++step;
        }
    }
    log.close();

    result.steps = step;
    result.checkpoint_dir = std::filesystem::path(cfg.out_dir) / "checkpoint";
    result.log_path = log_path;
    save_checkpoint(result.checkpoint_dir, model.params, cfg);
    return result;
}

EvalResult run_eval(const std::filesystem::path& checkpoint_dir,
                    const std::filesystem::path& manifest_path, bool use_dsl, double gamma) {
    const LoadedCheckpoint ck = load_checkpoint(checkpoint_dir);
    const LoadedData data = load_features(manifest_path);
    const int dim_in = ck.find("video.proj").values.rows;
    if (data.manifest.dim != dim_in) {
        throw Error("dim mismatch: checkpoint expects features of width " +
                    std::to_string(dim_in) + ", manifest provides " +
                    std::to_string(data.manifest.dim));
    }
    Model model = model_from_checkpoint(ck);

    const auto vembs = encode_all(data.videos, model.video);
    const auto tembs = encode_all(data.texts, model.text);
    const GranularityWeights gw{ck.config.alpha, ck.config.beta};
    Mat scores =
        score_matrix(vembs, tembs, eval_granularity(ck.config.loss_variant), gw).values.mat();
    if (use_dsl) scores = dual_softmax(scores, gamma);

    std::vector<int> truth(static_cast<std::size_t>(data.manifest.size()));
    for (int i = 0; i < data.manifest.size(); ++i) truth[static_cast<std::size_t>(i)] = i;

    EvalResult out;
    out.text_to_video = rank_metrics(scores, truth, "text-video");
    out.video_to_text = rank_metrics(transposed(scores), truth, "video-text");
    return out;
}

std::string ablation_csv(const std::vector<AblationRow>& rows) {
    std::ostringstream os;
    os << "condition,seed,r1,r5,r10,mdr,mnr\n";
    os.precision(6);
    os << std::fixed;
    for (const auto& r : rows) {
        os << r.condition << "," << r.seed << "," << r.text_to_video.r1 << ","
           << r.text_to_video.r5 << "," << r.text_to_video.r10 << "," << r.text_to_video.mdr
           << "," << r.text_to_video.mnr << "\n";
    }
    return os.str();
}

std::vector<AblationRow> run_ablate(const ExperimentConfig& cfg, int n_seeds) {
    if (cfg.test_manifest.empty()) throw ConfigError("config: test_manifest is required");
    if (n_seeds < 1) throw ConfigError("ablate: need at least one seed");

    struct Condition {
        const char* name;
        LossVariant variant;
        bool denoise, mse, dsl;
    };
    // Mirrors the ablation table rows; the dsl row reuses the previous
    // condition's checkpoint (dual softmax is inference-only).
    const Condition conditions[] = {
        {"gdp", LossVariant::gdp, false, false, false},
        {"twi", LossVariant::twi, false, false, false},
        {"hci", LossVariant::hci, false, false, false},
        {"hci+denoise", LossVariant::hci, true, false, false},
        {"hci+denoise+mse", LossVariant::hci, true, true, false},
        {"hci+denoise+mse+dsl", LossVariant::hci, true, true, true},
    };

    std::vector<AblationRow> rows;
    for (int s = 0; s < n_seeds; ++s) {
        const std::uint64_t seed = cfg.seed + static_cast<std::uint64_t>(s);
        std::filesystem::path prev_checkpoint;
        for (const auto& cond : conditions) {
            ExperimentConfig run_cfg = cfg;
            run_cfg.loss_variant = cond.variant;
            run_cfg.denoise = cond.denoise;
            run_cfg.mse = cond.mse;
            run_cfg.dsl = cond.dsl;
            run_cfg.seed = seed;
            run_cfg.out_dir = (std::filesystem::path(cfg.out_dir) / cond.name /
                               ("seed" + std::to_string(seed)))
                                  .string();

            std::filesystem::path ckpt;
            if (cond.dsl && !prev_checkpoint.empty()) {
                ckpt = prev_checkpoint; // same trained model, new post-processing
            } else {
                ckpt = run_train(run_cfg).checkpoint_dir;
            }
            const EvalResult ev = run_eval(ckpt, cfg.test_manifest, cond.dsl, cfg.gamma);
            rows.push_back({cond.name, seed, ev.text_to_video});
            prev_checkpoint = ckpt;
        }
    }

    std::filesystem::create_directories(cfg.out_dir);
    const auto csv_path = std::filesystem::path(cfg.out_dir) / "ablation.csv";
    std::ofstream out(csv_path, std::ios::trunc);
    if (!out) throw IoError("cannot write '" + csv_path.string() + "'");
    out << ablation_csv(rows);
    return rows;
}

} // namespace hcr
