// SPDX-License-Identifier: Apache-2.0
//
// hcr: hierarchical cross-modal retrieval lab.
//   train <config>                       train one experiment
//   eval <ckpt> <manifest> [--dsl]       retrieval metrics, both directions
//   ablate <config> [--seeds k]          table-style ablation sweep
//   gradcheck                            finite-difference gradient audit
//   gen <spec> <out_dir>                 synthetic dataset generator
//   dump-matching <ckpt> <manifest> <id> fine-grained matching dump

#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "hcr/gradcheck.hpp"
#include "hcr/kernels.hpp"
#include "hcr/trainer.hpp"

namespace {

int find_sample(const hcr::Manifest& m, const std::string& id) {
    for (int i = 0; i < m.size(); ++i) {
        if (m.samples[static_cast<std::size_t>(i)].id == id) return i;
    }
    throw hcr::Error("no sample with id '" + id + "' in manifest");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"hierarchical cross-modal retrieval lab"};
    app.require_subcommand(1);

    std::string config_path, ckpt_path, manifest_path, spec_path, out_dir, sample_id, out_file;
    bool use_dsl = false;
    double gamma = 1.0;
    int n_seeds = 3;

    auto* train = app.add_subcommand("train", "train one experiment from a config file");
    train->add_option("config", config_path, "experiment config (key = value)")->required();

    auto* eval = app.add_subcommand("eval", "evaluate a checkpoint on a manifest");
    eval->add_option("checkpoint", ckpt_path)->required();
    eval->add_option("manifest", manifest_path)->required();
    eval->add_flag("--dsl", use_dsl, "apply dual-softmax re-scoring");
    eval->add_option("--gamma", gamma, "dual-softmax temperature (> 0)");
    eval->add_option("--out", out_file, "also write the report CSV here");

    auto* ablate = app.add_subcommand("ablate", "train and evaluate the ablation conditions");
    ablate->add_option("config", config_path)->required();
    ablate->add_option("--seeds", n_seeds, "number of seeds per condition");

    auto* gradcheck = app.add_subcommand("gradcheck", "verify analytic gradients");

    auto* gen = app.add_subcommand("gen", "generate a synthetic dataset");
    gen->add_option("spec", spec_path, "synthetic spec (key = value)")->required();
    gen->add_option("out_dir", out_dir)->required();

    auto* dump = app.add_subcommand("dump-matching", "fine-grained matching dump for one pair");
    dump->add_option("checkpoint", ckpt_path)->required();
    dump->add_option("manifest", manifest_path)->required();
    dump->add_option("id", sample_id)->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (train->parsed()) {
            const auto cfg = hcr::load_config(config_path);
            const auto result = hcr::run_train(cfg);
            std::cout << "kernels: " << hcr::kernels::active_name() << "\n";
            std::cout << "steps: " << result.steps << "\n";
            std::cout << "final_loss: " << result.final_loss << "\n";
            std::cout << "checkpoint: " << result.checkpoint_dir.string() << "\n";
            std::cout << "log: " << result.log_path.string() << "\n";
        } else if (eval->parsed()) {
            const auto result = hcr::run_eval(ckpt_path, manifest_path, use_dsl, gamma);
            const std::string csv =
                hcr::reports_to_csv({result.text_to_video, result.video_to_text});
            std::cout << csv;
            if (!out_file.empty()) {
                std::ofstream out(out_file, std::ios::trunc);
                if (!out) throw hcr::IoError("cannot write '" + out_file + "'");
                out << csv;
            }
        } else if (ablate->parsed()) {
            const auto cfg = hcr::load_config(config_path);
            const auto rows = hcr::run_ablate(cfg, n_seeds);
            std::cout << hcr::ablation_csv(rows);
        } else if (gradcheck->parsed()) {
            const auto report = hcr::run_gradcheck();
            std::cout << "kernels: " << hcr::kernels::active_name() << "\n";
            std::cout << hcr::gradcheck_table(report);
            if (!report.pass()) return 1;
        } else if (gen->parsed()) {
            const auto spec = hcr::load_synthetic_spec(spec_path);
            const auto manifest = hcr::generate_synthetic(spec, out_dir);
            std::cout << "samples: " << manifest.size() << "\n";
            std::cout << "manifest: " << (std::filesystem::path(out_dir) / "manifest.json").string()
                      << "\n";
        } else if (dump->parsed()) {
            const auto ck = hcr::load_checkpoint(ckpt_path);
            const auto data = hcr::load_features(manifest_path);
            const int idx = find_sample(data.manifest, sample_id);
            auto model = hcr::model_from_checkpoint(ck);
            const auto vemb = hcr::encode_hierarchy(
                hcr::Tensor::from_mat(data.videos[static_cast<std::size_t>(idx)]), model.video);
            const auto temb = hcr::encode_hierarchy(
                hcr::Tensor::from_mat(data.texts[static_cast<std::size_t>(idx)]), model.text);
            const auto record = hcr::matching_dump(vemb, temb, model.video, model.text);
            hcr::write_matching_csv(record, std::cout);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
