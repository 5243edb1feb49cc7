// SPDX-License-Identifier: Apache-2.0

#include "hcr/checkpoint.hpp"

#include <fstream>

#include <json.hpp>

#include "hcr/dataset.hpp"

namespace hcr {

namespace {

std::string blob_name(const std::string& param_name) {
    std::string s = param_name;
    for (auto& c : s) {
        if (c == '/' || c == '\\') c = '_';
    }
    return "params/" + s + ".hcmb";
}

} // namespace

const ParamRecord& LoadedCheckpoint::find(const std::string& name) const {
    for (const auto& p : params) {
        if (p.name == name) return p;
    }
    throw ContractError("checkpoint: no parameter named '" + name + "'");
}

void save_checkpoint(const std::filesystem::path& dir, const ParamSet& params,
                     const ExperimentConfig& cfg) {
    std::error_code ec;
    std::filesystem::create_directories(dir / "params", ec);
    if (ec) throw IoError("cannot create checkpoint dir '" + dir.string() + "': " + ec.message());

    nlohmann::json j = nlohmann::json::array();
    for (const auto& name : params.names()) {
        const Tensor& p = params.get(name);
        const std::string blob = blob_name(name);
        write_blob(p.mat(), dir / blob);
        j.push_back({{"name", name},
                     {"rows", p.rows()},
                     {"cols", p.cols()},
                     {"blob", blob},
                     {"trainable", params.trainable(name)}});
    }
    std::ofstream out(dir / "params.json", std::ios::trunc);
    if (!out) throw IoError("cannot write '" + (dir / "params.json").string() + "'");
    out << j.dump(2) << "\n";
    save_config(cfg, dir / "config.cfg");
}

LoadedCheckpoint load_checkpoint(const std::filesystem::path& dir) {
    LoadedCheckpoint ck;
    ck.config = load_config(dir / "config.cfg");

    std::ifstream in(dir / "params.json");
    if (!in) throw IoError("cannot open '" + (dir / "params.json").string() + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("checkpoint params.json: invalid JSON: " + std::string(e.what()));
    }
    for (const auto& jp : j) {
        ParamRecord rec;
        rec.name = jp.at("name").get<std::string>();
        rec.trainable = jp.at("trainable").get<bool>();
        rec.values = read_blob(dir / jp.at("blob").get<std::string>());
        if (rec.values.rows != jp.at("rows").get<int>() ||
            rec.values.cols != jp.at("cols").get<int>()) {
            throw ParseError("checkpoint parameter '" + rec.name +
                             "': blob shape disagrees with params.json");
        }
        ck.params.push_back(std::move(rec));
    }
    return ck;
}

} // namespace hcr
