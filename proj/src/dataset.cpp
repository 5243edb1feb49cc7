// SPDX-License-Identifier: Apache-2.0

#include "hcr/dataset.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <set>

#include <json.hpp>

#include "hcr/kvfile.hpp"

namespace hcr {

namespace {

constexpr char kMagic[4] = {'H', 'C', 'M', 'B'};
constexpr std::uint32_t kVersion = 1;
constexpr std::size_t kHeaderBytes = 16;

void put_u32(std::string& buf, std::uint32_t v) {
    buf.push_back(static_cast<char>(v & 0xff));
    buf.push_back(static_cast<char>((v >> 8) & 0xff));
    buf.push_back(static_cast<char>((v >> 16) & 0xff));
    buf.push_back(static_cast<char>((v >> 24) & 0xff));
}

std::uint32_t get_u32(const std::string& buf, std::size_t off) {
    return static_cast<std::uint32_t>(static_cast<unsigned char>(buf[off])) |
           static_cast<std::uint32_t>(static_cast<unsigned char>(buf[off + 1])) << 8 |
           static_cast<std::uint32_t>(static_cast<unsigned char>(buf[off + 2])) << 16 |
           static_cast<std::uint32_t>(static_cast<unsigned char>(buf[off + 3])) << 24;
}

std::string read_file_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return bytes;
}

// Parses and validates the 16-byte header against the actual byte count.
std::pair<std::uint32_t, std::uint32_t> parse_header(const std::string& bytes,
                                                     const std::filesystem::path& path) {
    if (bytes.size() < kHeaderBytes) {
        throw ParseError("'" + path.string() + "': truncated header at offset 0: file has " +
                         std::to_string(bytes.size()) + " bytes, header needs 16");
    }
    if (std::memcmp(bytes.data(), kMagic, 4) != 0) {
        throw ParseError("'" + path.string() + "': bad magic at offset 0: expected \"HCMB\", got \"" +
                         bytes.substr(0, 4) + "\"");
    }
    const std::uint32_t version = get_u32(bytes, 4);
    if (version != kVersion) {
        throw ParseError("'" + path.string() + "': unsupported version " +
                         std::to_string(version) + " at offset 4 (expected 1)");
    }
    const std::uint32_t rows = get_u32(bytes, 8);
    const std::uint32_t cols = get_u32(bytes, 12);
    const std::size_t expected = kHeaderBytes + 4ull * rows * cols;
    if (bytes.size() != expected) {
        throw ParseError("'" + path.string() + "': payload length mismatch at offset 16: header " +
                         std::to_string(rows) + "x" + std::to_string(cols) + " needs " +
                         std::to_string(expected) + " bytes, file has " +
                         std::to_string(bytes.size()));
    }
    return {rows, cols};
}

} // namespace

void write_blob(const Mat& m, const std::filesystem::path& path) {
    std::string buf;
    buf.reserve(kHeaderBytes + 4 * m.size());
    buf.append(kMagic, 4);
    put_u32(buf, kVersion);
    put_u32(buf, static_cast<std::uint32_t>(m.rows));
    put_u32(buf, static_cast<std::uint32_t>(m.cols));
    for (double d : m.v) {
        put_u32(buf, std::bit_cast<std::uint32_t>(static_cast<float>(d)));
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!out) throw IoError("short write to '" + path.string() + "'");
}

Mat read_blob(const std::filesystem::path& path) {
    const std::string bytes = read_file_bytes(path);
    const auto [rows, cols] = parse_header(bytes, path);
    Mat m(static_cast<int>(rows), static_cast<int>(cols));
    for (std::size_t i = 0; i < m.size(); ++i) {
        const std::uint32_t u = get_u32(bytes, kHeaderBytes + 4 * i);
        m.v[i] = static_cast<double>(std::bit_cast<float>(u));
    }
    return m;
}

std::pair<int, int> read_blob_shape(const std::filesystem::path& path) {
    const std::string bytes = read_file_bytes(path);
    const auto [rows, cols] = parse_header(bytes, path);
    return {static_cast<int>(rows), static_cast<int>(cols)};
}

// ---- manifest ----------------------------------------------------------------

void save_manifest(const Manifest& m, const std::filesystem::path& path) {
    nlohmann::json j;
    j["dim"] = m.dim;
    j["samples"] = nlohmann::json::array();
    for (const auto& s : m.samples) {
        j["samples"].push_back({{"id", s.id},
                                {"video_blob", s.video_blob},
                                {"text_blob", s.text_blob},
                                {"n_frames", s.n_frames},
                                {"n_words", s.n_words},
                                {"dim", s.dim}});
    }
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out << j.dump(2) << "\n";
}

Manifest load_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open manifest '" + path.string() + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("manifest '" + path.string() + "': invalid JSON: " + e.what());
    }

    Manifest m;
    m.dir = path.parent_path();
    if (!j.contains("dim") || !j["dim"].is_number_integer()) {
        throw ParseError("manifest '" + path.string() + "': missing integer field 'dim'");
    }
    m.dim = j["dim"].get<int>();
    if (m.dim < 1) throw ParseError("manifest: dim must be positive");
    if (!j.contains("samples") || !j["samples"].is_array()) {
        throw ParseError("manifest '" + path.string() + "': missing array field 'samples'");
    }

    std::set<std::string> ids;
    for (const auto& js : j["samples"]) {
        SampleRecord s;
        for (const char* key : {"id", "video_blob", "text_blob"}) {
            if (!js.contains(key) || !js[key].is_string()) {
                throw ParseError("manifest sample: missing string field '" + std::string(key) +
                                 "'");
            }
        }
        for (const char* key : {"n_frames", "n_words", "dim"}) {
            if (!js.contains(key) || !js[key].is_number_integer()) {
                throw ParseError("manifest sample: missing integer field '" + std::string(key) +
                                 "'");
            }
        }
        s.id = js["id"].get<std::string>();
        s.video_blob = js["video_blob"].get<std::string>();
        s.text_blob = js["text_blob"].get<std::string>();
        s.n_frames = js["n_frames"].get<int>();
        s.n_words = js["n_words"].get<int>();
        s.dim = js["dim"].get<int>();

        if (!ids.insert(s.id).second) {
            throw ParseError("manifest: duplicate sample id '" + s.id + "'");
        }
        if (s.dim != m.dim) {
            throw ParseError("manifest sample '" + s.id + "': dim " + std::to_string(s.dim) +
                             " differs from dataset dim " + std::to_string(m.dim));
        }
        if (s.n_frames < 1 || s.n_words < 1) {
            throw ParseError("manifest sample '" + s.id + "': token counts must be positive");
        }
        for (bool video : {true, false}) {
            const auto blob = m.dir / (video ? s.video_blob : s.text_blob);
            if (!std::filesystem::exists(blob)) {
                throw ParseError("manifest sample '" + s.id + "': missing blob '" +
                                 blob.string() + "'");
            }
            const auto [rows, cols] = read_blob_shape(blob);
            const int want_rows = video ? s.n_frames : s.n_words;
            if (rows != want_rows || cols != s.dim) {
                throw ParseError("manifest sample '" + s.id + "': blob '" + blob.string() +
                                 "' is " + std::to_string(rows) + "x" + std::to_string(cols) +
                                 ", declared " + std::to_string(want_rows) + "x" +
                                 std::to_string(s.dim));
            }
        }
        m.samples.push_back(std::move(s));
    }
    return m;
}

// ---- synthetic data -----------------------------------------------------------

SyntheticSpec load_synthetic_spec(const std::filesystem::path& path) {
    SyntheticSpec spec;
    const auto kv = read_kv_file(path);
    for (const auto& [key, value] : kv) {
        if (key == "n_pairs") spec.n_pairs = kv_int(key, value);
        else if (key == "dim") spec.dim = kv_int(key, value);
        else if (key == "n_frames") spec.n_frames = kv_int(key, value);
        else if (key == "n_words") spec.n_words = kv_int(key, value);
        else if (key == "n_concepts") spec.n_concepts = kv_int(key, value);
        else if (key == "noise_sigma") spec.noise_sigma = kv_double(key, value);
        else if (key == "distractor_count") spec.distractor_count = kv_int(key, value);
        else if (key == "seed") spec.seed = static_cast<std::uint64_t>(kv_int(key, value));
        else throw ConfigError("synthetic spec: unknown key '" + key + "'");
    }
    return spec;
}

namespace {

void validate(const SyntheticSpec& s) {
    if (s.n_pairs < 1) throw ConfigError("synthetic spec: n_pairs must be >= 1");
    if (s.dim < 1) throw ConfigError("synthetic spec: dim must be >= 1");
    if (s.n_frames < 1 || s.n_words < 1) {
        throw ConfigError("synthetic spec: token counts must be >= 1");
    }
    if (s.n_concepts < 1 || s.n_concepts > std::min(s.n_frames, s.n_words)) {
        throw ConfigError("synthetic spec: n_concepts must be in [1, min(n_frames, n_words)]");
    }
    if (s.noise_sigma < 0.0) throw ConfigError("synthetic spec: noise_sigma must be >= 0");
    if (s.distractor_count < 0) throw ConfigError("synthetic spec: distractor_count must be >= 0");
}

std::vector<double> unit_vector(int dim, Rng& rng) {
    std::vector<double> v(static_cast<std::size_t>(dim));
    double nrm = 0.0;
    do {
        nrm = 0.0;
        for (auto& x : v) {
            x = rng.normal();
            nrm += x * x;
        }
        nrm = std::sqrt(nrm);
    } while (nrm < 1e-9);
    for (auto& x : v) x /= nrm;
    return v;
}

} // namespace

Manifest generate_synthetic(const SyntheticSpec& spec, const std::filesystem::path& out_dir) {
    validate(spec);
    std::error_code ec;
    std::filesystem::create_directories(out_dir / "blobs", ec);
    if (ec) throw IoError("cannot create '" + (out_dir / "blobs").string() + "': " + ec.message());

    Rng rng(spec.seed);

    // Distractor pool shared across every pair.
    std::vector<std::vector<double>> pool;
    pool.reserve(static_cast<std::size_t>(spec.distractor_count));
    for (int i = 0; i < spec.distractor_count; ++i) pool.push_back(unit_vector(spec.dim, rng));

    Manifest m;
    m.dim = spec.dim;
    m.dir = out_dir;
    nlohmann::json alignment = nlohmann::json::array();

    for (int p = 0; p < spec.n_pairs; ++p) {
        std::vector<std::vector<double>> concepts;
        concepts.reserve(static_cast<std::size_t>(spec.n_concepts));
        for (int c = 0; c < spec.n_concepts; ++c) concepts.push_back(unit_vector(spec.dim, rng));

        // Frames: contiguous concept segments, as equal as possible.
        Mat frames(spec.n_frames, spec.dim);
        std::vector<int> frame_concept(static_cast<std::size_t>(spec.n_frames));
        const int base = spec.n_frames / spec.n_concepts;
        const int rem = spec.n_frames % spec.n_concepts;
        int f = 0;
        for (int c = 0; c < spec.n_concepts; ++c) {
            const int len = base + (c < rem ? 1 : 0);
            for (int s = 0; s < len; ++s, ++f) {
                frame_concept[static_cast<std::size_t>(f)] = c;
                for (int d = 0; d < spec.dim; ++d) {
                    frames.at(f, d) =
                        concepts[static_cast<std::size_t>(c)][static_cast<std::size_t>(d)] +
                        spec.noise_sigma * rng.normal();
                }
            }
        }

        // Words: every concept once, distractor_count tokens from the shared
        // pool, remaining slots cycle the concepts; positions shuffled.
        std::vector<int> word_source(static_cast<std::size_t>(spec.n_words));
        const int n_distract = std::min(spec.distractor_count, spec.n_words - spec.n_concepts);
        for (int wi = 0; wi < spec.n_words; ++wi) {
            if (wi < spec.n_concepts) {
                word_source[static_cast<std::size_t>(wi)] = wi; // concept id
            } else if (wi < spec.n_concepts + n_distract) {
                // encode pool index k as -(k+1)
                word_source[static_cast<std::size_t>(wi)] =
                    -(rng.uniform_int(static_cast<int>(pool.size())) + 1);
            } else {
                word_source[static_cast<std::size_t>(wi)] = wi % spec.n_concepts;
            }
        }
        rng.shuffle(word_source);

        Mat words(spec.n_words, spec.dim);
        std::vector<int> word_concept(static_cast<std::size_t>(spec.n_words));
        for (int wi = 0; wi < spec.n_words; ++wi) {
            const int src = word_source[static_cast<std::size_t>(wi)];
            const auto& vec = src >= 0 ? concepts[static_cast<std::size_t>(src)]
                                       : pool[static_cast<std::size_t>(-src - 1)];
            word_concept[static_cast<std::size_t>(wi)] = src >= 0 ? src : -1;
            for (int d = 0; d < spec.dim; ++d) {
                words.at(wi, d) = vec[static_cast<std::size_t>(d)] + spec.noise_sigma * rng.normal();
            }
        }

        char idbuf[16];
        std::snprintf(idbuf, sizeof(idbuf), "pair%04d", p);
        SampleRecord rec;
        rec.id = idbuf;
        rec.video_blob = "blobs/" + rec.id + "_v.hcmb";
        rec.text_blob = "blobs/" + rec.id + "_t.hcmb";
        rec.n_frames = spec.n_frames;
        rec.n_words = spec.n_words;
        rec.dim = spec.dim;
        write_blob(frames, out_dir / rec.video_blob);
        write_blob(words, out_dir / rec.text_blob);
        m.samples.push_back(rec);

        alignment.push_back({{"id", rec.id},
                             {"frame_concept", frame_concept},
                             {"word_concept", word_concept}});
    }

    save_manifest(m, out_dir / "manifest.json");
    std::ofstream out(out_dir / "alignment.json", std::ios::trunc);
    if (!out) throw IoError("cannot write alignment sidecar");
    out << alignment.dump(2) << "\n";
    return m;
}

std::vector<ConceptAlignment> load_alignment(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open alignment '" + path.string() + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("alignment '" + path.string() + "': invalid JSON: " + e.what());
    }
    std::vector<ConceptAlignment> out;
    for (const auto& ja : j) {
        ConceptAlignment a;
        a.id = ja.at("id").get<std::string>();
        a.frame_concept = ja.at("frame_concept").get<std::vector<int>>();
        a.word_concept = ja.at("word_concept").get<std::vector<int>>();
        out.push_back(std::move(a));
    }
    return out;
}

// ---- batches -----------------------------------------------------------------

std::vector<Batch> make_batches(const Manifest& m, int batch_size, std::uint64_t seed) {
    if (batch_size < 2) throw ConfigError("make_batches: batch_size must be >= 2");
    if (m.size() < 2) throw ContractError("make_batches: dataset has fewer than 2 samples");

    Rng rng(seed);
    std::vector<int> order(static_cast<std::size_t>(m.size()));
    for (int i = 0; i < m.size(); ++i) order[static_cast<std::size_t>(i)] = i;
    rng.shuffle(order);

    std::vector<Batch> batches;
    if (m.size() < batch_size) {
        // No full batch fits: the whole (shuffled) dataset forms one batch.
        batches.push_back({order, {}});
    } else {
        for (int start = 0; start + batch_size <= m.size(); start += batch_size) {
            Batch b;
            b.samples.assign(order.begin() + start, order.begin() + start + batch_size);
            batches.push_back(std::move(b));
        }
    }
    for (auto& b : batches) {
        b.views.reserve(b.samples.size());
        for (int idx : b.samples) {
            b.views.push_back(sample_views(m.samples[static_cast<std::size_t>(idx)].n_frames, rng));
        }
    }
    return batches;
}

} // namespace hcr
