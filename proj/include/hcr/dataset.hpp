// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "hcr/denoiser.hpp"
#include "hcr/mat.hpp"
#include "hcr/rng.hpp"

namespace hcr {

// ---- feature blobs ----------------------------------------------------------
//
// On-disk token feature matrix, bit-exact format:
//   bytes 0..3   magic "HCMB"
//   bytes 4..7   version, u32 little-endian, = 1
//   bytes 8..11  rows, u32 LE
//   bytes 12..15 cols, u32 LE
//   then rows*cols IEEE-754 binary32 LE, row-major.
// File length is exactly 16 + 4*rows*cols. Values are widened to f64 on load;
// training and verification run at 64-bit, only the files are 32-bit.

void write_blob(const Mat& m, const std::filesystem::path& path);
Mat read_blob(const std::filesystem::path& path);
// Header only (rows, cols); validates magic/version/length.
std::pair<int, int> read_blob_shape(const std::filesystem::path& path);

// ---- manifest ----------------------------------------------------------------

struct SampleRecord {
    std::string id;
    std::string video_blob; // path relative to the manifest directory
    std::string text_blob;
    int n_frames = 0;
    int n_words = 0;
    int dim = 0;
};

struct Manifest {
    int dim = 0;
    std::vector<SampleRecord> samples;
    std::filesystem::path dir; // resolves the relative blob paths

    std::filesystem::path video_path(int i) const {
        return dir / samples[static_cast<std::size_t>(i)].video_blob;
    }
    std::filesystem::path text_path(int i) const {
        return dir / samples[static_cast<std::size_t>(i)].text_blob;
    }
    int size() const { return static_cast<int>(samples.size()); }
};

void save_manifest(const Manifest& m, const std::filesystem::path& path);
// Validates: ids unique, per-sample dims equal to the dataset dim, referenced
// blobs present with headers matching the declared shapes.
Manifest load_manifest(const std::filesystem::path& path);

// ---- synthetic data -----------------------------------------------------------

// Planted-correspondence generator. Each pair draws n_concepts unit vectors;
// frames repeat the concepts in contiguous segments plus Gaussian noise,
// words carry the same concepts interleaved with distractor tokens from a
// pool shared across the whole dataset (so global pooling alone cannot
// separate pairs, while token/clip matching can).
struct SyntheticSpec {
    int n_pairs = 64;
    int dim = 32;
    int n_frames = 12;
    int n_words = 8;
    int n_concepts = 3;
    double noise_sigma = 0.1;
    int distractor_count = 3; // size of the shared distractor pool
    std::uint64_t seed = 1;
};

SyntheticSpec load_synthetic_spec(const std::filesystem::path& path);

// Writes blobs + manifest.json + alignment.json (ground-truth frame->concept
// and word->concept ids; -1 marks distractor words) under out_dir. Pure
// function of spec: same spec, same bytes.
Manifest generate_synthetic(const SyntheticSpec& spec, const std::filesystem::path& out_dir);

struct ConceptAlignment {
    std::string id;
    std::vector<int> frame_concept;
    std::vector<int> word_concept; // -1 for distractors
};
std::vector<ConceptAlignment> load_alignment(const std::filesystem::path& path);

// ---- batches -----------------------------------------------------------------

struct Batch {
    std::vector<int> samples;          // indices into the manifest
    std::vector<ViewPlanEntry> views;  // one per sample, for label denoising
};

// One epoch of shuffled batches. The trailing remainder is dropped unless no
// full batch fits, in which case the whole dataset forms one batch.
std::vector<Batch> make_batches(const Manifest& m, int batch_size, std::uint64_t seed);

} // namespace hcr
