#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "adbn/errors.hpp"
#include "adbn/rbm.hpp"

namespace adbn {

enum class CrackLabel : int { non_cracked = 0, cracked = 1 };
enum class StructureType : int { bridge_deck = 0, wall = 1, pavement = 2, synthetic = 3 };

std::string to_string(CrackLabel label);
std::string to_string(StructureType type);

// One image with its annotation. Pixels are row-major, interleaved RGB
// (or a single gray plane when channels == 1).
struct ImagePatch {
    int height = 0;
    int width = 0;
    int channels = 0;
    std::vector<std::uint8_t> pixels;
    CrackLabel label = CrackLabel::non_cracked;
    StructureType structure_type = StructureType::synthetic;
    std::string source_path;

    std::uint8_t at(int y, int x, int c) const {
        return pixels[static_cast<std::size_t>((y * width + x) * channels + c)];
    }
    // Luminance in [0, 255].
    double gray(int y, int x) const;
};

struct PreprocessConfig {
    int target_side = 32;
    bool grayscale = true;
    // Normalization is always divide-by-255.

    void validate() const;
    Eigen::Index feature_dim() const;
    std::string canonical_text() const;
    std::uint32_t hash() const;  // crc32c of canonical_text()
};

// Preprocessed training material: feature vectors in [0, 1] with aligned
// class labels and the hash of the preprocessing that produced them.
struct LabeledPatchSet {
    std::vector<Eigen::VectorXd> features;
    std::vector<int> labels;
    Eigen::Index feature_dim = 0;
    std::uint32_t preprocess_hash = 0;

    std::size_t size() const { return features.size(); }
    int num_classes() const;
    void check_consistent() const;
};

// Luminance grayscale (0.299 R + 0.587 G + 0.114 B), exact area-average
// downscale to target_side x target_side, divide by 255. With
// grayscale = false the three channel planes are downscaled separately and
// concatenated R plane, G plane, B plane.
Eigen::VectorXd preprocess(const ImagePatch& patch, const PreprocessConfig& config);

LabeledPatchSet preprocess_all(const std::vector<ImagePatch>& patches,
                               const PreprocessConfig& config);

// ---------------------------------------------------------------------------
// Directory loading (SDNET-2018-style layout)
// ---------------------------------------------------------------------------

// Per (structure type, label) image counts, indexed [type][label].
using CategoryCounts = std::array<std::array<std::size_t, 2>, 4>;

struct DatasetLoadResult {
    std::vector<ImagePatch> train;
    std::vector<ImagePatch> test;
    CategoryCounts train_counts{};
    CategoryCounts test_counts{};
    // Files that could not be decoded or labeled; loading continues past them.
    std::vector<std::string> errors;
};

// Walks `root` recursively, deriving the label and structure type of every
// image from its directory names. Both the SDNET two-letter codes (CD, UD,
// CW, UW, CP, UP) and descriptive names ("cracked", "non-cracked", ...) are
// recognised. The optional manifest file assigns splits with
// `relative-path<TAB>train|test` lines; unlisted files default to train.
// Ordering is deterministic (sorted by relative path).
DatasetLoadResult load_dataset(const std::filesystem::path& root,
                               const std::filesystem::path& manifest = {});

// Table-style summary of per-category counts.
std::string format_category_counts(const CategoryCounts& train, const CategoryCounts& test);

// Decodes one image file to an RGB ImagePatch (label left at its default).
ImagePatch load_image(const std::filesystem::path& file);

// ---------------------------------------------------------------------------
// Synthetic crack patches
// ---------------------------------------------------------------------------

struct SyntheticConfig {
    int n_per_class = 100;
    int side = 32;
    double crack_min_width = 2.0;
    double crack_max_width = 3.0;
    double noise_level = 0.05;  // speckle stddev as a fraction of full scale
    std::uint64_t seed = 1;

    void validate() const;
};

// Generates n_per_class background/crack pairs: even positions hold the
// clean textured background, odd positions the same background with a dark
// polyline drawn over it. Bitwise deterministic per seed.
std::vector<ImagePatch> generate_synthetic_crack_set(const SyntheticConfig& config);

// Writes patches as PNGs under root/<dir-per-category> and a manifest that
// sends the first train_pairs background/crack pairs to the train split and
// the rest to test. Returns the manifest path.
std::filesystem::path write_image_dataset(const std::vector<ImagePatch>& patches,
                                          const std::filesystem::path& root, int train_pairs);

}  // namespace adbn
