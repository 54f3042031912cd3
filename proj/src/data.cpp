#include "adbn/data.hpp"

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>

#include "adbn/crc32c.hpp"

namespace fs = std::filesystem;

namespace adbn {
namespace {

std::string lowercase(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
    return s;
}

bool contains_any(const std::string& haystack, std::initializer_list<const char*> needles) {
    for (const char* needle : needles)
        if (haystack.find(needle) != std::string::npos) return true;
    return false;
}

std::optional<CrackLabel> label_from_component(const std::string& name) {
    if (name == "CD" || name == "CW" || name == "CP") return CrackLabel::cracked;
    if (name == "UD" || name == "UW" || name == "UP") return CrackLabel::non_cracked;
    const std::string low = lowercase(name);
    if (contains_any(low, {"noncrack", "non-crack", "non_crack", "uncrack", "nocrack", "without"}))
        return CrackLabel::non_cracked;
    if (low.find("crack") != std::string::npos) return CrackLabel::cracked;
    return std::nullopt;
}

std::optional<StructureType> structure_from_component(const std::string& name) {
    if (name == "D" || name == "CD" || name == "UD") return StructureType::bridge_deck;
    if (name == "W" || name == "CW" || name == "UW") return StructureType::wall;
    if (name == "P" || name == "CP" || name == "UP") return StructureType::pavement;
    const std::string low = lowercase(name);
    if (contains_any(low, {"deck", "bridge"})) return StructureType::bridge_deck;
    if (low.find("wall") != std::string::npos) return StructureType::wall;
    if (contains_any(low, {"pavement", "paved"})) return StructureType::pavement;
    if (low.find("synthetic") != std::string::npos) return StructureType::synthetic;
    return std::nullopt;
}

bool has_image_extension(const fs::path& path) {
    const std::string ext = lowercase(path.extension().string());
    return ext == ".png" || ext == ".jpg" || ext == ".jpeg" || ext == ".bmp";
}

std::optional<ImagePatch> decode_rgb(const fs::path& file) {
    const cv::Mat bgr = cv::imread(file.string(), cv::IMREAD_COLOR);
    if (bgr.empty()) return std::nullopt;
    ImagePatch patch;
    patch.height = bgr.rows;
    patch.width = bgr.cols;
    patch.channels = 3;
    patch.pixels.resize(static_cast<std::size_t>(bgr.rows) * bgr.cols * 3);
    for (int y = 0; y < bgr.rows; ++y) {
        for (int x = 0; x < bgr.cols; ++x) {
            const cv::Vec3b px = bgr.at<cv::Vec3b>(y, x);
            const std::size_t base = (static_cast<std::size_t>(y) * bgr.cols + x) * 3;
            patch.pixels[base + 0] = px[2];
            patch.pixels[base + 1] = px[1];
            patch.pixels[base + 2] = px[0];
        }
    }
    return patch;
}

// Exact area-average resampling of one plane to side x side. Each target
// cell integrates the source region it covers, with fractional weights at
// the edges; integer-ratio downscales reduce to plain block means.
void area_downscale(const std::vector<double>& src, int height, int width, int side,
                    std::vector<double>& dst) {
    const double step_y = static_cast<double>(height) / side;
    const double step_x = static_cast<double>(width) / side;
    dst.assign(static_cast<std::size_t>(side) * side, 0.0);
    for (int ty = 0; ty < side; ++ty) {
        const double y0 = ty * step_y;
        const double y1 = (ty + 1) * step_y;
        for (int tx = 0; tx < side; ++tx) {
            const double x0 = tx * step_x;
            const double x1 = (tx + 1) * step_x;
            double acc = 0.0;
            double total_weight = 0.0;
            const int y_end = std::min(height, static_cast<int>(std::ceil(y1)));
            const int x_end = std::min(width, static_cast<int>(std::ceil(x1)));
            for (int y = static_cast<int>(std::floor(y0)); y < y_end; ++y) {
                const double wy = std::min<double>(y + 1, y1) - std::max<double>(y, y0);
                if (wy <= 0.0) continue;
                for (int x = static_cast<int>(std::floor(x0)); x < x_end; ++x) {
                    const double wx = std::min<double>(x + 1, x1) - std::max<double>(x, x0);
                    if (wx <= 0.0) continue;
                    acc += wy * wx * src[static_cast<std::size_t>(y) * width + x];
                    total_weight += wy * wx;
                }
            }
            dst[static_cast<std::size_t>(ty) * side + tx] = acc / total_weight;
        }
    }
}

std::uint8_t clamp_to_byte(double v) {
    return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 255.0)));
}

}  // namespace

std::string to_string(CrackLabel label) {
    return label == CrackLabel::cracked ? "cracked" : "non-cracked";
}

std::string to_string(StructureType type) {
    switch (type) {
        case StructureType::bridge_deck: return "bridge-deck";
        case StructureType::wall: return "wall";
        case StructureType::pavement: return "pavement";
        case StructureType::synthetic: return "synthetic";
    }
    return "unknown";
}

double ImagePatch::gray(int y, int x) const {
    if (channels == 1) return static_cast<double>(at(y, x, 0));
    return 0.299 * at(y, x, 0) + 0.587 * at(y, x, 1) + 0.114 * at(y, x, 2);
}

void PreprocessConfig::validate() const {
    if (target_side < 8) throw UsageError("data.target_side must be >= 8");
}

Eigen::Index PreprocessConfig::feature_dim() const {
    const Eigen::Index plane = static_cast<Eigen::Index>(target_side) * target_side;
    return grayscale ? plane : 3 * plane;
}

std::string PreprocessConfig::canonical_text() const {
    std::ostringstream out;
    out << "preprocess-v1;target_side=" << target_side << ";grayscale=" << (grayscale ? 1 : 0)
        << ";norm=div255";
    return out.str();
}

std::uint32_t PreprocessConfig::hash() const { return crc32c(canonical_text()); }

int LabeledPatchSet::num_classes() const {
    int max_label = -1;
    for (int label : labels) max_label = std::max(max_label, label);
    return max_label + 1;
}

void LabeledPatchSet::check_consistent() const {
    if (features.size() != labels.size())
        throw ContractError("LabeledPatchSet: feature/label count mismatch");
    for (const auto& f : features)
        if (f.size() != feature_dim)
            throw ContractError("LabeledPatchSet: inconsistent feature length");
    for (int label : labels)
        if (label < 0) throw ContractError("LabeledPatchSet: negative label");
}

Eigen::VectorXd preprocess(const ImagePatch& patch, const PreprocessConfig& config) {
    config.validate();
    if (patch.height <= 0 || patch.width <= 0 || (patch.channels != 1 && patch.channels != 3))
        throw ContractError("preprocess: malformed patch");

    const int side = config.target_side;
    std::vector<double> plane(static_cast<std::size_t>(patch.height) * patch.width);
    std::vector<double> scaled;
    Eigen::VectorXd out(config.feature_dim());

    if (config.grayscale) {
        for (int y = 0; y < patch.height; ++y)
            for (int x = 0; x < patch.width; ++x)
                plane[static_cast<std::size_t>(y) * patch.width + x] = patch.gray(y, x);
        area_downscale(plane, patch.height, patch.width, side, scaled);
        for (Eigen::Index i = 0; i < out.size(); ++i) out[i] = scaled[i] / 255.0;
        return out;
    }

    const Eigen::Index plane_dim = static_cast<Eigen::Index>(side) * side;
    for (int c = 0; c < 3; ++c) {
        const int source_channel = patch.channels == 1 ? 0 : c;
        for (int y = 0; y < patch.height; ++y)
            for (int x = 0; x < patch.width; ++x)
                plane[static_cast<std::size_t>(y) * patch.width + x] =
                    static_cast<double>(patch.at(y, x, source_channel));
        area_downscale(plane, patch.height, patch.width, side, scaled);
        for (Eigen::Index i = 0; i < plane_dim; ++i) out[c * plane_dim + i] = scaled[i] / 255.0;
    }
    return out;
}

LabeledPatchSet preprocess_all(const std::vector<ImagePatch>& patches,
                               const PreprocessConfig& config) {
    LabeledPatchSet set;
    set.feature_dim = config.feature_dim();
    set.preprocess_hash = config.hash();
    set.features.reserve(patches.size());
    set.labels.reserve(patches.size());
    for (const ImagePatch& patch : patches) {
        set.features.push_back(preprocess(patch, config));
        set.labels.push_back(static_cast<int>(patch.label));
    }
    set.check_consistent();
    return set;
}

DatasetLoadResult load_dataset(const fs::path& root, const fs::path& manifest) {
    if (!fs::is_directory(root))
        throw DataError("dataset root is not a directory: " + root.string());

    // Manifest: relative-path <TAB> train|test, one file per line.
    std::map<std::string, bool> is_test;
    if (!manifest.empty()) {
        std::ifstream in(manifest);
        if (!in) throw DataError("cannot open manifest: " + manifest.string());
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (line.empty() || line[0] == '#') continue;
            const auto tab = line.find('\t');
            if (tab == std::string::npos)
                throw UsageError("manifest line " + std::to_string(line_no) + ": missing tab");
            const std::string split = line.substr(tab + 1);
            if (split != "train" && split != "test")
                throw UsageError("manifest line " + std::to_string(line_no) +
                                 ": split must be 'train' or 'test', got '" + split + "'");
            is_test[line.substr(0, tab)] = (split == "test");
        }
    }

    std::vector<fs::path> files;
    for (const auto& entry : fs::recursive_directory_iterator(root))
        if (entry.is_regular_file() && has_image_extension(entry.path()))
            files.push_back(entry.path());
    if (files.empty()) throw DataError("no image files under " + root.string());
    std::sort(files.begin(), files.end(), [&](const fs::path& a, const fs::path& b) {
        return a.lexically_relative(root).generic_string() <
               b.lexically_relative(root).generic_string();
    });

    DatasetLoadResult result;
    for (const fs::path& file : files) {
        const std::string relative = file.lexically_relative(root).generic_string();

        std::optional<CrackLabel> label;
        std::optional<StructureType> structure;
        for (fs::path dir = file.parent_path();
             dir.has_relative_path() && dir != root.parent_path(); dir = dir.parent_path()) {
            const std::string name = dir.filename().string();
            if (!label) label = label_from_component(name);
            if (!structure) structure = structure_from_component(name);
            if (dir == root) break;
        }
        if (!label) {
            result.errors.push_back(relative + ": directory name encodes no crack label");
            continue;
        }

        std::optional<ImagePatch> decoded = decode_rgb(file);
        if (!decoded) {
            result.errors.push_back(relative + ": decode failed");
            continue;
        }

        ImagePatch patch = std::move(*decoded);
        patch.label = *label;
        patch.structure_type = structure.value_or(StructureType::synthetic);
        patch.source_path = relative;

        const auto split_it = is_test.find(relative);
        const bool test = split_it != is_test.end() && split_it->second;
        auto& bucket = test ? result.test : result.train;
        auto& counts = test ? result.test_counts : result.train_counts;
        counts[static_cast<int>(patch.structure_type)][static_cast<int>(patch.label)]++;
        bucket.push_back(std::move(patch));
    }

    if (result.train.empty() && result.test.empty())
        throw DataError("no loadable labeled images under " + root.string());
    return result;
}

ImagePatch load_image(const std::filesystem::path& file) {
    std::optional<ImagePatch> patch = decode_rgb(file);
    if (!patch) throw DataError("cannot decode image " + file.string());
    patch->source_path = file.string();
    return std::move(*patch);
}

std::string format_category_counts(const CategoryCounts& train, const CategoryCounts& test) {
    std::ostringstream out;
    out << "Category                      Training dataset  Test dataset\n";
    std::size_t train_total = 0;
    std::size_t test_total = 0;
    for (int type = 0; type < 4; ++type) {
        for (int label = 1; label >= 0; --label) {
            const std::size_t n_train = train[type][label];
            const std::size_t n_test = test[type][label];
            if (n_train == 0 && n_test == 0) continue;
            std::ostringstream name;
            name << to_string(static_cast<StructureType>(type))
                 << (label == 1 ? " with cracks" : " w/o cracks");
            out << name.str() << std::string(name.str().size() < 30 ? 30 - name.str().size() : 1, ' ')
                << n_train << "  " << n_test << "\n";
            train_total += n_train;
            test_total += n_test;
        }
    }
    out << "total" << std::string(25, ' ') << train_total << "  " << test_total << "\n";
    return out.str();
}

void SyntheticConfig::validate() const {
    if (n_per_class < 1) throw UsageError("synth.n_per_class must be >= 1");
    if (side < 16) throw UsageError("synth.side must be >= 16");
    if (crack_min_width <= 0.0 || crack_max_width < crack_min_width)
        throw UsageError("synth crack width range is invalid");
    if (noise_level < 0.0) throw UsageError("synth.noise_level must be >= 0");
}

std::vector<ImagePatch> generate_synthetic_crack_set(const SyntheticConfig& config) {
    config.validate();
    Rng rng(config.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);

    const int side = config.side;
    const int coarse = side / 8 + 2;
    std::vector<double> field(static_cast<std::size_t>(coarse) * coarse);
    std::vector<double> image(static_cast<std::size_t>(side) * side);

    auto to_patch = [&](const std::vector<double>& gray, CrackLabel label, int pair,
                        const char* kind) {
        ImagePatch patch;
        patch.height = side;
        patch.width = side;
        patch.channels = 3;
        patch.pixels.resize(static_cast<std::size_t>(side) * side * 3);
        for (std::size_t i = 0; i < gray.size(); ++i) {
            const std::uint8_t v = clamp_to_byte(gray[i]);
            patch.pixels[3 * i + 0] = v;
            patch.pixels[3 * i + 1] = v;
            patch.pixels[3 * i + 2] = v;
        }
        patch.label = label;
        patch.structure_type = StructureType::synthetic;
        patch.source_path = "synthetic://" + std::to_string(pair) + "/" + kind;
        return patch;
    };

    std::vector<ImagePatch> patches;
    patches.reserve(2 * static_cast<std::size_t>(config.n_per_class));
    for (int pair = 0; pair < config.n_per_class; ++pair) {
        // Textured background: base level + low-frequency field + speckle.
        const double base = 150.0 + 60.0 * unit(rng);
        for (double& f : field) f = -30.0 + 60.0 * unit(rng);
        const double speckle = config.noise_level * 255.0;
        for (int y = 0; y < side; ++y) {
            const double gy = static_cast<double>(y) / 8.0;
            const int cy = static_cast<int>(gy);
            const double fy = gy - cy;
            for (int x = 0; x < side; ++x) {
                const double gx = static_cast<double>(x) / 8.0;
                const int cx = static_cast<int>(gx);
                const double fx = gx - cx;
                const double low =
                    field[static_cast<std::size_t>(cy) * coarse + cx] * (1 - fy) * (1 - fx) +
                    field[static_cast<std::size_t>(cy) * coarse + cx + 1] * (1 - fy) * fx +
                    field[static_cast<std::size_t>(cy + 1) * coarse + cx] * fy * (1 - fx) +
                    field[static_cast<std::size_t>(cy + 1) * coarse + cx + 1] * fy * fx;
                image[static_cast<std::size_t>(y) * side + x] =
                    std::clamp(base + low + speckle * gauss(rng), 0.0, 255.0);
            }
        }
        patches.push_back(to_patch(image, CrackLabel::non_cracked, pair, "clean"));

        // Crack: a jittered polyline spanning the full image, vertical or
        // horizontal, stamped as dark discs of the sampled width.
        const double width = config.crack_min_width +
                             (config.crack_max_width - config.crack_min_width) * unit(rng);
        const double depth = 20.0 + 40.0 * unit(rng);
        const bool vertical = unit(rng) < 0.5;
        double cross = side * (0.2 + 0.6 * unit(rng));
        const double radius = width / 2.0;
        for (int along = 0; along < side; ++along) {
            cross = std::clamp(cross + (unit(rng) * 2.0 - 1.0), 1.0, side - 2.0);
            const int reach = static_cast<int>(std::ceil(radius));
            for (int dy = -reach; dy <= reach; ++dy) {
                for (int dx = -reach; dx <= reach; ++dx) {
                    if (dy * dy + dx * dx > radius * radius + 0.25) continue;
                    const int y = vertical ? along + dy : static_cast<int>(cross) + dy;
                    const int x = vertical ? static_cast<int>(cross) + dx : along + dx;
                    if (y < 0 || y >= side || x < 0 || x >= side) continue;
                    double& px = image[static_cast<std::size_t>(y) * side + x];
                    px = std::min(px, depth);
                }
            }
        }
        patches.push_back(to_patch(image, CrackLabel::cracked, pair, "crack"));
    }
    return patches;
}

std::filesystem::path write_image_dataset(const std::vector<ImagePatch>& patches,
                                          const fs::path& root, int train_pairs) {
    fs::create_directories(root);
    const fs::path cracked_dir = root / "synthetic-cracked";
    const fs::path clean_dir = root / "synthetic-non-cracked";
    fs::create_directories(cracked_dir);
    fs::create_directories(clean_dir);

    const fs::path manifest_path = root / "manifest.txt";
    std::ofstream manifest(manifest_path);
    if (!manifest) throw DataError("cannot write manifest: " + manifest_path.string());

    for (std::size_t i = 0; i < patches.size(); ++i) {
        const ImagePatch& patch = patches[i];
        cv::Mat bgr(patch.height, patch.width, CV_8UC3);
        for (int y = 0; y < patch.height; ++y)
            for (int x = 0; x < patch.width; ++x)
                bgr.at<cv::Vec3b>(y, x) =
                    cv::Vec3b(patch.at(y, x, 2), patch.at(y, x, 1), patch.at(y, x, 0));

        char name[32];
        std::snprintf(name, sizeof(name), "img_%06zu.png", i);
        const bool cracked = patch.label == CrackLabel::cracked;
        const fs::path out = (cracked ? cracked_dir : clean_dir) / name;
        if (!cv::imwrite(out.string(), bgr))
            throw DataError("failed to write image: " + out.string());

        const std::size_t pair = i / 2;
        manifest << out.lexically_relative(root).generic_string() << '\t'
                 << (pair < static_cast<std::size_t>(train_pairs) ? "train" : "test") << '\n';
    }
    return manifest_path;
}

}  // namespace adbn
