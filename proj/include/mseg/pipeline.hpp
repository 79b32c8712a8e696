#ifndef MSEG_PIPELINE_HPP
#define MSEG_PIPELINE_HPP

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "mseg/breast_extract.hpp"
#include "mseg/classify.hpp"
#include "mseg/glcm.hpp"
#include "mseg/levelset.hpp"
#include "mseg/netpbm.hpp"

namespace mseg {

enum class ThresholdMethod { Otsu, MaxEntropy, MaxCorrelation };
enum class ClassifierChoice { Knn, Mlp, Both };

/// Resolved run configuration; every knob of the pipeline lives here so the
/// reports can echo a complete, reproducible description of the run.
struct PipelineConfig {
    bool enhancement = true;
    ThresholdMethod threshold = ThresholdMethod::Otsu;
    SpeedParams speed;
    Schedule schedule;
    int glcm_levels = 16;
    ClassifierChoice classifier = ClassifierChoice::Both;
    int knn_k = 7;
    MlpHyper mlp;
    std::uint64_t seed = 1;
    std::string output_dir = "out";

    void validate() const {
        speed.validate();
        schedule.validate();
        if (glcm_levels < 2) throw config_error("glcm_levels must be at least 2");
        if (knn_k < 1) throw config_error("knn_k must be positive");
        if (mlp.hidden < 1) throw config_error("mlp_hidden must be positive");
        if (mlp.epochs < 1) throw config_error("mlp_epochs must be positive");
        if (mlp.learning_rate <= 0.0) throw config_error("mlp_learning_rate must be positive");
    }

    static PipelineConfig parse(std::istream& in);
    static PipelineConfig load(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw io_error("cannot open config '" + path + "'");
        return parse(in);
    }

    std::string echo() const;
};

namespace detail {

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline bool parse_on_off(const std::string& key, const std::string& v) {
    if (v == "on" || v == "true" || v == "1") return true;
    if (v == "off" || v == "false" || v == "0") return false;
    throw config_error("config: bad boolean for " + key + ": '" + v + "'");
}

inline double parse_double(const std::string& key, const std::string& v) {
    std::size_t pos = 0;
    double d = 0.0;
    try {
        d = std::stod(v, &pos);
    } catch (const std::exception&) {
        throw config_error("config: bad number for " + key + ": '" + v + "'");
    }
    if (pos != v.size()) throw config_error("config: bad number for " + key + ": '" + v + "'");
    return d;
}

inline long long parse_int(const std::string& key, const std::string& v) {
    std::size_t pos = 0;
    long long n = 0;
    try {
        n = std::stoll(v, &pos);
    } catch (const std::exception&) {
        throw config_error("config: bad integer for " + key + ": '" + v + "'");
    }
    if (pos != v.size()) throw config_error("config: bad integer for " + key + ": '" + v + "'");
    return n;
}

// %.12g: enough digits that re-reading reproduces the printed doubles to 12
// significant figures in the CSV round-trip contract
inline std::string fmt_g12(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

inline std::string fmt_g17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace detail

inline PipelineConfig PipelineConfig::parse(std::istream& in) {
    PipelineConfig cfg;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const std::string text = detail::trim(line);
        if (text.empty()) continue;
        const auto eq = text.find('=');
        if (eq == std::string::npos)
            throw config_error("config line " + std::to_string(line_no) + ": expected key = value");
        const std::string key = detail::trim(text.substr(0, eq));
        const std::string value = detail::trim(text.substr(eq + 1));

        using detail::parse_double;
        using detail::parse_int;
        using detail::parse_on_off;
        if (key == "enhancement") {
            cfg.enhancement = parse_on_off(key, value);
        } else if (key == "threshold") {
            if (value == "otsu")
                cfg.threshold = ThresholdMethod::Otsu;
            else if (value == "max-entropy")
                cfg.threshold = ThresholdMethod::MaxEntropy;
            else if (value == "max-correlation")
                cfg.threshold = ThresholdMethod::MaxCorrelation;
            else
                throw config_error("config: unknown threshold method '" + value + "'");
        } else if (key == "epsilon") {
            cfg.speed.epsilon = parse_double(key, value);
        } else if (key == "beta") {
            cfg.speed.beta = parse_double(key, value);
        } else if (key == "nu") {
            cfg.speed.nu = parse_double(key, value);
        } else if (key == "theta") {
            cfg.speed.theta = parse_double(key, value);
        } else if (key == "alpha") {
            cfg.speed.alpha = parse_double(key, value);
        } else if (key == "nu_direction") {
            if (value == "outward")
                cfg.speed.nu_outward = true;
            else if (value == "inward")
                cfg.speed.nu_outward = false;
            else
                throw config_error("config: nu_direction must be outward or inward");
        } else if (key == "literal_skew") {
            cfg.speed.literal_skew = parse_on_off(key, value);
        } else if (key == "literal_moy") {
            cfg.speed.literal_mean_ratio = parse_on_off(key, value);
        } else if (key == "max_iterations") {
            cfg.schedule.max_iterations = static_cast<int>(parse_int(key, value));
        } else if (key == "reinit_period") {
            cfg.schedule.reinit_period = static_cast<int>(parse_int(key, value));
        } else if (key == "convergence_fraction") {
            cfg.schedule.convergence_fraction = parse_double(key, value);
        } else if (key == "band_width") {
            cfg.schedule.band_width = parse_double(key, value);
        } else if (key == "time_step") {
            cfg.schedule.time_step = parse_double(key, value);
        } else if (key == "seed_fraction") {
            cfg.schedule.seed_top_fraction = parse_double(key, value);
        } else if (key == "t0_quantile") {
            cfg.schedule.t0_quantile = parse_double(key, value);
        } else if (key == "glcm_levels") {
            cfg.glcm_levels = static_cast<int>(parse_int(key, value));
        } else if (key == "classifier") {
            if (value == "knn")
                cfg.classifier = ClassifierChoice::Knn;
            else if (value == "mlp")
                cfg.classifier = ClassifierChoice::Mlp;
            else if (value == "both")
                cfg.classifier = ClassifierChoice::Both;
            else
                throw config_error("config: unknown classifier '" + value + "'");
        } else if (key == "knn_k") {
            cfg.knn_k = static_cast<int>(parse_int(key, value));
        } else if (key == "mlp_hidden") {
            cfg.mlp.hidden = static_cast<int>(parse_int(key, value));
        } else if (key == "mlp_learning_rate") {
            cfg.mlp.learning_rate = parse_double(key, value);
        } else if (key == "mlp_epochs") {
            cfg.mlp.epochs = static_cast<int>(parse_int(key, value));
        } else if (key == "seed") {
            cfg.seed = static_cast<std::uint64_t>(parse_int(key, value));
        } else if (key == "output_dir") {
            cfg.output_dir = value;
        } else {
            throw config_error("config: unknown key '" + key + "'");
        }
    }
    cfg.mlp.seed = cfg.seed;
    cfg.validate();
    return cfg;
}

inline std::string PipelineConfig::echo() const {
    std::ostringstream out;
    using detail::fmt_g12;
    out << "enhancement = " << (enhancement ? "on" : "off") << "\n";
    out << "threshold = "
        << (threshold == ThresholdMethod::Otsu
                ? "otsu"
                : threshold == ThresholdMethod::MaxEntropy ? "max-entropy" : "max-correlation")
        << "\n";
    out << "epsilon = " << fmt_g12(speed.epsilon) << "\n";
    out << "beta = " << fmt_g12(speed.beta) << "\n";
    out << "nu = " << fmt_g12(speed.nu) << "\n";
    out << "theta = " << fmt_g12(speed.theta) << "\n";
    out << "alpha = " << fmt_g12(speed.alpha) << "\n";
    out << "nu_direction = " << (speed.nu_outward ? "outward" : "inward") << "\n";
    out << "literal_skew = " << (speed.literal_skew ? "on" : "off") << "\n";
    out << "literal_moy = " << (speed.literal_mean_ratio ? "on" : "off") << "\n";
    out << "max_iterations = " << schedule.max_iterations << "\n";
    out << "reinit_period = " << schedule.reinit_period << "\n";
    out << "convergence_fraction = " << fmt_g12(schedule.convergence_fraction) << "\n";
    out << "band_width = " << fmt_g12(schedule.band_width) << "\n";
    out << "time_step = " << fmt_g12(schedule.time_step) << "\n";
    out << "seed_fraction = " << fmt_g12(schedule.seed_top_fraction) << "\n";
    out << "t0_quantile = " << fmt_g12(schedule.t0_quantile) << "\n";
    out << "glcm_levels = " << glcm_levels << "\n";
    out << "classifier = "
        << (classifier == ClassifierChoice::Knn ? "knn"
                                                : classifier == ClassifierChoice::Mlp ? "mlp" : "both")
        << "\n";
    out << "knn_k = " << knn_k << "\n";
    out << "mlp_hidden = " << mlp.hidden << "\n";
    out << "mlp_learning_rate = " << fmt_g12(mlp.learning_rate) << "\n";
    out << "mlp_epochs = " << mlp.epochs << "\n";
    out << "seed = " << seed << "\n";
    out << "output_dir = " << output_dir << "\n";
    return out.str();
}

// --- dataset manifest --------------------------------------------------------

struct ManifestEntry {
    std::string path;  // resolved against the manifest's directory
    AcrLabel label = AcrLabel::ACR1;
    bool is_train = true;
};

struct DatasetManifest {
    std::vector<ManifestEntry> entries;

    std::size_t count_split(bool train) const {
        std::size_t n = 0;
        for (const auto& e : entries) n += e.is_train == train;
        return n;
    }

    /// CSV with header path,label,split; relative paths resolve against the
    /// manifest location and must exist.
    static DatasetManifest load(const std::string& manifest_path) {
        namespace fs = std::filesystem;
        std::ifstream in(manifest_path);
        if (!in) throw io_error("cannot open manifest '" + manifest_path + "'");
        const fs::path base = fs::path(manifest_path).parent_path();

        DatasetManifest m;
        std::string line;
        if (!std::getline(in, line) || detail::trim(line) != "path,label,split")
            throw format_error("manifest: expected header 'path,label,split'");
        int line_no = 1;
        while (std::getline(in, line)) {
            ++line_no;
            const std::string text = detail::trim(line);
            if (text.empty()) continue;
            const auto c1 = text.find(',');
            const auto c2 = text.find(',', c1 == std::string::npos ? c1 : c1 + 1);
            if (c1 == std::string::npos || c2 == std::string::npos)
                throw format_error("manifest line " + std::to_string(line_no) +
                                   ": expected path,label,split");
            ManifestEntry e;
            const std::string raw_path = detail::trim(text.substr(0, c1));
            e.label = acr_from_string(detail::trim(text.substr(c1 + 1, c2 - c1 - 1)));
            const std::string split = detail::trim(text.substr(c2 + 1));
            if (split == "train")
                e.is_train = true;
            else if (split == "test")
                e.is_train = false;
            else
                throw format_error("manifest line " + std::to_string(line_no) +
                                   ": split must be train or test");
            const fs::path p = fs::path(raw_path).is_absolute() ? fs::path(raw_path)
                                                                : base / raw_path;
            if (!fs::exists(p))
                throw io_error("manifest line " + std::to_string(line_no) + ": missing file '" +
                               p.string() + "'");
            e.path = p.string();
            m.entries.push_back(std::move(e));
        }
        if (m.entries.empty()) throw degenerate_input("manifest holds no entries");
        return m;
    }
};

// --- pipeline stages ---------------------------------------------------------

namespace detail {

template <typename Fn>
auto tag_stage(const char* stage, Fn&& fn) {
    try {
        return fn();
    } catch (const std::exception& e) {
        throw std::runtime_error(std::string(stage) + ": " + e.what());
    }
}

inline std::vector<Pixel> mask_boundary(const BinaryMask& mask) {
    std::vector<Pixel> edge;
    for (int y = 0; y < mask.height(); ++y)
        for (int x = 0; x < mask.width(); ++x) {
            if (!mask(x, y)) continue;
            const bool border =
                (x == 0 || !mask(x - 1, y)) || (x + 1 == mask.width() || !mask(x + 1, y)) ||
                (y == 0 || !mask(x, y - 1)) || (y + 1 == mask.height() || !mask(x, y + 1));
            if (border) edge.push_back({x, y});
        }
    return edge;
}

}  // namespace detail

struct ExtractResult {
    BreastRegion region;
    Orientation orientation = Orientation::LeftToRight;
    int threshold = 0;
    bool separation_skipped = false;
};

/// Breast extraction: optional log enhancement, binarization, orientation,
/// background separation, labelling, largest-label selection.
inline ExtractResult run_extract(const PipelineConfig& config, const GrayImage& img) {
    config.validate();
    return detail::tag_stage("extract", [&] {
        BinaryMask working;
        int threshold = 0;
        auto apply_threshold = [&](const GrayImage& raster) {
            switch (config.threshold) {
                case ThresholdMethod::Otsu: return threshold_otsu(raster);
                case ThresholdMethod::MaxEntropy: return threshold_max_entropy(raster);
                case ThresholdMethod::MaxCorrelation: return threshold_max_correlation(raster);
            }
            return threshold_otsu(raster);
        };
        if (config.enhancement) {
            // the log transform inverts intensity order, so the breast side of
            // the split is the sub-threshold half
            const GrayImage enhanced = rescale_enhanced(log_enhance(img), img.max_value());
            threshold = apply_threshold(enhanced);
            working = binarize_below(enhanced, threshold);
        } else {
            threshold = apply_threshold(img);
            working = binarize(img, threshold);
        }

        const Orientation orient = detect_orientation(working);
        const SeparationResult sep = separate_background(working, orient);
        const LabelMap labels = label_components(sep.mask);
        BreastRegion region = select_breast(labels, img);
        region.anchor_a = sep.point_a;
        region.anchor_b = sep.point_b;
        return ExtractResult{std::move(region), orient, threshold, sep.skipped};
    });
}

struct DetectResult {
    DetectedRegions regions;
    RoiBox box;
};

/// Level-set detection inside the extracted breast plus the ROI bound.
inline DetectResult run_detect(const PipelineConfig& config, const BreastRegion& breast) {
    config.validate();
    return detail::tag_stage("detect", [&] {
        if (breast.mask.count() == 0) throw degenerate_input("empty breast mask");
        int max_in_mask = 0;
        for (int y = 0; y < breast.mask.height(); ++y)
            for (int x = 0; x < breast.mask.width(); ++x)
                if (breast.mask(x, y))
                    max_in_mask = std::max(max_in_mask, static_cast<int>(breast.masked_image(x, y)));
        if (max_in_mask == 0)
            throw degenerate_input("degenerate seeding: breast region is entirely dark");

        DetectedRegions regions =
            detect(breast.masked_image, config.speed, config.schedule, &breast.mask);
        RoiBox box = roi_bounding_box(regions);
        return DetectResult{std::move(regions), box};
    });
}

/// Four-orientation GLCM features of the ROI.
inline FeatureVector run_features(const PipelineConfig& config, const GrayImage& img,
                                  const RoiBox& box) {
    config.validate();
    return detail::tag_stage("features", [&] { return feature_vector(img, box, config.glcm_levels); });
}

// --- CSV and report serialization ---------------------------------------------

constexpr const char* kFeaturesCsvHeader =
    "id,x_min,y_min,x_max,y_max,moy,variance,energy,contrast,entropy,homogeneity,label";

inline std::string features_csv_row(const std::string& id, const RoiBox& box,
                                    const FeatureVector& f, std::optional<AcrLabel> label) {
    using detail::fmt_g12;
    std::ostringstream out;
    out << id << "," << box.x_min << "," << box.y_min << "," << box.x_max << "," << box.y_max
        << "," << fmt_g12(f.moy) << "," << fmt_g12(f.variance) << "," << fmt_g12(f.energy) << ","
        << fmt_g12(f.contrast) << "," << fmt_g12(f.entropy) << "," << fmt_g12(f.homogeneity)
        << "," << (label ? to_string(*label) : std::string());
    return out.str();
}

/// One fully processed image.
struct ImageOutcome {
    std::string id;
    ExtractResult extract;
    DetectResult detect;
    FeatureVector features;
};

inline ImageOutcome process_image(const PipelineConfig& config, const std::string& path) {
    ImageOutcome out;
    out.id = std::filesystem::path(path).stem().string();
    const GrayImage img = detail::tag_stage("read", [&] { return read_pgm(path); });
    out.extract = run_extract(config, img);
    out.detect = run_detect(config, out.extract.region);
    out.features = run_features(config, out.extract.region.masked_image, out.detect.box);
    return out;
}

inline void write_image_artifacts(const PipelineConfig& config, const ImageOutcome& outcome,
                                  const GrayImage& original) {
    namespace fs = std::filesystem;
    const fs::path dir(config.output_dir);
    fs::create_directories(dir);
    write_pgm(outcome.extract.region.masked_image, (dir / (outcome.id + "_breast.pgm")).string());

    const auto boundary = detail::mask_boundary(outcome.extract.region.mask);
    write_ppm(render_overlay(original, boundary), (dir / (outcome.id + "_extract.ppm")).string());

    const RoiBox& b = outcome.detect.box;
    write_ppm(render_overlay(original, outcome.detect.regions.contour,
                             OverlayBox{b.x_min, b.y_min, b.x_max, b.y_max}),
              (dir / (outcome.id + "_roi.ppm")).string());
}

// --- training and evaluation ---------------------------------------------------

struct TrainedModels {
    TrainingSet training;                // normalized features + ranges
    std::optional<MlpModel> mlp;
    int knn_k = 7;
};

struct AccuracyReport {
    std::optional<EvalReport> knn;
    std::optional<EvalReport> mlp;
    std::size_t train_count = 0;
    std::size_t test_count = 0;
};

namespace detail {

// KNN's precondition; MLP trains regardless of class coverage
inline void require_all_classes(const std::vector<LabelledSample>& samples) {
    std::array<int, kAcrClassCount> counts{};
    for (const auto& s : samples) counts[static_cast<int>(s.label)]++;
    for (int c = 0; c < kAcrClassCount; ++c)
        if (counts[c] == 0)
            throw degenerate_input("class " + to_string(static_cast<AcrLabel>(c)) +
                                   " is absent from the training split (fatal for KNN)");
}

}  // namespace detail

/// Runs the per-image pipeline over every manifest entry, in manifest order.
inline std::vector<ImageOutcome> process_manifest(const PipelineConfig& config,
                                                  const DatasetManifest& manifest) {
    std::vector<ImageOutcome> outcomes;
    outcomes.reserve(manifest.entries.size());
    for (const auto& entry : manifest.entries) outcomes.push_back(process_image(config, entry.path));
    return outcomes;
}

/// Fits normalization and the selected classifiers on train-split outcomes.
inline TrainedModels fit_models(const PipelineConfig& config, const DatasetManifest& manifest,
                                const std::vector<ImageOutcome>& outcomes) {
    std::vector<LabelledSample> samples;
    for (std::size_t i = 0; i < manifest.entries.size(); ++i)
        if (manifest.entries[i].is_train)
            samples.push_back({outcomes[i].features, manifest.entries[i].label});
    if (samples.empty()) throw degenerate_input("manifest has no train split");

    return detail::tag_stage("train", [&] {
        if (config.classifier != ClassifierChoice::Mlp) detail::require_all_classes(samples);
        TrainedModels models{TrainingSet::fit(samples), std::nullopt, config.knn_k};
        if (config.classifier != ClassifierChoice::Knn)
            models.mlp = mlp_train(models.training, config.mlp);
        return models;
    });
}

/// Fits normalization and the selected classifiers on the manifest's train
/// split.  Feature rows for the processed train images are appended to
/// features_rows when the pointer is non-null.
inline TrainedModels run_train(const PipelineConfig& config, const DatasetManifest& manifest,
                               std::vector<std::string>* features_rows = nullptr) {
    config.validate();
    if (manifest.count_split(true) == 0) throw degenerate_input("manifest has no train split");

    DatasetManifest train_only;
    for (const auto& entry : manifest.entries)
        if (entry.is_train) train_only.entries.push_back(entry);
    const auto outcomes = process_manifest(config, train_only);
    if (features_rows)
        for (std::size_t i = 0; i < outcomes.size(); ++i)
            features_rows->push_back(features_csv_row(outcomes[i].id, outcomes[i].detect.box,
                                                      outcomes[i].features,
                                                      train_only.entries[i].label));
    return fit_models(config, train_only, outcomes);
}

/// Test-split predictions against the fitted models.
inline AccuracyReport score_models(const PipelineConfig& config, const DatasetManifest& manifest,
                                   const std::vector<ImageOutcome>& outcomes,
                                   const TrainedModels& models) {
    std::vector<std::pair<AcrLabel, AcrLabel>> knn_pairs, mlp_pairs;
    for (std::size_t i = 0; i < manifest.entries.size(); ++i) {
        const auto& entry = manifest.entries[i];
        if (entry.is_train) continue;
        if (config.classifier != ClassifierChoice::Mlp)
            knn_pairs.emplace_back(knn_classify(models.training, outcomes[i].features, config.knn_k),
                                   entry.label);
        if (models.mlp)
            mlp_pairs.emplace_back(mlp_classify(*models.mlp, outcomes[i].features), entry.label);
    }
    AccuracyReport report;
    report.train_count = manifest.count_split(true);
    report.test_count = manifest.count_split(false);
    if (!knn_pairs.empty()) report.knn = evaluate(knn_pairs);
    if (!mlp_pairs.empty()) report.mlp = evaluate(mlp_pairs);
    return report;
}

/// Full evaluation protocol: train on the train split, predict the test
/// split, accumulate per-class accuracy and confusion matrices.
inline AccuracyReport run_evaluate(const PipelineConfig& config, const DatasetManifest& manifest,
                                   std::vector<std::string>* features_rows = nullptr,
                                   TrainedModels* models_out = nullptr,
                                   const std::vector<ImageOutcome>* cached_outcomes = nullptr) {
    config.validate();
    if (manifest.count_split(false) == 0) throw degenerate_input("manifest has no test split");
    if (manifest.count_split(true) == 0) throw degenerate_input("manifest has no train split");

    const std::vector<ImageOutcome> outcomes =
        cached_outcomes ? *cached_outcomes : process_manifest(config, manifest);
    if (outcomes.size() != manifest.entries.size())
        throw config_error("cached outcomes do not match the manifest");

    if (features_rows)
        for (std::size_t i = 0; i < outcomes.size(); ++i)
            features_rows->push_back(features_csv_row(outcomes[i].id, outcomes[i].detect.box,
                                                      outcomes[i].features,
                                                      manifest.entries[i].label));

    TrainedModels models = fit_models(config, manifest, outcomes);
    AccuracyReport report = score_models(config, manifest, outcomes, models);
    if (models_out) *models_out = std::move(models);
    return report;
}

inline std::string render_report_text(const PipelineConfig& config, const AccuracyReport& report) {
    std::ostringstream out;
    out << "mammoseg accuracy report\n";
    out << "========================\n\n";
    out << "images: " << report.train_count << " train / " << report.test_count << " test\n\n";
    out << "per-class accuracy\n";
    char line[128];
    std::snprintf(line, sizeof line, "%-8s %10s %10s\n", "", "KNN", "MLP");
    out << line;
    auto cell = [](const std::optional<EvalReport>& r, auto get) {
        if (!r) return std::string("-");
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.2f%%", 100.0 * get(*r));
        return std::string(buf);
    };
    for (int c = 0; c < kAcrClassCount; ++c) {
        std::snprintf(line, sizeof line, "%-8s %10s %10s\n",
                      to_string(static_cast<AcrLabel>(c)).c_str(),
                      cell(report.knn, [c](const EvalReport& r) { return r.per_class[c]; }).c_str(),
                      cell(report.mlp, [c](const EvalReport& r) { return r.per_class[c]; }).c_str());
        out << line;
    }
    std::snprintf(line, sizeof line, "%-8s %10s %10s\n", "overall",
                  cell(report.knn, [](const EvalReport& r) { return r.overall; }).c_str(),
                  cell(report.mlp, [](const EvalReport& r) { return r.overall; }).c_str());
    out << line;

    auto confusion_block = [&out](const char* name, const EvalReport& r) {
        out << "\nconfusion (" << name << "), rows = truth, columns = predicted\n";
        char buf[160];
        std::string header = "        ";
        for (int c = 0; c < kAcrClassCount; ++c) {
            std::snprintf(buf, sizeof buf, "%8s", to_string(static_cast<AcrLabel>(c)).c_str());
            header += buf;
        }
        out << header << "\n";
        for (int t = 0; t < kAcrClassCount; ++t) {
            std::snprintf(buf, sizeof buf, "%-8s", to_string(static_cast<AcrLabel>(t)).c_str());
            out << buf;
            for (int p = 0; p < kAcrClassCount; ++p) {
                std::snprintf(buf, sizeof buf, "%8d", r.confusion[t][p]);
                out << buf;
            }
            out << "\n";
        }
    };
    if (report.knn) confusion_block("KNN", *report.knn);
    if (report.mlp) confusion_block("MLP", *report.mlp);

    out << "\nresolved config\n---------------\n" << config.echo();
    return out.str();
}

inline std::string render_report_csv(const AccuracyReport& report) {
    using detail::fmt_g12;
    std::ostringstream out;
    out << "class,knn_accuracy,mlp_accuracy\n";
    auto cell = [](const std::optional<EvalReport>& r, auto get) {
        return r ? detail::fmt_g12(get(*r)) : std::string();
    };
    for (int c = 0; c < kAcrClassCount; ++c)
        out << to_string(static_cast<AcrLabel>(c)) << ","
            << cell(report.knn, [c](const EvalReport& r) { return r.per_class[c]; }) << ","
            << cell(report.mlp, [c](const EvalReport& r) { return r.per_class[c]; }) << "\n";
    out << "overall," << cell(report.knn, [](const EvalReport& r) { return r.overall; }) << ","
        << cell(report.mlp, [](const EvalReport& r) { return r.overall; }) << "\n";
    return out.str();
}

inline std::string render_confusion_csv(const EvalReport& report) {
    std::ostringstream out;
    out << "truth";
    for (int c = 0; c < kAcrClassCount; ++c) out << ",pred_" << to_string(static_cast<AcrLabel>(c));
    out << "\n";
    for (int t = 0; t < kAcrClassCount; ++t) {
        out << to_string(static_cast<AcrLabel>(t));
        for (int p = 0; p < kAcrClassCount; ++p) out << "," << report.confusion[t][p];
        out << "\n";
    }
    return out.str();
}

namespace detail {

inline void write_text_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw io_error("cannot write '" + path.string() + "'");
    out << content;
}

inline void save_knn_training(const TrainedModels& models, const std::filesystem::path& path) {
    std::ostringstream out;
    out << "mammoseg-model 1\n";
    out << "knn k " << models.knn_k << "\n";
    out << "samples " << models.training.samples().size() << "\n";
    for (const auto& s : models.training.samples()) {
        const auto a = s.features.to_array();
        for (double v : a) out << fmt_g17(v) << " ";
        out << to_string(s.label) << "\n";
    }
    out << "normalization\n";
    for (int i = 0; i < 6; ++i)
        out << fmt_g17(models.training.feature_min()[i]) << (i == 5 ? "\n" : " ");
    for (int i = 0; i < 6; ++i)
        out << fmt_g17(models.training.feature_max()[i]) << (i == 5 ? "\n" : " ");
    write_text_file(path, out.str());
}

}  // namespace detail

/// End-to-end run over a manifest: per-image artifacts, features CSV, model
/// files, and the accuracy report.  Identical config, manifest, and seed
/// produce bitwise-identical artifacts.
inline AccuracyReport run_all(const PipelineConfig& config, const DatasetManifest& manifest) {
    namespace fs = std::filesystem;
    config.validate();
    const fs::path dir(config.output_dir);
    fs::create_directories(dir);

    const std::vector<ImageOutcome> outcomes = process_manifest(config, manifest);
    for (std::size_t i = 0; i < outcomes.size(); ++i) {
        const GrayImage original = read_pgm(manifest.entries[i].path);
        write_image_artifacts(config, outcomes[i], original);
    }

    std::vector<std::string> feature_rows;
    TrainedModels models;
    const AccuracyReport report =
        run_evaluate(config, manifest, &feature_rows, &models, &outcomes);

    std::ostringstream csv;
    csv << kFeaturesCsvHeader << "\n";
    for (const std::string& row : feature_rows) csv << row << "\n";
    detail::write_text_file(dir / "features.csv", csv.str());

    if (config.classifier != ClassifierChoice::Mlp)
        detail::save_knn_training(models, dir / "model_knn.txt");
    if (models.mlp) {
        std::ostringstream mlp_text;
        save_mlp(*models.mlp, mlp_text);
        detail::write_text_file(dir / "model_mlp.txt", mlp_text.str());
    }

    detail::write_text_file(dir / "report.txt", render_report_text(config, report));
    detail::write_text_file(dir / "report.csv", render_report_csv(report));
    if (report.knn) detail::write_text_file(dir / "confusion_knn.csv", render_confusion_csv(*report.knn));
    if (report.mlp) detail::write_text_file(dir / "confusion_mlp.csv", render_confusion_csv(*report.mlp));
    return report;
}

}  // namespace mseg

#endif  // MSEG_PIPELINE_HPP
