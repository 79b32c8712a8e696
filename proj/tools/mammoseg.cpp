// mammoseg: breast extraction, level-set calcification detection, GLCM
// features, and ACR classification over portable graymaps.

#include <cstdio>
#include <exception>
#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "mseg/phantom.hpp"
#include "mseg/pipeline.hpp"

namespace fs = std::filesystem;

namespace {

struct CommonArgs {
    std::string config_path;
    std::string input_path;
    std::string manifest_path;
    std::string out_dir;
};

mseg::PipelineConfig resolve_config(const CommonArgs& args) {
    mseg::PipelineConfig config =
        args.config_path.empty() ? mseg::PipelineConfig{} : mseg::PipelineConfig::load(args.config_path);
    if (!args.out_dir.empty()) config.output_dir = args.out_dir;
    config.validate();
    return config;
}

void add_common(CLI::App* cmd, CommonArgs& args, bool with_input, bool with_manifest) {
    cmd->add_option("--config", args.config_path, "pipeline config file (key = value lines)")
        ->check(CLI::ExistingFile);
    if (with_input)
        cmd->add_option("--input", args.input_path, "input PGM image")->check(CLI::ExistingFile);
    if (with_manifest)
        cmd->add_option("--manifest", args.manifest_path, "dataset manifest CSV")
            ->check(CLI::ExistingFile);
    cmd->add_option("--out", args.out_dir, "output directory (overrides config)");
}

std::string require(const std::string& value, const char* what) {
    if (value.empty()) throw mseg::config_error(std::string("missing required option --") + what);
    return value;
}

void print_features(const mseg::FeatureVector& f) {
    std::printf("  moy         %.6f\n", f.moy);
    std::printf("  variance    %.6f\n", f.variance);
    std::printf("  energy      %.6f\n", f.energy);
    std::printf("  contrast    %.6f\n", f.contrast);
    std::printf("  entropy     %.6f\n", f.entropy);
    std::printf("  homogeneity %.6f\n", f.homogeneity);
}

int cmd_extract(const CommonArgs& args) {
    const auto config = resolve_config(args);
    const auto img = mseg::read_pgm(require(args.input_path, "input"));
    const auto outcome_id = fs::path(args.input_path).stem().string();

    const mseg::ExtractResult result = mseg::run_extract(config, img);
    fs::create_directories(config.output_dir);
    const fs::path dir(config.output_dir);
    mseg::write_pgm(result.region.masked_image, (dir / (outcome_id + "_breast.pgm")).string());
    const auto boundary = mseg::detail::mask_boundary(result.region.mask);
    mseg::write_ppm(mseg::render_overlay(img, boundary),
                    (dir / (outcome_id + "_extract.ppm")).string());

    std::printf("extract: %s\n", args.input_path.c_str());
    std::printf("  orientation  %s\n",
                result.orientation == mseg::Orientation::LeftToRight ? "left-to-right"
                                                                     : "right-to-left");
    std::printf("  threshold    %d\n", result.threshold);
    std::printf("  breast area  %zu px\n", result.region.mask.count());
    if (result.separation_skipped) std::printf("  warning: separation skipped (strip had no background)\n");
    std::printf("  wrote %s_breast.pgm, %s_extract.ppm in %s\n", outcome_id.c_str(),
                outcome_id.c_str(), config.output_dir.c_str());
    return 0;
}

int cmd_detect(const CommonArgs& args) {
    const auto config = resolve_config(args);
    const auto img = mseg::read_pgm(require(args.input_path, "input"));
    const auto outcome_id = fs::path(args.input_path).stem().string();

    const mseg::ExtractResult extract = mseg::run_extract(config, img);
    const mseg::DetectResult detect = mseg::run_detect(config, extract.region);

    fs::create_directories(config.output_dir);
    const mseg::RoiBox& b = detect.box;
    mseg::write_ppm(mseg::render_overlay(img, detect.regions.contour,
                                         mseg::OverlayBox{b.x_min, b.y_min, b.x_max, b.y_max}),
                    (fs::path(config.output_dir) / (outcome_id + "_roi.ppm")).string());

    std::printf("detect: %s\n", args.input_path.c_str());
    std::printf("  regions     %d\n", detect.regions.regions.label_count);
    std::printf("  iterations  %d%s\n", detect.regions.iterations,
                detect.regions.converged ? " (converged)" : " (iteration cap)");
    if (detect.regions.degenerate) std::printf("  warning: degenerate detection\n");
    std::printf("  roi box     p1=(%d,%d) p2=(%d,%d)\n", b.p1().x, b.p1().y, b.p2().x, b.p2().y);
    std::printf("  wrote %s_roi.ppm in %s\n", outcome_id.c_str(), config.output_dir.c_str());
    return 0;
}

int cmd_features(const CommonArgs& args) {
    const auto config = resolve_config(args);
    const auto outcome = mseg::process_image(config, require(args.input_path, "input"));

    fs::create_directories(config.output_dir);
    const fs::path csv_path = fs::path(config.output_dir) / "features.csv";
    const bool fresh = !fs::exists(csv_path);
    std::ofstream csv(csv_path, std::ios::app);
    if (!csv) throw mseg::io_error("cannot write '" + csv_path.string() + "'");
    if (fresh) csv << mseg::kFeaturesCsvHeader << "\n";
    csv << mseg::features_csv_row(outcome.id, outcome.detect.box, outcome.features, std::nullopt)
        << "\n";

    std::printf("features: %s\n", args.input_path.c_str());
    print_features(outcome.features);
    std::printf("  appended to %s\n", csv_path.string().c_str());
    return 0;
}

int cmd_train(const CommonArgs& args) {
    const auto config = resolve_config(args);
    const auto manifest = mseg::DatasetManifest::load(require(args.manifest_path, "manifest"));

    std::vector<std::string> rows;
    const mseg::TrainedModels models = mseg::run_train(config, manifest, &rows);

    fs::create_directories(config.output_dir);
    const fs::path dir(config.output_dir);
    std::ostringstream csv;
    csv << mseg::kFeaturesCsvHeader << "\n";
    for (const auto& row : rows) csv << row << "\n";
    mseg::detail::write_text_file(dir / "features.csv", csv.str());
    if (config.classifier != mseg::ClassifierChoice::Mlp)
        mseg::detail::save_knn_training(models, dir / "model_knn.txt");
    if (models.mlp) mseg::save_mlp(*models.mlp, (dir / "model_mlp.txt").string());

    std::printf("train: %zu images, wrote features.csv and model files in %s\n",
                manifest.count_split(true), config.output_dir.c_str());
    return 0;
}

int cmd_evaluate(const CommonArgs& args, bool full_run) {
    const auto config = resolve_config(args);
    const auto manifest = mseg::DatasetManifest::load(require(args.manifest_path, "manifest"));

    mseg::AccuracyReport report;
    if (full_run) {
        report = mseg::run_all(config, manifest);
    } else {
        report = mseg::run_evaluate(config, manifest);
        fs::create_directories(config.output_dir);
        const fs::path dir(config.output_dir);
        mseg::detail::write_text_file(dir / "report.txt",
                                      mseg::render_report_text(config, report));
        mseg::detail::write_text_file(dir / "report.csv", mseg::render_report_csv(report));
        if (report.knn)
            mseg::detail::write_text_file(dir / "confusion_knn.csv",
                                          mseg::render_confusion_csv(*report.knn));
        if (report.mlp)
            mseg::detail::write_text_file(dir / "confusion_mlp.csv",
                                          mseg::render_confusion_csv(*report.mlp));
    }
    std::cout << mseg::render_report_text(config, report);
    return 0;
}

int cmd_synth(const CommonArgs& args, const mseg::SynthOptions& options) {
    const std::string dir = args.out_dir.empty() ? "synthetic" : args.out_dir;
    const std::string manifest = mseg::generate_synthetic_dataset(dir, options);
    std::printf("synth: wrote %d train + %d test images per class\n", options.train_per_class,
                options.test_per_class);
    std::printf("  manifest: %s\n", manifest.c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"mammographic calcification detection and ACR classification"};
    app.require_subcommand(1);

    CommonArgs args;
    mseg::SynthOptions synth_options;

    auto* extract = app.add_subcommand("extract", "isolate the breast region");
    add_common(extract, args, true, false);
    auto* detect = app.add_subcommand("detect", "level-set calcification detection + ROI");
    add_common(detect, args, true, false);
    auto* features = app.add_subcommand("features", "GLCM texture features of the ROI");
    add_common(features, args, true, false);
    auto* train = app.add_subcommand("train", "fit classifiers on the manifest train split");
    add_common(train, args, false, true);
    auto* evaluate = app.add_subcommand("evaluate", "train + score the manifest test split");
    add_common(evaluate, args, false, true);
    auto* run_all = app.add_subcommand("run-all", "full pipeline with all artifacts");
    add_common(run_all, args, false, true);
    auto* synth = app.add_subcommand("synth", "generate the synthetic phantom dataset");
    synth->add_option("--out", args.out_dir, "dataset directory");
    synth->add_option("--train-per-class", synth_options.train_per_class, "train images per class");
    synth->add_option("--test-per-class", synth_options.test_per_class, "test images per class");
    synth->add_option("--size", synth_options.size, "image side length");
    synth->add_option("--seed", synth_options.seed, "generator seed");

    CLI11_PARSE(app, argc, argv);

    try {
        if (extract->parsed()) return cmd_extract(args);
        if (detect->parsed()) return cmd_detect(args);
        if (features->parsed()) return cmd_features(args);
        if (train->parsed()) return cmd_train(args);
        if (evaluate->parsed()) return cmd_evaluate(args, false);
        if (run_all->parsed()) return cmd_evaluate(args, true);
        if (synth->parsed()) return cmd_synth(args, synth_options);
    } catch (const std::exception& e) {
        std::cerr << "mammoseg: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
