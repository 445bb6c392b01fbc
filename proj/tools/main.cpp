#include <exception>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "votestack/commands.hpp"

namespace {

// Exit codes: 0 success, 1 validation/input error, 2 runtime/training error.
constexpr int kExitValidation = 1;
constexpr int kExitRuntime = 2;

int classify_exit(const std::exception& err) {
    if (dynamic_cast<const votestack::ValidationError*>(&err) ||
        dynamic_cast<const votestack::FormatError*>(&err) ||
        dynamic_cast<const votestack::ArgumentError*>(&err) ||
        dynamic_cast<const votestack::EmptyDatasetError*>(&err) ||
        dynamic_cast<const votestack::RecordError*>(&err) ||
        dynamic_cast<const votestack::StratificationError*>(&err) ||
        dynamic_cast<const votestack::IoError*>(&err)) {
        return kExitValidation;
    }
    return kExitRuntime;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"votestack: voting ensembles of CNN/LSTM/BiLSTM/GRU text classifiers"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_override;
    bool no_stratify = false;
    app.add_option("-c,--config", config_path, "run config JSON")->required();
    app.add_option("-o,--out", out_override, "output directory (overrides the config)");
    app.add_flag("--no-stratify", no_stratify, "disable stratified splits and folds");

    auto* preprocess = app.add_subcommand("preprocess", "normalize + tokenize the dataset");
    auto* train = app.add_subcommand("train", "train every configured model");
    auto* predict = app.add_subcommand("predict", "predict one split with a trained model");
    std::string model_path, split_name = "test";
    predict->add_option("-m,--model", model_path, "trained model file (.vsm)")->required();
    predict->add_option("-s,--split", split_name, "split to predict (train/validation/test)");
    auto* ensemble = app.add_subcommand("ensemble", "priority-voting ensemble on the test split");
    std::string models_dir;
    ensemble->add_option("--models-dir", models_dir,
                         "directory holding <id>.vsm files (default: output dir)");
    auto* kfold = app.add_subcommand("kfold", "k-fold cross-validation of one model");
    std::string kfold_model;
    kfold->add_option("-m,--model", kfold_model, "model spec id (default: first configured)");
    auto* evaluate = app.add_subcommand("evaluate", "score a predictions file against gold labels");
    std::string predictions_path;
    evaluate->add_option("-p,--predictions", predictions_path, "predictions TSV")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& err) {
        int code = app.exit(err);
        return code == 0 ? 0 : kExitValidation;
    }

    try {
        votestack::RunConfig cfg = votestack::RunConfig::from_json_file(config_path);
        if (no_stratify) cfg.stratify = false;
        cfg.validate();
        const std::string out_dir = out_override.empty() ? cfg.output_dir : out_override;

        if (preprocess->parsed()) {
            votestack::cmd_preprocess(cfg, out_dir);
        } else if (train->parsed()) {
            votestack::cmd_train(cfg, out_dir);
        } else if (predict->parsed()) {
            votestack::cmd_predict(cfg, model_path, split_name, out_dir);
        } else if (ensemble->parsed()) {
            votestack::cmd_ensemble(cfg, models_dir.empty() ? out_dir : models_dir, out_dir);
        } else if (kfold->parsed()) {
            votestack::cmd_kfold(cfg, kfold_model, out_dir);
        } else if (evaluate->parsed()) {
            votestack::cmd_evaluate(cfg, predictions_path, out_dir);
        }
        return 0;
    } catch (const votestack::ValidationError& err) {
        std::cerr << "error: " << err.what() << "\n";
        return kExitValidation;
    } catch (const std::exception& err) {
        std::cerr << "error: " << err.what() << "\n";
        return classify_exit(err);
    }
}
