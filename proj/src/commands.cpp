#include "votestack/commands.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <set>

#include "votestack/json_io.hpp"

namespace votestack {

namespace {

namespace fs = std::filesystem;

std::string now_iso8601() {
    auto now = std::chrono::system_clock::now();
    std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory " + dir + ": " + ec.message());
}

std::string join_path(const std::string& dir, const std::string& name) {
    return (fs::path(dir) / name).string();
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

std::vector<std::string> preprocess_tokens(const std::string& text, const RunConfig& cfg,
                                           const NormalizationDictionary& dict,
                                           const std::optional<CompoundLexicon>& lexicon) {
    std::string normalized = normalize_text(text, cfg.preprocess);
    std::vector<std::string> tokens = tokenize(normalized);
    if (cfg.preprocess.apply_dictionary && !dict.empty()) {
        tokens = apply_dictionary(tokens, dict);
    }
    if (lexicon && !lexicon->empty()) {
        // Re-segment after dictionary expansion so expanded words can join
        // into the compounds the embedding vocabulary knows.
        std::string joined;
        for (std::size_t i = 0; i < tokens.size(); ++i) {
            if (i) joined += ' ';
            joined += tokens[i];
        }
        tokens = tokenize(joined, *lexicon);
    }
    return tokens;
}

std::uint64_t model_seed(const RunConfig& cfg, const std::string& model_id) {
    return fnv1a64(model_id, cfg.train.seed ^ kFnvOffset);
}

nlohmann::json split_summary(const Pipeline& pipeline, const RunConfig& cfg) {
    auto per_class = [&](const std::vector<int>& ids) {
        nlohmann::json counts = nlohmann::json::object();
        for (int c = 0; c < pipeline.dataset.label_space.size(); ++c) {
            counts[pipeline.dataset.label_space.name(c)] = 0;
        }
        for (int id : ids) {
            const auto& name = pipeline.dataset.label_space.name(
                pipeline.dataset.examples[static_cast<std::size_t>(id)].label);
            counts[name] = counts[name].get<int>() + 1;
        }
        return counts;
    };
    return {{"seed", cfg.seed},
            {"ratios", {cfg.split_ratios.train, cfg.split_ratios.validation, cfg.split_ratios.test}},
            {"stratify", cfg.stratify},
            {"sizes",
             {{"train", pipeline.split.train.size()},
              {"validation", pipeline.split.validation.size()},
              {"test", pipeline.split.test.size()}}},
            {"per_class",
             {{"train", per_class(pipeline.split.train)},
              {"validation", per_class(pipeline.split.validation)},
              {"test", per_class(pipeline.split.test)}}}};
}

// Loads every ensemble member: trained model containers from models_dir,
// external predictions from their configured files. External files must
// cover the validation and test slices (priority derivation needs
// validation predictions, voting needs test predictions).
std::vector<TrainedClassifier> load_members(const RunConfig& cfg, const Pipeline& pipeline,
                                            const std::string& models_dir) {
    std::vector<int> external_ids = pipeline.split.validation;
    external_ids.insert(external_ids.end(), pipeline.split.test.begin(),
                        pipeline.split.test.end());
    std::sort(external_ids.begin(), external_ids.end());

    std::vector<TrainedClassifier> members;
    for (const std::string& id : cfg.ensemble.members) {
        auto ext = cfg.ensemble.external_files.find(id);
        if (ext != cfg.ensemble.external_files.end()) {
            members.push_back(load_external_predictions(ext->second,
                                                        pipeline.dataset.label_space,
                                                        external_ids, id));
            continue;
        }
        TrainedClassifier model = deserialize_model(join_path(models_dir, id + ".vsm"));
        if (!(model.label_space == pipeline.dataset.label_space)) {
            throw ContractError("ensemble member \"" + id +
                                "\" was trained under a different label space");
        }
        members.push_back(std::move(model));
    }
    return members;
}

}  // namespace

EncodedDataset Pipeline::encode(const std::vector<int>& ids) const {
    EncodedDataset out;
    out.ids = ids;
    out.fingerprint = fingerprint;
    out.sequences.reserve(ids.size());
    out.labels.reserve(ids.size());
    for (int id : ids) {
        out.sequences.push_back(
            encode_sequence(tokens[static_cast<std::size_t>(id)], table, max_len));
        out.labels.push_back(dataset.examples[static_cast<std::size_t>(id)].label);
    }
    return out;
}

const std::vector<int>& Pipeline::slice_ids(const std::string& split_name) const {
    if (split_name == "train") return split.train;
    if (split_name == "validation") return split.validation;
    if (split_name == "test") return split.test;
    throw ArgumentError("unknown split \"" + split_name +
                        "\" (expected train, validation or test)");
}

Pipeline build_pipeline(const RunConfig& cfg) {
    Pipeline p;
    p.dataset = load_dataset(cfg.dataset_path, cfg.dataset_format);
    if (cfg.dictionary_path) p.dictionary = NormalizationDictionary::load(*cfg.dictionary_path);
    if (cfg.lexicon_path) p.lexicon = CompoundLexicon::load(*cfg.lexicon_path);
    p.table = load_embeddings<float>(cfg.embedding_path);

    p.tokens.reserve(p.dataset.examples.size());
    for (const auto& ex : p.dataset.examples) {
        p.tokens.push_back(preprocess_tokens(ex.text, cfg, p.dictionary, p.lexicon));
    }

    p.split = stratified_split_indices(p.dataset.label_vector(), p.dataset.label_space,
                                       cfg.split_ratios, cfg.seed, cfg.stratify);

    if (cfg.max_len > 0) {
        p.max_len = cfg.max_len;
    } else {
        std::vector<std::vector<std::string>> train_tokens;
        train_tokens.reserve(p.split.train.size());
        for (int id : p.split.train) train_tokens.push_back(p.tokens[static_cast<std::size_t>(id)]);
        p.max_len = suggest_max_len(train_tokens, cfg.max_len_percentile);
    }

    p.fingerprint.preprocess = cfg.preprocess;
    // A dictionary that is configured but not applied leaves the tokens (and
    // therefore the pipeline identity) unchanged.
    p.fingerprint.dictionary_hash = cfg.dictionary_path && cfg.preprocess.apply_dictionary
                                        ? p.dictionary.content_hash()
                                        : "none";
    p.fingerprint.embedding_hash = p.table.file_hash;
    p.fingerprint.max_len = p.max_len;
    return p;
}

void write_predictions(const std::string& path, const std::string& config_hash,
                       const std::vector<int>& ids, const std::vector<Prediction>& predictions,
                       const LabelSpace& labels) {
    if (ids.size() != predictions.size()) {
        throw ArgumentError("write_predictions: id/prediction count mismatch");
    }
    std::string out = "# config_hash: " + config_hash + "\n";
    for (std::size_t i = 0; i < ids.size(); ++i) {
        out += std::to_string(ids[i]);
        out += '\t';
        out += labels.name(predictions[i].label);
        if (!predictions[i].probs.empty()) {
            out += '\t';
            for (std::size_t c = 0; c < predictions[i].probs.size(); ++c) {
                if (c) out += ' ';
                out += format_double(predictions[i].probs[c]);
            }
        }
        out += '\n';
    }
    write_file(path, out);
}

PredictionsFile read_predictions(const std::string& path) {
    std::string content = read_file(path);
    PredictionsFile out;
    std::size_t pos = 0;
    long line_no = 0;
    while (pos < content.size()) {
        std::size_t end = content.find('\n', pos);
        if (end == std::string::npos) end = content.size();
        std::string line = content.substr(pos, end - pos);
        pos = end + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line[0] == '#') {
            const std::string tag = "# config_hash: ";
            if (line.rfind(tag, 0) == 0) out.config_hash = line.substr(tag.size());
            continue;
        }
        std::size_t tab1 = line.find('\t');
        if (tab1 == std::string::npos) {
            throw FormatError(path + ": line " + std::to_string(line_no) +
                              ": expected `id<TAB>label`");
        }
        std::size_t tab2 = line.find('\t', tab1 + 1);
        std::string id_field = line.substr(0, tab1);
        std::string label = tab2 == std::string::npos
                                ? line.substr(tab1 + 1)
                                : line.substr(tab1 + 1, tab2 - tab1 - 1);
        int id = 0;
        auto [ptr, ec] = std::from_chars(id_field.data(), id_field.data() + id_field.size(), id);
        if (ec != std::errc() || ptr != id_field.data() + id_field.size()) {
            throw FormatError(path + ": line " + std::to_string(line_no) + ": unparsable id");
        }
        out.ids.push_back(id);
        out.labels.push_back(label);
    }
    return out;
}

void cmd_preprocess(const RunConfig& cfg, const std::string& out_dir) {
    Pipeline p = build_pipeline(cfg);
    ensure_dir(out_dir);

    int dropped = 0;
    std::string body;
    for (const auto& ex : p.dataset.examples) {
        const auto& tokens = p.tokens[static_cast<std::size_t>(ex.id)];
        if (tokens.empty()) {
            ++dropped;
            continue;
        }
        std::string joined;
        for (std::size_t i = 0; i < tokens.size(); ++i) {
            if (i) joined += ' ';
            joined += tokens[i];
        }
        body += joined;
        body += '\t';
        body += p.dataset.label_space.name(ex.label);
        body += '\n';
    }
    std::string out = "# config_hash: " + cfg.config_hash() + "\n";
    if (dropped > 0) out += "# dropped_empty: " + std::to_string(dropped) + "\n";
    out += "text\tlabel\n" + body;
    const std::string path = join_path(out_dir, "preprocessed.tsv");
    write_file(path, out);
    std::cout << "wrote " << path << " (" << p.dataset.size() - dropped << " rows, " << dropped
              << " dropped as empty after preprocessing)\n";
}

void cmd_train(const RunConfig& cfg, const std::string& out_dir) {
    if (cfg.models.empty()) {
        throw ValidationError({"models: at least one model spec is required for train"});
    }
    Pipeline p = build_pipeline(cfg);
    ensure_dir(out_dir);

    EncodedDataset train_data = p.encode(p.split.train);
    EncodedDataset validation_data = p.encode(p.split.validation);

    nlohmann::json manifest;
    manifest["created_at"] = now_iso8601();
    manifest["config"] = nlohmann::json::parse(cfg.to_json_text());
    manifest["config_hash"] = cfg.config_hash();
    manifest["fingerprint"] = fingerprint_to_json(p.fingerprint);
    manifest["max_len"] = p.max_len;
    manifest["split"] = split_summary(p, cfg);

    nlohmann::json models_out = nlohmann::json::object();
    for (const ModelSpec& spec : cfg.models) {
        TrainConfig train_cfg = cfg.train;
        train_cfg.seed = model_seed(cfg, spec.id);
        TrainedClassifier model = train_classifier(
            train_data.sequences, train_data.labels, validation_data.sequences,
            validation_data.labels, spec.config, train_cfg, p.table, p.dataset.label_space,
            p.fingerprint, spec.id);
        const std::string file = spec.id + ".vsm";
        serialize_model(model, join_path(out_dir, file));

        double best = 0;
        for (const auto& rec : model.history) best = std::max(best, rec.validation_metric);
        nlohmann::json hist = nlohmann::json::array();
        for (const auto& rec : model.history) {
            hist.push_back({{"epoch", rec.epoch},
                            {"train_loss", rec.train_loss},
                            {"validation_metric", rec.validation_metric}});
        }
        models_out[spec.id] = {{"file", file},
                               {"kind", model_kind_name(spec.kind())},
                               {"seed", train_cfg.seed},
                               {"epochs_run", model.history.size()},
                               {"best_validation_metric", best},
                               {"history", hist}};
        std::cout << "trained " << spec.id << " (" << model_kind_name(spec.kind()) << "): "
                  << model.history.size() << " epochs, best "
                  << metric_name(train_cfg.validation_metric) << " " << format_double(best)
                  << "\n";
    }
    manifest["models"] = models_out;
    const std::string manifest_path = join_path(out_dir, "manifest.json");
    write_file(manifest_path, manifest.dump(2) + "\n");
    std::cout << "wrote " << manifest_path << "\n";
}

void cmd_predict(const RunConfig& cfg, const std::string& model_path,
                 const std::string& split_name, const std::string& out_dir) {
    Pipeline p = build_pipeline(cfg);
    ensure_dir(out_dir);
    TrainedClassifier model = deserialize_model(model_path);
    EncodedDataset data = p.encode(p.slice_ids(split_name));
    std::vector<Prediction> preds = predict(model, data, p.table);
    const std::string path = join_path(out_dir, "predictions.tsv");
    write_predictions(path, cfg.config_hash(), data.ids, preds, p.dataset.label_space);
    std::cout << "wrote " << path << " (" << preds.size() << " predictions, split " << split_name
              << ")\n";
}

void cmd_ensemble(const RunConfig& cfg, const std::string& models_dir, const std::string& out_dir) {
    if (cfg.ensemble.members.size() < 2) {
        throw ArgumentError("ensemble requires at least 2 members, got " +
                            std::to_string(cfg.ensemble.members.size()));
    }
    Pipeline p = build_pipeline(cfg);
    ensure_dir(out_dir);

    std::vector<TrainedClassifier> members = load_members(cfg, p, models_dir);
    std::vector<const TrainedClassifier*> member_ptrs;
    for (const auto& m : members) member_ptrs.push_back(&m);

    EncodedDataset validation_data = p.encode(p.split.validation);
    EncodedDataset test_data = p.encode(p.split.test);

    EnsembleConfig ensemble_cfg = derive_priority(member_ptrs, validation_data, p.table, cfg.metric);
    EnsembleResult result = ensemble_predict(member_ptrs, test_data, ensemble_cfg, p.table);

    // Report: each member on the test slice + the ensemble.
    std::vector<std::pair<std::string, MetricsReport>> rows;
    for (const TrainedClassifier* member : member_ptrs) {
        std::vector<Prediction> preds = predict(*member, test_data, p.table);
        std::vector<int> labels;
        for (const auto& pr : preds) labels.push_back(pr.label);
        rows.emplace_back(member->id,
                          f1_report(confusion_matrix(test_data.labels, labels, p.dataset.label_space)));
    }
    MetricsReport ensemble_report =
        f1_report(confusion_matrix(test_data.labels, result.labels, p.dataset.label_space));
    rows.emplace_back("ensemble", ensemble_report);

    // Ensemble predictions carry vote shares as their probability column.
    std::vector<Prediction> ensemble_preds;
    const auto m = static_cast<double>(ensemble_cfg.members.size());
    for (const VoteRecord& rec : result.records) {
        Prediction pr;
        pr.label = rec.chosen;
        pr.probs.assign(static_cast<std::size_t>(p.dataset.label_space.size()), 0.0);
        for (const auto& [label, count] : rec.tally) {
            pr.probs[static_cast<std::size_t>(label)] = count / m;
        }
        ensemble_preds.push_back(std::move(pr));
    }

    const std::string hash = cfg.config_hash();
    const std::string pred_path = join_path(out_dir, "predictions.tsv");
    write_predictions(pred_path, hash, test_data.ids, ensemble_preds, p.dataset.label_space);

    // First audit line identifies the run; vote records follow one per line.
    std::string audit = "{\"config_hash\":\"" + hash + "\"}\n";
    for (const VoteRecord& rec : result.records) {
        audit += vote_record_to_jsonl(rec, ensemble_cfg, p.dataset.label_space);
        audit += '\n';
    }
    const std::string audit_path = join_path(out_dir, "audit.jsonl");
    write_file(audit_path, audit);

    nlohmann::json ens_json = nlohmann::json::parse(ensemble_cfg.to_json(p.dataset.label_space));
    ens_json["config_hash"] = hash;
    const std::string ens_cfg_path = join_path(out_dir, "ensemble_config.json");
    write_file(ens_cfg_path, ens_json.dump(2) + "\n");

    nlohmann::json report_json;
    report_json["config_hash"] = hash;
    report_json["metric"] = metric_name(cfg.metric);
    report_json["priority"] = ensemble_cfg.members;
    for (const auto& [name, report] : rows) {
        report_json["reports"][name] = nlohmann::json::parse(report_to_json(report));
    }
    const std::string report_path = join_path(out_dir, "report.json");
    write_file(report_path, report_json.dump(2) + "\n");
    const std::string table = format_report_table(rows);
    write_file(join_path(out_dir, "report.txt"), "# config_hash: " + hash + "\n" + table);

    std::cout << "priority order:";
    for (const auto& id : ensemble_cfg.members) std::cout << ' ' << id;
    std::cout << "\n" << table;
    std::cout << "ensemble " << metric_name(cfg.metric) << ": "
              << format_double(metric_value(ensemble_report, cfg.metric)) << "\n";
    std::cout << "wrote " << pred_path << ", " << audit_path << ", " << report_path << "\n";
}

void cmd_kfold(const RunConfig& cfg, const std::string& model_id, const std::string& out_dir) {
    if (cfg.models.empty()) {
        throw ValidationError({"models: at least one model spec is required for kfold"});
    }
    const ModelSpec* spec = nullptr;
    if (model_id.empty()) {
        spec = &cfg.models.front();
    } else {
        for (const auto& s : cfg.models) {
            if (s.id == model_id) spec = &s;
        }
        if (!spec) throw ArgumentError("kfold: no model spec with id \"" + model_id + "\"");
    }

    Pipeline p = build_pipeline(cfg);
    ensure_dir(out_dir);

    std::vector<int> all_ids(p.dataset.examples.size());
    for (std::size_t i = 0; i < all_ids.size(); ++i) all_ids[i] = static_cast<int>(i);
    EncodedDataset data = p.encode(all_ids);

    FitFn fit = [&](const std::vector<EncodedSequence>& train_x, const std::vector<int>& train_y,
                    const std::vector<EncodedSequence>& val_x, const std::vector<int>& val_y,
                    std::uint64_t fold_seed) -> PredictFn {
        TrainConfig train_cfg = cfg.train;
        train_cfg.seed = fold_seed;
        TrainedClassifier model =
            train_classifier(train_x, train_y, val_x, val_y, spec->config, train_cfg, p.table,
                             p.dataset.label_space, p.fingerprint, spec->id);
        return [model = std::move(model), &p](const std::vector<EncodedSequence>& xs) {
            std::vector<int> out;
            out.reserve(xs.size());
            for (const auto& seq : xs) {
                std::vector<double> probs = predict_probs(model, seq, p.table);
                int best = 0;
                for (std::size_t c = 1; c < probs.size(); ++c) {
                    if (probs[c] > probs[static_cast<std::size_t>(best)]) best = static_cast<int>(c);
                }
                out.push_back(best);
            }
            return out;
        };
    };

    CrossValidation cv = crossvalidate(data.sequences, data.labels, p.dataset.label_space,
                                       cfg.kfold_k, cfg.seed, cfg.metric, fit, cfg.stratify);

    nlohmann::json j;
    j["config_hash"] = cfg.config_hash();
    j["model"] = spec->id;
    j["k"] = cfg.kfold_k;
    j["metric"] = metric_name(cfg.metric);
    j["fold_scores"] = cv.fold_scores;
    j["mean"] = cv.mean;
    j["stddev"] = cv.stddev;
    const std::string path = join_path(out_dir, "kfold.json");
    write_file(path, j.dump(2) + "\n");

    std::cout << "model " << spec->id << ", " << cfg.kfold_k << "-fold "
              << metric_name(cfg.metric) << "\n";
    for (std::size_t f = 0; f < cv.fold_scores.size(); ++f) {
        std::cout << "  fold " << f << ": " << format_double(cv.fold_scores[f]) << "\n";
    }
    std::cout << "  mean " << format_double(cv.mean) << " +/- " << format_double(cv.stddev)
              << "\n";
    std::cout << "wrote " << path << "\n";
}

void cmd_evaluate(const RunConfig& cfg, const std::string& predictions_path,
                  const std::string& out_dir) {
    Pipeline p = build_pipeline(cfg);
    ensure_dir(out_dir);
    PredictionsFile preds = read_predictions(predictions_path);
    if (!preds.config_hash.empty() && preds.config_hash != cfg.config_hash()) {
        throw ContractError("predictions file " + predictions_path + " was produced under config " +
                            preds.config_hash + " but this config hashes to " + cfg.config_hash());
    }

    std::vector<int> gold, predicted;
    for (std::size_t i = 0; i < preds.ids.size(); ++i) {
        int id = preds.ids[i];
        if (id < 0 || id >= p.dataset.size()) {
            throw CoverageError(predictions_path + ": id " + std::to_string(id) +
                                " is outside the dataset");
        }
        int label = p.dataset.label_space.index_of(preds.labels[i]);
        if (label < 0) {
            throw FormatError(predictions_path + ": unknown label \"" + preds.labels[i] + "\"");
        }
        gold.push_back(p.dataset.examples[static_cast<std::size_t>(id)].label);
        predicted.push_back(label);
    }
    MetricsReport report = f1_report(confusion_matrix(gold, predicted, p.dataset.label_space));

    nlohmann::json out_json = nlohmann::json::parse(report_to_json(report));
    out_json["config_hash"] = cfg.config_hash();
    const std::string report_path = join_path(out_dir, "evaluation.json");
    write_file(report_path, out_json.dump(2) + "\n");
    std::cout << format_report_table({{"predictions", report}});
    std::cout << metric_name(cfg.metric) << ": " << format_double(metric_value(report, cfg.metric))
              << "\n";
    std::cout << "wrote " << report_path << "\n";
}

}  // namespace votestack
