#include "votestack/run_config.hpp"

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <filesystem>

#include "votestack/json_io.hpp"

namespace votestack {

namespace {

nlohmann::json config_to_json(const RunConfig& cfg) {
    nlohmann::json j;
    j["dataset"] = {{"path", cfg.dataset_path},
                    {"format", cfg.dataset_format == DatasetFormat::Tsv ? "tsv" : "jsonl"}};
    j["preprocess"] = preprocess_to_json(cfg.preprocess);
    if (cfg.dictionary_path) j["dictionary"] = *cfg.dictionary_path;
    if (cfg.lexicon_path) j["lexicon"] = *cfg.lexicon_path;
    j["embedding"] = cfg.embedding_path;
    j["max_len"] = cfg.max_len;
    j["max_len_percentile"] = cfg.max_len_percentile;
    j["split"] = {{"ratios", {cfg.split_ratios.train, cfg.split_ratios.validation,
                              cfg.split_ratios.test}},
                  {"stratify", cfg.stratify}};
    nlohmann::json models = nlohmann::json::array();
    for (const auto& spec : cfg.models) {
        nlohmann::json m = model_config_to_json(spec.config);
        m["id"] = spec.id;
        m["kind"] = model_kind_name(spec.kind());
        models.push_back(m);
    }
    j["models"] = models;
    j["train"] = train_config_to_json(cfg.train);
    nlohmann::json ens;
    ens["members"] = cfg.ensemble.members;
    if (!cfg.ensemble.external_files.empty()) {
        nlohmann::json ext = nlohmann::json::object();
        for (const auto& [id, path] : cfg.ensemble.external_files) ext[id] = path;
        ens["external"] = ext;
    }
    j["ensemble"] = ens;
    j["metric"] = metric_name(cfg.metric);
    j["kfold"] = {{"k", cfg.kfold_k}, {"stratify", cfg.stratify}};
    j["output_dir"] = cfg.output_dir;
    j["seed"] = cfg.seed;
    return j;
}

}  // namespace

RunConfig RunConfig::from_json_text(const std::string& text, const std::string& origin) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& err) {
        throw FormatError(origin + ": " + err.what());
    }

    RunConfig cfg;
    try {
        if (j.contains("dataset")) {
            cfg.dataset_path = j["dataset"].value("path", "");
            std::string format = j["dataset"].value("format", "tsv");
            if (format == "tsv") {
                cfg.dataset_format = DatasetFormat::Tsv;
            } else if (format == "jsonl") {
                cfg.dataset_format = DatasetFormat::Jsonl;
            } else {
                throw FormatError(origin + ": dataset.format must be \"tsv\" or \"jsonl\"");
            }
        }
        if (j.contains("preprocess")) cfg.preprocess = preprocess_from_json(j["preprocess"]);
        if (j.contains("dictionary") && !j["dictionary"].is_null()) {
            cfg.dictionary_path = j["dictionary"].get<std::string>();
        }
        if (j.contains("lexicon") && !j["lexicon"].is_null()) {
            cfg.lexicon_path = j["lexicon"].get<std::string>();
        }
        cfg.embedding_path = j.value("embedding", "");
        cfg.max_len = j.value("max_len", 0);
        cfg.max_len_percentile = j.value("max_len_percentile", 0.95);
        if (j.contains("split")) {
            const auto& s = j["split"];
            if (s.contains("ratios")) {
                auto ratios = s["ratios"].get<std::vector<double>>();
                if (ratios.size() != 3) {
                    throw FormatError(origin + ": split.ratios must hold exactly 3 fractions");
                }
                cfg.split_ratios = {ratios[0], ratios[1], ratios[2]};
            }
            cfg.stratify = s.value("stratify", true);
        }
        if (j.contains("metric")) cfg.metric = metric_from_name(j["metric"].get<std::string>());
        if (j.contains("train")) {
            cfg.train = train_config_from_json(j["train"]);
            // Validation metric defaults to the dataset's evaluation protocol.
            if (!j["train"].contains("validation_metric")) cfg.train.validation_metric = cfg.metric;
        } else {
            cfg.train.validation_metric = cfg.metric;
        }
        for (const auto& m : j.value("models", nlohmann::json::array())) {
            ModelSpec spec;
            spec.id = m.value("id", "");
            std::string kind = m.value("kind", "");
            if (kind == "external") {
                throw FormatError(origin +
                                  ": external members belong under ensemble.external, not models");
            }
            spec.config = model_config_from_json(kind, m);
            cfg.models.push_back(std::move(spec));
        }
        if (j.contains("ensemble")) {
            const auto& e = j["ensemble"];
            cfg.ensemble.members = e.value("members", std::vector<std::string>{});
            if (e.contains("external")) {
                for (const auto& [id, path] : e["external"].items()) {
                    cfg.ensemble.external_files[id] = path.get<std::string>();
                }
            }
        }
        if (j.contains("kfold")) cfg.kfold_k = j["kfold"].value("k", 5);
        cfg.output_dir = j.value("output_dir", "out");
        cfg.seed = j.value("seed", std::uint64_t{42});
        if (!j.contains("train") || !j["train"].contains("seed")) cfg.train.seed = cfg.seed;
    } catch (const nlohmann::json::exception& err) {
        throw FormatError(origin + ": " + err.what());
    }

    if (const char* env_seed = std::getenv("VOTESTACK_SEED")) {
        std::uint64_t value = 0;
        auto [ptr, ec] = std::from_chars(env_seed, env_seed + std::strlen(env_seed), value);
        if (ec != std::errc() || *ptr != '\0') {
            throw FormatError("VOTESTACK_SEED must be an unsigned integer");
        }
        cfg.seed = value;
        cfg.train.seed = value;
    }
    return cfg;
}

RunConfig RunConfig::from_json_file(const std::string& path) {
    return from_json_text(read_file(path), path);
}

std::string RunConfig::to_json_text() const { return config_to_json(*this).dump(2); }

std::string RunConfig::config_hash() const {
    nlohmann::json j = config_to_json(*this);
    j.erase("output_dir");
    return hex64(fnv1a64(j.dump()));
}

void RunConfig::validate() const {
    std::vector<std::string> issues;
    auto check_file = [&](const std::string& field, const std::string& path) {
        if (path.empty()) {
            issues.push_back(field + ": missing");
        } else if (!std::filesystem::exists(path)) {
            issues.push_back(field + ": file not found: " + path);
        }
    };

    check_file("dataset.path", dataset_path);
    check_file("embedding", embedding_path);
    if (dictionary_path) check_file("dictionary", *dictionary_path);
    if (lexicon_path) check_file("lexicon", *lexicon_path);

    if (max_len < 0) issues.push_back("max_len: must be >= 0 (0 derives from the percentile)");
    if (max_len_percentile <= 0 || max_len_percentile > 1) {
        issues.push_back("max_len_percentile: must be in (0, 1]");
    }
    double ratio_sum = split_ratios.train + split_ratios.validation + split_ratios.test;
    if (split_ratios.train <= 0 || split_ratios.validation <= 0 || split_ratios.test <= 0) {
        issues.push_back("split.ratios: each fraction must be positive");
    } else if (std::abs(ratio_sum - 1.0) > 1e-9) {
        issues.push_back("split.ratios: must sum to 1");
    }

    std::vector<std::string> seen_ids;
    for (std::size_t i = 0; i < models.size(); ++i) {
        const std::string field = "models[" + std::to_string(i) + "]";
        const ModelSpec& spec = models[i];
        if (spec.id.empty()) issues.push_back(field + ".id: missing");
        for (const auto& other : seen_ids) {
            if (other == spec.id) issues.push_back(field + ".id: duplicate id \"" + spec.id + "\"");
        }
        seen_ids.push_back(spec.id);
        if (const auto* cnn = std::get_if<CnnConfig>(&spec.config)) {
            if (cnn->conv_blocks < 1) issues.push_back(field + ".conv_blocks: must be >= 1");
            if (cnn->filters_per_width < 1) {
                issues.push_back(field + ".filters_per_width: must be >= 1");
            }
            if (cnn->dropout < 0 || cnn->dropout >= 1) {
                issues.push_back(field + ".dropout: must be in [0, 1)");
            }
        } else {
            const RnnConfig& rnn = std::get<RnnConfig>(spec.config);
            if (rnn.hidden_size < 1) issues.push_back(field + ".hidden_size: must be >= 1");
            if (rnn.dropout < 0 || rnn.dropout >= 1) {
                issues.push_back(field + ".dropout: must be in [0, 1)");
            }
        }
    }

    if (train.epochs < 1) issues.push_back("train.epochs: must be >= 1");
    if (train.batch_size < 1) issues.push_back("train.batch_size: must be >= 1");
    if (train.early_stop_patience < 0) issues.push_back("train.early_stop_patience: must be >= 0");
    if (!(train.lr > 0)) issues.push_back("train.lr: must be positive");

    for (const std::string& member : ensemble.members) {
        bool declared = ensemble.external_files.count(member) > 0;
        for (const auto& spec : models) {
            if (spec.id == member) declared = true;
        }
        if (!declared) {
            issues.push_back("ensemble.members: \"" + member +
                             "\" is neither a declared model nor an external predictions file");
        }
    }
    for (const auto& [id, path] : ensemble.external_files) {
        check_file("ensemble.external." + id, path);
    }

    if (kfold_k < 2) issues.push_back("kfold.k: must be >= 2");

    if (!issues.empty()) {
        throw ValidationError(std::move(issues));
    }
}

}  // namespace votestack
