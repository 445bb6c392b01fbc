#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "votestack/corpus.hpp"
#include "votestack/models.hpp"

namespace votestack {

struct ModelSpec {
    std::string id;
    ModelConfig config;  // kind is implied by the variant + RnnConfig fields

    ModelKind kind() const { return kind_of(config); }
};

struct EnsembleSpec {
    std::vector<std::string> members;                  // model ids and/or external ids
    std::map<std::string, std::string> external_files; // external id -> predictions TSV
};

// One JSON document binds the whole pipeline; everything the CLI does is a
// function of this config plus its seed. `output_dir` is excluded from the
// config hash so identical experiments written to different directories
// produce comparable artifacts.
struct RunConfig {
    std::string dataset_path;
    DatasetFormat dataset_format = DatasetFormat::Tsv;
    PreprocessOptions preprocess;
    std::optional<std::string> dictionary_path;
    std::optional<std::string> lexicon_path;
    std::string embedding_path;
    int max_len = 0;  // 0 = derive from max_len_percentile over the train split
    double max_len_percentile = 0.95;
    SplitRatios split_ratios;
    bool stratify = true;
    std::vector<ModelSpec> models;
    TrainConfig train;
    EnsembleSpec ensemble;
    MetricKind metric = MetricKind::WeightedF1;
    int kfold_k = 5;
    std::string output_dir = "out";
    std::uint64_t seed = 42;

    // Parses the file; honors the VOTESTACK_SEED environment override.
    static RunConfig from_json_file(const std::string& path);
    static RunConfig from_json_text(const std::string& text, const std::string& origin);

    std::string to_json_text() const;

    // Hash of the canonical config dump, output_dir excluded.
    std::string config_hash() const;

    // All-at-once validation; throws ValidationError listing every issue
    // with its field path.
    void validate() const;
};

}  // namespace votestack
