#pragma once

#include <optional>
#include <string>
#include <vector>

#include "votestack/ensemble.hpp"
#include "votestack/run_config.hpp"
#include "votestack/textprep.hpp"

namespace votestack {

// The run config materialized: loaded inputs, per-example token lists, the
// seeded split and the pipeline fingerprint every model must agree on.
struct Pipeline {
    Dataset dataset;
    NormalizationDictionary dictionary;
    std::optional<CompoundLexicon> lexicon;
    EmbeddingTable<float> table;
    std::vector<std::vector<std::string>> tokens;  // indexed by example id
    IndexSplit split;
    int max_len = 0;
    Fingerprint fingerprint;

    EncodedDataset encode(const std::vector<int>& ids) const;
    const std::vector<int>& slice_ids(const std::string& split_name) const;
};

Pipeline build_pipeline(const RunConfig& cfg);

// Predictions TSV: a `# config_hash: <hex>` comment followed by
// `id<TAB>label<TAB>p_1 ... p_k` lines (the schema the external-predictions
// adapter reads back).
void write_predictions(const std::string& path, const std::string& config_hash,
                       const std::vector<int>& ids, const std::vector<Prediction>& predictions,
                       const LabelSpace& labels);

struct PredictionsFile {
    std::string config_hash;  // empty when absent
    std::vector<int> ids;
    std::vector<std::string> labels;
};

PredictionsFile read_predictions(const std::string& path);

// CLI subcommands; each returns the paths it wrote via stdout and throws on
// failure (the CLI main maps exception types onto exit codes).
void cmd_preprocess(const RunConfig& cfg, const std::string& out_dir);
void cmd_train(const RunConfig& cfg, const std::string& out_dir);
void cmd_predict(const RunConfig& cfg, const std::string& model_path,
                 const std::string& split_name, const std::string& out_dir);
void cmd_ensemble(const RunConfig& cfg, const std::string& models_dir,
                  const std::string& out_dir);
void cmd_kfold(const RunConfig& cfg, const std::string& model_id, const std::string& out_dir);
void cmd_evaluate(const RunConfig& cfg, const std::string& predictions_path,
                  const std::string& out_dir);

}  // namespace votestack
