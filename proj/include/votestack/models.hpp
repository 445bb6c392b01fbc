#pragma once

#include <optional>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

#include "votestack/corpus.hpp"
#include "votestack/embed.hpp"
#include "votestack/evalkit.hpp"
#include "votestack/nn/gru.hpp"
#include "votestack/nn/lstm.hpp"
#include "votestack/nn/types.hpp"
#include "votestack/textprep.hpp"

namespace votestack {

enum class ModelKind { Cnn, Lstm, Bilstm, Gru, External };

std::string model_kind_name(ModelKind kind);
ModelKind model_kind_from_name(const std::string& name);

// Identity of the preprocessing/encoding pipeline a model was trained
// under. predict() refuses inputs encoded under a different fingerprint.
struct Fingerprint {
    PreprocessOptions preprocess;
    std::string dictionary_hash = "none";
    std::string embedding_hash;
    int max_len = 0;

    std::string combined() const;  // hex digest of the canonical encoding
    std::string describe() const;
    bool operator==(const Fingerprint&) const = default;
};

// Parallel convolution blocks over filter widths base_width .. base_width +
// conv_blocks - 1; base_width 0 selects the width ladder centred on 3
// (3 blocks -> {2,3,4}, 5 blocks -> {1,2,3,4,5}).
struct CnnConfig {
    int conv_blocks = 3;
    int base_width = 0;  // 0 = auto
    int filters_per_width = 128;
    double dropout = 0.5;
    int max_len = 0;

    std::vector<int> widths() const;
};

struct RnnConfig {
    enum class Cell { Lstm, Gru };
    Cell cell = Cell::Lstm;
    int hidden_size = 128;
    bool bidirectional = false;
    double dropout = 0.5;
    int max_len = 0;
};

using ModelConfig = std::variant<CnnConfig, RnnConfig>;

ModelKind kind_of(const ModelConfig& cfg);

struct TrainConfig {
    int epochs = 20;
    int batch_size = 32;
    double lr = 1e-3;
    std::uint64_t seed = 42;
    // Consecutive epochs without validation improvement tolerated before
    // stopping; 0 stops at the first non-improving epoch.
    int early_stop_patience = 3;
    MetricKind validation_metric = MetricKind::WeightedF1;
};

struct EpochRecord {
    int epoch = 0;  // 1-based
    double train_loss = 0;
    double validation_metric = 0;
};

struct CnnModel {
    CnnConfig cfg;
    struct Block {
        std::vector<nn::Mat<float>> filters;  // each (width x dim)
        nn::Mat<float> bias;                  // (1 x filters_per_width)
    };
    std::vector<Block> blocks;
    nn::Mat<float> w_out, b_out;
};

struct RnnModel {
    RnnConfig cfg;
    std::optional<nn::LstmParams<float>> lstm_fwd, lstm_bwd;  // lstm_bwd when bidirectional
    std::optional<nn::GruParams<float>> gru;
    nn::Mat<float> w_out, b_out;
};

// Ensemble member realized as a file of precomputed predictions, keyed by
// example id.
struct ExternalPredictions {
    struct Entry {
        int label = 0;
        std::vector<double> probs;
    };
    std::unordered_map<int, Entry> by_id;
};

struct TrainedClassifier {
    std::string id;
    ModelKind kind = ModelKind::Cnn;
    LabelSpace label_space;
    Fingerprint fingerprint;           // unused for external members
    std::vector<EpochRecord> history;  // empty for external members
    std::variant<CnnModel, RnnModel, ExternalPredictions> impl;

    bool is_external() const { return kind == ModelKind::External; }
};

// A dataset after the full preprocess/encode pipeline; carries the pipeline
// fingerprint so consumers can enforce the predict-time contract, and the
// original example ids so external members can answer by id.
struct EncodedDataset {
    std::vector<int> ids;
    std::vector<EncodedSequence> sequences;
    std::vector<int> labels;  // gold labels; may be empty for pure inference
    Fingerprint fingerprint;

    int size() const { return static_cast<int>(sequences.size()); }
};

struct Prediction {
    int label = 0;
    std::vector<double> probs;  // sums to 1 within 1e-6
};

// Mini-batch Adam training with seeded shuffling, per-epoch validation and
// early stopping; the parameters achieving the best validation metric are
// retained. Throws DivergenceError naming the epoch if the loss leaves the
// finite range.
TrainedClassifier train_classifier(const std::vector<EncodedSequence>& train_x,
                                   const std::vector<int>& train_y,
                                   const std::vector<EncodedSequence>& validation_x,
                                   const std::vector<int>& validation_y,
                                   const ModelConfig& model_cfg, const TrainConfig& train_cfg,
                                   const EmbeddingTable<float>& table, const LabelSpace& labels,
                                   const Fingerprint& fingerprint, const std::string& id = "");

// Deterministic inference (dropout off); argmax with lowest-index tie-break.
std::vector<Prediction> predict(const TrainedClassifier& model, const EncodedDataset& data,
                                const EmbeddingTable<float>& table);

// Per-sequence probability forward pass for neural models.
std::vector<double> predict_probs(const TrainedClassifier& model, const EncodedSequence& seq,
                                  const EmbeddingTable<float>& table);

// Loads precomputed predictions: TSV `id<TAB>label[<TAB>p_1 ... p_k]`,
// `#`-prefixed lines ignored. The ids must exactly cover expected_ids; when
// probabilities are absent the vector is one-hot on the given label.
TrainedClassifier load_external_predictions(const std::string& path, const LabelSpace& labels,
                                            const std::vector<int>& expected_ids,
                                            const std::string& id = "external");

// Versioned binary container: magic + version, a JSON header (kind, labels,
// fingerprint, config, history, parameter shapes) and a little-endian
// float32 payload. Round-trips yield byte-identical predictions.
void serialize_model(const TrainedClassifier& model, const std::string& path);
TrainedClassifier deserialize_model(const std::string& path);

}  // namespace votestack
