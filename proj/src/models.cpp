#include "votestack/models.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstring>
#include <limits>
#include <set>

#include "votestack/json_io.hpp"
#include "votestack/nn/nn.hpp"

namespace votestack {

namespace {

using nn::Mat;

constexpr char kMagic[4] = {'V', 'S', 'T', 'K'};
constexpr std::uint32_t kModelVersion = 1;

Mat<float> embed_rows(const EmbeddingTable<float>& table, const EncodedSequence& seq) {
    Mat<float> x(seq.max_len(), table.dim);
    for (int t = 0; t < seq.max_len(); ++t) {
        const std::int32_t row = seq.indices[static_cast<std::size_t>(t)];
        if (row < 0 || row >= table.matrix.rows()) {
            throw ArgumentError("encoded index " + std::to_string(row) +
                                " outside embedding table with " +
                                std::to_string(table.matrix.rows()) + " rows");
        }
        x.row(t) = table.matrix.row(row);
    }
    return x;
}

// --- CNN: parallel conv blocks -> dropout -> dense -> softmax -------------

struct CnnCache {
    Mat<float> x;
    std::vector<nn::ConvPoolCache<float>> conv;
    Mat<float> features_masked;  // dense input, after the dropout mask
    Mat<float> mask;
};

nn::ParamList<float> cnn_refs(CnnModel& m) {
    nn::ParamList<float> out;
    for (auto& block : m.blocks) {
        for (auto& f : block.filters) out.push_back(&f);
        out.push_back(&block.bias);
    }
    out.push_back(&m.w_out);
    out.push_back(&m.b_out);
    return out;
}

nn::ConstParamList<float> cnn_refs(const CnnModel& m) {
    nn::ConstParamList<float> out;
    for (const auto& block : m.blocks) {
        for (const auto& f : block.filters) out.push_back(&f);
        out.push_back(&block.bias);
    }
    out.push_back(&m.w_out);
    out.push_back(&m.b_out);
    return out;
}

CnnModel make_cnn(const CnnConfig& cfg, int dim, int num_labels, SplitMix64& rng) {
    CnnModel m;
    m.cfg = cfg;
    for (int width : cfg.widths()) {
        CnnModel::Block block;
        for (int f = 0; f < cfg.filters_per_width; ++f) {
            Mat<float> filter(width, dim);
            nn::glorot_uniform(filter, rng);
            block.filters.push_back(std::move(filter));
        }
        block.bias = Mat<float>::Zero(1, cfg.filters_per_width);
        m.blocks.push_back(std::move(block));
    }
    const int feat = cfg.conv_blocks * cfg.filters_per_width;
    m.w_out.resize(feat, num_labels);
    nn::glorot_uniform(m.w_out, rng);
    m.b_out = Mat<float>::Zero(1, num_labels);
    return m;
}

Mat<float> cnn_forward(const CnnModel& m, const EmbeddingTable<float>& table,
                       const EncodedSequence& seq, bool training, double dropout, SplitMix64& rng,
                       CnnCache& cache) {
    cache.x = embed_rows(table, seq);
    cache.conv.resize(m.blocks.size());
    const int per = m.cfg.filters_per_width;
    Mat<float> features(1, static_cast<Eigen::Index>(m.blocks.size()) * per);
    for (std::size_t b = 0; b < m.blocks.size(); ++b) {
        features.middleCols(static_cast<Eigen::Index>(b) * per, per) = nn::conv1d_maxpool_forward(
            cache.x, m.blocks[b].filters, m.blocks[b].bias, seq.true_length, &cache.conv[b]);
    }
    cache.mask = (training && dropout > 0)
                     ? nn::dropout_mask<float>(1, features.cols(), dropout, rng)
                     : Mat<float>(Mat<float>::Ones(1, features.cols()));
    cache.features_masked = features.cwiseProduct(cache.mask);
    return nn::dense_forward(cache.features_masked, m.w_out, m.b_out);
}

void cnn_backward(const CnnModel& m, const Mat<float>& grad_logits, const CnnCache& cache,
                  CnnModel& grads) {
    auto dg = nn::dense_backward(grad_logits, cache.features_masked, m.w_out);
    grads.w_out += dg.w;
    grads.b_out += dg.b;
    Mat<float> dfeat = dg.x.cwiseProduct(cache.mask);
    const int per = m.cfg.filters_per_width;
    for (std::size_t b = 0; b < m.blocks.size(); ++b) {
        Mat<float> sub = dfeat.middleCols(static_cast<Eigen::Index>(b) * per, per);
        auto cg = nn::conv1d_maxpool_backward(sub, cache.x, m.blocks[b].filters, cache.conv[b]);
        for (int f = 0; f < per; ++f) {
            grads.blocks[b].filters[static_cast<std::size_t>(f)] +=
                cg.filters[static_cast<std::size_t>(f)];
        }
        grads.blocks[b].bias += cg.bias;
    }
}

// --- RNN variants: recurrent cell -> dropout -> dense -> softmax ----------

struct RnnCache {
    Mat<float> x;
    int true_length = 0;
    nn::LstmCache<float> lstm;
    nn::BilstmCache<float> bilstm;
    nn::GruCache<float> gru;
    Mat<float> hidden_masked;
    Mat<float> mask;
};

nn::ParamList<float> rnn_refs(RnnModel& m) {
    nn::ParamList<float> out;
    if (m.lstm_fwd) {
        for (Mat<float>* p : m.lstm_fwd->param_refs()) out.push_back(p);
    }
    if (m.lstm_bwd) {
        for (Mat<float>* p : m.lstm_bwd->param_refs()) out.push_back(p);
    }
    if (m.gru) {
        for (Mat<float>* p : m.gru->param_refs()) out.push_back(p);
    }
    out.push_back(&m.w_out);
    out.push_back(&m.b_out);
    return out;
}

nn::ConstParamList<float> rnn_refs(const RnnModel& m) {
    nn::ConstParamList<float> out;
    if (m.lstm_fwd) {
        for (const Mat<float>* p : m.lstm_fwd->param_refs()) out.push_back(p);
    }
    if (m.lstm_bwd) {
        for (const Mat<float>* p : m.lstm_bwd->param_refs()) out.push_back(p);
    }
    if (m.gru) {
        for (const Mat<float>* p : m.gru->param_refs()) out.push_back(p);
    }
    out.push_back(&m.w_out);
    out.push_back(&m.b_out);
    return out;
}

RnnModel make_rnn(const RnnConfig& cfg, int dim, int num_labels, SplitMix64& rng) {
    RnnModel m;
    m.cfg = cfg;
    int head_in = cfg.hidden_size;
    auto init_weights = [&](auto& params) {
        for (Mat<float>* p : params.param_refs()) {
            if (p->rows() > 1) nn::glorot_uniform(*p, rng);  // biases stay zero
        }
    };
    if (cfg.cell == RnnConfig::Cell::Lstm) {
        m.lstm_fwd = nn::LstmParams<float>::zeros(dim, cfg.hidden_size);
        init_weights(*m.lstm_fwd);
        if (cfg.bidirectional) {
            m.lstm_bwd = nn::LstmParams<float>::zeros(dim, cfg.hidden_size);
            init_weights(*m.lstm_bwd);
            head_in = 2 * cfg.hidden_size;
        }
    } else {
        m.gru = nn::GruParams<float>::zeros(dim, cfg.hidden_size);
        init_weights(*m.gru);
    }
    m.w_out.resize(head_in, num_labels);
    nn::glorot_uniform(m.w_out, rng);
    m.b_out = Mat<float>::Zero(1, num_labels);
    return m;
}

Mat<float> rnn_forward(const RnnModel& m, const EmbeddingTable<float>& table,
                       const EncodedSequence& seq, bool training, double dropout, SplitMix64& rng,
                       RnnCache& cache) {
    cache.x = embed_rows(table, seq);
    cache.true_length = seq.true_length;
    Mat<float> h;
    if (m.gru) {
        h = nn::gru_forward(cache.x, *m.gru, seq.true_length, &cache.gru);
    } else if (m.lstm_bwd) {
        h = nn::bilstm_forward(cache.x, *m.lstm_fwd, *m.lstm_bwd, seq.true_length, &cache.bilstm);
    } else {
        h = nn::lstm_forward(cache.x, *m.lstm_fwd, seq.true_length, &cache.lstm);
    }
    cache.mask = (training && dropout > 0) ? nn::dropout_mask<float>(1, h.cols(), dropout, rng)
                                           : Mat<float>(Mat<float>::Ones(1, h.cols()));
    cache.hidden_masked = h.cwiseProduct(cache.mask);
    return nn::dense_forward(cache.hidden_masked, m.w_out, m.b_out);
}

void rnn_backward(const RnnModel& m, const Mat<float>& grad_logits, const RnnCache& cache,
                  RnnModel& grads) {
    auto dg = nn::dense_backward(grad_logits, cache.hidden_masked, m.w_out);
    grads.w_out += dg.w;
    grads.b_out += dg.b;
    Mat<float> dh = dg.x.cwiseProduct(cache.mask);
    if (m.gru) {
        nn::gru_backward(dh, cache.x, *m.gru, cache.gru, *grads.gru);
    } else if (m.lstm_bwd) {
        nn::bilstm_backward(dh, cache.x, *m.lstm_fwd, *m.lstm_bwd, cache.bilstm, cache.true_length,
                            *grads.lstm_fwd, *grads.lstm_bwd);
    } else {
        nn::lstm_backward(dh, cache.x, *m.lstm_fwd, cache.lstm, *grads.lstm_fwd);
    }
}

int argmax_lowest(const std::vector<double>& probs) {
    int best = 0;
    for (std::size_t i = 1; i < probs.size(); ++i) {
        if (probs[i] > probs[static_cast<std::size_t>(best)]) best = static_cast<int>(i);
    }
    return best;
}

std::vector<double> row_to_probs(const Mat<float>& logits) {
    Mat<float> p = nn::softmax(logits);
    std::vector<double> out(static_cast<std::size_t>(p.cols()));
    for (Eigen::Index c = 0; c < p.cols(); ++c) out[static_cast<std::size_t>(c)] = p(0, c);
    return out;
}

// Shared mini-batch loop. Model must provide value-semantic deep copies
// (both CnnModel and RnnModel do), so best-epoch snapshots are plain copies.
template <typename Model, typename Cache, typename ForwardFn, typename BackwardFn,
          typename RefsFn>
TrainedClassifier train_loop(Model model, ModelKind kind,
                             const std::vector<EncodedSequence>& train_x,
                             const std::vector<int>& train_y,
                             const std::vector<EncodedSequence>& validation_x,
                             const std::vector<int>& validation_y, const TrainConfig& cfg,
                             const LabelSpace& labels, const Fingerprint& fingerprint,
                             const std::string& id, SplitMix64 rng, ForwardFn&& forward,
                             BackwardFn&& backward, RefsFn&& refs) {
    const int n = static_cast<int>(train_x.size());
    const int k = labels.size();

    Model grads = model;
    nn::ParamList<float> params = refs(model);
    nn::ParamList<float> grad_list = refs(grads);
    auto zero_grads = [&] {
        for (Mat<float>* g : grad_list) g->setZero();
    };
    zero_grads();
    nn::ConstParamList<float> grad_view(grad_list.begin(), grad_list.end());
    nn::AdamState<float> adam = nn::make_adam(params, static_cast<float>(cfg.lr));

    auto evaluate_validation = [&]() {
        std::vector<int> pred;
        pred.reserve(validation_x.size());
        Cache cache;
        for (const auto& seq : validation_x) {
            Mat<float> logits = forward(model, seq, false, rng, cache);
            pred.push_back(argmax_lowest(row_to_probs(logits)));
        }
        MetricsReport report = f1_report(confusion_matrix(validation_y, pred, labels));
        return metric_value(report, cfg.validation_metric);
    };

    std::vector<int> order(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;

    TrainedClassifier out;
    out.id = id;
    out.kind = kind;
    out.label_space = labels;
    out.fingerprint = fingerprint;

    double best_metric = -std::numeric_limits<double>::infinity();
    Model best_model = model;
    int epochs_without_improvement = 0;

    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        votestack::shuffle(order, rng);
        double loss_sum = 0;
        for (int start = 0; start < n; start += cfg.batch_size) {
            const int batch = std::min(cfg.batch_size, n - start);
            std::vector<Cache> caches(static_cast<std::size_t>(batch));
            Mat<float> logits(batch, k);
            std::vector<int> targets(static_cast<std::size_t>(batch));
            for (int i = 0; i < batch; ++i) {
                int idx = order[static_cast<std::size_t>(start + i)];
                logits.row(i) = forward(model, train_x[static_cast<std::size_t>(idx)], true, rng,
                                        caches[static_cast<std::size_t>(i)]);
                targets[static_cast<std::size_t>(i)] = train_y[static_cast<std::size_t>(idx)];
            }
            auto sl = nn::softmax_crossentropy(logits, targets);
            if (!std::isfinite(sl.loss)) {
                throw DivergenceError("training diverged (non-finite loss) at epoch " +
                                      std::to_string(epoch));
            }
            zero_grads();
            for (int i = 0; i < batch; ++i) {
                backward(model, Mat<float>(sl.grad_logits.row(i)),
                         caches[static_cast<std::size_t>(i)], grads);
            }
            nn::adam_step(params, grad_view, adam);
            loss_sum += sl.loss * batch;
        }
        const double train_loss = loss_sum / n;
        const double val_metric = evaluate_validation();
        out.history.push_back({epoch, train_loss, val_metric});

        if (val_metric > best_metric) {
            best_metric = val_metric;
            best_model = model;
            epochs_without_improvement = 0;
        } else if (++epochs_without_improvement >= cfg.early_stop_patience) {
            break;
        }
    }

    out.impl = std::move(best_model);
    return out;
}

void validate_labels(const std::vector<int>& ys, int k, const char* what) {
    for (int y : ys) {
        if (y < 0 || y >= k) {
            throw ArgumentError(std::string(what) + ": label index " + std::to_string(y) +
                                " outside [0, " + std::to_string(k) + ")");
        }
    }
}

}  // namespace

std::string model_kind_name(ModelKind kind) {
    switch (kind) {
        case ModelKind::Cnn: return "cnn";
        case ModelKind::Lstm: return "lstm";
        case ModelKind::Bilstm: return "bilstm";
        case ModelKind::Gru: return "gru";
        case ModelKind::External: return "external";
    }
    return "?";
}

ModelKind model_kind_from_name(const std::string& name) {
    if (name == "cnn") return ModelKind::Cnn;
    if (name == "lstm") return ModelKind::Lstm;
    if (name == "bilstm") return ModelKind::Bilstm;
    if (name == "gru") return ModelKind::Gru;
    if (name == "external") return ModelKind::External;
    throw ArgumentError("unknown model kind \"" + name + "\"");
}

std::string Fingerprint::combined() const {
    std::string canon = preprocess.cache_key() + "|dict:" + dictionary_hash +
                        "|emb:" + embedding_hash + "|maxlen:" + std::to_string(max_len);
    return hex64(fnv1a64(canon));
}

std::string Fingerprint::describe() const {
    return combined() + " (" + preprocess.cache_key() + ", dict " + dictionary_hash + ", emb " +
           embedding_hash + ", max_len " + std::to_string(max_len) + ")";
}

std::vector<int> CnnConfig::widths() const {
    int base = base_width > 0 ? base_width : std::max(1, 3 - conv_blocks / 2);
    std::vector<int> out;
    for (int b = 0; b < conv_blocks; ++b) out.push_back(base + b);
    return out;
}

ModelKind kind_of(const ModelConfig& cfg) {
    if (std::holds_alternative<CnnConfig>(cfg)) return ModelKind::Cnn;
    const RnnConfig& rnn = std::get<RnnConfig>(cfg);
    if (rnn.cell == RnnConfig::Cell::Gru) return ModelKind::Gru;
    return rnn.bidirectional ? ModelKind::Bilstm : ModelKind::Lstm;
}

TrainedClassifier train_classifier(const std::vector<EncodedSequence>& train_x,
                                   const std::vector<int>& train_y,
                                   const std::vector<EncodedSequence>& validation_x,
                                   const std::vector<int>& validation_y,
                                   const ModelConfig& model_cfg, const TrainConfig& train_cfg,
                                   const EmbeddingTable<float>& table, const LabelSpace& labels,
                                   const Fingerprint& fingerprint, const std::string& id) {
    if (train_x.empty() || validation_x.empty()) {
        throw ArgumentError("train_classifier: train and validation sets must be non-empty");
    }
    if (train_x.size() != train_y.size() || validation_x.size() != validation_y.size()) {
        throw ArgumentError("train_classifier: example/label count mismatch");
    }
    if (train_cfg.epochs < 1 || train_cfg.batch_size < 1 || train_cfg.early_stop_patience < 0) {
        throw ArgumentError("train_classifier: invalid train config");
    }
    validate_labels(train_y, labels.size(), "train set");
    validate_labels(validation_y, labels.size(), "validation set");

    const int max_len = train_x.front().max_len();
    SplitMix64 rng(train_cfg.seed);
    const ModelKind kind = kind_of(model_cfg);
    const std::string model_id = id.empty() ? model_kind_name(kind) : id;

    if (const auto* cnn = std::get_if<CnnConfig>(&model_cfg)) {
        if (cnn->conv_blocks < 1 || cnn->filters_per_width < 1) {
            throw ArgumentError("cnn config: conv_blocks and filters_per_width must be positive");
        }
        if (cnn->dropout < 0 || cnn->dropout >= 1) {
            throw ArgumentError("cnn config: dropout must be in [0, 1)");
        }
        for (int w : cnn->widths()) {
            if (w > max_len) {
                throw ArgumentError("cnn config: filter width " + std::to_string(w) +
                                    " exceeds max_len " + std::to_string(max_len));
            }
        }
        CnnConfig cfg = *cnn;
        cfg.max_len = max_len;
        const double dropout = cfg.dropout;
        CnnModel model = make_cnn(cfg, table.dim, labels.size(), rng);
        return train_loop<CnnModel, CnnCache>(
            std::move(model), kind, train_x, train_y, validation_x, validation_y,
            train_cfg, labels, fingerprint, model_id, rng,
            [&table, dropout](const CnnModel& m, const EncodedSequence& seq, bool training,
                              SplitMix64& r, CnnCache& cache) {
                return cnn_forward(m, table, seq, training, dropout, r, cache);
            },
            [](const CnnModel& m, const Mat<float>& g, const CnnCache& cache, CnnModel& grads) {
                cnn_backward(m, g, cache, grads);
            },
            [](CnnModel& m) { return cnn_refs(m); });
    }

    const RnnConfig& rnn_base = std::get<RnnConfig>(model_cfg);
    if (rnn_base.hidden_size < 1) {
        throw ArgumentError("rnn config: hidden_size must be positive");
    }
    if (rnn_base.dropout < 0 || rnn_base.dropout >= 1) {
        throw ArgumentError("rnn config: dropout must be in [0, 1)");
    }
    if (rnn_base.bidirectional && rnn_base.cell == RnnConfig::Cell::Gru) {
        throw ArgumentError("rnn config: bidirectional is only supported for the lstm cell");
    }
    RnnConfig cfg = rnn_base;
    cfg.max_len = max_len;
    const double dropout = cfg.dropout;
    RnnModel model = make_rnn(cfg, table.dim, labels.size(), rng);
    return train_loop<RnnModel, RnnCache>(
        std::move(model), kind, train_x, train_y, validation_x, validation_y,
        train_cfg, labels, fingerprint, model_id, rng,
        [&table, dropout](const RnnModel& m, const EncodedSequence& seq, bool training,
                          SplitMix64& r, RnnCache& cache) {
            return rnn_forward(m, table, seq, training, dropout, r, cache);
        },
        [](const RnnModel& m, const Mat<float>& g, const RnnCache& cache, RnnModel& grads) {
            rnn_backward(m, g, cache, grads);
        },
        [](RnnModel& m) { return rnn_refs(m); });
}

std::vector<double> predict_probs(const TrainedClassifier& model, const EncodedSequence& seq,
                                  const EmbeddingTable<float>& table) {
    SplitMix64 unused(0);
    if (const auto* cnn = std::get_if<CnnModel>(&model.impl)) {
        CnnCache cache;
        return row_to_probs(cnn_forward(*cnn, table, seq, false, 0.0, unused, cache));
    }
    if (const auto* rnn = std::get_if<RnnModel>(&model.impl)) {
        RnnCache cache;
        return row_to_probs(rnn_forward(*rnn, table, seq, false, 0.0, unused, cache));
    }
    throw ContractError("predict_probs: external classifiers answer by id lookup only");
}

std::vector<Prediction> predict(const TrainedClassifier& model, const EncodedDataset& data,
                                const EmbeddingTable<float>& table) {
    std::vector<Prediction> out;
    out.reserve(data.sequences.size());

    if (model.is_external()) {
        const auto& ext = std::get<ExternalPredictions>(model.impl);
        for (int id : data.ids) {
            auto it = ext.by_id.find(id);
            if (it == ext.by_id.end()) {
                throw CoverageError("external predictions \"" + model.id +
                                    "\" have no entry for id " + std::to_string(id));
            }
            out.push_back({it->second.label, it->second.probs});
        }
        return out;
    }

    if (!(model.fingerprint == data.fingerprint)) {
        throw ContractError("fingerprint mismatch: model \"" + model.id + "\" was trained under " +
                            model.fingerprint.describe() + " but the input was encoded under " +
                            data.fingerprint.describe());
    }
    for (const auto& seq : data.sequences) {
        std::vector<double> probs = predict_probs(model, seq, table);
        out.push_back({argmax_lowest(probs), std::move(probs)});
    }
    return out;
}

TrainedClassifier load_external_predictions(const std::string& path, const LabelSpace& labels,
                                            const std::vector<int>& expected_ids,
                                            const std::string& id) {
    std::string content = read_file(path);
    ExternalPredictions ext;
    std::vector<int> duplicates;

    std::size_t pos = 0;
    long line_no = 0;
    while (pos < content.size()) {
        std::size_t end = content.find('\n', pos);
        if (end == std::string::npos) end = content.size();
        std::string line = content.substr(pos, end - pos);
        pos = end + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;

        std::vector<std::string> fields;
        std::size_t start = 0;
        while (true) {
            std::size_t tab = line.find('\t', start);
            if (tab == std::string::npos) {
                fields.push_back(line.substr(start));
                break;
            }
            fields.push_back(line.substr(start, tab - start));
            start = tab + 1;
        }
        if (fields.size() < 2 || fields.size() > 3) {
            throw FormatError(path + ": line " + std::to_string(line_no) +
                              ": expected `id<TAB>label[<TAB>p_1 ... p_k]`");
        }
        int ex_id = 0;
        auto [ptr, ec] = std::from_chars(fields[0].data(), fields[0].data() + fields[0].size(), ex_id);
        if (ec != std::errc() || ptr != fields[0].data() + fields[0].size()) {
            throw FormatError(path + ": line " + std::to_string(line_no) + ": unparsable id \"" +
                              fields[0] + "\"");
        }
        int label = labels.index_of(fields[1]);
        if (label < 0) {
            throw FormatError(path + ": line " + std::to_string(line_no) + ": unknown label \"" +
                              fields[1] + "\"");
        }
        ExternalPredictions::Entry entry;
        entry.label = label;
        if (fields.size() == 3) {
            for (const auto& field : detail::split_fields(fields[2])) {
                double v = 0;
                if (!detail::parse_double(field, v)) {
                    throw FormatError(path + ": line " + std::to_string(line_no) +
                                      ": unparsable probability");
                }
                entry.probs.push_back(v);
            }
            if (static_cast<int>(entry.probs.size()) != labels.size()) {
                throw FormatError(path + ": line " + std::to_string(line_no) + ": expected " +
                                  std::to_string(labels.size()) + " probabilities, got " +
                                  std::to_string(entry.probs.size()));
            }
        } else {
            entry.probs.assign(static_cast<std::size_t>(labels.size()), 0.0);
            entry.probs[static_cast<std::size_t>(label)] = 1.0;
        }
        if (!ext.by_id.emplace(ex_id, std::move(entry)).second) {
            duplicates.push_back(ex_id);
        }
    }

    std::vector<int> missing, unexpected;
    std::set<int> expected(expected_ids.begin(), expected_ids.end());
    for (int want : expected) {
        if (!ext.by_id.count(want)) missing.push_back(want);
    }
    for (const auto& [have, _] : ext.by_id) {
        if (!expected.count(have)) unexpected.push_back(have);
    }
    std::sort(unexpected.begin(), unexpected.end());
    if (!duplicates.empty() || !missing.empty() || !unexpected.empty()) {
        auto list = [](const std::vector<int>& ids) {
            std::string s;
            for (std::size_t i = 0; i < ids.size() && i < 10; ++i) {
                if (i) s += ", ";
                s += std::to_string(ids[i]);
            }
            if (ids.size() > 10) s += ", ...";
            return s;
        };
        std::string msg = path + ": id coverage mismatch";
        if (!missing.empty()) msg += "; missing: " + list(missing);
        if (!duplicates.empty()) msg += "; duplicated: " + list(duplicates);
        if (!unexpected.empty()) msg += "; unexpected: " + list(unexpected);
        throw CoverageError(msg);
    }

    TrainedClassifier out;
    out.id = id;
    out.kind = ModelKind::External;
    out.label_space = labels;
    out.impl = std::move(ext);
    return out;
}

// --- JSON conversions ------------------------------------------------------

nlohmann::json preprocess_to_json(const PreprocessOptions& opts) {
    return {{"lowercase", opts.lowercase},
            {"strip_urls", opts.strip_urls},
            {"strip_non_letters", opts.strip_non_letters},
            {"collapse_whitespace", opts.collapse_whitespace},
            {"apply_dictionary", opts.apply_dictionary}};
}

PreprocessOptions preprocess_from_json(const nlohmann::json& j) {
    PreprocessOptions opts;
    opts.lowercase = j.value("lowercase", opts.lowercase);
    opts.strip_urls = j.value("strip_urls", opts.strip_urls);
    opts.strip_non_letters = j.value("strip_non_letters", opts.strip_non_letters);
    opts.collapse_whitespace = j.value("collapse_whitespace", opts.collapse_whitespace);
    opts.apply_dictionary = j.value("apply_dictionary", opts.apply_dictionary);
    return opts;
}

nlohmann::json fingerprint_to_json(const Fingerprint& fp) {
    return {{"preprocess", preprocess_to_json(fp.preprocess)},
            {"dictionary_hash", fp.dictionary_hash},
            {"embedding_hash", fp.embedding_hash},
            {"max_len", fp.max_len},
            {"combined", fp.combined()}};
}

Fingerprint fingerprint_from_json(const nlohmann::json& j) {
    Fingerprint fp;
    fp.preprocess = preprocess_from_json(j.at("preprocess"));
    fp.dictionary_hash = j.at("dictionary_hash").get<std::string>();
    fp.embedding_hash = j.at("embedding_hash").get<std::string>();
    fp.max_len = j.at("max_len").get<int>();
    return fp;
}

nlohmann::json model_config_to_json(const ModelConfig& cfg) {
    if (const auto* cnn = std::get_if<CnnConfig>(&cfg)) {
        return {{"conv_blocks", cnn->conv_blocks},
                {"base_width", cnn->base_width},
                {"filters_per_width", cnn->filters_per_width},
                {"dropout", cnn->dropout},
                {"max_len", cnn->max_len}};
    }
    const RnnConfig& rnn = std::get<RnnConfig>(cfg);
    return {{"hidden_size", rnn.hidden_size},
            {"bidirectional", rnn.bidirectional},
            {"dropout", rnn.dropout},
            {"max_len", rnn.max_len}};
}

ModelConfig model_config_from_json(const std::string& kind_name, const nlohmann::json& j) {
    ModelKind kind = model_kind_from_name(kind_name);
    if (kind == ModelKind::Cnn) {
        CnnConfig cfg;
        cfg.conv_blocks = j.value("conv_blocks", cfg.conv_blocks);
        cfg.base_width = j.value("base_width", cfg.base_width);
        cfg.filters_per_width = j.value("filters_per_width", cfg.filters_per_width);
        cfg.dropout = j.value("dropout", cfg.dropout);
        cfg.max_len = j.value("max_len", cfg.max_len);
        return cfg;
    }
    RnnConfig cfg;
    cfg.cell = kind == ModelKind::Gru ? RnnConfig::Cell::Gru : RnnConfig::Cell::Lstm;
    cfg.bidirectional = kind == ModelKind::Bilstm;
    cfg.hidden_size = j.value("hidden_size", cfg.hidden_size);
    cfg.dropout = j.value("dropout", cfg.dropout);
    cfg.max_len = j.value("max_len", cfg.max_len);
    return cfg;
}

nlohmann::json train_config_to_json(const TrainConfig& cfg) {
    return {{"epochs", cfg.epochs},
            {"batch_size", cfg.batch_size},
            {"lr", cfg.lr},
            {"seed", cfg.seed},
            {"early_stop_patience", cfg.early_stop_patience},
            {"validation_metric", metric_name(cfg.validation_metric)}};
}

TrainConfig train_config_from_json(const nlohmann::json& j) {
    TrainConfig cfg;
    cfg.epochs = j.value("epochs", cfg.epochs);
    cfg.batch_size = j.value("batch_size", cfg.batch_size);
    cfg.lr = j.value("lr", cfg.lr);
    cfg.seed = j.value("seed", cfg.seed);
    cfg.early_stop_patience = j.value("early_stop_patience", cfg.early_stop_patience);
    if (j.contains("validation_metric")) {
        cfg.validation_metric = metric_from_name(j["validation_metric"].get<std::string>());
    }
    return cfg;
}

// --- binary container --------------------------------------------------------

namespace {

void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_u64(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_f32(std::string& out, float v) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, 4);
    put_u32(out, bits);
}

std::uint32_t get_u32(const std::string& in, std::size_t& pos) {
    if (pos + 4 > in.size()) throw FormatError("model file truncated");
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
        v |= static_cast<std::uint32_t>(static_cast<unsigned char>(in[pos + i])) << (8 * i);
    }
    pos += 4;
    return v;
}

std::uint64_t get_u64(const std::string& in, std::size_t& pos) {
    if (pos + 8 > in.size()) throw FormatError("model file truncated");
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) {
        v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[pos + i])) << (8 * i);
    }
    pos += 8;
    return v;
}

float get_f32(const std::string& in, std::size_t& pos) {
    std::uint32_t bits = get_u32(in, pos);
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
}

nlohmann::json history_to_json(const std::vector<EpochRecord>& history) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& rec : history) {
        arr.push_back({{"epoch", rec.epoch},
                       {"train_loss", rec.train_loss},
                       {"validation_metric", rec.validation_metric}});
    }
    return arr;
}

std::vector<EpochRecord> history_from_json(const nlohmann::json& arr) {
    std::vector<EpochRecord> out;
    for (const auto& rec : arr) {
        out.push_back({rec.at("epoch").get<int>(), rec.at("train_loss").get<double>(),
                       rec.at("validation_metric").get<double>()});
    }
    return out;
}

}  // namespace

void serialize_model(const TrainedClassifier& model, const std::string& path) {
    nlohmann::json header;
    header["kind"] = model_kind_name(model.kind);
    header["id"] = model.id;
    header["labels"] = model.label_space.labels;
    header["fingerprint"] = fingerprint_to_json(model.fingerprint);
    header["history"] = history_to_json(model.history);

    nn::ConstParamList<float> refs;
    if (const auto* cnn = std::get_if<CnnModel>(&model.impl)) {
        header["config"] = model_config_to_json(ModelConfig(cnn->cfg));
        refs = cnn_refs(*cnn);
    } else if (const auto* rnn = std::get_if<RnnModel>(&model.impl)) {
        header["config"] = model_config_to_json(ModelConfig(rnn->cfg));
        refs = rnn_refs(*rnn);
    } else {
        const auto& ext = std::get<ExternalPredictions>(model.impl);
        nlohmann::json table = nlohmann::json::object();
        for (const auto& [id, entry] : ext.by_id) {
            table[std::to_string(id)] = {{"label", entry.label}, {"probs", entry.probs}};
        }
        header["external"] = table;
    }

    nlohmann::json shapes = nlohmann::json::array();
    for (const Mat<float>* p : refs) {
        shapes.push_back({{"rows", p->rows()}, {"cols", p->cols()}});
    }
    header["params"] = shapes;

    std::string out;
    out.append(kMagic, 4);
    put_u32(out, kModelVersion);
    std::string header_str = header.dump();
    put_u64(out, header_str.size());
    out += header_str;
    for (const Mat<float>* p : refs) {
        for (Eigen::Index r = 0; r < p->rows(); ++r) {
            for (Eigen::Index c = 0; c < p->cols(); ++c) {
                put_f32(out, (*p)(r, c));
            }
        }
    }
    write_file(path, out);
}

TrainedClassifier deserialize_model(const std::string& path) {
    std::string in = read_file(path);
    if (in.size() < 4 || std::memcmp(in.data(), kMagic, 4) != 0) {
        throw FormatError(path + ": not a votestack model file");
    }
    std::size_t pos = 4;
    std::uint32_t version = get_u32(in, pos);
    if (version != kModelVersion) {
        throw FormatError(path + ": unsupported model file version " + std::to_string(version));
    }
    std::uint64_t header_len = get_u64(in, pos);
    if (pos + header_len > in.size()) {
        throw FormatError(path + ": model file truncated");
    }
    nlohmann::json header;
    try {
        header = nlohmann::json::parse(in.substr(pos, header_len));
    } catch (const nlohmann::json::parse_error&) {
        throw FormatError(path + ": corrupted model header");
    }
    pos += header_len;

    TrainedClassifier model;
    try {
        model.kind = model_kind_from_name(header.at("kind").get<std::string>());
        model.id = header.at("id").get<std::string>();
        model.label_space.labels = header.at("labels").get<std::vector<std::string>>();
        if (header.contains("fingerprint")) {
            model.fingerprint = fingerprint_from_json(header["fingerprint"]);
        }
        model.history = history_from_json(header.value("history", nlohmann::json::array()));

        if (model.kind == ModelKind::External) {
            ExternalPredictions ext;
            for (const auto& [key, value] : header.at("external").items()) {
                ExternalPredictions::Entry entry;
                entry.label = value.at("label").get<int>();
                entry.probs = value.at("probs").get<std::vector<double>>();
                ext.by_id.emplace(std::stoi(key), std::move(entry));
            }
            model.impl = std::move(ext);
            return model;
        }

        nn::ParamList<float> refs;
        if (model.kind == ModelKind::Cnn) {
            CnnConfig cfg = std::get<CnnConfig>(model_config_from_json("cnn", header.at("config")));
            CnnModel m;
            m.cfg = cfg;
            m.blocks.resize(static_cast<std::size_t>(cfg.conv_blocks));
            for (auto& block : m.blocks) {
                block.filters.resize(static_cast<std::size_t>(cfg.filters_per_width));
            }
            model.impl = std::move(m);
            refs = cnn_refs(std::get<CnnModel>(model.impl));
        } else {
            RnnConfig cfg = std::get<RnnConfig>(
                model_config_from_json(model_kind_name(model.kind), header.at("config")));
            RnnModel m;
            m.cfg = cfg;
            if (cfg.cell == RnnConfig::Cell::Gru) {
                m.gru = nn::GruParams<float>{};
            } else {
                m.lstm_fwd = nn::LstmParams<float>{};
                if (cfg.bidirectional) m.lstm_bwd = nn::LstmParams<float>{};
            }
            model.impl = std::move(m);
            refs = rnn_refs(std::get<RnnModel>(model.impl));
        }

        const nlohmann::json& shapes = header.at("params");
        if (shapes.size() != refs.size()) {
            throw FormatError(path + ": parameter count mismatch in model header");
        }
        for (std::size_t i = 0; i < refs.size(); ++i) {
            const auto rows = shapes[i].at("rows").get<Eigen::Index>();
            const auto cols = shapes[i].at("cols").get<Eigen::Index>();
            refs[i]->resize(rows, cols);
            for (Eigen::Index r = 0; r < rows; ++r) {
                for (Eigen::Index c = 0; c < cols; ++c) {
                    (*refs[i])(r, c) = get_f32(in, pos);
                }
            }
        }
    } catch (const nlohmann::json::exception& err) {
        throw FormatError(path + ": corrupted model header: " + err.what());
    }
    if (pos != in.size()) {
        throw FormatError(path + ": trailing bytes after model payload");
    }
    return model;
}

}  // namespace votestack
