// Acceptance suite: one pass/fail line per criterion, nonzero exit when any
// criterion fails. Run via ctest or directly from the build directory.

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <vector>

#include "support/gradcheck_harness.hpp"
#include "support/synthetic.hpp"
#include "support/tmpdir.hpp"
#include "support/vote_reference.hpp"
#include "votestack/commands.hpp"
#include "votestack/ensemble.hpp"
#include "votestack/run_config.hpp"
#include "votestack/textprep.hpp"

using namespace votestack;
using namespace votestack::testing;

namespace {

struct Check {
    std::vector<std::string> failures;

    void require(bool ok, const std::string& what) {
        if (!ok) failures.push_back(what);
    }
    void require_lt(double value, double bound, const std::string& what) {
        if (!(value < bound)) {
            std::ostringstream os;
            os << what << " (" << value << " >= " << bound << ")";
            failures.push_back(os.str());
        }
    }
};

struct Harness {
    int failed = 0;
    int index = 0;

    void run(const std::string& name, const std::function<void(Check&)>& body) {
        ++index;
        Check check;
        auto start = std::chrono::steady_clock::now();
        try {
            body(check);
        } catch (const std::exception& err) {
            check.failures.push_back(std::string("exception: ") + err.what());
        }
        double seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        char timing[32];
        std::snprintf(timing, sizeof(timing), "%.2fs", seconds);
        if (check.failures.empty()) {
            std::cout << "[PASS] " << index << ". " << name << " (" << timing << ")\n";
        } else {
            ++failed;
            std::cout << "[FAIL] " << index << ". " << name << " (" << timing << ")\n";
            for (const auto& f : check.failures) std::cout << "       - " << f << "\n";
        }
    }
};

double elapsed_since(const std::chrono::steady_clock::time_point& start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

// --- criterion 1 -----------------------------------------------------------

void criterion_gradients(Check& check) {
    auto start = std::chrono::steady_clock::now();
    struct Shape {
        int a, b, c, d;
    };
    const std::vector<Shape> dense_shapes = {{1, 2, 3, 0}, {2, 4, 3, 0}, {3, 5, 2, 0}};
    const std::vector<Shape> conv_shapes = {{3, 2, 2, 1}, {5, 4, 3, 2}, {6, 3, 2, 3}};
    const std::vector<Shape> rnn_shapes = {{2, 2, 2, 2}, {4, 3, 2, 4}, {5, 2, 3, 3}};

    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        for (const auto& s : dense_shapes) {
            check.require_lt(check_dense(seed, s.a, s.b, s.c), 1e-5, "dense gradient");
        }
        for (const auto& s : conv_shapes) {
            check.require_lt(check_conv(seed, s.a, s.b, s.c, s.d, s.a), 1e-5, "conv gradient");
        }
        for (const auto& s : rnn_shapes) {
            check.require_lt(check_lstm(seed, s.a, s.b, s.c, s.d), 1e-5, "lstm gradient");
            check.require_lt(check_bilstm(seed, s.a, s.b, s.c, s.d), 1e-5, "bilstm gradient");
            check.require_lt(check_gru(seed, s.a, s.b, s.c, s.d), 1e-5, "gru gradient");
        }
    }
    check.require_lt(elapsed_since(start), 30.0, "runtime under 30 s");
}

// --- criteria 2 + 3 ---------------------------------------------------------

Eigen::MatrixXd quantized_f1(std::size_t m, int labels, SplitMix64& rng) {
    Eigen::MatrixXd f1(static_cast<Eigen::Index>(m), labels);
    for (Eigen::Index r = 0; r < f1.rows(); ++r) {
        for (Eigen::Index c = 0; c < f1.cols(); ++c) {
            f1(r, c) = 0.25 * static_cast<double>(rng.next_below(5));
        }
    }
    return f1;
}

EnsembleConfig config_of(std::size_t m, std::optional<Eigen::MatrixXd> f1) {
    EnsembleConfig cfg;
    for (std::size_t i = 0; i < m; ++i) cfg.members.push_back("m" + std::to_string(i));
    cfg.per_label_f1 = std::move(f1);
    return cfg;
}

void criterion_vote_oracle(Check& check) {
    auto start = std::chrono::steady_clock::now();
    long disagreements = 0;
    for (std::size_t m = 2; m <= 5; ++m) {
        for (int labels = 2; labels <= 4; ++labels) {
            SplitMix64 rng(1000 * m + static_cast<std::uint64_t>(labels));
            for (int use_f1 = 0; use_f1 < 2; ++use_f1) {
                std::optional<Eigen::MatrixXd> f1;
                if (use_f1) f1 = quantized_f1(m, labels, rng);
                EnsembleConfig cfg = config_of(m, f1);
                std::vector<int> votes(m, 0);
                long total = 1;
                for (std::size_t i = 0; i < m; ++i) total *= labels;
                for (long code = 0; code < total; ++code) {
                    long rest = code;
                    for (std::size_t i = 0; i < m; ++i) {
                        votes[i] = static_cast<int>(rest % labels);
                        rest /= labels;
                    }
                    if (vote(votes, cfg).chosen != reference_vote(votes, f1)) ++disagreements;
                }
            }
        }
    }
    check.require(disagreements == 0,
                  "vote disagrees with the rule enumerator on " +
                      std::to_string(disagreements) + " tuples");
    check.require_lt(elapsed_since(start), 5.0, "runtime under 5 s");
}

void criterion_vote_invariants(Check& check) {
    SplitMix64 rng(2024012);
    long majority_violations = 0, unanimity_violations = 0;
    for (int trial = 0; trial < 10000; ++trial) {
        std::size_t m = 2 + rng.next_below(5);
        int labels = 2 + static_cast<int>(rng.next_below(5));
        std::optional<Eigen::MatrixXd> f1;
        if (rng.next_below(2)) f1 = quantized_f1(m, labels, rng);
        EnsembleConfig cfg = config_of(m, f1);
        std::vector<int> votes;
        for (std::size_t i = 0; i < m; ++i) {
            votes.push_back(static_cast<int>(rng.next_below(static_cast<std::uint64_t>(labels))));
        }
        VoteRecord record = vote(votes, cfg);
        std::map<int, int> tally;
        for (int v : votes) tally[v] += 1;
        for (auto& [label, count] : tally) {
            if (2 * count > static_cast<int>(m) && record.chosen != label) ++majority_violations;
        }
        if (tally.size() == 1 && record.chosen != votes[0]) ++unanimity_violations;
    }
    check.require(majority_violations == 0, "strict-majority violated " +
                                                std::to_string(majority_violations) + " times");
    check.require(unanimity_violations == 0,
                  "unanimity violated " + std::to_string(unanimity_violations) + " times");
}

// --- criterion 4 -------------------------------------------------------------

void criterion_metrics(Check& check) {
    LabelSpace space;
    space.add("A");
    space.add("B");
    space.add("C");
    MetricsReport fixture = f1_report(confusion_matrix({0, 0, 1, 1, 2}, {0, 1, 1, 1, 2}, space));
    check.require(std::abs(fixture.macro_f1 - 0.8222) < 1e-4, "macro F1 fixture");
    check.require(std::abs(fixture.weighted_f1 - 0.7867) < 1e-4, "weighted F1 fixture");
    check.require(std::abs(fixture.micro_f1 - 0.8) < 1e-4, "micro F1 fixture");

    SplitMix64 rng(99);
    long mismatches = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        int k = 2 + static_cast<int>(rng.next_below(5));
        int n = 1 + static_cast<int>(rng.next_below(50));
        LabelSpace s;
        for (int c = 0; c < k; ++c) s.add("L" + std::to_string(c));
        std::vector<int> gold, pred;
        for (int i = 0; i < n; ++i) {
            gold.push_back(static_cast<int>(rng.next_below(static_cast<std::uint64_t>(k))));
            pred.push_back(static_cast<int>(rng.next_below(static_cast<std::uint64_t>(k))));
        }
        MetricsReport r = f1_report(confusion_matrix(gold, pred, s));
        if (std::abs(r.micro_f1 - r.accuracy) > 1e-12) ++mismatches;
    }
    check.require(mismatches == 0,
                  "micro F1 != accuracy on " + std::to_string(mismatches) + " random sets");

    MetricsReport perfect = f1_report(confusion_matrix({0, 1, 2}, {0, 1, 2}, space));
    check.require(perfect.macro_f1 == 1.0 && perfect.micro_f1 == 1.0 &&
                      perfect.weighted_f1 == 1.0 && perfect.accuracy == 1.0,
                  "perfect predictions yield all ones");
}

// --- criterion 5 -------------------------------------------------------------

void criterion_kfold(Check& check) {
    for (int n = 10; n <= 200; ++n) {
        LabelSpace space;
        space.add("A");
        space.add("B");
        std::vector<int> labels;
        for (int i = 0; i < n; ++i) labels.push_back(i % 2);
        const int k = 5;

        auto folds = kfold_indices(labels, space, k, 42);
        auto again = kfold_indices(labels, space, k, 42);

        std::vector<int> seen(static_cast<std::size_t>(n), 0);
        bool deterministic = true;
        bool balanced = true;
        for (int f = 0; f < k; ++f) {
            if (folds[static_cast<std::size_t>(f)].test_ids !=
                again[static_cast<std::size_t>(f)].test_ids) {
                deterministic = false;
            }
            std::map<int, int> per_class;
            for (int id : folds[static_cast<std::size_t>(f)].test_ids) {
                seen[static_cast<std::size_t>(id)] += 1;
                per_class[labels[static_cast<std::size_t>(id)]] += 1;
            }
            for (int c = 0; c < 2; ++c) {
                int count_c = (n / 2) + (c == 0 ? n % 2 : 0);
                double ideal = static_cast<double>(count_c) / k;
                if (std::abs(per_class[c] - ideal) > 1.0) balanced = false;
            }
        }
        bool covering = true;
        for (int c : seen) {
            if (c != 1) covering = false;
        }
        check.require(covering, "folds not disjoint/covering at n=" + std::to_string(n));
        check.require(balanced, "per-class fold sizes off by >1 at n=" + std::to_string(n));
        check.require(deterministic, "folds not deterministic at n=" + std::to_string(n));
        if (!covering || !balanced || !deterministic) break;
    }
}

// --- criteria 6 + 9 -----------------------------------------------------------

struct EndToEndFixture {
    TmpDir tmp{"acceptance"};
    SyntheticCorpus corpus;
    EmbeddingTable<float> table;
    Fingerprint fingerprint;
    int max_len = 10;
    IndexSplit split;
    EncodedDataset train, validation, test;

    EndToEndFixture() {
        corpus = make_keyword_corpus(500, 1234);
        table = load_embeddings<float>(
            tmp.write("emb.vec", make_embedding_text(corpus.vocabulary, 16, 4321)));
        fingerprint.embedding_hash = table.file_hash;
        fingerprint.max_len = max_len;
        split = stratified_split_indices(corpus.dataset.label_vector(),
                                         corpus.dataset.label_space, {0.7, 0.15, 0.15}, 77);
        train = encode_ids(split.train);
        validation = encode_ids(split.validation);
        test = encode_ids(split.test);
    }

    EncodedDataset encode_ids(const std::vector<int>& ids) const {
        EncodedDataset out;
        out.ids = ids;
        out.fingerprint = fingerprint;
        for (int id : ids) {
            const auto& ex = corpus.dataset.examples[static_cast<std::size_t>(id)];
            out.sequences.push_back(encode_sequence(tokenize(ex.text), table, max_len));
            out.labels.push_back(ex.label);
        }
        return out;
    }

    TrainedClassifier train_model(const ModelConfig& cfg, const std::string& id) const {
        TrainConfig tc;
        tc.epochs = 20;
        tc.batch_size = 16;
        tc.lr = 1e-2;
        tc.seed = 2024;
        tc.early_stop_patience = 8;
        tc.validation_metric = MetricKind::WeightedF1;
        return train_classifier(train.sequences, train.labels, validation.sequences,
                                validation.labels, cfg, tc, table, corpus.dataset.label_space,
                                fingerprint, id);
    }

    double accuracy(const TrainedClassifier& model, const EncodedDataset& data) const {
        std::vector<Prediction> preds = predict(model, data, table);
        int correct = 0;
        for (std::size_t i = 0; i < preds.size(); ++i) {
            if (preds[i].label == data.labels[i]) ++correct;
        }
        return static_cast<double>(correct) / static_cast<double>(preds.size());
    }
};

void criterion_end_to_end(Check& check) {
    auto start = std::chrono::steady_clock::now();
    EndToEndFixture fx;

    CnnConfig cnn;
    cnn.conv_blocks = 3;
    cnn.base_width = 1;
    cnn.filters_per_width = 8;
    cnn.dropout = 0.2;
    RnnConfig lstm;
    lstm.cell = RnnConfig::Cell::Lstm;
    lstm.hidden_size = 16;
    lstm.dropout = 0.2;
    RnnConfig bilstm = lstm;
    bilstm.bidirectional = true;
    bilstm.hidden_size = 8;
    RnnConfig gru;
    gru.cell = RnnConfig::Cell::Gru;
    gru.hidden_size = 16;
    gru.dropout = 0.2;

    TrainedClassifier m_cnn = fx.train_model(cnn, "cnn");
    TrainedClassifier m_lstm = fx.train_model(lstm, "lstm");
    TrainedClassifier m_bilstm = fx.train_model(bilstm, "bilstm");
    TrainedClassifier m_gru = fx.train_model(gru, "gru");

    for (const auto* m : {&m_cnn, &m_lstm, &m_bilstm, &m_gru}) {
        double acc = fx.accuracy(*m, fx.test);
        check.require(acc >= 0.95, m->id + " test accuracy " + std::to_string(acc) + " < 0.95");
        check.require(static_cast<int>(m->history.size()) <= 20,
                      m->id + " exceeded 20 epochs");
    }

    // Strict-majority property, example for example, on the 3-member ensemble.
    std::vector<const TrainedClassifier*> members = {&m_cnn, &m_lstm, &m_gru};
    EnsembleConfig ens = derive_priority(members, fx.validation, fx.table);
    EnsembleResult result = ensemble_predict(members, fx.test, ens, fx.table);
    long violations = 0;
    for (std::size_t e = 0; e < result.records.size(); ++e) {
        const VoteRecord& rec = result.records[e];
        for (const auto& [label, count] : rec.tally) {
            if (2 * count > 3 && rec.chosen != label) ++violations;
        }
    }
    check.require(violations == 0,
                  "ensemble broke strict majority on " + std::to_string(violations) + " examples");
    check.require_lt(elapsed_since(start), 120.0, "runtime under 2 min");
}

void criterion_external_splice(Check& check) {
    EndToEndFixture fx;

    CnnConfig cnn;
    cnn.conv_blocks = 2;
    cnn.base_width = 1;
    cnn.filters_per_width = 8;
    cnn.dropout = 0.2;
    RnnConfig gru;
    gru.cell = RnnConfig::Cell::Gru;
    gru.hidden_size = 12;
    gru.dropout = 0.2;
    TrainedClassifier m_cnn = fx.train_model(cnn, "cnn");
    TrainedClassifier m_gru = fx.train_model(gru, "gru");

    // External predictions over validation + test ids with a deterministic
    // (deliberately imperfect) labeling.
    std::vector<int> covered = fx.split.validation;
    covered.insert(covered.end(), fx.split.test.begin(), fx.split.test.end());
    std::sort(covered.begin(), covered.end());
    std::map<int, std::string> file_labels;
    std::string tsv;
    for (int id : covered) {
        int gold = fx.corpus.dataset.examples[static_cast<std::size_t>(id)].label;
        int label = id % 7 == 0 ? (gold + 1) % 3 : gold;
        file_labels[id] = fx.corpus.dataset.label_space.name(label);
        tsv += std::to_string(id) + "\t" + file_labels[id] + "\n";
    }
    std::string path = fx.tmp.write("bert.tsv", tsv);
    TrainedClassifier external = load_external_predictions(
        path, fx.corpus.dataset.label_space, covered, "bert");

    std::vector<const TrainedClassifier*> members = {&m_cnn, &m_gru, &external};
    EnsembleConfig ens = derive_priority(members, fx.validation, fx.table);
    EnsembleResult result = ensemble_predict(members, fx.test, ens, fx.table);

    // The audit must reproduce the file's labels verbatim in the external
    // member's vote column.
    std::size_t bert_index = 0;
    for (std::size_t i = 0; i < ens.members.size(); ++i) {
        if (ens.members[i] == "bert") bert_index = i;
    }
    long mismatches = 0;
    for (const VoteRecord& rec : result.records) {
        const std::string& voted =
            fx.corpus.dataset.label_space.name(rec.member_labels[bert_index]);
        if (voted != file_labels.at(rec.example_id)) ++mismatches;
    }
    check.require(mismatches == 0, "external labels not reproduced verbatim on " +
                                       std::to_string(mismatches) + " records");

    // Evaluation completes over the spliced ensemble.
    MetricsReport report = f1_report(
        confusion_matrix(fx.test.labels, result.labels, fx.corpus.dataset.label_space));
    check.require(report.total == fx.test.size(), "evaluation did not cover the test set");
}

// --- criterion 7 ---------------------------------------------------------------

void criterion_dictionary(Check& check) {
    NormalizationDictionary dict = NormalizationDictionary::load(
        std::string(VOTESTACK_DATA_DIR) + "/normalization_dictionary.tsv");
    auto joined = [&](const std::string& token) {
        std::vector<std::string> out = apply_dictionary({token}, dict);
        std::string s;
        for (std::size_t i = 0; i < out.size(); ++i) {
            if (i) s += ' ';
            s += out[i];
        }
        return s;
    };
    check.require(joined("chờiiii") == "trời", "chờiiii -> trời");
    check.require(joined("vklllll") == "vkl", "vklllll -> vkl");
    check.require(joined("chetme") == "chết mẹ", "chetme -> chết mẹ");
    check.require(joined("kbh") == "không bao giờ",
                  "kbh -> không bao giờ");
}

// --- criterion 8 ----------------------------------------------------------------

int run_cli(const std::string& args) {
    std::string cmd = std::string(VOTESTACK_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    return WEXITSTATUS(std::system(cmd.c_str()));
}

std::string strip_timestamps(const std::string& text) {
    std::string out;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string::npos) end = text.size();
        std::string line = text.substr(pos, end - pos);
        if (line.find("created_at") == std::string::npos) {
            out += line;
            out += '\n';
        }
        if (end == text.size()) break;
        pos = end + 1;
    }
    return out;
}

void criterion_determinism(Check& check) {
    TmpDir tmp("determinism");
    SyntheticCorpus corpus = make_keyword_corpus(200, 31);
    tmp.write("data.tsv", dataset_to_tsv(corpus.dataset));
    tmp.write("emb.vec", make_embedding_text(corpus.vocabulary, 16, 32));
    std::string config = tmp.write(
        "config.json",
        "{\n"
        "  \"dataset\": {\"path\": \"" + tmp.file("data.tsv") + "\", \"format\": \"tsv\"},\n"
        "  \"embedding\": \"" + tmp.file("emb.vec") + "\",\n"
        "  \"split\": {\"ratios\": [0.7, 0.15, 0.15], \"stratify\": true},\n"
        "  \"models\": [\n"
        "    {\"id\": \"cnn1\", \"kind\": \"cnn\", \"conv_blocks\": 2, \"base_width\": 1, "
        "\"filters_per_width\": 8, \"dropout\": 0.2},\n"
        "    {\"id\": \"lstm1\", \"kind\": \"lstm\", \"hidden_size\": 8, \"dropout\": 0.2},\n"
        "    {\"id\": \"gru1\", \"kind\": \"gru\", \"hidden_size\": 8, \"dropout\": 0.2}\n"
        "  ],\n"
        "  \"train\": {\"epochs\": 4, \"batch_size\": 16, \"lr\": 0.003, \"seed\": 5, "
        "\"early_stop_patience\": 4},\n"
        "  \"ensemble\": {\"members\": [\"cnn1\", \"lstm1\", \"gru1\"]},\n"
        "  \"metric\": \"weighted_f1\",\n"
        "  \"seed\": 5\n"
        "}\n");

    for (const char* dir : {"run1", "run2"}) {
        std::string out = tmp.file(dir);
        check.require(run_cli("--config " + config + " --out " + out + " train") == 0,
                      std::string("train failed in ") + dir);
        check.require(run_cli("--config " + config + " --out " + out + " ensemble") == 0,
                      std::string("ensemble failed in ") + dir);
    }
    std::string preds1 = read_file(tmp.file("run1") + "/predictions.tsv");
    std::string preds2 = read_file(tmp.file("run2") + "/predictions.tsv");
    check.require(preds1 == preds2, "predictions files differ between identical runs");
    check.require(!preds1.empty(), "predictions file is empty");

    std::string man1 = strip_timestamps(read_file(tmp.file("run1") + "/manifest.json"));
    std::string man2 = strip_timestamps(read_file(tmp.file("run2") + "/manifest.json"));
    check.require(man1 == man2, "manifests differ beyond timestamps");

    std::string audit1 = read_file(tmp.file("run1") + "/audit.jsonl");
    std::string audit2 = read_file(tmp.file("run2") + "/audit.jsonl");
    check.require(audit1 == audit2, "audit records differ between identical runs");
}

}  // namespace

int main() {
    Harness harness;
    harness.run("gradient integrity (dense/conv/lstm/bilstm/gru vs finite differences)",
                criterion_gradients);
    harness.run("voting oracle (exhaustive agreement with the rule enumerator)",
                criterion_vote_oracle);
    harness.run("strict-majority and unanimity invariants (10k random tuples)",
                criterion_vote_invariants);
    harness.run("metrics fixtures (hand-computed F1, micro=accuracy, perfect=1)",
                criterion_metrics);
    harness.run("k-fold contract (disjoint, covering, balanced, deterministic, n=10..200)",
                criterion_kfold);
    harness.run("end-to-end synthetic run (4 models >= 0.95, ensemble strict majority)",
                criterion_end_to_end);
    harness.run("dictionary fidelity (shipped seed entries)", criterion_dictionary);
    harness.run("determinism (identical CLI runs produce identical predictions)",
                criterion_determinism);
    harness.run("external-member splice (file-backed member votes verbatim)",
                criterion_external_splice);

    if (harness.failed > 0) {
        std::cout << harness.failed << " criterion(s) failed\n";
        return 1;
    }
    std::cout << "all acceptance criteria passed\n";
    return 0;
}
