#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <map>

#include "support/tmpdir.hpp"
#include "support/vote_reference.hpp"
#include "votestack/ensemble.hpp"

using namespace votestack;
using votestack::testing::reference_vote;
using votestack::testing::TmpDir;

namespace {

// File-backed members make cheap ensemble fixtures: no training, fully
// scripted per-id votes.
TrainedClassifier scripted_member(TmpDir& tmp, const std::string& id, const LabelSpace& space,
                                  const std::map<int, int>& label_by_id) {
    std::string tsv;
    std::vector<int> ids;
    for (const auto& [ex_id, label] : label_by_id) {
        tsv += std::to_string(ex_id) + "\t" + space.name(label) + "\n";
        ids.push_back(ex_id);
    }
    return load_external_predictions(tmp.write(id + ".tsv", tsv), space, ids, id);
}

EncodedDataset scripted_dataset(const std::vector<int>& ids, const std::vector<int>& gold) {
    EncodedDataset data;
    data.ids = ids;
    data.labels = gold;
    data.sequences.resize(ids.size());
    return data;
}

EnsembleConfig make_config(std::size_t m, std::optional<Eigen::MatrixXd> f1 = std::nullopt) {
    EnsembleConfig cfg;
    for (std::size_t i = 0; i < m; ++i) cfg.members.push_back("m" + std::to_string(i));
    cfg.per_label_f1 = std::move(f1);
    return cfg;
}

// Quantized pseudo-random F1 matrix; the coarse grid makes score ties
// common enough to exercise the fall-through branch.
Eigen::MatrixXd quantized_f1(std::size_t m, int labels, SplitMix64& rng) {
    Eigen::MatrixXd f1(static_cast<Eigen::Index>(m), labels);
    for (Eigen::Index r = 0; r < f1.rows(); ++r) {
        for (Eigen::Index c = 0; c < f1.cols(); ++c) {
            f1(r, c) = 0.25 * static_cast<double>(rng.next_below(5));
        }
    }
    return f1;
}

}  // namespace

TEST_CASE("vote: strict majority") {
    auto cfg = make_config(3);
    VoteRecord r = vote({0, 0, 1}, cfg);
    CHECK(r.chosen == 0);
    CHECK(r.resolution == VoteResolution::Majority);
    CHECK(r.tally.at(0) == 2);
    CHECK(r.tally.at(1) == 1);
}

TEST_CASE("vote: all distinct falls back to the best member") {
    auto cfg = make_config(3);
    VoteRecord r = vote({0, 1, 2}, cfg);
    CHECK(r.chosen == 0);
    CHECK(r.resolution == VoteResolution::AllDistinctFallback);
}

TEST_CASE("vote: per-label F1 breaks 2-2 ties") {
    // Votes (A, A, B, B); best A-voter has F1_A = 0.9, best B-voter 0.7.
    Eigen::MatrixXd f1(4, 2);
    f1 << 0.9, 0.1,
          0.2, 0.1,
          0.3, 0.7,
          0.3, 0.6;
    auto cfg = make_config(4, f1);
    VoteRecord r = vote({0, 0, 1, 1}, cfg);
    CHECK(r.chosen == 0);
    CHECK(r.resolution == VoteResolution::PerLabelTiebreak);
}

TEST_CASE("vote: tied per-label scores fall through to global priority") {
    Eigen::MatrixXd f1(4, 2);
    f1 << 0.5, 0.5,
          0.5, 0.5,
          0.5, 0.5,
          0.5, 0.5;
    auto cfg = make_config(4, f1);
    // Member 0 (highest priority) voted B.
    VoteRecord r = vote({1, 0, 1, 0}, cfg);
    CHECK(r.chosen == 1);
    CHECK(r.resolution == VoteResolution::GlobalPriorityTiebreak);
}

TEST_CASE("vote: tie without per-label table goes to global priority") {
    auto cfg = make_config(4);
    VoteRecord r = vote({1, 1, 0, 0}, cfg);
    CHECK(r.chosen == 1);
    CHECK(r.resolution == VoteResolution::GlobalPriorityTiebreak);
}

TEST_CASE("vote: argument errors") {
    auto cfg = make_config(3);
    CHECK_THROWS_AS(vote({0, 1}, cfg), ArgumentError);
    CHECK_THROWS_AS(vote({0}, make_config(1)), ArgumentError);
    auto with_f1 = make_config(2, Eigen::MatrixXd::Constant(2, 2, 0.5));
    CHECK_THROWS_AS(vote({0, 3}, with_f1), ArgumentError);
}

TEST_CASE("vote agrees with the brute-force enumerator exhaustively") {
    // All |labels|^m tuples for m in 2..5, |labels| in 2..4, with and
    // without a per-label F1 table.
    for (std::size_t m = 2; m <= 5; ++m) {
        for (int labels = 2; labels <= 4; ++labels) {
            SplitMix64 rng(m * 100 + static_cast<std::uint64_t>(labels));
            for (int use_f1 = 0; use_f1 < 2; ++use_f1) {
                std::optional<Eigen::MatrixXd> f1;
                if (use_f1) f1 = quantized_f1(m, labels, rng);
                auto cfg = make_config(m, f1);

                std::vector<int> votes(m, 0);
                long total = static_cast<long>(std::pow(labels, static_cast<double>(m)));
                for (long code = 0; code < total; ++code) {
                    long rest = code;
                    for (std::size_t i = 0; i < m; ++i) {
                        votes[i] = static_cast<int>(rest % labels);
                        rest /= labels;
                    }
                    int expected = reference_vote(votes, f1);
                    VoteRecord got = vote(votes, cfg);
                    REQUIRE(got.chosen == expected);
                    // Tally always sums to m and contains the winner.
                    int sum = 0;
                    for (auto& [lb, cnt] : got.tally) sum += cnt;
                    REQUIRE(sum == static_cast<int>(m));
                    REQUIRE(got.tally.count(got.chosen) == 1);
                }
            }
        }
    }
}

TEST_CASE("strict-majority soundness and unanimity on random tuples") {
    SplitMix64 rng(424242);
    for (int trial = 0; trial < 10000; ++trial) {
        std::size_t m = 2 + rng.next_below(5);         // 2..6 members
        int labels = 2 + static_cast<int>(rng.next_below(5));  // 2..6 labels
        std::optional<Eigen::MatrixXd> f1;
        if (rng.next_below(2)) f1 = quantized_f1(m, labels, rng);
        auto cfg = make_config(m, f1);

        std::vector<int> votes;
        for (std::size_t i = 0; i < m; ++i) {
            votes.push_back(static_cast<int>(rng.next_below(static_cast<std::uint64_t>(labels))));
        }
        VoteRecord r = vote(votes, cfg);

        std::map<int, int> tally;
        for (int v : votes) tally[v] += 1;
        for (auto& [label, count] : tally) {
            if (count * 2 > static_cast<int>(m)) {
                REQUIRE(r.chosen == label);  // strict majority wins regardless of config
            }
        }
        bool unanimous = tally.size() == 1;
        if (unanimous) {
            REQUIRE(r.chosen == votes[0]);
            REQUIRE(r.resolution == VoteResolution::Majority);
        }
    }
}

TEST_CASE("vote record serializes labels as strings") {
    LabelSpace space;
    space.add("ANGER");
    space.add("JOY");
    auto cfg = make_config(2);
    VoteRecord r = vote({1, 1}, cfg, 7);
    std::string line = vote_record_to_jsonl(r, cfg, space);
    CHECK(line.find("\"JOY\"") != std::string::npos);
    CHECK(line.find("\"id\":7") != std::string::npos);
    CHECK(line.find("majority") != std::string::npos);
}

TEST_CASE("derive_priority ranks members and tabulates per-class F1") {
    TmpDir tmp("priority");
    LabelSpace space;
    space.add("A");
    space.add("B");

    // 10 validation examples, 5 of each class.
    std::vector<int> ids, gold;
    std::map<int, int> perfect, always_a;
    for (int i = 0; i < 10; ++i) {
        ids.push_back(i);
        gold.push_back(i % 2);
        perfect[i] = i % 2;
        always_a[i] = 0;
    }
    TrainedClassifier good = scripted_member(tmp, "good", space, perfect);
    TrainedClassifier meh = scripted_member(tmp, "meh", space, always_a);
    EncodedDataset validation = scripted_dataset(ids, gold);
    EmbeddingTable<float> no_table;

    EnsembleConfig cfg = derive_priority({&meh, &good}, validation, no_table);
    CHECK(cfg.members == std::vector<std::string>{"good", "meh"});
    REQUIRE(cfg.per_label_f1.has_value());
    // Perfect member: per-class F1 all 1. Constant member: the evalkit
    // oracle gives F1(A) = 2/3 (P=0.5, R=1) and F1(B) = 0.
    CHECK((*cfg.per_label_f1)(0, 0) == doctest::Approx(1.0));
    CHECK((*cfg.per_label_f1)(0, 1) == doctest::Approx(1.0));
    CHECK((*cfg.per_label_f1)(1, 0) == doctest::Approx(2.0 / 3));
    CHECK((*cfg.per_label_f1)(1, 1) == doctest::Approx(0.0));

    // Metric ties keep the original member order (stable sort).
    TrainedClassifier twin = scripted_member(tmp, "twin", space, always_a);
    EnsembleConfig tied = derive_priority({&meh, &twin}, validation, no_table);
    CHECK(tied.members == std::vector<std::string>{"meh", "twin"});
}

TEST_CASE("ensemble_predict is invariant to the member argument order") {
    TmpDir tmp("perm");
    LabelSpace space;
    space.add("A");
    space.add("B");
    space.add("C");

    std::vector<int> ids, gold;
    std::map<int, int> v0, v1, v2;
    SplitMix64 rng(88);
    for (int i = 0; i < 30; ++i) {
        ids.push_back(i);
        gold.push_back(i % 3);
        v0[i] = static_cast<int>(rng.next_below(3));
        v1[i] = static_cast<int>(rng.next_below(3));
        v2[i] = static_cast<int>(rng.next_below(3));
    }
    TrainedClassifier m0 = scripted_member(tmp, "m0", space, v0);
    TrainedClassifier m1 = scripted_member(tmp, "m1", space, v1);
    TrainedClassifier m2 = scripted_member(tmp, "m2", space, v2);
    EncodedDataset data = scripted_dataset(ids, gold);
    EmbeddingTable<float> no_table;

    EnsembleConfig cfg;
    cfg.members = {"m1", "m0", "m2"};  // priority order, fixed
    EnsembleResult a = ensemble_predict({&m0, &m1, &m2}, data, cfg, no_table);
    EnsembleResult b = ensemble_predict({&m2, &m0, &m1}, data, cfg, no_table);
    CHECK(a.labels == b.labels);
    for (std::size_t i = 0; i < a.records.size(); ++i) {
        CHECK(a.records[i].member_labels == b.records[i].member_labels);
        CHECK(a.records[i].resolution == b.records[i].resolution);
        // Records follow the input example order.
        CHECK(a.records[i].example_id == ids[i]);
    }
}

TEST_CASE("two-of-three-correct members give a perfect ensemble") {
    // On every example exactly two members vote the gold label; the strict
    // majority makes the ensemble perfect regardless of the priority data.
    TmpDir tmp("majority");
    LabelSpace space;
    space.add("A");
    space.add("B");
    space.add("C");
    std::vector<int> ids, gold;
    std::map<int, int> v0, v1, v2;
    SplitMix64 rng(4242);
    for (int i = 0; i < 60; ++i) {
        ids.push_back(i);
        int g = i % 3;
        gold.push_back(g);
        int wrong = (g + 1 + static_cast<int>(rng.next_below(2))) % 3;
        int liar = static_cast<int>(rng.next_below(3));
        v0[i] = liar == 0 ? wrong : g;
        v1[i] = liar == 1 ? wrong : g;
        v2[i] = liar == 2 ? wrong : g;
    }
    TrainedClassifier m0 = scripted_member(tmp, "m0", space, v0);
    TrainedClassifier m1 = scripted_member(tmp, "m1", space, v1);
    TrainedClassifier m2 = scripted_member(tmp, "m2", space, v2);
    EncodedDataset data = scripted_dataset(ids, gold);
    EmbeddingTable<float> no_table;
    EnsembleConfig cfg;
    cfg.members = {"m0", "m1", "m2"};
    EnsembleResult out = ensemble_predict({&m0, &m1, &m2}, data, cfg, no_table);
    CHECK(out.labels == gold);
}

TEST_CASE("two copies of one member reproduce that member") {
    TmpDir tmp("copies");
    LabelSpace space;
    space.add("A");
    space.add("B");
    std::vector<int> ids, gold;
    std::map<int, int> votes;
    for (int i = 0; i < 12; ++i) {
        ids.push_back(i);
        gold.push_back(i % 2);
        votes[i] = (i / 2) % 2;
    }
    TrainedClassifier x = scripted_member(tmp, "x", space, votes);
    TrainedClassifier y = scripted_member(tmp, "y", space, votes);
    EncodedDataset data = scripted_dataset(ids, gold);
    EmbeddingTable<float> no_table;

    EnsembleConfig cfg;
    cfg.members = {"x", "y"};
    EnsembleResult out = ensemble_predict({&x, &y}, data, cfg, no_table);
    std::vector<Prediction> solo = predict(x, data, no_table);
    for (std::size_t i = 0; i < out.labels.size(); ++i) {
        CHECK(out.labels[i] == solo[i].label);
        CHECK(out.records[i].resolution == VoteResolution::Majority);
    }
}

TEST_CASE("ensemble config JSON round trip") {
    LabelSpace space;
    space.add("A");
    space.add("B");
    EnsembleConfig cfg;
    cfg.members = {"lstm1", "cnn1"};
    Eigen::MatrixXd f1(2, 2);
    f1 << 0.9, 0.8, 0.7, 0.6;
    cfg.per_label_f1 = f1;

    EnsembleConfig back = EnsembleConfig::from_json(cfg.to_json(space), space);
    CHECK(back.members == cfg.members);
    REQUIRE(back.per_label_f1.has_value());
    CHECK((*back.per_label_f1 - f1).cwiseAbs().maxCoeff() == 0.0);

    CHECK_THROWS_AS(EnsembleConfig::from_json("{not json", space), FormatError);
    CHECK_THROWS_AS(EnsembleConfig::from_json(
                        "{\"members\": [\"x\",\"y\"], \"per_label_f1\": {\"x\": {\"A\": 2.0, "
                        "\"B\": 0.1}, \"y\": {\"A\": 0.1, \"B\": 0.1}}}",
                        space),
                    FormatError);
}
