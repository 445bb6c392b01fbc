#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "votestack/evalkit.hpp"
#include "votestack/models.hpp"
#include "votestack/nn/types.hpp"

namespace votestack {

// Ensemble membership and priority data. The members list is ordered by
// global priority (index 0 = best-performing model). per_label_f1, when
// present, holds each member's validation F1 per label (rows aligned with
// members, columns with the label space) and drives the per-label tie-break.
struct EnsembleConfig {
    std::vector<std::string> members;
    std::optional<nn::Mat<double>> per_label_f1;  // members.size() x num_labels

    std::string to_json(const LabelSpace& labels) const;
    static EnsembleConfig from_json(const std::string& text, const LabelSpace& labels);
};

enum class VoteResolution {
    Majority,                // unique tally maximum
    PerLabelTiebreak,        // tie broken by best per-label validation F1
    GlobalPriorityTiebreak,  // tie broken by global member priority
    AllDistinctFallback      // every member voted differently
};

std::string resolution_name(VoteResolution r);

struct VoteRecord {
    int example_id = -1;
    std::vector<int> member_labels;  // aligned with config.members
    std::map<int, int> tally;        // label -> vote count
    int chosen = -1;
    VoteResolution resolution = VoteResolution::Majority;
};

// Hard vote over one example. member_labels[i] is the label predicted by
// config.members[i]. Resolution order:
//   1. all m votes distinct        -> highest-priority member's label
//   2. unique tally maximum        -> majority
//   3. tie + per_label_f1 present  -> label with the best per-label F1 among
//                                     its voters; surviving ties fall through
//   4. remaining tie               -> label voted by the highest-priority member
VoteRecord vote(const std::vector<int>& member_labels, const EnsembleConfig& config,
                int example_id = -1);

struct EnsembleResult {
    std::vector<int> labels;
    std::vector<VoteRecord> records;
};

// Applies vote() per example. Members may be passed in any order; they are
// matched to config.members by id. Every neural member's fingerprint must
// equal the dataset's.
EnsembleResult ensemble_predict(const std::vector<const TrainedClassifier*>& members,
                                const EncodedDataset& data, const EnsembleConfig& config,
                                const EmbeddingTable<float>& table);

// Builds the priority data from validation predictions: global order sorts
// members by descending validation metric (stable on ties), per_label_f1
// holds each member's per-class validation F1.
EnsembleConfig derive_priority(const std::vector<const TrainedClassifier*>& members,
                               const EncodedDataset& validation,
                               const EmbeddingTable<float>& table,
                               MetricKind metric = MetricKind::WeightedF1);

// JSONL audit line for one vote record (labels exported as strings).
std::string vote_record_to_jsonl(const VoteRecord& record, const EnsembleConfig& config,
                                 const LabelSpace& labels);

}  // namespace votestack
