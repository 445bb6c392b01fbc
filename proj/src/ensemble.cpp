#include "votestack/ensemble.hpp"

#include <algorithm>
#include <numeric>

#include <nlohmann/json.hpp>

namespace votestack {

std::string resolution_name(VoteResolution r) {
    switch (r) {
        case VoteResolution::Majority: return "majority";
        case VoteResolution::PerLabelTiebreak: return "per_label_tiebreak";
        case VoteResolution::GlobalPriorityTiebreak: return "global_priority_tiebreak";
        case VoteResolution::AllDistinctFallback: return "all_distinct_fallback";
    }
    return "?";
}

VoteRecord vote(const std::vector<int>& member_labels, const EnsembleConfig& config,
                int example_id) {
    const std::size_t m = config.members.size();
    if (m < 2) {
        throw ArgumentError("vote: at least 2 ensemble members are required, got " +
                            std::to_string(m));
    }
    if (member_labels.size() != m) {
        throw ArgumentError("vote: " + std::to_string(member_labels.size()) + " votes for " +
                            std::to_string(m) + " members");
    }
    if (config.per_label_f1) {
        if (static_cast<std::size_t>(config.per_label_f1->rows()) != m) {
            throw ArgumentError("vote: per_label_f1 has " +
                                std::to_string(config.per_label_f1->rows()) + " rows for " +
                                std::to_string(m) + " members");
        }
        for (int label : member_labels) {
            if (label < 0 || label >= config.per_label_f1->cols()) {
                throw ArgumentError("vote: label index " + std::to_string(label) +
                                    " outside per_label_f1 with " +
                                    std::to_string(config.per_label_f1->cols()) + " labels");
            }
        }
    }

    VoteRecord record;
    record.example_id = example_id;
    record.member_labels = member_labels;
    for (int label : member_labels) record.tally[label] += 1;

    // All members disagree: fall back to the globally best model.
    if (record.tally.size() == m) {
        record.chosen = member_labels[0];
        record.resolution = VoteResolution::AllDistinctFallback;
        return record;
    }

    int max_votes = 0;
    for (const auto& [label, count] : record.tally) max_votes = std::max(max_votes, count);
    std::vector<int> tied;
    for (const auto& [label, count] : record.tally) {
        if (count == max_votes) tied.push_back(label);
    }
    if (tied.size() == 1) {
        record.chosen = tied[0];
        record.resolution = VoteResolution::Majority;
        return record;
    }

    if (config.per_label_f1) {
        // Score each tied label by the best validation F1 among the members
        // that voted for it.
        double best_score = -1;
        std::vector<int> best_labels;
        for (int label : tied) {
            double score = -1;
            for (std::size_t i = 0; i < m; ++i) {
                if (member_labels[i] == label) {
                    score = std::max(score, (*config.per_label_f1)(static_cast<Eigen::Index>(i),
                                                                   label));
                }
            }
            if (score > best_score) {
                best_score = score;
                best_labels = {label};
            } else if (score == best_score) {
                best_labels.push_back(label);
            }
        }
        if (best_labels.size() == 1) {
            record.chosen = best_labels[0];
            record.resolution = VoteResolution::PerLabelTiebreak;
            return record;
        }
        tied = best_labels;  // surviving ties fall through to global priority
    }

    for (std::size_t i = 0; i < m; ++i) {
        if (std::find(tied.begin(), tied.end(), member_labels[i]) != tied.end()) {
            record.chosen = member_labels[i];
            record.resolution = VoteResolution::GlobalPriorityTiebreak;
            return record;
        }
    }
    throw Error("vote: unreachable: no tied label was voted for");
}

namespace {

std::vector<const TrainedClassifier*> align_members(
    const std::vector<const TrainedClassifier*>& members, const EnsembleConfig& config) {
    std::vector<const TrainedClassifier*> aligned;
    aligned.reserve(config.members.size());
    for (const std::string& id : config.members) {
        const TrainedClassifier* found = nullptr;
        for (const TrainedClassifier* member : members) {
            if (member->id == id) {
                if (found) throw ArgumentError("ensemble: duplicate member id \"" + id + "\"");
                found = member;
            }
        }
        if (!found) throw ArgumentError("ensemble: no classifier supplied for member \"" + id + "\"");
        aligned.push_back(found);
    }
    return aligned;
}

}  // namespace

EnsembleResult ensemble_predict(const std::vector<const TrainedClassifier*>& members,
                                const EncodedDataset& data, const EnsembleConfig& config,
                                const EmbeddingTable<float>& table) {
    std::vector<const TrainedClassifier*> aligned = align_members(members, config);
    if (aligned.size() < 2) {
        throw ArgumentError("ensemble: at least 2 members are required");
    }
    for (const TrainedClassifier* member : aligned) {
        if (!member->is_external() && !(member->fingerprint == data.fingerprint)) {
            throw ContractError("ensemble: member \"" + member->id +
                                "\" fingerprint " + member->fingerprint.describe() +
                                " does not match the dataset's " + data.fingerprint.describe());
        }
    }

    // member_votes[i][e] = label voted by member i on example e
    std::vector<std::vector<int>> member_votes;
    member_votes.reserve(aligned.size());
    for (const TrainedClassifier* member : aligned) {
        std::vector<Prediction> preds = predict(*member, data, table);
        std::vector<int> labels;
        labels.reserve(preds.size());
        for (const auto& p : preds) labels.push_back(p.label);
        member_votes.push_back(std::move(labels));
    }

    EnsembleResult result;
    result.labels.reserve(data.sequences.size());
    result.records.reserve(data.sequences.size());
    for (int e = 0; e < data.size(); ++e) {
        std::vector<int> votes;
        votes.reserve(aligned.size());
        for (const auto& mv : member_votes) votes.push_back(mv[static_cast<std::size_t>(e)]);
        VoteRecord record = vote(votes, config, data.ids[static_cast<std::size_t>(e)]);
        result.labels.push_back(record.chosen);
        result.records.push_back(std::move(record));
    }
    return result;
}

EnsembleConfig derive_priority(const std::vector<const TrainedClassifier*>& members,
                               const EncodedDataset& validation,
                               const EmbeddingTable<float>& table, MetricKind metric) {
    if (members.empty()) {
        throw ArgumentError("derive_priority: no members given");
    }
    if (validation.labels.empty()) {
        throw ArgumentError("derive_priority: validation set has no gold labels");
    }
    const LabelSpace& space = members.front()->label_space;
    for (const TrainedClassifier* member : members) {
        if (!(member->label_space == space)) {
            throw ContractError("derive_priority: member \"" + member->id +
                                "\" uses a different label space");
        }
    }

    struct Scored {
        const TrainedClassifier* member;
        double metric_score;
        std::vector<double> per_label;
    };
    std::vector<Scored> scored;
    scored.reserve(members.size());
    for (const TrainedClassifier* member : members) {
        std::vector<Prediction> preds = predict(*member, validation, table);
        std::vector<int> pred_labels;
        pred_labels.reserve(preds.size());
        for (const auto& p : preds) pred_labels.push_back(p.label);
        MetricsReport report = f1_report(confusion_matrix(validation.labels, pred_labels, space));
        Scored s;
        s.member = member;
        s.metric_score = metric_value(report, metric);
        for (const auto& cm : report.per_class) s.per_label.push_back(cm.f1);
        scored.push_back(std::move(s));
    }
    std::stable_sort(scored.begin(), scored.end(),
                     [](const Scored& a, const Scored& b) { return a.metric_score > b.metric_score; });

    EnsembleConfig config;
    config.per_label_f1 =
        nn::Mat<double>(static_cast<Eigen::Index>(scored.size()), space.size());
    for (std::size_t i = 0; i < scored.size(); ++i) {
        config.members.push_back(scored[i].member->id);
        for (int c = 0; c < space.size(); ++c) {
            (*config.per_label_f1)(static_cast<Eigen::Index>(i), c) =
                scored[i].per_label[static_cast<std::size_t>(c)];
        }
    }
    return config;
}

std::string EnsembleConfig::to_json(const LabelSpace& labels) const {
    nlohmann::json j;
    j["members"] = members;
    if (per_label_f1) {
        nlohmann::json table = nlohmann::json::object();
        for (std::size_t i = 0; i < members.size(); ++i) {
            nlohmann::json row = nlohmann::json::object();
            for (int c = 0; c < labels.size(); ++c) {
                row[labels.name(c)] = (*per_label_f1)(static_cast<Eigen::Index>(i), c);
            }
            table[members[i]] = row;
        }
        j["per_label_f1"] = table;
    }
    return j.dump(2);
}

EnsembleConfig EnsembleConfig::from_json(const std::string& text, const LabelSpace& labels) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& err) {
        throw FormatError(std::string("ensemble config: ") + err.what());
    }
    EnsembleConfig config;
    config.members = j.at("members").get<std::vector<std::string>>();
    if (j.contains("per_label_f1")) {
        const auto& table = j["per_label_f1"];
        nn::Mat<double> f1(static_cast<Eigen::Index>(config.members.size()), labels.size());
        for (std::size_t i = 0; i < config.members.size(); ++i) {
            const auto& row = table.at(config.members[i]);
            for (int c = 0; c < labels.size(); ++c) {
                double v = row.at(labels.name(c)).get<double>();
                if (v < 0 || v > 1) {
                    throw FormatError("ensemble config: per_label_f1 value outside [0, 1]");
                }
                f1(static_cast<Eigen::Index>(i), c) = v;
            }
        }
        config.per_label_f1 = std::move(f1);
    }
    return config;
}

std::string vote_record_to_jsonl(const VoteRecord& record, const EnsembleConfig& config,
                                 const LabelSpace& labels) {
    nlohmann::json j;
    j["id"] = record.example_id;
    nlohmann::json votes = nlohmann::json::array();
    for (std::size_t i = 0; i < record.member_labels.size(); ++i) {
        votes.push_back({{"member", config.members[i]},
                         {"label", labels.name(record.member_labels[i])}});
    }
    j["votes"] = votes;
    nlohmann::json tally = nlohmann::json::object();
    for (const auto& [label, count] : record.tally) tally[labels.name(label)] = count;
    j["tally"] = tally;
    j["chosen"] = labels.name(record.chosen);
    j["resolution"] = resolution_name(record.resolution);
    return j.dump();
}

}  // namespace votestack
