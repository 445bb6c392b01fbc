#include "votestack/evalkit.hpp"

#include <cmath>
#include <iomanip>
#include <sstream>

#include <nlohmann/json.hpp>

namespace votestack {

std::string metric_name(MetricKind metric) {
    switch (metric) {
        case MetricKind::WeightedF1: return "weighted_f1";
        case MetricKind::MicroF1: return "micro_f1";
        case MetricKind::MacroF1: return "macro_f1";
    }
    return "?";
}

MetricKind metric_from_name(const std::string& name) {
    if (name == "weighted_f1") return MetricKind::WeightedF1;
    if (name == "micro_f1") return MetricKind::MicroF1;
    if (name == "macro_f1") return MetricKind::MacroF1;
    throw ArgumentError("unknown metric \"" + name +
                        "\" (expected weighted_f1, micro_f1 or macro_f1)");
}

ConfusionMatrix confusion_matrix(const std::vector<int>& gold, const std::vector<int>& pred,
                                 const LabelSpace& space) {
    if (gold.empty() || gold.size() != pred.size()) {
        throw ArgumentError("confusion_matrix: need equal-length non-empty gold/pred, got " +
                            std::to_string(gold.size()) + "/" + std::to_string(pred.size()));
    }
    const int k = space.size();
    ConfusionMatrix cm;
    cm.label_space = space;
    cm.counts = Eigen::MatrixXi::Zero(k, k);
    for (std::size_t i = 0; i < gold.size(); ++i) {
        int g = gold[i], p = pred[i];
        if (g < 0 || g >= k || p < 0 || p >= k) {
            throw ArgumentError("confusion_matrix: label index out of range at position " +
                                std::to_string(i));
        }
        cm.counts(g, p) += 1;
    }
    return cm;
}

MetricsReport f1_report(const ConfusionMatrix& cm) {
    const int k = cm.label_space.size();
    if (cm.total() <= 0) {
        throw ArgumentError("f1_report: empty confusion matrix");
    }
    MetricsReport report;
    report.label_space = cm.label_space;
    report.total = cm.total();
    report.per_class.resize(static_cast<std::size_t>(k));

    long pooled_tp = 0, pooled_fp = 0, pooled_fn = 0;
    double weighted_sum = 0, macro_sum = 0;
    for (int c = 0; c < k; ++c) {
        const int tp = cm.counts(c, c);
        const int fn = cm.counts.row(c).sum() - tp;
        const int fp = cm.counts.col(c).sum() - tp;
        ClassMetrics& m = report.per_class[static_cast<std::size_t>(c)];
        m.support = tp + fn;
        m.precision = (tp + fp) > 0 ? static_cast<double>(tp) / (tp + fp) : 0.0;
        m.recall = (tp + fn) > 0 ? static_cast<double>(tp) / (tp + fn) : 0.0;
        m.f1 = (m.precision + m.recall) > 0 ? 2 * m.precision * m.recall / (m.precision + m.recall)
                                            : 0.0;
        pooled_tp += tp;
        pooled_fp += fp;
        pooled_fn += fn;
        weighted_sum += m.f1 * m.support;
        macro_sum += m.f1;
    }
    report.macro_f1 = macro_sum / k;
    report.weighted_f1 = weighted_sum / report.total;
    double micro_p = (pooled_tp + pooled_fp) > 0
                         ? static_cast<double>(pooled_tp) / (pooled_tp + pooled_fp)
                         : 0.0;
    double micro_r = (pooled_tp + pooled_fn) > 0
                         ? static_cast<double>(pooled_tp) / (pooled_tp + pooled_fn)
                         : 0.0;
    report.micro_f1 = (micro_p + micro_r) > 0 ? 2 * micro_p * micro_r / (micro_p + micro_r) : 0.0;
    report.accuracy = static_cast<double>(pooled_tp) / report.total;
    return report;
}

double metric_value(const MetricsReport& report, MetricKind metric) {
    switch (metric) {
        case MetricKind::WeightedF1: return report.weighted_f1;
        case MetricKind::MicroF1: return report.micro_f1;
        case MetricKind::MacroF1: return report.macro_f1;
    }
    return 0;
}

std::string report_to_json(const MetricsReport& report) {
    nlohmann::json j;
    j["total"] = report.total;
    j["accuracy"] = report.accuracy;
    j["macro_f1"] = report.macro_f1;
    j["micro_f1"] = report.micro_f1;
    j["weighted_f1"] = report.weighted_f1;
    nlohmann::json per_class = nlohmann::json::object();
    for (int c = 0; c < report.label_space.size(); ++c) {
        const ClassMetrics& m = report.per_class[static_cast<std::size_t>(c)];
        per_class[report.label_space.name(c)] = {{"precision", m.precision},
                                                 {"recall", m.recall},
                                                 {"f1", m.f1},
                                                 {"support", m.support}};
    }
    j["per_class"] = per_class;
    return j.dump(2);
}

std::string format_report_table(const std::vector<std::pair<std::string, MetricsReport>>& rows) {
    std::size_t name_width = 5;
    for (const auto& [name, _] : rows) name_width = std::max(name_width, name.size());

    std::ostringstream out;
    out << std::left << std::setw(static_cast<int>(name_width + 2)) << "model";
    for (const char* col : {"weighted_f1", "micro_f1", "macro_f1", "accuracy"}) {
        out << std::right << std::setw(13) << col;
    }
    out << '\n';
    out << std::fixed << std::setprecision(4);
    for (const auto& [name, report] : rows) {
        out << std::left << std::setw(static_cast<int>(name_width + 2)) << name;
        out << std::right << std::setw(13) << report.weighted_f1 << std::setw(13)
            << report.micro_f1 << std::setw(13) << report.macro_f1 << std::setw(13)
            << report.accuracy;
        out << '\n';
    }
    return out.str();
}

CrossValidation crossvalidate(const std::vector<EncodedSequence>& xs, const std::vector<int>& ys,
                              const LabelSpace& space, int k, std::uint64_t seed,
                              MetricKind metric, const FitFn& fit, bool stratify,
                              double validation_fraction) {
    if (xs.size() != ys.size()) {
        throw ArgumentError("crossvalidate: example/label count mismatch");
    }
    std::vector<Fold> folds = kfold_indices(ys, space, k, seed, stratify);

    CrossValidation cv;
    for (std::size_t f = 0; f < folds.size(); ++f) {
        const Fold& fold = folds[f];
        const std::uint64_t fold_seed = seed + f;

        std::vector<int> fold_train_labels;
        fold_train_labels.reserve(fold.train_ids.size());
        for (int i : fold.train_ids) fold_train_labels.push_back(ys[static_cast<std::size_t>(i)]);
        auto [fit_local, val_local] =
            carve_validation(fold_train_labels, space, validation_fraction, fold_seed, stratify);

        auto gather = [&](const std::vector<int>& local_ids, const std::vector<int>& base,
                          std::vector<EncodedSequence>& x_out, std::vector<int>& y_out) {
            for (int local : local_ids) {
                int global = base[static_cast<std::size_t>(local)];
                x_out.push_back(xs[static_cast<std::size_t>(global)]);
                y_out.push_back(ys[static_cast<std::size_t>(global)]);
            }
        };
        std::vector<EncodedSequence> train_x, val_x, test_x;
        std::vector<int> train_y, val_y, test_y;
        gather(fit_local, fold.train_ids, train_x, train_y);
        gather(val_local, fold.train_ids, val_x, val_y);
        for (int i : fold.test_ids) {
            test_x.push_back(xs[static_cast<std::size_t>(i)]);
            test_y.push_back(ys[static_cast<std::size_t>(i)]);
        }

        PredictFn predict_fold;
        try {
            predict_fold = fit(train_x, train_y, val_x, val_y, fold_seed);
        } catch (const DivergenceError& err) {
            throw DivergenceError("fold " + std::to_string(f) + ": " + err.what());
        }
        std::vector<int> pred = predict_fold(test_x);
        MetricsReport report = f1_report(confusion_matrix(test_y, pred, space));
        cv.fold_scores.push_back(metric_value(report, metric));
    }

    double sum = 0;
    for (double s : cv.fold_scores) sum += s;
    cv.mean = sum / static_cast<double>(cv.fold_scores.size());
    double var = 0;
    for (double s : cv.fold_scores) var += (s - cv.mean) * (s - cv.mean);
    cv.stddev = std::sqrt(var / static_cast<double>(cv.fold_scores.size()));
    return cv;
}

}  // namespace votestack
