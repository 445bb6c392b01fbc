#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "votestack/common.hpp"
#include "votestack/corpus.hpp"
#include "votestack/embed.hpp"

namespace votestack {

enum class MetricKind { WeightedF1, MicroF1, MacroF1 };

std::string metric_name(MetricKind metric);
MetricKind metric_from_name(const std::string& name);

// Rows are gold labels, columns are predictions; counts sum to the number
// of evaluated examples.
struct ConfusionMatrix {
    Eigen::MatrixXi counts;
    LabelSpace label_space;

    int total() const { return counts.sum(); }
};

ConfusionMatrix confusion_matrix(const std::vector<int>& gold, const std::vector<int>& pred,
                                 const LabelSpace& space);

struct ClassMetrics {
    double precision = 0;
    double recall = 0;
    double f1 = 0;
    int support = 0;
};

struct MetricsReport {
    std::vector<ClassMetrics> per_class;  // aligned with label_space
    LabelSpace label_space;
    double macro_f1 = 0;     // unweighted mean over the full label space
    double micro_f1 = 0;     // pooled TP/FP/FN (equals accuracy here)
    double weighted_f1 = 0;  // support-weighted mean
    double accuracy = 0;
    int total = 0;
};

// Per-class precision/recall/F1 with the zero-denominator convention
// (undefined values report 0). Macro averages over every class in the label
// space, including classes absent from this evaluation.
MetricsReport f1_report(const ConfusionMatrix& cm);

double metric_value(const MetricsReport& report, MetricKind metric);

std::string report_to_json(const MetricsReport& report);

// Aligned text grid: one row per (name, report) pair, metric columns.
std::string format_report_table(const std::vector<std::pair<std::string, MetricsReport>>& rows);

// --- k-fold evaluation runner -------------------------------------------

using PredictFn = std::function<std::vector<int>(const std::vector<EncodedSequence>&)>;

// Trains on a fold's train part and returns a predictor for its test part.
// fold_seed is derived as run seed + fold index so folds are independent and
// reproducible.
using FitFn = std::function<PredictFn(const std::vector<EncodedSequence>& train_x,
                                      const std::vector<int>& train_y,
                                      const std::vector<EncodedSequence>& validation_x,
                                      const std::vector<int>& validation_y,
                                      std::uint64_t fold_seed)>;

struct CrossValidation {
    std::vector<double> fold_scores;
    double mean = 0;
    double stddev = 0;  // population standard deviation over folds
};

// Stratified k-fold protocol: per fold, a seeded validation slice (default
// 10%, stratified) is carved from the train part for early stopping, the
// model is fit on the remainder and scored on the held-out fold.
CrossValidation crossvalidate(const std::vector<EncodedSequence>& xs, const std::vector<int>& ys,
                              const LabelSpace& space, int k, std::uint64_t seed,
                              MetricKind metric, const FitFn& fit, bool stratify = true,
                              double validation_fraction = 0.1);

}  // namespace votestack
