#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "votestack/common.hpp"

namespace votestack {

// Ordered inventory of label strings. Indices are assigned in order of
// first appearance and stay fixed for the lifetime of a dataset; every
// serialized model carries its LabelSpace so indices never drift.
struct LabelSpace {
    std::vector<std::string> labels;

    int size() const { return static_cast<int>(labels.size()); }

    // Index of `name`, or -1 when absent.
    int index_of(const std::string& name) const {
        for (std::size_t i = 0; i < labels.size(); ++i) {
            if (labels[i] == name) return static_cast<int>(i);
        }
        return -1;
    }

    // Index of `name`, appending it on first sight.
    int add(const std::string& name) {
        int idx = index_of(name);
        if (idx >= 0) return idx;
        labels.push_back(name);
        return static_cast<int>(labels.size()) - 1;
    }

    const std::string& name(int index) const { return labels.at(static_cast<std::size_t>(index)); }

    bool operator==(const LabelSpace&) const = default;
};

struct LabeledExample {
    int id = 0;          // load-order ordinal, 0..n-1
    std::string text;    // UTF-8, non-empty after trimming
    int label = 0;       // index into the dataset's LabelSpace
};

struct Dataset {
    std::vector<LabeledExample> examples;
    LabelSpace label_space;

    int size() const { return static_cast<int>(examples.size()); }
    std::vector<int> label_vector() const {
        std::vector<int> out;
        out.reserve(examples.size());
        for (const auto& ex : examples) out.push_back(ex.label);
        return out;
    }
};

enum class DatasetFormat { Tsv, Jsonl };

// Loads a labeled dataset.
//
// TSV: UTF-8, LF line endings, header `text<TAB>label`, no quoting (tabs are
// forbidden inside text). JSONL: one object per line with string fields
// `text` and `label`. Lines starting with `#` before the data are ignored in
// TSV files so toolkit-written artifacts (which embed a config hash comment)
// stay loadable.
Dataset load_dataset(const std::string& path, DatasetFormat format);

struct DatasetSplit {
    std::vector<LabeledExample> train;
    std::vector<LabeledExample> validation;
    std::vector<LabeledExample> test;
};

struct SplitRatios {
    double train = 0.8;
    double validation = 0.1;
    double test = 0.1;
};

struct IndexSplit {
    std::vector<int> train;
    std::vector<int> validation;
    std::vector<int> test;
};

// Index-level split engine: `labels[i]` is the class of example i.
// With stratify, quotas are computed per class by the largest-remainder
// method, so |count(c, s) - ratio(s) * count(c)| < 1 for every class and
// split. Deterministic for a fixed seed; output index lists are ascending.
IndexSplit stratified_split_indices(const std::vector<int>& labels, const LabelSpace& space,
                                    SplitRatios ratios, std::uint64_t seed, bool stratify = true);

DatasetSplit stratified_split(const Dataset& dataset, SplitRatios ratios, std::uint64_t seed,
                              bool stratify = true);

// Two-way carve used for early-stopping validation slices.
std::pair<std::vector<int>, std::vector<int>> carve_validation(const std::vector<int>& labels,
                                                               const LabelSpace& space,
                                                               double validation_fraction,
                                                               std::uint64_t seed,
                                                               bool stratify = true);

struct Fold {
    std::vector<int> train_ids;
    std::vector<int> test_ids;
};

// Stratified k-fold partitions: test folds are pairwise disjoint, cover the
// dataset, and per-class fold sizes differ by at most one. Each fold's train
// part is the complement of its test part.
std::vector<Fold> kfold_indices(const std::vector<int>& labels, const LabelSpace& space, int k,
                                std::uint64_t seed, bool stratify = true);

std::vector<std::pair<std::vector<LabeledExample>, std::vector<LabeledExample>>> kfold_partitions(
    const Dataset& dataset, int k, std::uint64_t seed, bool stratify = true);

}  // namespace votestack
