#include "votestack/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include <nlohmann/json.hpp>

namespace votestack {

namespace {

std::vector<std::string> split_lines(const std::string& content) {
    std::vector<std::string> lines;
    std::size_t start = 0;
    while (start <= content.size()) {
        std::size_t end = content.find('\n', start);
        if (end == std::string::npos) {
            if (start < content.size()) lines.push_back(content.substr(start));
            break;
        }
        lines.push_back(content.substr(start, end - start));
        start = end + 1;
    }
    for (auto& line : lines) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
    }
    return lines;
}

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n\v\f");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r\n\v\f");
    return s.substr(b, e - b + 1);
}

void strip_bom(std::string& line) {
    if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF &&
        static_cast<unsigned char>(line[1]) == 0xBB && static_cast<unsigned char>(line[2]) == 0xBF) {
        line.erase(0, 3);
    }
}

Dataset load_tsv(const std::string& path) {
    std::vector<std::string> lines = split_lines(read_file(path));
    std::size_t i = 0;
    while (i < lines.size() && (!lines[i].empty() && lines[i][0] == '#')) ++i;
    if (i < lines.size()) strip_bom(lines[i]);
    if (i >= lines.size() || lines[i].empty()) {
        throw EmptyDatasetError(path + ": empty dataset");
    }
    if (lines[i] != "text\tlabel") {
        throw FormatError(path + ": line " + std::to_string(i + 1) +
                          ": expected header \"text<TAB>label\"");
    }
    ++i;

    Dataset out;
    for (; i < lines.size(); ++i) {
        const std::string& line = lines[i];
        if (line.empty()) continue;
        std::size_t row = i + 1;  // 1-based file line
        std::size_t tab = line.find('\t');
        if (tab == std::string::npos) {
            throw FormatError(path + ": line " + std::to_string(row) + ": missing tab separator");
        }
        if (line.find('\t', tab + 1) != std::string::npos) {
            throw FormatError(path + ": line " + std::to_string(row) +
                              ": tabs are forbidden inside the text column");
        }
        int id = static_cast<int>(out.examples.size());
        std::string text = line.substr(0, tab);
        std::string label = trim(line.substr(tab + 1));
        if (trim(text).empty()) {
            throw RecordError(path + ": line " + std::to_string(row) + " (id " + std::to_string(id) +
                              "): empty text column");
        }
        if (label.empty()) {
            throw RecordError(path + ": line " + std::to_string(row) + " (id " + std::to_string(id) +
                              "): empty label column");
        }
        out.examples.push_back({id, text, out.label_space.add(label)});
    }
    if (out.examples.empty()) {
        throw EmptyDatasetError(path + ": empty dataset (header only)");
    }
    return out;
}

Dataset load_jsonl(const std::string& path) {
    std::vector<std::string> lines = split_lines(read_file(path));
    Dataset out;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (i == 0) strip_bom(lines[i]);
        const std::string& line = lines[i];
        if (trim(line).empty() || line[0] == '#') continue;
        std::size_t row = i + 1;
        nlohmann::json obj;
        try {
            obj = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& err) {
            throw FormatError(path + ": line " + std::to_string(row) + ": " + err.what());
        }
        if (!obj.is_object() || !obj.contains("text") || !obj.contains("label") ||
            !obj["text"].is_string() || !obj["label"].is_string()) {
            throw FormatError(path + ": line " + std::to_string(row) +
                              ": expected object with string fields \"text\" and \"label\"");
        }
        int id = static_cast<int>(out.examples.size());
        std::string text = obj["text"].get<std::string>();
        std::string label = trim(obj["label"].get<std::string>());
        if (trim(text).empty()) {
            throw RecordError(path + ": line " + std::to_string(row) + " (id " + std::to_string(id) +
                              "): empty text field");
        }
        if (label.empty()) {
            throw RecordError(path + ": line " + std::to_string(row) + " (id " + std::to_string(id) +
                              "): empty label field");
        }
        out.examples.push_back({id, text, out.label_space.add(label)});
    }
    if (out.examples.empty()) {
        throw EmptyDatasetError(path + ": empty dataset");
    }
    return out;
}

std::vector<std::vector<int>> ids_by_class(const std::vector<int>& labels, int num_classes) {
    std::vector<std::vector<int>> groups(static_cast<std::size_t>(num_classes));
    for (std::size_t i = 0; i < labels.size(); ++i) {
        groups.at(static_cast<std::size_t>(labels[i])).push_back(static_cast<int>(i));
    }
    return groups;
}

// Largest-remainder allocation of n items over the given ratios. Every bucket
// receives floor(ratio*n) plus at most one extra, so |bucket - ratio*n| < 1.
std::vector<int> allocate_quotas(int n, const std::vector<double>& ratios) {
    std::vector<int> base(ratios.size());
    std::vector<std::pair<double, std::size_t>> rema(ratios.size());
    int assigned = 0;
    for (std::size_t s = 0; s < ratios.size(); ++s) {
        double quota = ratios[s] * n;
        base[s] = static_cast<int>(std::floor(quota));
        rema[s] = {quota - base[s], s};
        assigned += base[s];
    }
    std::stable_sort(rema.begin(), rema.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    for (int left = n - assigned, r = 0; left > 0; --left, ++r) {
        base[rema[static_cast<std::size_t>(r)].second] += 1;
    }
    return base;
}

}  // namespace

Dataset load_dataset(const std::string& path, DatasetFormat format) {
    return format == DatasetFormat::Tsv ? load_tsv(path) : load_jsonl(path);
}

IndexSplit stratified_split_indices(const std::vector<int>& labels, const LabelSpace& space,
                                    SplitRatios ratios, std::uint64_t seed, bool stratify) {
    if (ratios.train <= 0 || ratios.validation <= 0 || ratios.test <= 0) {
        throw ArgumentError("split ratios must each be positive");
    }
    double sum = ratios.train + ratios.validation + ratios.test;
    if (std::abs(sum - 1.0) > 1e-9) {
        throw ArgumentError("split ratios must sum to 1, got " + std::to_string(sum));
    }
    if (labels.empty()) {
        throw ArgumentError("cannot split an empty dataset");
    }

    std::vector<std::vector<int>> groups;
    if (stratify) {
        groups = ids_by_class(labels, space.size());
        for (int c = 0; c < space.size(); ++c) {
            if (!groups[static_cast<std::size_t>(c)].empty() &&
                groups[static_cast<std::size_t>(c)].size() < 3) {
                throw StratificationError("class \"" + space.name(c) +
                                          "\" has fewer than 3 examples");
            }
        }
    } else {
        std::vector<int> all(labels.size());
        for (std::size_t i = 0; i < labels.size(); ++i) all[i] = static_cast<int>(i);
        groups.push_back(std::move(all));
    }

    SplitMix64 rng(seed);
    IndexSplit out;
    const std::vector<double> fractions = {ratios.train, ratios.validation, ratios.test};
    for (auto& group : groups) {
        if (group.empty()) continue;
        votestack::shuffle(group, rng);
        std::vector<int> counts = allocate_quotas(static_cast<int>(group.size()), fractions);
        std::size_t pos = 0;
        for (int j = 0; j < counts[0]; ++j) out.train.push_back(group[pos++]);
        for (int j = 0; j < counts[1]; ++j) out.validation.push_back(group[pos++]);
        for (int j = 0; j < counts[2]; ++j) out.test.push_back(group[pos++]);
    }
    std::sort(out.train.begin(), out.train.end());
    std::sort(out.validation.begin(), out.validation.end());
    std::sort(out.test.begin(), out.test.end());
    return out;
}

DatasetSplit stratified_split(const Dataset& dataset, SplitRatios ratios, std::uint64_t seed,
                              bool stratify) {
    IndexSplit idx =
        stratified_split_indices(dataset.label_vector(), dataset.label_space, ratios, seed, stratify);
    DatasetSplit out;
    auto pick = [&](const std::vector<int>& ids) {
        std::vector<LabeledExample> part;
        part.reserve(ids.size());
        for (int i : ids) part.push_back(dataset.examples[static_cast<std::size_t>(i)]);
        return part;
    };
    out.train = pick(idx.train);
    out.validation = pick(idx.validation);
    out.test = pick(idx.test);
    return out;
}

std::pair<std::vector<int>, std::vector<int>> carve_validation(const std::vector<int>& labels,
                                                               const LabelSpace& space,
                                                               double validation_fraction,
                                                               std::uint64_t seed, bool stratify) {
    if (validation_fraction <= 0 || validation_fraction >= 1) {
        throw ArgumentError("validation fraction must be in (0, 1)");
    }
    if (labels.empty()) {
        throw ArgumentError("cannot carve a validation slice from an empty set");
    }

    std::vector<std::vector<int>> groups;
    if (stratify) {
        groups = ids_by_class(labels, space.size());
    } else {
        std::vector<int> all(labels.size());
        for (std::size_t i = 0; i < labels.size(); ++i) all[i] = static_cast<int>(i);
        groups.push_back(std::move(all));
    }

    SplitMix64 rng(seed);
    std::vector<int> keep, carved;
    for (auto& group : groups) {
        if (group.empty()) continue;
        votestack::shuffle(group, rng);
        std::vector<int> counts = allocate_quotas(static_cast<int>(group.size()),
                                                  {1.0 - validation_fraction, validation_fraction});
        // A class never loses its last example to the validation slice.
        if (counts[0] == 0) {
            counts[0] = 1;
            counts[1] -= 1;
        }
        std::size_t pos = 0;
        for (int j = 0; j < counts[0]; ++j) keep.push_back(group[pos++]);
        for (int j = 0; j < counts[1]; ++j) carved.push_back(group[pos++]);
    }
    // Guarantee a non-empty validation slice.
    if (carved.empty() && keep.size() > 1) {
        carved.push_back(keep.back());
        keep.pop_back();
    }
    std::sort(keep.begin(), keep.end());
    std::sort(carved.begin(), carved.end());
    return {keep, carved};
}

std::vector<Fold> kfold_indices(const std::vector<int>& labels, const LabelSpace& space, int k,
                                std::uint64_t seed, bool stratify) {
    if (k < 2) {
        throw ArgumentError("k must be at least 2, got " + std::to_string(k));
    }
    if (static_cast<std::size_t>(k) > labels.size()) {
        throw ArgumentError("k = " + std::to_string(k) + " exceeds dataset size " +
                            std::to_string(labels.size()));
    }

    std::vector<std::vector<int>> groups;
    if (stratify) {
        groups = ids_by_class(labels, space.size());
        for (int c = 0; c < space.size(); ++c) {
            const auto& g = groups[static_cast<std::size_t>(c)];
            if (!g.empty() && g.size() < static_cast<std::size_t>(k)) {
                throw StratificationError("class \"" + space.name(c) + "\" has " +
                                          std::to_string(g.size()) + " examples, fewer than k = " +
                                          std::to_string(k));
            }
        }
    } else {
        std::vector<int> all(labels.size());
        for (std::size_t i = 0; i < labels.size(); ++i) all[i] = static_cast<int>(i);
        groups.push_back(std::move(all));
    }

    SplitMix64 rng(seed);
    std::vector<std::vector<int>> test_folds(static_cast<std::size_t>(k));
    for (auto& group : groups) {
        votestack::shuffle(group, rng);
        for (std::size_t j = 0; j < group.size(); ++j) {
            test_folds[j % static_cast<std::size_t>(k)].push_back(group[j]);
        }
    }

    std::vector<Fold> folds(static_cast<std::size_t>(k));
    for (int f = 0; f < k; ++f) {
        auto& test = test_folds[static_cast<std::size_t>(f)];
        std::sort(test.begin(), test.end());
        std::vector<char> in_test(labels.size(), 0);
        for (int i : test) in_test[static_cast<std::size_t>(i)] = 1;
        Fold& fold = folds[static_cast<std::size_t>(f)];
        fold.test_ids = test;
        for (std::size_t i = 0; i < labels.size(); ++i) {
            if (!in_test[i]) fold.train_ids.push_back(static_cast<int>(i));
        }
    }
    return folds;
}

std::vector<std::pair<std::vector<LabeledExample>, std::vector<LabeledExample>>> kfold_partitions(
    const Dataset& dataset, int k, std::uint64_t seed, bool stratify) {
    std::vector<Fold> folds = kfold_indices(dataset.label_vector(), dataset.label_space, k, seed, stratify);
    std::vector<std::pair<std::vector<LabeledExample>, std::vector<LabeledExample>>> out;
    out.reserve(folds.size());
    for (const auto& fold : folds) {
        std::vector<LabeledExample> train, test;
        for (int i : fold.train_ids) train.push_back(dataset.examples[static_cast<std::size_t>(i)]);
        for (int i : fold.test_ids) test.push_back(dataset.examples[static_cast<std::size_t>(i)]);
        out.emplace_back(std::move(train), std::move(test));
    }
    return out;
}

}  // namespace votestack
