#include "votestack/embed.hpp"

#include <algorithm>
#include <cmath>

namespace votestack {

int suggest_max_len(const std::vector<std::vector<std::string>>& dataset, double percentile) {
    if (dataset.empty()) {
        throw ArgumentError("suggest_max_len requires a non-empty dataset");
    }
    if (percentile <= 0.0 || percentile > 1.0) {
        throw ArgumentError("percentile must be in (0, 1]");
    }
    std::vector<int> lengths;
    lengths.reserve(dataset.size());
    for (const auto& tokens : dataset) {
        lengths.push_back(static_cast<int>(tokens.size()));
    }
    std::sort(lengths.begin(), lengths.end());
    // Smallest L with count(len <= L) >= percentile * n, i.e. the
    // ceil(percentile * n)-th order statistic.
    auto needed = static_cast<std::size_t>(
        std::ceil(percentile * static_cast<double>(lengths.size()) - 1e-9));
    needed = std::max<std::size_t>(needed, 1);
    return std::max(1, lengths[needed - 1]);
}

}  // namespace votestack
