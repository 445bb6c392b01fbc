#pragma once

#include <map>
#include <optional>
#include <vector>

#include <Eigen/Dense>

namespace votestack::testing {

// Brute-force reference for the voting rules, written as a literal
// rule-by-rule transliteration and kept independent of the production
// implementation. Used to cross-check vote() over exhaustive enumerations.
inline int reference_vote(const std::vector<int>& votes,
                          const std::optional<Eigen::MatrixXd>& per_label_f1) {
    const std::size_t m = votes.size();

    // Rule 1: every member voted differently -> best (first) member's label.
    std::map<int, int> tally;
    for (int v : votes) tally[v] += 1;
    if (tally.size() == m) return votes[0];

    // Rule 2: unique most-voted label wins.
    int max_count = 0;
    for (auto& [label, count] : tally) {
        if (count > max_count) max_count = count;
    }
    std::vector<int> tied;
    for (auto& [label, count] : tally) {
        if (count == max_count) tied.push_back(label);
    }
    if (tied.size() == 1) return tied[0];

    // Rule 3: per-label specialist priority. For each tied label take the
    // best validation F1 among the members that voted for it; a unique
    // maximum decides, otherwise the surviving labels stay tied.
    if (per_label_f1) {
        std::map<int, double> score;
        for (int label : tied) {
            double best = -1;
            for (std::size_t i = 0; i < m; ++i) {
                if (votes[i] == label) {
                    best = std::max(best, (*per_label_f1)(static_cast<Eigen::Index>(i), label));
                }
            }
            score[label] = best;
        }
        double best_score = -1;
        for (auto& [label, s] : score) best_score = std::max(best_score, s);
        std::vector<int> survivors;
        for (int label : tied) {
            if (score[label] == best_score) survivors.push_back(label);
        }
        if (survivors.size() == 1) return survivors[0];
        tied = survivors;
    }

    // Rule 4: among the still-tied labels, the one voted by the globally
    // highest-priority member (members are listed best-first).
    for (std::size_t i = 0; i < m; ++i) {
        for (int label : tied) {
            if (votes[i] == label) return label;
        }
    }
    return votes[0];  // unreachable for valid input
}

}  // namespace votestack::testing
