#pragma once

#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "votestack/common.hpp"

namespace votestack {

// Normalization switches applied by normalize_text, in this fixed order:
// URL removal -> lowercasing -> non-letter stripping -> whitespace collapse.
// With every flag off the function is the identity. The options are part of
// each trained model's pipeline fingerprint.
struct PreprocessOptions {
    bool lowercase = true;
    bool strip_urls = true;
    bool strip_non_letters = true;   // drops digits/punctuation/emoticons, keeps letters and '_'
    bool collapse_whitespace = true;
    bool apply_dictionary = true;

    // Canonical encoding used for fingerprints.
    std::string cache_key() const;

    bool operator==(const PreprocessOptions&) const = default;
};

std::string normalize_text(std::string_view text, const PreprocessOptions& options);

// Whole-token variant -> canonical replacement map (the abbreviation/slang
// dictionary). Keys are unique, lowercase and whitespace-free; a canonical
// form containing spaces expands into several tokens on application.
//
// File format: UTF-8 TSV `variant<TAB>canonical`, one pair per line,
// `#`-prefixed comment lines ignored.
class NormalizationDictionary {
  public:
    NormalizationDictionary() = default;

    static NormalizationDictionary load(const std::string& path);
    static NormalizationDictionary from_pairs(
        const std::vector<std::pair<std::string, std::string>>& pairs);

    const std::unordered_map<std::string, std::string>& entries() const { return entries_; }
    bool empty() const { return entries_.empty(); }
    std::size_t size() const { return entries_.size(); }

    // Content hash over the sorted entry list; independent of file layout.
    std::string content_hash() const;

  private:
    std::unordered_map<std::string, std::string> entries_;
};

// Replaces each token present as a dictionary key by its canonical form;
// multi-word canonical forms expand in place. Tokens must be lowercase
// already (keys are stored lowercase).
std::vector<std::string> apply_dictionary(const std::vector<std::string>& tokens,
                                          const NormalizationDictionary& dict);

// Compound-word list for greedy longest-match word segmentation. File
// format: one compound per line, syllables separated by spaces.
class CompoundLexicon {
  public:
    CompoundLexicon() = default;

    static CompoundLexicon load(const std::string& path);
    static CompoundLexicon from_phrases(const std::vector<std::string>& phrases);

    bool empty() const { return phrases_.empty(); }
    std::size_t max_syllables() const { return max_syllables_; }
    bool contains(const std::string& space_joined) const { return phrases_.count(space_joined) > 0; }

  private:
    std::unordered_set<std::string> phrases_;  // space-joined syllable sequences
    std::size_t max_syllables_ = 0;
};

// Whitespace tokenization.
std::vector<std::string> tokenize(std::string_view text);

// Greedy left-to-right longest-match segmentation over whitespace-separated
// syllables; matched lexicon entries are joined with '_' (the convention of
// the pre-trained embedding vocabularies). Joining the output with spaces
// and replacing '_' by space reproduces the input syllable sequence.
std::vector<std::string> tokenize(std::string_view text, const CompoundLexicon& lexicon);

}  // namespace votestack
