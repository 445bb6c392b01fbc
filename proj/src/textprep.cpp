#include "votestack/textprep.hpp"

#include <algorithm>
#include <cstdint>
#include <map>

namespace votestack {

namespace {

// --- Minimal UTF-8 machinery -------------------------------------------

struct Codepoint {
    std::uint32_t value = 0;
    int length = 1;     // bytes consumed
    bool valid = true;  // false: raw byte passed through untouched
};

Codepoint decode_utf8(std::string_view s, std::size_t pos) {
    unsigned char b0 = static_cast<unsigned char>(s[pos]);
    if (b0 < 0x80) return {b0, 1, true};

    auto cont = [&](std::size_t i) {
        return pos + i < s.size() && (static_cast<unsigned char>(s[pos + i]) & 0xC0) == 0x80;
    };
    if ((b0 & 0xE0) == 0xC0 && cont(1)) {
        std::uint32_t cp = (static_cast<std::uint32_t>(b0 & 0x1F) << 6) |
                           (static_cast<unsigned char>(s[pos + 1]) & 0x3F);
        return {cp, 2, cp >= 0x80};
    }
    if ((b0 & 0xF0) == 0xE0 && cont(1) && cont(2)) {
        std::uint32_t cp = (static_cast<std::uint32_t>(b0 & 0x0F) << 12) |
                           ((static_cast<unsigned char>(s[pos + 1]) & 0x3F) << 6) |
                           (static_cast<unsigned char>(s[pos + 2]) & 0x3F);
        return {cp, 3, cp >= 0x800};
    }
    if ((b0 & 0xF8) == 0xF0 && cont(1) && cont(2) && cont(3)) {
        std::uint32_t cp = (static_cast<std::uint32_t>(b0 & 0x07) << 18) |
                           ((static_cast<unsigned char>(s[pos + 1]) & 0x3F) << 12) |
                           ((static_cast<unsigned char>(s[pos + 2]) & 0x3F) << 6) |
                           (static_cast<unsigned char>(s[pos + 3]) & 0x3F);
        return {cp, 4, cp >= 0x10000 && cp <= 0x10FFFF};
    }
    return {b0, 1, false};
}

void encode_utf8(std::uint32_t cp, std::string& out) {
    if (cp < 0x80) {
        out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
        out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
        out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
        out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
}

// Lowercase mapping for the Latin ranges Vietnamese uses (ASCII, Latin-1,
// Latin Extended-A, the horn letters of Extended-B, Latin Extended
// Additional). Other scripts pass through unchanged.
std::uint32_t lowercase_codepoint(std::uint32_t cp) {
    if (cp >= 'A' && cp <= 'Z') return cp + 0x20;
    if ((cp >= 0x00C0 && cp <= 0x00D6) || (cp >= 0x00D8 && cp <= 0x00DE)) return cp + 0x20;
    if (cp >= 0x0100 && cp <= 0x0137) return (cp % 2 == 0) ? cp + 1 : cp;
    if (cp >= 0x0139 && cp <= 0x0148) return (cp % 2 == 1) ? cp + 1 : cp;
    if (cp >= 0x014A && cp <= 0x0177) return (cp % 2 == 0) ? cp + 1 : cp;
    if (cp == 0x0178) return 0x00FF;
    if (cp >= 0x0179 && cp <= 0x017E) return (cp % 2 == 1) ? cp + 1 : cp;
    if (cp == 0x01A0 || cp == 0x01AF) return cp + 1;  // O-horn, U-horn
    if (cp >= 0x1E00 && cp <= 0x1EFF) return (cp % 2 == 0) ? cp + 1 : cp;
    return cp;
}

bool is_space_cp(std::uint32_t cp) {
    return cp == ' ' || cp == '\t' || cp == '\n' || cp == '\r' || cp == '\v' || cp == '\f' ||
           cp == 0x00A0;
}

// Letter classification by Unicode block. Broad coverage of alphabetic
// blocks; digits, punctuation, symbols and emoji all classify as non-letters.
bool is_letter_cp(std::uint32_t cp) {
    if ((cp >= 'a' && cp <= 'z') || (cp >= 'A' && cp <= 'Z')) return true;
    if (cp < 0x80) return false;
    if (cp == 0x00D7 || cp == 0x00F7) return false;  // multiplication/division signs
    if (cp >= 0x00C0 && cp <= 0x024F) return true;   // Latin-1 letters + Extended-A/B
    if (cp >= 0x0370 && cp <= 0x03FF) return cp != 0x0374 && cp != 0x0375 && cp != 0x037E &&
                                             cp != 0x0384 && cp != 0x0385 && cp != 0x0387;
    if (cp >= 0x0400 && cp <= 0x04FF) return true;   // Cyrillic
    if (cp >= 0x0530 && cp <= 0x058F) return cp <= 0x0588;  // Armenian letters
    if (cp >= 0x05D0 && cp <= 0x05EA) return true;   // Hebrew letters
    if (cp >= 0x0620 && cp <= 0x064A) return true;   // Arabic letters
    if (cp >= 0x0E01 && cp <= 0x0E4E) return true;   // Thai
    if (cp >= 0x1E00 && cp <= 0x1EFF) return true;   // Latin Extended Additional (Vietnamese)
    if (cp >= 0x3040 && cp <= 0x30FF) return cp != 0x3097 && cp != 0x3098;  // kana
    if (cp >= 0x4E00 && cp <= 0x9FFF) return true;   // CJK unified
    if (cp >= 0xAC00 && cp <= 0xD7A3) return true;   // Hangul syllables
    return false;
}

bool starts_with_ci(std::string_view s, std::size_t pos, std::string_view prefix) {
    if (pos + prefix.size() > s.size()) return false;
    for (std::size_t i = 0; i < prefix.size(); ++i) {
        char c = s[pos + i];
        if (c >= 'A' && c <= 'Z') c = static_cast<char>(c + 0x20);
        if (c != prefix[i]) return false;
    }
    return true;
}

// Removes whitespace-delimited tokens that start with http://, https:// or
// www. (case-insensitive); a single space is left in their place.
std::string remove_urls(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    bool at_word_start = true;
    std::size_t i = 0;
    while (i < text.size()) {
        if (at_word_start && (starts_with_ci(text, i, "http://") ||
                              starts_with_ci(text, i, "https://") ||
                              starts_with_ci(text, i, "www."))) {
            while (i < text.size()) {
                Codepoint cp = decode_utf8(text, i);
                if (cp.valid && is_space_cp(cp.value)) break;
                i += static_cast<std::size_t>(cp.length);
            }
            out.push_back(' ');
            at_word_start = true;
            continue;
        }
        Codepoint cp = decode_utf8(text, i);
        at_word_start = cp.valid && is_space_cp(cp.value);
        out.append(text.substr(i, static_cast<std::size_t>(cp.length)));
        i += static_cast<std::size_t>(cp.length);
    }
    return out;
}

std::string lowercase_utf8(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    std::size_t i = 0;
    while (i < text.size()) {
        Codepoint cp = decode_utf8(text, i);
        if (cp.valid) {
            encode_utf8(lowercase_codepoint(cp.value), out);
        } else {
            out.push_back(text[i]);
        }
        i += static_cast<std::size_t>(cp.length);
    }
    return out;
}

// Replaces every non-letter (except '_' and whitespace) by a space so that
// stripped punctuation never glues neighbouring words together.
std::string strip_non_letters_utf8(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    std::size_t i = 0;
    while (i < text.size()) {
        Codepoint cp = decode_utf8(text, i);
        if (cp.valid && (is_letter_cp(cp.value) || cp.value == '_' || is_space_cp(cp.value))) {
            out.append(text.substr(i, static_cast<std::size_t>(cp.length)));
        } else {
            out.push_back(' ');
        }
        i += static_cast<std::size_t>(cp.length);
    }
    return out;
}

std::string collapse_whitespace_utf8(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    bool pending_space = false;
    std::size_t i = 0;
    while (i < text.size()) {
        Codepoint cp = decode_utf8(text, i);
        if (cp.valid && is_space_cp(cp.value)) {
            pending_space = !out.empty();
        } else {
            if (pending_space) {
                out.push_back(' ');
                pending_space = false;
            }
            out.append(text.substr(i, static_cast<std::size_t>(cp.length)));
        }
        i += static_cast<std::size_t>(cp.length);
    }
    return out;
}

bool has_whitespace(std::string_view s) {
    std::size_t i = 0;
    while (i < s.size()) {
        Codepoint cp = decode_utf8(s, i);
        if (cp.valid && is_space_cp(cp.value)) return true;
        i += static_cast<std::size_t>(cp.length);
    }
    return false;
}

std::vector<std::string> split_ws(std::string_view text) {
    std::vector<std::string> out;
    std::string cur;
    std::size_t i = 0;
    while (i < text.size()) {
        Codepoint cp = decode_utf8(text, i);
        if (cp.valid && is_space_cp(cp.value)) {
            if (!cur.empty()) {
                out.push_back(std::move(cur));
                cur.clear();
            }
        } else {
            cur.append(text.substr(i, static_cast<std::size_t>(cp.length)));
        }
        i += static_cast<std::size_t>(cp.length);
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

std::vector<std::string> split_file_lines(const std::string& content) {
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

}  // namespace

std::string PreprocessOptions::cache_key() const {
    std::string key = "lc=";
    key += lowercase ? '1' : '0';
    key += ";url=";
    key += strip_urls ? '1' : '0';
    key += ";let=";
    key += strip_non_letters ? '1' : '0';
    key += ";ws=";
    key += collapse_whitespace ? '1' : '0';
    key += ";dict=";
    key += apply_dictionary ? '1' : '0';
    return key;
}

std::string normalize_text(std::string_view text, const PreprocessOptions& options) {
    std::string work(text);
    if (options.strip_urls) work = remove_urls(work);
    if (options.lowercase) work = lowercase_utf8(work);
    if (options.strip_non_letters) work = strip_non_letters_utf8(work);
    if (options.collapse_whitespace) work = collapse_whitespace_utf8(work);
    return work;
}

NormalizationDictionary NormalizationDictionary::load(const std::string& path) {
    std::vector<std::string> lines = split_file_lines(read_file(path));
    std::vector<std::pair<std::string, std::string>> pairs;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const std::string& line = lines[i];
        if (line.empty() || line[0] == '#') continue;
        std::size_t tab = line.find('\t');
        if (tab == std::string::npos) {
            throw FormatError(path + ": line " + std::to_string(i + 1) +
                              ": expected `variant<TAB>canonical`");
        }
        pairs.emplace_back(line.substr(0, tab), line.substr(tab + 1));
    }
    try {
        return from_pairs(pairs);
    } catch (const FormatError& err) {
        throw FormatError(path + ": " + err.what());
    }
}

NormalizationDictionary NormalizationDictionary::from_pairs(
    const std::vector<std::pair<std::string, std::string>>& pairs) {
    NormalizationDictionary dict;
    for (const auto& [variant, canonical] : pairs) {
        if (variant.empty() || canonical.empty()) {
            throw FormatError("dictionary entry with empty variant or canonical form");
        }
        if (has_whitespace(variant)) {
            throw FormatError("dictionary key \"" + variant + "\" contains whitespace");
        }
        if (lowercase_utf8(variant) != variant) {
            throw FormatError("dictionary key \"" + variant + "\" is not lowercase");
        }
        if (variant == canonical) {
            throw FormatError("dictionary key \"" + variant + "\" maps to itself");
        }
        if (!dict.entries_.emplace(variant, canonical).second) {
            throw FormatError("duplicate dictionary key \"" + variant + "\"");
        }
    }
    return dict;
}

std::string NormalizationDictionary::content_hash() const {
    std::map<std::string, std::string> sorted(entries_.begin(), entries_.end());
    std::uint64_t h = kFnvOffset;
    for (const auto& [k, v] : sorted) {
        h = fnv1a64(k, h);
        h = fnv1a64(std::string(1, '\t'), h);
        h = fnv1a64(v, h);
        h = fnv1a64(std::string(1, '\n'), h);
    }
    return hex64(h);
}

std::vector<std::string> apply_dictionary(const std::vector<std::string>& tokens,
                                          const NormalizationDictionary& dict) {
    std::vector<std::string> out;
    out.reserve(tokens.size());
    for (const auto& token : tokens) {
        auto it = dict.entries().find(token);
        if (it == dict.entries().end()) {
            out.push_back(token);
            continue;
        }
        for (auto& part : split_ws(it->second)) {
            out.push_back(std::move(part));
        }
    }
    return out;
}

CompoundLexicon CompoundLexicon::load(const std::string& path) {
    std::vector<std::string> lines = split_file_lines(read_file(path));
    std::vector<std::string> phrases;
    for (const auto& line : lines) {
        if (line.empty() || line[0] == '#') continue;
        phrases.push_back(line);
    }
    return from_phrases(phrases);
}

CompoundLexicon CompoundLexicon::from_phrases(const std::vector<std::string>& phrases) {
    CompoundLexicon lex;
    for (const auto& phrase : phrases) {
        std::vector<std::string> syllables = split_ws(phrase);
        if (syllables.size() < 2) continue;  // single syllables never need joining
        std::string joined = syllables[0];
        for (std::size_t i = 1; i < syllables.size(); ++i) {
            joined += ' ';
            joined += syllables[i];
        }
        lex.phrases_.insert(joined);
        lex.max_syllables_ = std::max(lex.max_syllables_, syllables.size());
    }
    return lex;
}

std::vector<std::string> tokenize(std::string_view text) { return split_ws(text); }

std::vector<std::string> tokenize(std::string_view text, const CompoundLexicon& lexicon) {
    std::vector<std::string> syllables = split_ws(text);
    if (lexicon.empty()) return syllables;

    std::vector<std::string> out;
    std::size_t i = 0;
    while (i < syllables.size()) {
        std::size_t longest = 1;
        std::size_t max_try = std::min(lexicon.max_syllables(), syllables.size() - i);
        std::string candidate = syllables[i];
        for (std::size_t len = 2; len <= max_try; ++len) {
            candidate += ' ';
            candidate += syllables[i + len - 1];
            if (lexicon.contains(candidate)) longest = len;
        }
        if (longest == 1) {
            out.push_back(syllables[i]);
        } else {
            std::string joined = syllables[i];
            for (std::size_t j = 1; j < longest; ++j) {
                joined += '_';
                joined += syllables[i + j];
            }
            out.push_back(std::move(joined));
        }
        i += longest;
    }
    return out;
}

}  // namespace votestack
