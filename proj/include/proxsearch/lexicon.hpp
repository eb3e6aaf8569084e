// Tokenization, lemmatization and the frequency-ranked lemma list.
#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace proxsearch {

using LemmaId = std::uint32_t;
using FlNumber = std::uint32_t;
using Position = std::uint32_t;
using DocId = std::uint32_t;

/// FL-number given to lemmas too rare to be ranked.
inline constexpr FlNumber kRareFl = std::numeric_limits<FlNumber>::max();

enum class LemmaClass { Stop, FrequentlyUsed, Ordinary };

inline const char* to_string(LemmaClass c) {
  switch (c) {
    case LemmaClass::Stop: return "stop";
    case LemmaClass::FrequentlyUsed: return "frequently-used";
    case LemmaClass::Ordinary: return "ordinary";
  }
  return "?";
}

struct LexiconConfig {
  std::uint32_t sw_count = 700;
  std::uint32_t fu_count = 2100;
};

inline LemmaClass classify(FlNumber fl, const LexiconConfig& cfg) {
  if (fl < cfg.sw_count) return LemmaClass::Stop;
  if (static_cast<std::uint64_t>(fl) < static_cast<std::uint64_t>(cfg.sw_count) + cfg.fu_count)
    return LemmaClass::FrequentlyUsed;
  return LemmaClass::Ordinary;
}

struct Token {
  std::string word;
  Position position = 0;

  bool operator==(const Token&) const = default;
};

namespace detail {

// Decodes one UTF-8 code point starting at text[i]. Returns the code point and
// advances i; malformed input yields U+FFFD and consumes a single byte.
inline char32_t next_code_point(std::string_view text, std::size_t& i) {
  const auto b0 = static_cast<unsigned char>(text[i]);
  auto cont = [&](std::size_t k) -> int {
    if (i + k >= text.size()) return -1;
    const auto b = static_cast<unsigned char>(text[i + k]);
    return (b & 0xC0) == 0x80 ? (b & 0x3F) : -1;
  };
  if (b0 < 0x80) {
    ++i;
    return b0;
  }
  int len = 0;
  char32_t cp = 0;
  if ((b0 & 0xE0) == 0xC0) {
    len = 2;
    cp = b0 & 0x1F;
  } else if ((b0 & 0xF0) == 0xE0) {
    len = 3;
    cp = b0 & 0x0F;
  } else if ((b0 & 0xF8) == 0xF0) {
    len = 4;
    cp = b0 & 0x07;
  } else {
    ++i;
    return 0xFFFD;
  }
  for (int k = 1; k < len; ++k) {
    const int c = cont(static_cast<std::size_t>(k));
    if (c < 0) {
      ++i;
      return 0xFFFD;
    }
    cp = (cp << 6) | static_cast<char32_t>(c);
  }
  i += static_cast<std::size_t>(len);
  return cp;
}

inline bool is_word_char(char32_t cp) {
  if (cp < 0x80) return (cp >= '0' && cp <= '9') || (cp >= 'a' && cp <= 'z') || (cp >= 'A' && cp <= 'Z');
  if (cp == 0xFFFD) return false;
  if (cp >= 0x80 && cp <= 0xBF) return false;  // Latin-1 controls, symbols, punctuation
  if (cp == 0xD7 || cp == 0xF7) return false;
  if (cp >= 0x2000 && cp <= 0x2BFF) return false;  // punctuation, symbols, arrows
  if (cp >= 0x3000 && cp <= 0x303F) return false;  // CJK punctuation
  if (cp >= 0xFE30 && cp <= 0xFE4F) return false;
  if (cp >= 0xFF00 && cp <= 0xFF0F) return false;
  return true;
}

inline char32_t to_lower(char32_t cp) {
  if (cp >= 'A' && cp <= 'Z') return cp + 0x20;
  if (cp >= 0xC0 && cp <= 0xDE && cp != 0xD7) return cp + 0x20;
  if (cp >= 0x410 && cp <= 0x42F) return cp + 0x20;  // Cyrillic А..Я
  if (cp >= 0x400 && cp <= 0x40F) return cp + 0x50;  // Cyrillic Ѐ..Џ
  return cp;
}

inline void append_utf8(std::string& out, char32_t cp) {
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

}  // namespace detail

/// Splits text into maximal runs of letters and digits, lowercased. Every word
/// gets the next ordinal position; nothing is dropped.
inline std::vector<Token> tokenize(std::string_view text) {
  std::vector<Token> out;
  std::string current;
  Position next = 0;
  auto flush = [&] {
    if (current.empty()) return;
    if (next == std::numeric_limits<Position>::max())
      throw std::length_error("document exceeds 2^32 - 1 words");
    out.push_back(Token{std::move(current), next++});
    current.clear();
  };
  std::size_t i = 0;
  while (i < text.size()) {
    const char32_t cp = detail::next_code_point(text, i);
    if (detail::is_word_char(cp)) {
      detail::append_utf8(current, detail::to_lower(cp));
    } else {
      flush();
    }
  }
  flush();
  return out;
}

/// Surface word -> lemma texts. Words without an entry are their own lemma.
class Dictionary {
 public:
  Dictionary() = default;

  void add(std::string word, std::vector<std::string> lemmas) {
    if (lemmas.empty()) throw std::invalid_argument("dictionary entry without lemmas: " + word);
    entries_[std::move(word)] = std::move(lemmas);
  }

  std::vector<std::string> lemmatize(const std::string& word) const {
    if (auto it = entries_.find(word); it != entries_.end()) return it->second;
    return {word};
  }

  bool empty() const { return entries_.empty(); }
  std::size_t size() const { return entries_.size(); }

  /// Parses `word<TAB>lemma1,lemma2,...` lines. Blank lines and lines starting
  /// with '#' are skipped.
  static Dictionary parse(std::istream& in) {
    Dictionary dict;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty() || line[0] == '#') continue;
      const auto tab = line.find('\t');
      if (tab == std::string::npos || tab == 0)
        throw std::runtime_error("dictionary line " + std::to_string(line_no) + ": expected word<TAB>lemmas");
      std::vector<std::string> lemmas;
      std::string_view rest(line);
      rest.remove_prefix(tab + 1);
      while (!rest.empty()) {
        const auto comma = rest.find(',');
        auto piece = rest.substr(0, comma);
        if (!piece.empty()) {
          for (auto& t : tokenize(piece)) lemmas.push_back(std::move(t.word));
        }
        if (comma == std::string_view::npos) break;
        rest.remove_prefix(comma + 1);
      }
      if (lemmas.empty())
        throw std::runtime_error("dictionary line " + std::to_string(line_no) + ": no lemmas");
      auto word = tokenize(std::string_view(line).substr(0, tab));
      if (word.size() != 1)
        throw std::runtime_error("dictionary line " + std::to_string(line_no) + ": word must be a single token");
      // a lemma listed twice would yield two occurrences at one position
      std::vector<std::string> unique;
      for (auto& l : lemmas)
        if (std::find(unique.begin(), unique.end(), l) == unique.end()) unique.push_back(std::move(l));
      dict.add(std::move(word[0].word), std::move(unique));
    }
    return dict;
  }

  static Dictionary load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open dictionary: " + path);
    return parse(in);
  }

  /// Entries in word order, for persisting.
  std::vector<std::pair<std::string, std::vector<std::string>>> sorted_entries() const {
    std::vector<std::pair<std::string, std::vector<std::string>>> out(entries_.begin(), entries_.end());
    std::sort(out.begin(), out.end());
    return out;
  }

 private:
  std::unordered_map<std::string, std::vector<std::string>> entries_;
};

/// Lemma table with FL-numbers. Lemma ids index every per-lemma vector.
class Lexicon {
 public:
  Lexicon() = default;

  /// Ranks lemmas by descending count, ties by ascending text. Lemma id equals
  /// the position in that order; lemmas counted fewer than `min_count` times
  /// get kRareFl.
  ///
  /// `ranked` pins an FL order taken from a larger reference collection: its
  /// lemmas that occur in `counts` come first, in the given order, and the
  /// rest follow by count.
  static Lexicon from_counts(const std::map<std::string, std::uint64_t>& counts, std::uint64_t min_count = 1,
                             const std::vector<std::string>& ranked = {}) {
    std::unordered_map<std::string, std::size_t> pinned;
    for (const auto& text : ranked) pinned.try_emplace(text, pinned.size());
    std::vector<std::pair<std::string, std::uint64_t>> order(counts.begin(), counts.end());
    auto rank = [&](const std::string& text) {
      const auto it = pinned.find(text);
      return it == pinned.end() ? pinned.size() : it->second;
    };
    std::stable_sort(order.begin(), order.end(), [&](const auto& a, const auto& b) {
      const auto ra = rank(a.first), rb = rank(b.first);
      if (ra != rb) return ra < rb;
      return a.second > b.second;
    });
    Lexicon lex;
    for (auto& [text, count] : order) {
      const auto id = static_cast<LemmaId>(lex.text_.size());
      lex.push(std::move(text), count >= min_count ? id : kRareFl, count);
    }
    return lex;
  }

  /// Builds a lexicon with explicit FL-numbers, e.g. for fixtures that mirror
  /// ranks from a larger collection. Ids follow the given order.
  static Lexicon from_ranks(const std::vector<std::pair<std::string, FlNumber>>& ranks) {
    Lexicon lex;
    for (const auto& [text, fl] : ranks) lex.push(text, fl, 0);
    return lex;
  }

  /// Restores a lexicon from its persisted columns.
  static Lexicon from_columns(std::vector<std::string> texts, std::vector<FlNumber> fls,
                              std::vector<std::uint64_t> counts) {
    if (texts.size() != fls.size() || texts.size() != counts.size())
      throw std::invalid_argument("lexicon columns differ in length");
    Lexicon lex;
    for (std::size_t i = 0; i < texts.size(); ++i) lex.push(std::move(texts[i]), fls[i], counts[i]);
    return lex;
  }

  std::optional<LemmaId> find(std::string_view text) const {
    if (auto it = ids_.find(std::string(text)); it != ids_.end()) return it->second;
    return std::nullopt;
  }

  std::size_t size() const { return text_.size(); }
  const std::string& text(LemmaId id) const { return text_.at(id); }
  FlNumber fl(LemmaId id) const { return fl_.at(id); }
  std::uint64_t count(LemmaId id) const { return count_.at(id); }

  LemmaClass lemma_class(LemmaId id, const LexiconConfig& cfg) const { return classify(fl(id), cfg); }
  bool is_stop(LemmaId id, const LexiconConfig& cfg) const { return lemma_class(id, cfg) == LemmaClass::Stop; }

  /// Key-component order: FL-number, then lemma id.
  bool precedes(LemmaId a, LemmaId b) const {
    return std::pair(fl(a), a) < std::pair(fl(b), b);
  }

  /// Ids of the stop lemmas, most frequent first.
  std::vector<LemmaId> stop_lemmas(const LexiconConfig& cfg) const {
    std::vector<LemmaId> out;
    for (LemmaId id = 0; id < size(); ++id)
      if (is_stop(id, cfg)) out.push_back(id);
    std::sort(out.begin(), out.end(), [this](LemmaId a, LemmaId b) { return precedes(a, b); });
    return out;
  }

 private:
  void push(std::string text, FlNumber fl, std::uint64_t count) {
    if (text.empty()) throw std::invalid_argument("empty lemma text");
    const auto id = static_cast<LemmaId>(text_.size());
    if (!ids_.emplace(text, id).second) throw std::invalid_argument("duplicate lemma: " + text);
    text_.push_back(std::move(text));
    fl_.push_back(fl);
    count_.push_back(count);
  }

  std::vector<std::string> text_;
  std::vector<FlNumber> fl_;
  std::vector<std::uint64_t> count_;
  std::unordered_map<std::string, LemmaId> ids_;
};

/// One lemma at one word position. A word with several lemmas yields several
/// occurrences sharing a position.
struct Occurrence {
  Position position = 0;
  LemmaId lemma = 0;

  auto operator<=>(const Occurrence&) const = default;
};

/// A document reduced to lemma occurrences, sorted by (position, lemma).
struct LemmatizedDocument {
  std::vector<Occurrence> occurrences;
  Position length = 0;  // number of words
};

/// Tokenizes and lemmatizes `text` against an existing lexicon. Lemmas missing
/// from the lexicon are skipped; their word positions still count.
inline LemmatizedDocument lemmatize_document(std::string_view text, const Dictionary& dict, const Lexicon& lex) {
  LemmatizedDocument doc;
  const auto tokens = tokenize(text);
  doc.length = static_cast<Position>(tokens.size());
  for (const auto& tok : tokens) {
    for (const auto& lemma : dict.lemmatize(tok.word)) {
      if (auto id = lex.find(lemma)) doc.occurrences.push_back({tok.position, *id});
    }
  }
  std::sort(doc.occurrences.begin(), doc.occurrences.end());
  doc.occurrences.erase(std::unique(doc.occurrences.begin(), doc.occurrences.end()), doc.occurrences.end());
  return doc;
}

}  // namespace proxsearch
