// Query evaluation over ordinary, (w, v) and (f, s, t) indexes.
//
// A query is lemmatized into subqueries (one lemma per query word). Each
// subquery is answered document-at-a-time: key cursors are aligned on a
// common document, their postings are projected into one intermediate
// position list per query word, and the lists are swept for fragments.
#pragma once

#include <algorithm>
#include <array>
#include <cassert>
#include <chrono>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "proxsearch/index.hpp"

namespace proxsearch {

/// Lemma id standing for a query lemma that never occurs in the collection.
inline constexpr LemmaId kUnknownLemma = std::numeric_limits<LemmaId>::max();

/// Value of an exhausted intermediate list.
inline constexpr Position kExhausted = std::numeric_limits<Position>::max();

inline constexpr std::size_t kMaxSubqueries = 64;

class QueryError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Engine { Auto, Triple, Pair, Ordinary };

inline Engine parse_engine(std::string_view name) {
  if (name == "auto") return Engine::Auto;
  if (name == "triple") return Engine::Triple;
  if (name == "pair") return Engine::Pair;
  if (name == "ordinary") return Engine::Ordinary;
  throw std::invalid_argument("unknown engine: " + std::string(name));
}

inline const char* to_string(Engine e) {
  switch (e) {
    case Engine::Auto: return "auto";
    case Engine::Triple: return "triple";
    case Engine::Pair: return "pair";
    case Engine::Ordinary: return "ordinary";
  }
  return "?";
}

struct QueryConfig {
  Engine engine = Engine::Auto;
  /// Emit the window that is open when the sweep runs out of postings.
  bool emit_final_fragment = true;
  /// Drop positions that cannot take part in any proximity match before the
  /// sweep. Makes all engines return the same fragments.
  bool refine_lists = true;
};

struct Subquery {
  std::vector<LemmaId> lemmas;

  std::size_t size() const { return lemmas.size(); }
  bool operator==(const Subquery&) const = default;
};

struct Fragment {
  DocId doc = 0;
  Position start = 0;
  Position end = 0;

  auto operator<=>(const Fragment&) const = default;
};

/// Sorted by (doc, start, end) and free of duplicates.
using ResultSet = std::vector<Fragment>;

inline void normalize_results(ResultSet& r) {
  std::sort(r.begin(), r.end());
  r.erase(std::unique(r.begin(), r.end()), r.end());
}

struct Metrics {
  std::uint64_t postings_read = 0;
  std::uint64_t bytes_read = 0;
  std::uint64_t heap_ops = 0;
  std::uint64_t max_heap_length = 0;
  std::uint64_t subqueries = 0;
  std::uint64_t subquery_length = 0;  // longest subquery evaluated
  double wall_time_ms = 0;

  void absorb(const Metrics& o) {
    postings_read += o.postings_read;
    bytes_read += o.bytes_read;
    heap_ops += o.heap_ops;
    max_heap_length = std::max(max_heap_length, o.max_heap_length);
    subqueries += o.subqueries;
    subquery_length = std::max(subquery_length, o.subquery_length);
    wall_time_ms += o.wall_time_ms;
  }

  nlohmann::json to_json() const {
    return {{"postings_read", postings_read},
            {"bytes_read", bytes_read},
            {"wall_time_ms", wall_time_ms},
            {"heap_ops", heap_ops}};
  }
};

// ---------------------------------------------------------------------------
// Query expansion

/// One subquery per combination of lemma alternatives, in dictionary order
/// (the last word varies fastest).
inline std::vector<Subquery> expand_query(const std::vector<std::string>& words, const Dictionary& dict,
                                          const Lexicon& lex) {
  if (words.empty()) throw QueryError("empty query");
  std::vector<std::vector<LemmaId>> alternatives;
  std::size_t total = 1;
  for (const auto& w : words) {
    std::vector<LemmaId> ids;
    for (const auto& lemma : dict.lemmatize(w)) ids.push_back(lex.find(lemma).value_or(kUnknownLemma));
    total *= ids.size();
    if (total > kMaxSubqueries)
      throw QueryError("query expands to more than " + std::to_string(kMaxSubqueries) + " subqueries");
    alternatives.push_back(std::move(ids));
  }
  std::vector<Subquery> out(1);
  for (const auto& alts : alternatives) {
    std::vector<Subquery> next;
    next.reserve(out.size() * alts.size());
    for (const auto& prefix : out)
      for (auto id : alts) {
        auto q = prefix;
        q.lemmas.push_back(id);
        next.push_back(std::move(q));
      }
    out = std::move(next);
  }
  return out;
}

inline std::vector<std::string> query_words(std::string_view query) {
  std::vector<std::string> words;
  for (auto& t : tokenize(query)) words.push_back(std::move(t.word));
  return words;
}

// ---------------------------------------------------------------------------
// Key selection

/// A normalized key picked for a subquery. `ordinal[slot]` is the query word
/// the slot stands for; a starred slot's word is already covered by an
/// earlier key and gets no intermediate list.
template <std::size_t Arity>
struct SelectedKey {
  Key<Arity> key;
  std::array<std::size_t, Arity> ordinal{};
  std::array<bool, Arity> starred{};
};

/// Groups query words into keys of `Arity` lemmas: [0, Arity), [Arity,
/// 2*Arity), ... When the length is not a multiple of Arity the last key is the
/// last Arity words, with words covered by earlier keys starred. Returns an
/// empty list when the subquery is shorter than Arity.
template <std::size_t Arity>
std::vector<SelectedKey<Arity>> select_keys(const Subquery& sub, const Lexicon& lex) {
  const std::size_t m = sub.size();
  std::vector<SelectedKey<Arity>> keys;
  if (m < Arity) return keys;
  auto add = [&](std::size_t first, std::size_t covered_below) {
    std::array<LemmaId, Arity> comps{};
    for (std::size_t i = 0; i < Arity; ++i) comps[i] = sub.lemmas[first + i];
    const auto norm = normalize_key<Arity>(comps, lex);
    SelectedKey<Arity> sk;
    sk.key = norm.key;
    for (std::size_t i = 0; i < Arity; ++i) {
      const auto slot = norm.slot_of[i];
      sk.ordinal[slot] = first + i;
      sk.starred[slot] = first + i < covered_below;
    }
    keys.push_back(sk);
  };
  const std::size_t full = m / Arity;
  for (std::size_t k = 0; k < full; ++k) add(k * Arity, 0);
  if (m % Arity != 0) add(m - Arity, full * Arity);
  return keys;
}

// ---------------------------------------------------------------------------
// Cursor alignment

/// Advances cursors until all sit on the same document and returns it, or
/// nullopt once any cursor runs out.
template <class Cursor>
std::optional<DocId> equalize(std::span<Cursor> cursors) {
  if (cursors.empty()) return std::nullopt;
  for (auto& c : cursors) {
    if (!c.started()) c.next();
    if (c.exhausted()) return std::nullopt;
  }
  for (;;) {
    DocId target = 0;
    for (const auto& c : cursors) target = std::max(target, c.value().doc);
    bool aligned = true;
    for (auto& c : cursors) {
      while (c.value().doc < target)
        if (!c.next()) return std::nullopt;
      if (c.value().doc != target) aligned = false;
    }
    if (aligned) return target;
  }
}

// ---------------------------------------------------------------------------
// Intermediate lists

/// Min-heap of positions bounded to `capacity` distinct values. Equal values
/// share one entry with a multiplicity.
///
/// Each projected position is within max_distance of its posting's P, and P
/// never decreases within a document. Once more than 2 * max_distance
/// distinct values are held, the smallest is at most P - max_distance and no
/// later projection can be smaller, so popping it keeps the output sorted.
/// Counting distinct values rather than elements matters: duplicate
/// projections are common and would otherwise push a value out too early.
class BoundedMinHeap {
 public:
  explicit BoundedMinHeap(std::size_t capacity) : capacity_(capacity) {}

  /// Adds `value`; if the heap then holds more than capacity distinct values,
  /// the minimum is popped and written to `out` (once per multiplicity).
  void push(Position value, std::vector<Position>& out) {
    ++ops_;
    // descending order keeps the minimum at the back
    auto it = std::lower_bound(entries_.begin(), entries_.end(), value,
                               [](const Entry& e, Position v) { return e.value > v; });
    if (it != entries_.end() && it->value == value) {
      ++it->count;
    } else {
      entries_.insert(it, Entry{value, 1});
    }
    if (entries_.size() > capacity_) pop_min(out);
    peak_after_step_ = std::max(peak_after_step_, entries_.size());
  }

  /// Removes the minimum value and appends its copies to `out`.
  bool pop_min(std::vector<Position>& out) {
    if (entries_.empty()) return false;
    ++ops_;
    const Entry e = entries_.back();
    entries_.pop_back();
    out.insert(out.end(), e.count, e.value);
    return true;
  }

  void drain(std::vector<Position>& out) {
    while (pop_min(out)) {
    }
  }

  std::size_t length() const { return entries_.size(); }
  std::size_t capacity() const { return capacity_; }
  std::uint64_t ops() const { return ops_; }
  /// Largest length observed after a push completed (including its pop).
  std::size_t peak_length() const { return peak_after_step_; }

 private:
  struct Entry {
    Position value;
    std::uint32_t count;
  };
  std::vector<Entry> entries_;
  std::size_t capacity_;
  std::size_t peak_after_step_ = 0;
  std::uint64_t ops_ = 0;
};

/// Position stream of one query word within one document.
class IntermediateList {
 public:
  IntermediateList() = default;
  explicit IntermediateList(std::vector<Position> positions) : positions_(std::move(positions)) {}

  Position value() const { return at_ < positions_.size() ? positions_[at_] : kExhausted; }
  bool has_next() const { return at_ + 1 < positions_.size(); }
  void next() {
    if (at_ < positions_.size()) ++at_;
  }
  bool empty() const { return positions_.empty(); }
  const std::vector<Position>& positions() const { return positions_; }

 private:
  std::vector<Position> positions_;
  std::size_t at_ = 0;
};

/// Per-slot projections of postings in posting order, before any reordering.
template <std::size_t Offsets>
std::array<std::vector<std::int64_t>, Offsets + 1> raw_projections(std::span<const Posting<Offsets>> postings) {
  std::array<std::vector<std::int64_t>, Offsets + 1> out;
  for (const auto& p : postings)
    for (std::size_t slot = 0; slot <= Offsets; ++slot) out[slot].push_back(p.projected(slot));
  return out;
}

namespace detail {

inline Position checked_position(std::int64_t v) {
  if (v < 0 || v >= kExhausted) throw FormatError("posting projects outside the document", 0);
  return static_cast<Position>(v);
}

}  // namespace detail

/// Consumes every posting of `did` from `cursor` (which must sit on `did`) and
/// appends the key's projections to the lists of its unstarred query words.
/// Slot 0 is already in position order; the other slots pass through a
/// BoundedMinHeap of capacity 2 * max_distance and are drained at the end.
template <std::size_t Offsets>
void fill_intermediate_lists(PostingCursor<Offsets>& cursor, DocId did, const SelectedKey<Offsets + 1>& key,
                             std::vector<std::vector<Position>>& lists, std::uint32_t max_distance,
                             Metrics& metrics) {
  assert(!cursor.exhausted() && cursor.value().doc == did);
  constexpr std::size_t kSlots = Offsets + 1;
  std::array<std::optional<BoundedMinHeap>, kSlots> heaps;
  for (std::size_t slot = 1; slot < kSlots; ++slot)
    if (!key.starred[slot]) heaps[slot].emplace(2 * static_cast<std::size_t>(max_distance));

  do {
    const auto& p = cursor.value();
    if (!key.starred[0]) lists[key.ordinal[0]].push_back(p.pos);
    for (std::size_t slot = 1; slot < kSlots; ++slot)
      if (heaps[slot]) heaps[slot]->push(detail::checked_position(p.projected(slot)), lists[key.ordinal[slot]]);
  } while (cursor.next() && cursor.value().doc == did);

  for (std::size_t slot = 1; slot < kSlots; ++slot) {
    if (!heaps[slot]) continue;
    heaps[slot]->drain(lists[key.ordinal[slot]]);
    metrics.heap_ops += heaps[slot]->ops();
    metrics.max_heap_length = std::max<std::uint64_t>(metrics.max_heap_length, heaps[slot]->peak_length());
  }
}

// ---------------------------------------------------------------------------
// Proximity refinement

/// Keeps the positions of each query word that can take part in a match: an
/// assignment of one position per word where any two words at most two
/// apart in the query sit at distinct positions no more than max_distance
/// apart. Every key the engines use covers consecutive query words, so each
/// engine's lists contain all such positions; refinement therefore yields
/// the same lists whichever index produced them. Output lists are sorted
/// and duplicate-free.
inline std::vector<std::vector<Position>> refine_lists(std::vector<std::vector<Position>> lists,
                                                       std::uint32_t max_distance) {
  const std::size_t m = lists.size();
  for (auto& l : lists) {
    std::sort(l.begin(), l.end());
    l.erase(std::unique(l.begin(), l.end()), l.end());
  }
  if (m == 0) return lists;
  for (const auto& l : lists)
    if (l.empty()) return std::vector<std::vector<Position>>(m);
  if (m == 1) return lists;

  auto close = [&](Position a, Position b) {
    return a != b && (a > b ? a - b : b - a) <= max_distance;
  };
  auto window = [&](const std::vector<Position>& l, Position center) {
    const Position lo = center > max_distance ? center - max_distance : 0;
    const auto first = std::lower_bound(l.begin(), l.end(), lo);
    auto last = first;
    while (last != l.end() && *last <= static_cast<std::uint64_t>(center) + max_distance) ++last;
    return std::span<const Position>(l.data() + (first - l.begin()), static_cast<std::size_t>(last - first));
  };

  using State = std::pair<Position, Position>;  // positions of words i-1 and i
  std::vector<std::vector<State>> fwd(m);
  for (Position a : lists[0])
    for (Position b : window(lists[1], a))
      if (close(a, b)) fwd[1].emplace_back(a, b);
  for (std::size_t i = 2; i < m; ++i) {
    for (const auto& [a, b] : fwd[i - 1])
      for (Position c : window(lists[i], b))
        if (close(a, c) && close(b, c)) fwd[i].emplace_back(b, c);
    std::sort(fwd[i].begin(), fwd[i].end());
    fwd[i].erase(std::unique(fwd[i].begin(), fwd[i].end()), fwd[i].end());
    if (fwd[i].empty()) return std::vector<std::vector<Position>>(m);
  }
  if (fwd[1].empty()) return std::vector<std::vector<Position>>(m);

  std::vector<std::vector<State>> live(m);
  live[m - 1] = fwd[m - 1];
  for (std::size_t i = m - 1; i-- > 1;) {
    for (const auto& [a, b] : fwd[i]) {
      bool extends = false;
      for (Position c : window(lists[i + 1], b)) {
        if (close(a, c) && close(b, c) && std::binary_search(live[i + 1].begin(), live[i + 1].end(), State{b, c})) {
          extends = true;
          break;
        }
      }
      if (extends) live[i].emplace_back(a, b);
    }
  }

  std::vector<std::vector<Position>> out(m);
  for (const auto& [a, b] : live[1]) out[0].push_back(a);
  for (std::size_t i = 1; i < m; ++i)
    for (const auto& st : live[i]) out[i].push_back(st.second);
  for (auto& l : out) {
    std::sort(l.begin(), l.end());
    l.erase(std::unique(l.begin(), l.end()), l.end());
  }
  return out;
}

// ---------------------------------------------------------------------------
// Search in one document

/// Sweeps the lists of one document: take the list with the smallest value
/// (S) and the largest value (E); stop if the smallest list has nothing
/// left; otherwise advance it and report (S, E) when its new value passes E.
/// Ties pick the lowest query word. With `emit_final`, the window open at
/// exit is reported too.
inline std::vector<Fragment> search_in_document(std::vector<IntermediateList> lists, DocId did, bool emit_final) {
  std::vector<Fragment> out;
  if (lists.empty()) return out;
  for (const auto& l : lists)
    if (l.empty()) return out;
  for (;;) {
    std::size_t min_i = 0, max_i = 0;
    for (std::size_t i = 1; i < lists.size(); ++i) {
      if (lists[i].value() < lists[min_i].value()) min_i = i;
      if (lists[i].value() > lists[max_i].value()) max_i = i;
    }
    const Position s = lists[min_i].value();
    const Position e = lists[max_i].value();
    if (!lists[min_i].has_next()) {
      if (emit_final) out.push_back({did, s, e});
      break;
    }
    lists[min_i].next();
    if (lists[min_i].value() > e) out.push_back({did, s, e});
  }
  return out;
}

inline std::vector<Fragment> search_in_document(const std::vector<std::vector<Position>>& lists, DocId did,
                                                bool emit_final) {
  std::vector<IntermediateList> il;
  il.reserve(lists.size());
  for (const auto& l : lists) il.emplace_back(l);
  return search_in_document(std::move(il), did, emit_final);
}

namespace detail {

inline void finish_document(std::vector<std::vector<Position>>& lists, DocId did, std::uint32_t max_distance,
                            const QueryConfig& cfg, ResultSet& out) {
  auto ready = cfg.refine_lists ? refine_lists(std::move(lists), max_distance) : std::move(lists);
  for (const auto& f : search_in_document(ready, did, cfg.emit_final_fragment)) out.push_back(f);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Engines

enum class QueryPath { Triple, Pair, Ordinary, Empty };

inline const char* to_string(QueryPath p) {
  switch (p) {
    case QueryPath::Triple: return "triple";
    case QueryPath::Pair: return "pair";
    case QueryPath::Ordinary: return "ordinary";
    case QueryPath::Empty: return "empty";
  }
  return "?";
}

struct AvailableFamilies {
  bool ordinary = true, pair = true, triple = true;
};

/// Picks the evaluation path for one subquery. Stop-lemma subqueries of
/// length >= 3 use triple keys and length 2 uses pair keys; everything else
/// falls back to the ordinary index. A requested engine that cannot serve the
/// subquery falls back and says so in `notice`.
inline QueryPath resolve_path(const Subquery& sub, const Lexicon& lex, const LexiconConfig& lcfg, Engine engine,
                              AvailableFamilies fam, std::string* notice = nullptr) {
  for (auto id : sub.lemmas)
    if (id == kUnknownLemma) return QueryPath::Empty;
  const bool all_stop =
      std::all_of(sub.lemmas.begin(), sub.lemmas.end(), [&](LemmaId id) { return lex.is_stop(id, lcfg); });
  const std::size_t m = sub.size();
  auto fallback = [&](const std::string& why) {
    if (notice && engine != Engine::Auto) *notice = why;
    if (!fam.ordinary) throw QueryError(why + "; the index has no ordinary family to fall back to");
    return QueryPath::Ordinary;
  };
  switch (engine) {
    case Engine::Ordinary:
      if (!fam.ordinary) throw QueryError("engine ordinary needs the ordinary index family");
      return QueryPath::Ordinary;
    case Engine::Triple:
      if (!fam.triple) throw QueryError("engine triple needs the triple index family");
      if (!all_stop) return fallback("subquery has a non-stop lemma; triple engine falls back to the ordinary index");
      if (m >= 3) return QueryPath::Triple;
      if (m == 2 && fam.pair) return QueryPath::Pair;
      return fallback("subquery shorter than three lemmas; triple engine falls back");
    case Engine::Pair:
      if (!fam.pair) throw QueryError("engine pair needs the pair index family");
      if (!all_stop) return fallback("subquery has a non-stop lemma; pair engine falls back to the ordinary index");
      if (m >= 2) return QueryPath::Pair;
      return fallback("single-lemma subquery; pair engine falls back to the ordinary index");
    case Engine::Auto:
      if (all_stop && m >= 3 && fam.triple) return QueryPath::Triple;
      if (all_stop && m >= 2 && fam.pair) return QueryPath::Pair;
      return fallback("no multi-component index applies");
  }
  return QueryPath::Ordinary;
}

template <std::size_t Arity>
ResultSet evaluate_keyed_path(const Subquery& sub, const IndexFileReader<Arity>& reader, const Lexicon& lex,
                              std::uint32_t max_distance, const QueryConfig& cfg, Metrics& metrics) {
  ResultSet out;
  const auto keys = select_keys<Arity>(sub, lex);
  if (keys.empty()) return out;
  ReadCounters counters;
  std::vector<PostingCursor<Arity - 1>> cursors;
  cursors.reserve(keys.size());
  for (const auto& k : keys) cursors.push_back(reader.cursor(k.key, &counters));

  std::vector<std::vector<Position>> lists(sub.size());
  while (auto did = equalize(std::span(cursors))) {
    for (auto& l : lists) l.clear();
    for (std::size_t k = 0; k < keys.size(); ++k)
      fill_intermediate_lists(cursors[k], *did, keys[k], lists, max_distance, metrics);
    auto doc_lists = lists;
    detail::finish_document(doc_lists, *did, max_distance, cfg, out);
  }
  metrics.postings_read += counters.postings_read;
  metrics.bytes_read += counters.bytes_read;
  return out;
}

/// Three-component key evaluation of an all-stop subquery with m >= 3.
inline ResultSet evaluate_triple_path(const Subquery& sub, const Index& index, const QueryConfig& cfg,
                                      Metrics& metrics) {
  return evaluate_keyed_path<3>(sub, index.triples(), index.lexicon(), index.config().max_distance, cfg, metrics);
}

/// Two-component key evaluation of an all-stop subquery with m >= 2.
inline ResultSet evaluate_pair_path(const Subquery& sub, const Index& index, const QueryConfig& cfg,
                                    Metrics& metrics) {
  return evaluate_keyed_path<2>(sub, index.pairs(), index.lexicon(), index.config().max_distance, cfg, metrics);
}

/// Document-at-a-time intersection of plain (ID, P) lists, one cursor per
/// distinct lemma.
inline ResultSet evaluate_ordinary_path(const Subquery& sub, const Index& index, const QueryConfig& cfg,
                                        Metrics& metrics) {
  ResultSet out;
  std::vector<LemmaId> distinct = sub.lemmas;
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  ReadCounters counters;
  std::vector<PostingCursor<0>> cursors;
  for (auto id : distinct) cursors.push_back(index.ordinary().cursor(OrdinaryKey{{id}}, &counters));

  std::vector<std::vector<Position>> per_lemma(distinct.size());
  while (auto did = equalize(std::span(cursors))) {
    for (std::size_t k = 0; k < cursors.size(); ++k) {
      per_lemma[k].clear();
      do {
        per_lemma[k].push_back(cursors[k].value().pos);
      } while (cursors[k].next() && cursors[k].value().doc == *did);
    }
    std::vector<std::vector<Position>> lists(sub.size());
    for (std::size_t i = 0; i < sub.size(); ++i) {
      const auto k = static_cast<std::size_t>(std::lower_bound(distinct.begin(), distinct.end(), sub.lemmas[i]) -
                                              distinct.begin());
      lists[i] = per_lemma[k];
    }
    detail::finish_document(lists, *did, index.config().max_distance, cfg, out);
  }
  metrics.postings_read += counters.postings_read;
  metrics.bytes_read += counters.bytes_read;
  return out;
}

struct SubqueryResult {
  ResultSet fragments;
  Metrics metrics;
  QueryPath path = QueryPath::Empty;
  std::string notice;
};

inline AvailableFamilies families_of(const Index& index) {
  return {index.has_ordinary(), index.has_pair(), index.has_triple()};
}

inline SubqueryResult evaluate_subquery(const Subquery& sub, const Index& index, const QueryConfig& cfg) {
  SubqueryResult r;
  const auto t0 = std::chrono::steady_clock::now();
  r.path = resolve_path(sub, index.lexicon(), index.config().lexicon, cfg.engine, families_of(index), &r.notice);
  switch (r.path) {
    case QueryPath::Triple: r.fragments = evaluate_triple_path(sub, index, cfg, r.metrics); break;
    case QueryPath::Pair: r.fragments = evaluate_pair_path(sub, index, cfg, r.metrics); break;
    case QueryPath::Ordinary: r.fragments = evaluate_ordinary_path(sub, index, cfg, r.metrics); break;
    case QueryPath::Empty: break;
  }
  normalize_results(r.fragments);
  r.metrics.subqueries = 1;
  r.metrics.subquery_length = sub.size();
  r.metrics.wall_time_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

struct QueryResult {
  ResultSet fragments;
  Metrics metrics;
  std::vector<std::string> notices;
  std::vector<QueryPath> paths;
};

/// Expands the query, evaluates every subquery and merges the fragments.
inline QueryResult evaluate_query(const std::vector<std::string>& words, const Index& index, const QueryConfig& cfg) {
  QueryResult out;
  const auto t0 = std::chrono::steady_clock::now();
  const auto subs = expand_query(words, index.dictionary(), index.lexicon());
  for (const auto& sub : subs) {
    auto r = evaluate_subquery(sub, index, cfg);
    out.fragments.insert(out.fragments.end(), r.fragments.begin(), r.fragments.end());
    out.metrics.absorb(r.metrics);
    if (!r.notice.empty() && std::find(out.notices.begin(), out.notices.end(), r.notice) == out.notices.end())
      out.notices.push_back(r.notice);
    out.paths.push_back(r.path);
  }
  normalize_results(out.fragments);
  out.metrics.wall_time_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

inline QueryResult evaluate_query(std::string_view query, const Index& index, const QueryConfig& cfg) {
  return evaluate_query(query_words(query), index, cfg);
}

/// Words S-2 .. E+2 of the fragment's document, space separated.
inline std::string snippet(const Index& index, const Fragment& f) {
  const auto tokens = tokenize(index.repository().text(f.doc));
  const std::size_t lo = f.start >= 2 ? f.start - 2 : 0;
  const std::size_t hi = std::min<std::size_t>(tokens.size(), static_cast<std::size_t>(f.end) + 3);
  std::string out;
  for (std::size_t i = lo; i < hi; ++i) {
    if (!out.empty()) out.push_back(' ');
    out += tokens[i].word;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Brute-force oracle

/// The corpus held as per-lemma positions, rebuilt from raw text without
/// touching any index file.
class OracleCorpus {
 public:
  OracleCorpus(const std::vector<std::string>& texts, const Dictionary& dict, const Lexicon& lex) {
    tables_.reserve(texts.size());
    for (const auto& t : texts) tables_.emplace_back(lemmatize_document(t, dict, lex));
  }

  std::size_t size() const { return tables_.size(); }
  const PositionTable& table(DocId d) const { return tables_[d]; }

 private:
  std::vector<PositionTable> tables_;
};

struct OracleConfig {
  std::uint32_t max_distance = 5;
  LexiconConfig lexicon;
  QueryConfig query;
  AvailableFamilies families;
};

/// Answers a subquery by regenerating each selected key's postings per
/// document from token positions, sorting the projections directly and
/// running the same refinement and sweep.
inline ResultSet brute_force_search(const Subquery& sub, const OracleCorpus& corpus, const Lexicon& lex,
                                    const OracleConfig& cfg) {
  ResultSet out;
  const auto path = resolve_path(sub, lex, cfg.lexicon, cfg.query.engine, cfg.families);
  if (path == QueryPath::Empty) return out;
  const std::uint32_t md = cfg.max_distance;
  std::vector<SelectedKey<3>> triple_keys;
  std::vector<SelectedKey<2>> pair_keys;
  if (path == QueryPath::Triple) triple_keys = select_keys<3>(sub, lex);
  if (path == QueryPath::Pair) pair_keys = select_keys<2>(sub, lex);

  // Appends each unstarred slot's projected positions to the list of the
  // query ordinal it is bound to.
  auto project = [](const auto& postings, const auto& k, std::vector<std::vector<Position>>& lists) {
    for (std::size_t slot = 0; slot < k.starred.size(); ++slot)
      if (!k.starred[slot])
        for (const auto& p : postings) lists[k.ordinal[slot]].push_back(static_cast<Position>(p.projected(slot)));
  };

  std::vector<std::vector<Position>> lists;
  for (DocId d = 0; d < corpus.size(); ++d) {
    const auto& table = corpus.table(d);
    lists.resize(sub.size());
    for (auto& l : lists) l.clear();
    bool any_missing = false;
    for (auto lemma : sub.lemmas) any_missing |= table.positions(lemma).empty();
    if (any_missing) continue;
    if (path == QueryPath::Ordinary) {
      for (std::size_t i = 0; i < sub.size(); ++i) {
        const auto pos = table.positions(sub.lemmas[i]);
        lists[i].assign(pos.begin(), pos.end());
      }
    } else if (path == QueryPath::Triple) {
      for (const auto& k : triple_keys) {
        const auto& l = k.key.lemmas;
        const auto postings =
            triple_postings(d, k.key, table.positions(l[0]), table.positions(l[1]), table.positions(l[2]), md);
        if (postings.empty()) {
          any_missing = true;
          break;
        }
        project(postings, k, lists);
      }
    } else {
      for (const auto& k : pair_keys) {
        const auto& l = k.key.lemmas;
        const auto postings = pair_postings(d, table.positions(l[0]), table.positions(l[1]), md);
        if (postings.empty()) {
          any_missing = true;
          break;
        }
        project(postings, k, lists);
      }
    }
    if (any_missing) continue;
    for (auto& l : lists) std::sort(l.begin(), l.end());
    detail::finish_document(lists, d, md, cfg.query, out);
  }
  normalize_results(out);
  return out;
}

}  // namespace proxsearch
