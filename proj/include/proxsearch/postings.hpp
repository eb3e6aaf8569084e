// Posting records, multi-component keys and the rules that derive key
// postings from lemma positions.
#pragma once

#include <algorithm>
#include <array>
#include <compare>
#include <cstdint>
#include <cstdlib>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

#include "proxsearch/lexicon.hpp"

namespace proxsearch {

/// Key of an index family. Arity 1 is the ordinary index, 2 is (w, v),
/// 3 is (f, s, t). Components of a stored key are in Lexicon::precedes order.
template <std::size_t Arity>
struct Key {
  std::array<LemmaId, Arity> lemmas{};

  auto operator<=>(const Key&) const = default;
  bool operator==(const Key&) const = default;
};

using OrdinaryKey = Key<1>;
using PairKey = Key<2>;
using TripleKey = Key<3>;

/// (ID, P) plus one signed offset per extra key component: D for pairs,
/// D1 and D2 for triples.
template <std::size_t Offsets>
struct Posting {
  DocId doc = 0;
  Position pos = 0;
  std::array<std::int32_t, Offsets> offsets{};

  auto operator<=>(const Posting&) const = default;
  bool operator==(const Posting&) const = default;

  /// Position of key component `slot` (slot 0 is P).
  std::int64_t projected(std::size_t slot) const {
    return slot == 0 ? static_cast<std::int64_t>(pos) : static_cast<std::int64_t>(pos) + offsets[slot - 1];
  }
};

using Posting1 = Posting<0>;
using Posting2 = Posting<1>;
using Posting3 = Posting<2>;

/// Cursor ordering: A < B iff A.ID < B.ID or (A.ID = B.ID and A.P < B.P).
template <std::size_t N>
constexpr bool cursor_before(const Posting<N>& a, const Posting<N>& b) {
  return a.doc < b.doc || (a.doc == b.doc && a.pos < b.pos);
}

/// A key in normalized order together with where each original slot went:
/// `slot_of[i]` is the normalized slot holding input component i.
template <std::size_t Arity>
struct NormalizedKey {
  Key<Arity> key;
  std::array<std::size_t, Arity> slot_of{};
};

/// Sorts components by FL-number (ties by lemma id). The sort is stable, so
/// equal lemmas keep their input order.
template <std::size_t Arity>
NormalizedKey<Arity> normalize_key(const std::array<LemmaId, Arity>& components, const Lexicon& lex) {
  std::array<std::size_t, Arity> order{};
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return lex.precedes(components[a], components[b]);
  });
  NormalizedKey<Arity> out;
  for (std::size_t slot = 0; slot < Arity; ++slot) {
    out.key.lemmas[slot] = components[order[slot]];
    out.slot_of[order[slot]] = slot;
  }
  return out;
}

inline NormalizedKey<3> normalize_triple(LemmaId a, LemmaId b, LemmaId c, const Lexicon& lex) {
  return normalize_key<3>({a, b, c}, lex);
}

template <std::size_t Arity>
bool is_normalized(const Key<Arity>& key, const Lexicon& lex) {
  for (std::size_t i = 1; i < Arity; ++i)
    if (lex.precedes(key.lemmas[i], key.lemmas[i - 1])) return false;
  return true;
}

/// Positions of `positions` within max_distance of `center`, excluding center.
/// Overwrites `out`.
inline void positions_near(std::span<const Position> positions, Position center, std::uint32_t max_distance,
                           std::vector<Position>& out) {
  const std::int64_t lo = static_cast<std::int64_t>(center) - max_distance;
  const std::int64_t hi = static_cast<std::int64_t>(center) + max_distance;
  auto first = std::lower_bound(positions.begin(), positions.end(), lo < 0 ? Position{0} : static_cast<Position>(lo));
  out.clear();
  for (auto it = first; it != positions.end() && static_cast<std::int64_t>(*it) <= hi; ++it)
    if (*it != center) out.push_back(*it);
}

inline std::vector<Position> positions_near(std::span<const Position> positions, Position center,
                                            std::uint32_t max_distance) {
  std::vector<Position> out;
  positions_near(positions, center, max_distance, out);
  return out;
}

/// Emits the (ps, pt) companions of one f occurrence.
///
/// Distinct s and t lemmas: the i-th nearby s pairs with the i-th nearby t and
/// the shorter list repeats its last element, so every nearby occurrence shows
/// up in at least one posting and max(|Ss|, |St|) postings are emitted.
///
/// s == t: the two slots need distinct occurrences, so each occurrence pairs
/// with its successor, cyclically. Needs at least two occurrences.
template <class Emit>
void pair_companions(std::span<const Position> near_s, std::span<const Position> near_t, bool same_lemma,
                     Emit&& emit) {
  if (near_s.empty() || near_t.empty()) return;
  if (same_lemma) {
    const std::size_t k = near_s.size();
    if (k < 2) return;
    for (std::size_t i = 0; i < k; ++i) emit(near_s[i], near_s[(i + 1) % k]);
    return;
  }
  const std::size_t k = std::max(near_s.size(), near_t.size());
  for (std::size_t i = 0; i < k; ++i)
    emit(near_s[std::min(i, near_s.size() - 1)], near_t[std::min(i, near_t.size() - 1)]);
}

/// Postings of one normalized triple key in one document, from the sorted
/// position lists of its three lemmas. Result is sorted and duplicate-free.
inline std::vector<Posting3> triple_postings(DocId doc, const TripleKey& key, std::span<const Position> f_positions,
                                             std::span<const Position> s_positions,
                                             std::span<const Position> t_positions, std::uint32_t max_distance) {
  std::vector<Posting3> out;
  const bool same_st = key.lemmas[1] == key.lemmas[2];
  std::vector<Position> ss, st;
  for (const Position pf : f_positions) {
    positions_near(s_positions, pf, max_distance, ss);
    if (!same_st) positions_near(t_positions, pf, max_distance, st);
    pair_companions(ss, same_st ? ss : st, same_st, [&](Position ps, Position pt) {
      out.push_back(Posting3{doc, pf,
                             {static_cast<std::int32_t>(static_cast<std::int64_t>(ps) - pf),
                              static_cast<std::int32_t>(static_cast<std::int64_t>(pt) - pf)}});
    });
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

/// Postings of one normalized pair key in one document: every (pw, pv) with
/// 0 < |pv - pw| <= max_distance.
inline std::vector<Posting2> pair_postings(DocId doc, std::span<const Position> w_positions,
                                           std::span<const Position> v_positions, std::uint32_t max_distance) {
  std::vector<Posting2> out;
  std::vector<Position> near;
  for (const Position pw : w_positions) {
    positions_near(v_positions, pw, max_distance, near);
    for (const Position pv : near)
      out.push_back(Posting2{doc, pw, {static_cast<std::int32_t>(static_cast<std::int64_t>(pv) - pw)}});
  }
  std::sort(out.begin(), out.end());
  return out;
}

/// Per-lemma sorted positions of one document, restricted to a lemma subset.
class PositionTable {
 public:
  PositionTable() = default;

  explicit PositionTable(const LemmatizedDocument& doc) {
    for (const auto& occ : doc.occurrences) table_[occ.lemma].push_back(occ.position);
  }

  std::span<const Position> positions(LemmaId lemma) const {
    if (auto it = table_.find(lemma); it != table_.end()) return it->second;
    return {};
  }

 private:
  std::unordered_map<LemmaId, std::vector<Position>> table_;
};

/// Enumerates every posting of every normalized stop-lemma triple key in one
/// document. The callback receives (key, posting) in no particular order.
template <class Sink>
void for_each_triple_posting(const LemmatizedDocument& doc, DocId id, const Lexicon& lex, const LexiconConfig& lcfg,
                             std::uint32_t max_distance, Sink&& sink) {
  const auto& occ = doc.occurrences;
  std::vector<std::uint8_t> stop(occ.size());
  for (std::size_t i = 0; i < occ.size(); ++i) stop[i] = lex.is_stop(occ[i].lemma, lcfg) ? 1 : 0;

  struct Neighbour {
    LemmaId lemma;
    Position position;
  };
  std::vector<Neighbour> near;
  std::vector<std::pair<std::size_t, std::size_t>> groups;  // [begin, end) per distinct lemma
  std::vector<Position> ss, st;

  std::size_t window_begin = 0;
  for (std::size_t i = 0; i < occ.size(); ++i) {
    if (!stop[i]) continue;
    const Position pf = occ[i].position;
    const LemmaId f = occ[i].lemma;
    while (occ[window_begin].position + static_cast<std::int64_t>(max_distance) < pf) ++window_begin;

    near.clear();
    for (std::size_t j = window_begin; j < occ.size() && occ[j].position <= static_cast<std::int64_t>(pf) + max_distance;
         ++j) {
      if (!stop[j] || occ[j].position == pf) continue;
      if (lex.precedes(occ[j].lemma, f)) continue;
      near.push_back({occ[j].lemma, occ[j].position});
    }
    std::sort(near.begin(), near.end(), [&](const Neighbour& a, const Neighbour& b) {
      if (a.lemma != b.lemma) return lex.precedes(a.lemma, b.lemma);
      return a.position < b.position;
    });
    groups.clear();
    for (std::size_t j = 0; j < near.size();) {
      std::size_t k = j;
      while (k < near.size() && near[k].lemma == near[j].lemma) ++k;
      groups.emplace_back(j, k);
      j = k;
    }
    for (std::size_t a = 0; a < groups.size(); ++a) {
      ss.clear();
      for (std::size_t j = groups[a].first; j < groups[a].second; ++j) ss.push_back(near[j].position);
      for (std::size_t b = a; b < groups.size(); ++b) {
        st.clear();
        for (std::size_t j = groups[b].first; j < groups[b].second; ++j) st.push_back(near[j].position);
        const TripleKey key{{f, near[groups[a].first].lemma, near[groups[b].first].lemma}};
        pair_companions(ss, st, a == b, [&](Position ps, Position pt) {
          sink(key, Posting3{id, pf,
                             {static_cast<std::int32_t>(static_cast<std::int64_t>(ps) - pf),
                              static_cast<std::int32_t>(static_cast<std::int64_t>(pt) - pf)}});
        });
      }
    }
  }
}

/// Enumerates every posting of every normalized stop-lemma pair key in one
/// document.
template <class Sink>
void for_each_pair_posting(const LemmatizedDocument& doc, DocId id, const Lexicon& lex, const LexiconConfig& lcfg,
                           std::uint32_t max_distance, Sink&& sink) {
  const auto& occ = doc.occurrences;
  std::vector<std::uint8_t> stop(occ.size());
  for (std::size_t i = 0; i < occ.size(); ++i) stop[i] = lex.is_stop(occ[i].lemma, lcfg) ? 1 : 0;
  std::size_t window_begin = 0;
  for (std::size_t i = 0; i < occ.size(); ++i) {
    if (!stop[i]) continue;
    const Position pw = occ[i].position;
    const LemmaId w = occ[i].lemma;
    while (occ[window_begin].position + static_cast<std::int64_t>(max_distance) < pw) ++window_begin;
    for (std::size_t j = window_begin; j < occ.size() && occ[j].position <= static_cast<std::int64_t>(pw) + max_distance;
         ++j) {
      if (!stop[j] || occ[j].position == pw || lex.precedes(occ[j].lemma, w)) continue;
      sink(PairKey{{w, occ[j].lemma}},
           Posting2{id, pw, {static_cast<std::int32_t>(static_cast<std::int64_t>(occ[j].position) - pw)}});
    }
  }
}

template <class Sink>
void for_each_ordinary_posting(const LemmatizedDocument& doc, DocId id, Sink&& sink) {
  for (const auto& occ : doc.occurrences) sink(OrdinaryKey{{occ.lemma}}, Posting1{id, occ.position, {}});
}

}  // namespace proxsearch
