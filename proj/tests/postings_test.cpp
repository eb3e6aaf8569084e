#include <gtest/gtest.h>

#include <map>
#include <random>
#include <set>

#include "proxsearch/postings.hpp"

using namespace proxsearch;

namespace {

const LexiconConfig kAllStop{1000, 0};

std::vector<Position> positions_of(const LemmatizedDocument& doc, LemmaId lemma) {
  std::vector<Position> out;
  for (const auto& o : doc.occurrences)
    if (o.lemma == lemma) out.push_back(o.position);
  return out;
}

/// All postings of all keys of one document, collected from the build-side
/// enumerator and sorted per key.
template <std::size_t Arity, class Enumerate>
std::map<Key<Arity>, std::vector<Posting<Arity - 1>>> collect(Enumerate&& enumerate) {
  std::map<Key<Arity>, std::vector<Posting<Arity - 1>>> out;
  enumerate([&](const Key<Arity>& k, const Posting<Arity - 1>& p) { out[k].push_back(p); });
  for (auto& [k, v] : out) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
  }
  return out;
}

}  // namespace

TEST(NormalizeKey, SortsByFlAndTracksSlots) {
  const auto lex = Lexicon::from_ranks({{"who", 293}, {"are", 268}, {"you", 47}});
  const auto who = *lex.find("who"), are = *lex.find("are"), you = *lex.find("you");
  const auto n = normalize_triple(who, are, you, lex);
  EXPECT_EQ(n.key.lemmas, (std::array<LemmaId, 3>{you, are, who}));
  EXPECT_EQ(n.slot_of, (std::array<std::size_t, 3>{2, 1, 0}));
  EXPECT_TRUE(is_normalized(n.key, lex));
}

TEST(NormalizeKey, EqualComponentsKeepIdentity) {
  const auto lex = Lexicon::from_ranks({{"a", 3}});
  const auto a = *lex.find("a");
  const auto n = normalize_triple(a, a, a, lex);
  EXPECT_EQ(n.key.lemmas, (std::array<LemmaId, 3>{a, a, a}));
  EXPECT_EQ(n.slot_of, (std::array<std::size_t, 3>{0, 1, 2}));
}

TEST(NormalizeKey, WhatYouDo) {
  const auto lex = Lexicon::from_ranks({{"what", 60}, {"you", 47}, {"do", 100}});
  const auto n = normalize_triple(*lex.find("what"), *lex.find("you"), *lex.find("do"), lex);
  EXPECT_EQ(n.key.lemmas, (std::array<LemmaId, 3>{*lex.find("you"), *lex.find("what"), *lex.find("do")}));
}

TEST(TriplePostings, ToBeOrExampleWithDistanceSix) {
  const auto lex = Lexicon::from_counts({{"to", 2}, {"be", 2}, {"or", 2}, {"not", 1}}, 1, {"to", "be", "or"});
  const auto doc = lemmatize_document("to be or not to be or", {}, lex);
  const TripleKey key{{*lex.find("to"), *lex.find("be"), *lex.find("or")}};
  const auto got = triple_postings(7, key, positions_of(doc, key.lemmas[0]), positions_of(doc, key.lemmas[1]),
                                   positions_of(doc, key.lemmas[2]), 6);
  const std::vector<Posting3> want{{7, 0, {1, 2}}, {7, 0, {5, 6}}, {7, 4, {-3, -2}}, {7, 4, {1, 2}}};
  EXPECT_EQ(got, want);

  const auto all = collect<3>([&](auto&& sink) { for_each_triple_posting(doc, 7, lex, kAllStop, 6, sink); });
  ASSERT_TRUE(all.contains(key));
  EXPECT_EQ(all.at(key), want);
}

TEST(TriplePostings, AbsentCompanionGivesNothing) {
  const std::vector<Position> f{0, 4}, s{}, t{2};
  EXPECT_TRUE(triple_postings(0, TripleKey{{0, 1, 2}}, f, s, t, 5).empty());
}

TEST(TriplePostings, SameSecondAndThirdLemmaNeedsTwoOccurrences) {
  // key (f, s, s): f at 0, s at 1 only -> nothing; add s at 3 -> cyclic pairs
  EXPECT_TRUE(triple_postings(0, TripleKey{{0, 1, 1}}, std::vector<Position>{0}, std::vector<Position>{1},
                              std::vector<Position>{1}, 5)
                  .empty());
  const auto got = triple_postings(0, TripleKey{{0, 1, 1}}, std::vector<Position>{0}, std::vector<Position>{1, 3},
                                   std::vector<Position>{1, 3}, 5);
  EXPECT_EQ(got, (std::vector<Posting3>{{0, 0, {1, 3}}, {0, 0, {3, 1}}}));
}

TEST(PairPostings, Exhaustive) {
  // "to be or", key (to, be)
  EXPECT_EQ(pair_postings(3, std::vector<Position>{0}, std::vector<Position>{1}, 5),
            (std::vector<Posting2>{{3, 0, {1}}}));
  // "w v w", key (w, v)
  EXPECT_EQ(pair_postings(3, std::vector<Position>{0, 2}, std::vector<Position>{1}, 5),
            (std::vector<Posting2>{{3, 0, {1}}, {3, 2, {-1}}}));
  EXPECT_TRUE(pair_postings(3, std::vector<Position>{0, 2}, std::vector<Position>{}, 5).empty());
}

TEST(OrdinaryPostings, OnePerOccurrence) {
  Dictionary dict;
  dict.add("are", {"are", "be"});
  const auto lex = Lexicon::from_counts({{"to", 1}, {"are", 1}, {"be", 1}, {"or", 1}});
  const auto doc = lemmatize_document("to are or", dict, lex);
  const auto all = collect<1>([&](auto&& sink) { for_each_ordinary_posting(doc, 0, sink); });
  EXPECT_EQ(all.at(OrdinaryKey{{*lex.find("to")}}), (std::vector<Posting1>{{0, 0, {}}}));
  EXPECT_EQ(all.at(OrdinaryKey{{*lex.find("are")}}), (std::vector<Posting1>{{0, 1, {}}}));
  EXPECT_EQ(all.at(OrdinaryKey{{*lex.find("be")}}), (std::vector<Posting1>{{0, 1, {}}}));
  EXPECT_EQ(all.at(OrdinaryKey{{*lex.find("or")}}), (std::vector<Posting1>{{0, 2, {}}}));

  const auto empty = lemmatize_document("", dict, lex);
  EXPECT_TRUE(collect<1>([&](auto&& sink) { for_each_ordinary_posting(empty, 0, sink); }).empty());
}

TEST(PairPostings, OnlyStopLemmasAreKeyed) {
  // a is stop (FL 0), b is not
  const auto lex = Lexicon::from_counts({{"a", 3}, {"b", 1}});
  const auto doc = lemmatize_document("a b a", {}, lex);
  const auto all = collect<2>([&](auto&& sink) { for_each_pair_posting(doc, 0, lex, {1, 0}, 5, sink); });
  ASSERT_EQ(all.size(), 1u);
  const auto a = *lex.find("a");
  EXPECT_EQ(all.at(PairKey{{a, a}}), (std::vector<Posting2>{{0, 0, {2}}, {0, 2, {-2}}}));
}

// For random short documents: every triple key's postings from the build-side
// enumerator equal triple_postings(), every record is well formed, and the
// projected positions per slot are exactly the occurrences that take part in
// some (pf, ps, pt) with distinct positions and both offsets <= max_distance.
TEST(TriplePostings, CoverageMatchesExhaustiveScan) {
  std::mt19937_64 rng(20240611);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t vocab = 2 + rng() % 5;
    const std::size_t words = 1 + rng() % 200;
    const std::uint32_t md = 1 + static_cast<std::uint32_t>(rng() % 6);
    std::string text;
    std::map<std::string, std::uint64_t> counts;
    for (std::size_t i = 0; i < words; ++i) {
      const auto w = "x" + std::to_string(rng() % vocab);
      text += w + " ";
      ++counts[w];
    }
    const auto lex = Lexicon::from_counts(counts);
    const auto doc = lemmatize_document(text, {}, lex);
    const auto all = collect<3>([&](auto&& sink) { for_each_triple_posting(doc, 0, lex, kAllStop, md, sink); });

    std::set<TripleKey> expected_keys;
    for (LemmaId f = 0; f < lex.size(); ++f)
      for (LemmaId s = 0; s < lex.size(); ++s)
        for (LemmaId t = 0; t < lex.size(); ++t) {
          const TripleKey key{{f, s, t}};
          if (!is_normalized(key, lex)) continue;
          const auto pf = positions_of(doc, f), ps = positions_of(doc, s), pt = positions_of(doc, t);
          std::array<std::set<std::int64_t>, 3> want;
          for (auto a : pf)
            for (auto b : ps)
              for (auto c : pt) {
                if (a == b || a == c || b == c) continue;
                const auto d1 = static_cast<std::int64_t>(b) - a, d2 = static_cast<std::int64_t>(c) - a;
                if (std::abs(d1) > md || std::abs(d2) > md) continue;
                want[0].insert(a);
                want[1].insert(b);
                want[2].insert(c);
              }
          const auto direct = triple_postings(0, key, pf, ps, pt, md);
          if (want[0].empty()) {
            EXPECT_TRUE(direct.empty());
            EXPECT_FALSE(all.contains(key));
            continue;
          }
          expected_keys.insert(key);
          ASSERT_TRUE(all.contains(key));
          EXPECT_EQ(all.at(key), direct);
          std::array<std::set<std::int64_t>, 3> got;
          for (const auto& p : direct) {
            EXPECT_GE(std::abs(p.offsets[0]), 1);
            EXPECT_LE(std::abs(p.offsets[0]), static_cast<std::int32_t>(md));
            EXPECT_GE(std::abs(p.offsets[1]), 1);
            EXPECT_LE(std::abs(p.offsets[1]), static_cast<std::int32_t>(md));
            EXPECT_NE(p.offsets[0], p.offsets[1]);
            for (std::size_t slot = 0; slot < 3; ++slot) got[slot].insert(p.projected(slot));
          }
          EXPECT_EQ(got, want) << "trial " << trial;
        }
    EXPECT_EQ(all.size(), expected_keys.size());
  }
}

TEST(PairPostings, EnumeratorMatchesExhaustiveScan) {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t vocab = 2 + rng() % 5;
    const std::size_t words = 1 + rng() % 150;
    const std::uint32_t md = 1 + static_cast<std::uint32_t>(rng() % 6);
    std::string text;
    std::map<std::string, std::uint64_t> counts;
    for (std::size_t i = 0; i < words; ++i) {
      const auto w = "y" + std::to_string(rng() % vocab);
      text += w + " ";
      ++counts[w];
    }
    const auto lex = Lexicon::from_counts(counts);
    const auto doc = lemmatize_document(text, {}, lex);
    const auto all = collect<2>([&](auto&& sink) { for_each_pair_posting(doc, 0, lex, kAllStop, md, sink); });
    std::size_t keys = 0;
    for (LemmaId w = 0; w < lex.size(); ++w)
      for (LemmaId v = 0; v < lex.size(); ++v) {
        const PairKey key{{w, v}};
        if (!is_normalized(key, lex)) continue;
        std::vector<Posting2> want;
        for (auto a : positions_of(doc, w))
          for (auto b : positions_of(doc, v)) {
            const auto d = static_cast<std::int64_t>(b) - a;
            if (d != 0 && std::abs(d) <= md) want.push_back({0, a, {static_cast<std::int32_t>(d)}});
          }
        std::sort(want.begin(), want.end());
        if (want.empty()) {
          EXPECT_FALSE(all.contains(key));
          continue;
        }
        ++keys;
        ASSERT_TRUE(all.contains(key));
        EXPECT_EQ(all.at(key), want);
      }
    EXPECT_EQ(all.size(), keys);
  }
}
