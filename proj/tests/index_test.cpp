#include <gtest/gtest.h>

#include "proxsearch/index.hpp"
#include "support.hpp"

using namespace proxsearch;
using namespace testing_support;

namespace {

BuildOptions small_options(std::uint32_t md = 5) {
  BuildOptions o;
  o.config.max_distance = md;
  o.config.lexicon = {1000, 0};
  o.batch_docs = 2;
  return o;
}

std::vector<std::string> fixture_corpus() {
  return {"who are you who", "to be or not to be or", "", "Who, are you? And why did you say what you did?",
          "you are who you are"};
}

template <std::size_t Offsets>
std::vector<Posting<Offsets>> replay(PostingCursor<Offsets> c) {
  std::vector<Posting<Offsets>> out;
  while (c.next()) out.push_back(c.value());
  return out;
}

void corrupt_byte(const fs::path& p, std::size_t at, std::uint8_t value) {
  auto b = read_bytes(p);
  b.at(at) = value;
  std::ofstream(p, std::ios::binary | std::ios::trunc).write(reinterpret_cast<const char*>(b.data()),
                                                             static_cast<std::streamsize>(b.size()));
}

}  // namespace

TEST(RunSorter, MergesRunsInOrder) {
  TempDir dir;
  RunSorter<std::uint64_t> sorter(dir.path(), "t", 7);
  std::mt19937_64 rng(1);
  std::vector<std::uint64_t> all;
  for (int i = 0; i < 1000; ++i) {
    const auto v = rng() % 300;
    all.push_back(v);
    sorter.add(v);
  }
  EXPECT_GT(sorter.run_count(), 100u);
  std::vector<std::uint64_t> merged;
  sorter.merge([&](std::uint64_t v) { merged.push_back(v); });
  std::sort(all.begin(), all.end());
  EXPECT_EQ(merged, all);
}

TEST(Repository, RoundTrip) {
  TempDir dir;
  RepositoryWriter w;
  const std::vector<std::string> docs{"", "hello", std::string(100000, 'z'), "Привет"};
  for (const auto& d : docs) w.add(d);
  w.write(dir / "r");
  const auto repo = DocumentRepository::open(dir / "r");
  ASSERT_EQ(repo.size(), docs.size());
  for (DocId i = 0; i < docs.size(); ++i) EXPECT_EQ(repo.text(i), docs[i]);
  EXPECT_THROW(repo.text(4), std::out_of_range);
}

TEST(Repository, CorruptionIsAFormatError) {
  TempDir dir;
  RepositoryWriter w;
  w.add("some text that compresses");
  w.write(dir / "r");
  corrupt_byte(dir / "r", 0, 'X');
  EXPECT_THROW(DocumentRepository::open(dir / "r"), FormatError);
}

TEST(IndexBuild, WritesAllFilesAndManifest) {
  TempDir dir;
  const auto summary = build_index(fixture_corpus(), dir / "idx", small_options());
  EXPECT_EQ(summary.doc_count, 5u);
  for (const char* f : {kManifestFile, kLexiconFile, kOrdinaryFile, kPairFile, kTripleFile, kRepositoryFile})
    EXPECT_TRUE(fs::exists(dir / "idx" / f)) << f;
  EXPECT_FALSE(fs::exists(dir / "idx" / "runs.tmp"));

  const auto idx = Index::open(dir / "idx", true);
  EXPECT_EQ(idx.doc_count(), 5u);
  EXPECT_EQ(idx.manifest()["doc_count"], 5);
  EXPECT_EQ(idx.manifest()["max_distance"], 5);
  EXPECT_EQ(idx.manifest()["sw_count"], 1000);
  EXPECT_EQ(idx.manifest()["fu_count"], 0);
  EXPECT_EQ(idx.manifest()["lemma_count"], idx.lexicon().size());
  EXPECT_EQ(idx.repository().text(1), "to be or not to be or");
  EXPECT_EQ(idx.ordinary().posting_count(), summary.word_count);
}

TEST(IndexBuild, OnlyRequestedFamilies) {
  TempDir dir;
  auto opts = small_options();
  opts.config.families = Families::parse("ordinary");
  build_index(fixture_corpus(), dir / "idx", opts);
  EXPECT_FALSE(fs::exists(dir / "idx" / kPairFile));
  EXPECT_FALSE(fs::exists(dir / "idx" / kTripleFile));
  const auto idx = Index::open(dir / "idx");
  EXPECT_TRUE(idx.has_ordinary());
  EXPECT_FALSE(idx.has_pair());
  EXPECT_THROW(idx.triples(), std::runtime_error);
}

TEST(IndexBuild, RefusesNonEmptyOutputWithoutOverwrite) {
  TempDir dir;
  build_index(fixture_corpus(), dir / "idx", small_options());
  EXPECT_THROW(build_index(fixture_corpus(), dir / "idx", small_options()), std::runtime_error);
  auto opts = small_options();
  opts.overwrite = true;
  EXPECT_NO_THROW(build_index(fixture_corpus(), dir / "idx", opts));
}

TEST(IndexBuild, ToBeOrTripleListOnDisk) {
  TempDir dir;
  auto opts = small_options(6);
  opts.config.ranked_lemmas = {"to", "be", "or"};
  build_index({"to be or not to be or"}, dir / "idx", opts);
  const auto idx = Index::open(dir / "idx");
  const auto& lex = idx.lexicon();
  const TripleKey key{{*lex.find("to"), *lex.find("be"), *lex.find("or")}};
  EXPECT_EQ(idx.triples().read_all(key),
            (std::vector<Posting3>{{0, 0, {1, 2}}, {0, 0, {5, 6}}, {0, 4, {-3, -2}}, {0, 4, {1, 2}}}));
}

TEST(IndexBuild, EmptyCorpus) {
  TempDir dir;
  build_index({}, dir / "idx", small_options());
  const auto idx = Index::open(dir / "idx", true);
  EXPECT_EQ(idx.doc_count(), 0u);
  EXPECT_EQ(idx.triples().key_count(), 0u);
  EXPECT_EQ(idx.ordinary().posting_count(), 0u);
}

TEST(Cursor, ReplayMatchesReferenceReader) {
  TempDir dir;
  std::mt19937_64 rng(5);
  auto opts = small_options(3);
  opts.max_run_records = 50;  // force many runs
  build_index(random_corpus(rng, 40, 120, 12), dir / "idx", opts);
  const auto idx = Index::open(dir / "idx");

  const auto ref = RefIndexFile::read(dir / "idx" / kTripleFile);
  EXPECT_EQ(ref.key_count, idx.triples().key_count());
  std::uint64_t total = 0;
  for (std::size_t k = 0; k < ref.keys.size(); ++k) {
    const TripleKey key{{ref.keys[k][0], ref.keys[k][1], ref.keys[k][2]}};
    ReadCounters counters;
    const auto got = replay(idx.triples().cursor(key, &counters));
    ASSERT_EQ(got.size(), ref.lists[k].size());
    for (std::size_t i = 0; i < got.size(); ++i) ASSERT_EQ(to_ref(got[i]), ref.lists[k][i]);
    EXPECT_EQ(counters.postings_read, got.size());
    for (std::size_t i = 1; i < got.size(); ++i) {
      EXPECT_FALSE(cursor_before(got[i], got[i - 1]));
      EXPECT_NE(got[i], got[i - 1]);
    }
    total += got.size();
  }
  EXPECT_EQ(total, ref.posting_count);

  const auto ref_pairs = RefIndexFile::read(dir / "idx" / kPairFile);
  EXPECT_EQ(ref_pairs.posting_count, idx.pairs().posting_count());
  const auto ref_ord = RefIndexFile::read(dir / "idx" / kOrdinaryFile);
  EXPECT_EQ(ref_ord.posting_count, idx.ordinary().posting_count());
}

TEST(Cursor, AbsentKeyIsExhausted) {
  TempDir dir;
  build_index(fixture_corpus(), dir / "idx", small_options());
  const auto idx = Index::open(dir / "idx");
  auto c = idx.triples().cursor(TripleKey{{999999, 999999, 999999}});
  EXPECT_FALSE(c.next());
  EXPECT_TRUE(c.exhausted());
}

TEST(Cursor, CountsExactlyKPostings) {
  TempDir dir;
  build_index(fixture_corpus(), dir / "idx", small_options());
  const auto idx = Index::open(dir / "idx");
  const auto you = *idx.lexicon().find("you");
  ReadCounters counters;
  auto c = idx.ordinary().cursor(OrdinaryKey{{you}}, &counters);
  EXPECT_FALSE(c.started());
  int n = 0;
  while (c.next()) ++n;
  EXPECT_EQ(n, 1 + 3 + 2);
  EXPECT_EQ(counters.postings_read, 6u);
  EXPECT_GT(counters.bytes_read, 0u);
}

TEST(FormatErrors, BadMagicVersionAndTable) {
  TempDir dir;
  build_index(fixture_corpus(), dir / "idx", small_options());
  const auto path = dir / "idx" / kTripleFile;
  const auto pristine = read_bytes(path);
  auto restore = [&] {
    std::ofstream(path, std::ios::binary | std::ios::trunc)
        .write(reinterpret_cast<const char*>(pristine.data()), static_cast<std::streamsize>(pristine.size()));
  };

  corrupt_byte(path, 0, 'Q');
  EXPECT_THROW(IndexFileReader<3>::open(path), FormatError);
  restore();
  corrupt_byte(path, 4, 99);
  EXPECT_THROW(IndexFileReader<3>::open(path), FormatError);
  restore();
  corrupt_byte(path, 6, 2);
  EXPECT_THROW(IndexFileReader<3>::open(path), FormatError);
  restore();
  corrupt_byte(path, 8, 0xEE);  // key count
  EXPECT_THROW(IndexFileReader<3>::open(path), FormatError);
  restore();
  fs::resize_file(path, pristine.size() - 1);
  EXPECT_THROW(IndexFileReader<3>::open(path), FormatError);
  restore();
  EXPECT_NO_THROW(IndexFileReader<3>::open(path));
}

TEST(FormatErrors, CorruptBlockReportsOffset) {
  TempDir dir;
  build_index({"a a a a a a a a a a"}, dir / "idx", small_options());
  const auto path = dir / "idx" / kOrdinaryFile;
  const auto size = fs::file_size(path);
  // the only block is at the end of the file; make its last varint open-ended
  corrupt_byte(path, size - 1, 0x80);
  const auto reader = IndexFileReader<1>::open(path);
  auto c = reader.cursor(OrdinaryKey{{0}});
  try {
    while (c.next()) {
    }
    FAIL() << "expected a format error";
  } catch (const FormatError& e) {
    EXPECT_GE(e.offset(), kIndexHeaderSize);
    EXPECT_LE(e.offset(), size);
  }
}

TEST(FormatErrors, ManifestChecksums) {
  TempDir dir;
  build_index(fixture_corpus(), dir / "idx", small_options());
  const auto path = dir / "idx" / kPairFile;
  const auto b = read_bytes(path);
  corrupt_byte(path, b.size() - 1, static_cast<std::uint8_t>(b.back() ^ 1));
  EXPECT_THROW(Index::open(dir / "idx", true), FormatError);
  write_text(dir / "idx" / kManifestFile, "{ not json");
  EXPECT_THROW(Index::open(dir / "idx"), FormatError);
}

TEST(Determinism, BitIdenticalDirectories) {
  TempDir dir;
  std::mt19937_64 rng(77);
  const auto docs = random_corpus(rng, 60, 200, 20);
  auto a = small_options(4);
  a.threads = 1;
  auto b = small_options(4);
  b.threads = 3;
  b.batch_docs = 7;
  b.max_run_records = 100;
  build_index(docs, dir / "a", a);
  build_index(docs, dir / "b", b);
  std::vector<std::string> names;
  for (const auto& e : fs::directory_iterator(dir / "a")) names.push_back(e.path().filename().string());
  std::sort(names.begin(), names.end());
  std::size_t count_b = 0;
  for ([[maybe_unused]] const auto& e : fs::directory_iterator(dir / "b")) ++count_b;
  EXPECT_EQ(names.size(), count_b);
  for (const auto& n : names) EXPECT_EQ(read_bytes(dir / "a" / n), read_bytes(dir / "b" / n)) << n;
}

TEST(Families, Parse) {
  const auto f = Families::parse("ordinary,triple");
  EXPECT_TRUE(f.ordinary);
  EXPECT_FALSE(f.pair);
  EXPECT_TRUE(f.triple);
  EXPECT_TRUE(Families::parse("all").pair);
  EXPECT_THROW(Families::parse("quad"), std::invalid_argument);
}
