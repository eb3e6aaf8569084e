// Building and opening an index directory.
//
// Directory contents:
//   manifest        UTF-8 JSON: configuration, counts, file checksums
//   lexicon         lemma table with counts and FL-numbers
//   ordinary.idx    (lemma) -> (ID, P)
//   pairs.idx       (w, v) -> (ID, P, D)
//   triples.idx     (f, s, t) -> (ID, P, D1, D2)
//   docs.repo       compressed document texts
//   dictionary.tsv  present when the build used a lemma dictionary
#pragma once

#include <zlib.h>

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "proxsearch/index_file.hpp"
#include "proxsearch/lexicon.hpp"
#include "proxsearch/postings.hpp"
#include "proxsearch/repository.hpp"
#include "proxsearch/run_sorter.hpp"

namespace proxsearch {

namespace fs = std::filesystem;

struct Families {
  bool ordinary = true;
  bool pair = true;
  bool triple = true;

  /// Parses a comma-separated list such as "ordinary,triple".
  static Families parse(std::string_view list) {
    Families f{false, false, false};
    std::size_t start = 0;
    while (start <= list.size()) {
      const auto comma = list.find(',', start);
      const auto name = list.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
      if (name == "ordinary") f.ordinary = true;
      else if (name == "pair" || name == "pairs") f.pair = true;
      else if (name == "triple" || name == "triples") f.triple = true;
      else if (name == "all") f = Families{};
      else if (!name.empty()) throw std::invalid_argument("unknown index family: " + std::string(name));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    return f;
  }

  std::vector<std::string> names() const {
    std::vector<std::string> out;
    if (ordinary) out.emplace_back("ordinary");
    if (pair) out.emplace_back("pair");
    if (triple) out.emplace_back("triple");
    return out;
  }
};

struct IndexConfig {
  std::uint32_t max_distance = 5;
  LexiconConfig lexicon;
  Families families;
  std::uint64_t min_count = 1;  // lemmas counted fewer times get the rare FL-number
  /// Lemmas whose FL order is fixed up front, most frequent first.
  std::vector<std::string> ranked_lemmas;
};

struct BuildOptions {
  IndexConfig config;
  Dictionary dictionary;
  std::size_t batch_docs = 128;
  std::size_t max_run_records = std::size_t{1} << 22;
  unsigned threads = 1;
  bool overwrite = false;
};

struct FamilySummary {
  std::uint64_t keys = 0;
  std::uint64_t postings = 0;
  std::uint64_t bytes = 0;
};

struct BuildSummary {
  std::uint64_t doc_count = 0;
  std::uint64_t lemma_count = 0;
  std::uint64_t word_count = 0;
  std::map<std::string, FamilySummary> families;
};

inline constexpr const char* kManifestFile = "manifest";
inline constexpr const char* kLexiconFile = "lexicon";
inline constexpr const char* kOrdinaryFile = "ordinary.idx";
inline constexpr const char* kPairFile = "pairs.idx";
inline constexpr const char* kTripleFile = "triples.idx";
inline constexpr const char* kRepositoryFile = "docs.repo";
inline constexpr const char* kDictionaryFile = "dictionary.tsv";

inline std::uint32_t file_crc32(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::vector<char> buf(1 << 16);
  uLong crc = crc32(0L, Z_NULL, 0);
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    const auto n = in.gcount();
    if (n > 0) crc = crc32(crc, reinterpret_cast<const Bytef*>(buf.data()), static_cast<uInt>(n));
  }
  return static_cast<std::uint32_t>(crc);
}

namespace detail {

template <std::size_t Arity>
struct KeyedPosting {
  Key<Arity> key;
  Posting<Arity - 1> posting;

  auto operator<=>(const KeyedPosting&) const = default;
};

/// Runs `generate(doc_index, out_vector)` over a batch of documents on
/// `threads` workers; results are concatenated in document order.
template <class Record, class Generate>
std::vector<Record> generate_batch(std::size_t begin, std::size_t end, unsigned threads, Generate&& generate) {
  const std::size_t n = end - begin;
  threads = static_cast<unsigned>(std::max<std::size_t>(1, std::min<std::size_t>(threads, n)));
  std::vector<std::vector<Record>> parts(threads);
  auto work = [&](unsigned t) {
    const std::size_t lo = begin + n * t / threads;
    const std::size_t hi = begin + n * (t + 1) / threads;
    for (std::size_t d = lo; d < hi; ++d) generate(d, parts[t]);
  };
  if (threads == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(work, t);
    for (auto& th : pool) th.join();
  }
  std::vector<Record> out;
  std::size_t total = 0;
  for (auto& p : parts) total += p.size();
  out.reserve(total);
  for (auto& p : parts) out.insert(out.end(), p.begin(), p.end());
  return out;
}

template <std::size_t Arity, class Generate>
FamilySummary build_family(const fs::path& out_path, const fs::path& run_dir, const std::string& name,
                           std::size_t doc_count, const BuildOptions& opts, Generate&& generate) {
  using Record = KeyedPosting<Arity>;
  RunSorter<Record> sorter(run_dir, name, opts.max_run_records);
  const std::size_t batch = std::max<std::size_t>(opts.batch_docs, 1);
  for (std::size_t begin = 0; begin < doc_count; begin += batch) {
    const std::size_t end = std::min(doc_count, begin + batch);
    auto records = generate_batch<Record>(begin, end, opts.threads, [&](std::size_t d, std::vector<Record>& sink) {
      generate(d, [&](const Key<Arity>& k, const Posting<Arity - 1>& p) { sink.push_back(Record{k, p}); });
    });
    sorter.add(records);
    sorter.flush_run();
  }
  IndexFileWriter<Arity> writer(out_path);
  sorter.merge([&](const Record& r) { writer.add(r.key, r.posting); });
  writer.finish();
  return FamilySummary{writer.key_count(), writer.posting_count(), fs::file_size(out_path)};
}

inline void write_lexicon(const fs::path& path, const Lexicon& lex) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << "# proxsearch lexicon v1: text, count, fl\n";
  for (LemmaId id = 0; id < lex.size(); ++id) out << lex.text(id) << '\t' << lex.count(id) << '\t' << lex.fl(id) << '\n';
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

inline Lexicon read_lexicon(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::vector<std::string> texts;
  std::vector<FlNumber> fls;
  std::vector<std::uint64_t> counts;
  std::string line;
  std::uint64_t offset = 0;
  while (std::getline(in, line)) {
    const auto line_offset = offset;
    offset += line.size() + 1;
    if (line.empty() || line[0] == '#') continue;
    const auto t1 = line.find('\t');
    const auto t2 = t1 == std::string::npos ? std::string::npos : line.find('\t', t1 + 1);
    if (t2 == std::string::npos) throw FormatError("malformed lexicon line", line_offset);
    try {
      texts.push_back(line.substr(0, t1));
      counts.push_back(std::stoull(line.substr(t1 + 1, t2 - t1 - 1)));
      fls.push_back(static_cast<FlNumber>(std::stoull(line.substr(t2 + 1))));
    } catch (const std::exception&) {
      throw FormatError("malformed lexicon line", line_offset);
    }
  }
  return Lexicon::from_columns(std::move(texts), std::move(fls), std::move(counts));
}

inline void prepare_output_dir(const fs::path& dir, bool overwrite) {
  if (fs::exists(dir)) {
    if (!fs::is_directory(dir)) throw std::runtime_error(dir.string() + " exists and is not a directory");
    if (!fs::is_empty(dir)) {
      if (!overwrite) throw std::runtime_error(dir.string() + " is not empty (use --force to overwrite)");
      for (const auto& entry : fs::directory_iterator(dir)) fs::remove_all(entry.path());
    }
  } else {
    fs::create_directories(dir);
  }
}

}  // namespace detail

/// Builds every enabled index family, the repository, lexicon and manifest.
/// Output is a pure function of the documents and options.
inline BuildSummary build_index(const std::vector<std::string>& documents, const fs::path& out_dir,
                                const BuildOptions& opts) {
  if (opts.config.max_distance < 1) throw std::invalid_argument("max_distance must be at least 1");
  if (documents.size() > 0xFFFFFFFFull) throw std::length_error("too many documents");
  detail::prepare_output_dir(out_dir, opts.overwrite);

  BuildSummary summary;
  summary.doc_count = documents.size();

  // Pass 1: lemmatize, count, store texts.
  std::map<std::string, std::uint64_t> counts;
  std::unordered_map<std::string, std::uint32_t> provisional;
  std::vector<std::string> provisional_text;
  std::vector<std::vector<Occurrence>> raw(documents.size());
  std::vector<Position> lengths(documents.size());
  {
    RepositoryWriter repo;
    for (std::size_t d = 0; d < documents.size(); ++d) {
      repo.add(documents[d]);
      const auto tokens = tokenize(documents[d]);
      lengths[d] = static_cast<Position>(tokens.size());
      summary.word_count += tokens.size();
      for (const auto& tok : tokens) {
        for (auto& lemma : opts.dictionary.lemmatize(tok.word)) {
          auto [it, fresh] = provisional.try_emplace(lemma, static_cast<std::uint32_t>(provisional_text.size()));
          if (fresh) provisional_text.push_back(lemma);
          raw[d].push_back({tok.position, it->second});
          ++counts[lemma];
        }
      }
    }
    repo.write(out_dir / kRepositoryFile);
  }
  const Lexicon lex = Lexicon::from_counts(counts, opts.config.min_count, opts.config.ranked_lemmas);
  summary.lemma_count = lex.size();
  std::vector<LemmaId> remap(provisional_text.size());
  for (std::size_t i = 0; i < provisional_text.size(); ++i) remap[i] = *lex.find(provisional_text[i]);

  std::vector<LemmatizedDocument> docs(documents.size());
  for (std::size_t d = 0; d < documents.size(); ++d) {
    auto& occ = docs[d].occurrences;
    occ = std::move(raw[d]);
    for (auto& o : occ) o.lemma = remap[o.lemma];
    std::sort(occ.begin(), occ.end());
    occ.erase(std::unique(occ.begin(), occ.end()), occ.end());
    docs[d].length = lengths[d];
  }
  raw.clear();
  raw.shrink_to_fit();

  const fs::path run_dir = out_dir / "runs.tmp";
  fs::create_directories(run_dir);
  const auto& cfg = opts.config;
  if (cfg.families.ordinary) {
    summary.families["ordinary"] =
        detail::build_family<1>(out_dir / kOrdinaryFile, run_dir, "ordinary", docs.size(), opts,
                                [&](std::size_t d, auto&& sink) {
                                  for_each_ordinary_posting(docs[d], static_cast<DocId>(d), sink);
                                });
  }
  if (cfg.families.pair) {
    summary.families["pair"] =
        detail::build_family<2>(out_dir / kPairFile, run_dir, "pair", docs.size(), opts, [&](std::size_t d, auto&& sink) {
          for_each_pair_posting(docs[d], static_cast<DocId>(d), lex, cfg.lexicon, cfg.max_distance, sink);
        });
  }
  if (cfg.families.triple) {
    summary.families["triple"] = detail::build_family<3>(
        out_dir / kTripleFile, run_dir, "triple", docs.size(), opts, [&](std::size_t d, auto&& sink) {
          for_each_triple_posting(docs[d], static_cast<DocId>(d), lex, cfg.lexicon, cfg.max_distance, sink);
        });
  }
  fs::remove_all(run_dir);

  detail::write_lexicon(out_dir / kLexiconFile, lex);
  const bool has_dictionary = !opts.dictionary.empty();
  if (has_dictionary) {
    std::ofstream out(out_dir / kDictionaryFile, std::ios::binary | std::ios::trunc);
    for (const auto& [word, lemmas] : opts.dictionary.sorted_entries()) {
      out << word << '\t';
      for (std::size_t i = 0; i < lemmas.size(); ++i) out << (i ? "," : "") << lemmas[i];
      out << '\n';
    }
  }

  nlohmann::json manifest;
  manifest["format_version"] = kFormatVersion;
  manifest["max_distance"] = cfg.max_distance;
  manifest["sw_count"] = cfg.lexicon.sw_count;
  manifest["fu_count"] = cfg.lexicon.fu_count;
  manifest["min_count"] = cfg.min_count;
  manifest["ranked_lemmas"] = cfg.ranked_lemmas;
  manifest["doc_count"] = summary.doc_count;
  manifest["lemma_count"] = summary.lemma_count;
  manifest["word_count"] = summary.word_count;
  manifest["families"] = cfg.families.names();
  manifest["dictionary"] = has_dictionary;
  nlohmann::json files = nlohmann::json::object();
  std::vector<std::string> names{kLexiconFile, kRepositoryFile};
  if (cfg.families.ordinary) names.emplace_back(kOrdinaryFile);
  if (cfg.families.pair) names.emplace_back(kPairFile);
  if (cfg.families.triple) names.emplace_back(kTripleFile);
  if (has_dictionary) names.emplace_back(kDictionaryFile);
  for (const auto& n : names)
    files[n] = {{"bytes", fs::file_size(out_dir / n)}, {"crc32", file_crc32(out_dir / n)}};
  manifest["files"] = files;
  for (const auto& [name, fam] : summary.families)
    manifest["counts"][name] = {{"keys", fam.keys}, {"postings", fam.postings}, {"bytes", fam.bytes}};
  std::ofstream(out_dir / kManifestFile, std::ios::binary | std::ios::trunc) << manifest.dump(2) << '\n';
  return summary;
}

/// An opened, immutable index directory.
class Index {
 public:
  static Index open(const fs::path& dir, bool verify_checksums = false) {
    Index idx;
    idx.dir_ = dir;
    const auto manifest_path = dir / kManifestFile;
    if (!fs::exists(manifest_path)) throw std::runtime_error("no manifest in " + dir.string());
    std::ifstream in(manifest_path, std::ios::binary);
    try {
      idx.manifest_ = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
      throw FormatError(std::string("corrupt manifest: ") + e.what(), e.byte);
    }
    try {
      const auto& m = idx.manifest_;
      if (m.at("format_version").get<int>() != kFormatVersion) throw FormatError("unsupported manifest version", 0);
      idx.config_.max_distance = m.at("max_distance").get<std::uint32_t>();
      idx.config_.lexicon.sw_count = m.at("sw_count").get<std::uint32_t>();
      idx.config_.lexicon.fu_count = m.at("fu_count").get<std::uint32_t>();
      idx.config_.min_count = m.value("min_count", std::uint64_t{1});
      idx.config_.ranked_lemmas = m.value("ranked_lemmas", std::vector<std::string>{});
      idx.doc_count_ = m.at("doc_count").get<std::uint64_t>();
      Families fam{false, false, false};
      for (const auto& name : m.at("families")) {
        const auto s = name.get<std::string>();
        fam.ordinary |= s == "ordinary";
        fam.pair |= s == "pair";
        fam.triple |= s == "triple";
      }
      idx.config_.families = fam;
      if (verify_checksums) {
        for (const auto& [name, info] : m.at("files").items()) {
          const auto path = dir / name;
          if (!fs::exists(path)) throw FormatError("missing file " + name, 0);
          if (fs::file_size(path) != info.at("bytes").get<std::uint64_t>() ||
              file_crc32(path) != info.at("crc32").get<std::uint32_t>())
            throw FormatError("checksum mismatch in " + name, 0);
        }
      }
      if (m.value("dictionary", false)) idx.dictionary_ = Dictionary::load((dir / kDictionaryFile).string());
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(std::string("corrupt manifest: ") + e.what(), 0);
    }
    idx.lexicon_ = detail::read_lexicon(dir / kLexiconFile);
    if (idx.lexicon_.size() != idx.manifest_.at("lemma_count").get<std::uint64_t>())
      throw FormatError("lexicon size disagrees with manifest", 0);
    if (idx.config_.families.ordinary) idx.ordinary_ = IndexFileReader<1>::open(dir / kOrdinaryFile);
    if (idx.config_.families.pair) idx.pair_ = IndexFileReader<2>::open(dir / kPairFile);
    if (idx.config_.families.triple) idx.triple_ = IndexFileReader<3>::open(dir / kTripleFile);
    idx.repository_ = DocumentRepository::open(dir / kRepositoryFile);
    if (idx.repository_.size() != idx.doc_count_) throw FormatError("repository size disagrees with manifest", 8);
    return idx;
  }

  const IndexConfig& config() const { return config_; }
  const Lexicon& lexicon() const { return lexicon_; }
  const Dictionary& dictionary() const { return dictionary_; }
  const DocumentRepository& repository() const { return repository_; }
  const nlohmann::json& manifest() const { return manifest_; }
  std::uint64_t doc_count() const { return doc_count_; }
  const fs::path& directory() const { return dir_; }

  bool has_ordinary() const { return ordinary_.has_value(); }
  bool has_pair() const { return pair_.has_value(); }
  bool has_triple() const { return triple_.has_value(); }

  const IndexFileReader<1>& ordinary() const { return require(ordinary_, "ordinary"); }
  const IndexFileReader<2>& pairs() const { return require(pair_, "pair"); }
  const IndexFileReader<3>& triples() const { return require(triple_, "triple"); }

 private:
  template <class T>
  static const T& require(const std::optional<T>& v, const char* name) {
    if (!v) throw std::runtime_error(std::string("index was built without the ") + name + " family");
    return *v;
  }

  fs::path dir_;
  nlohmann::json manifest_;
  IndexConfig config_;
  Lexicon lexicon_;
  Dictionary dictionary_;
  DocumentRepository repository_;
  std::uint64_t doc_count_ = 0;
  std::optional<IndexFileReader<1>> ordinary_;
  std::optional<IndexFileReader<2>> pair_;
  std::optional<IndexFileReader<3>> triple_;
};

}  // namespace proxsearch
