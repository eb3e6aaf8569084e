// proxsearch: build, query, inspect and benchmark proximity indexes.
//
// Exit codes: 0 ok, 1 no results, 2 usage error, 3 data/format error,
// 4 oracle divergence.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "proxsearch/bench.hpp"

namespace fs = std::filesystem;
using namespace proxsearch;

namespace {

enum Exit { kOk = 0, kNoResults = 1, kUsage = 2, kDataError = 3, kDivergence = 4 };

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw std::runtime_error("cannot read " + p.string());
  return ss.str();
}

/// Regular files of `dir` in lexicographic order; each is one document.
std::vector<fs::path> corpus_files(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw std::runtime_error("input is not a directory: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file()) files.push_back(e.path());
  std::sort(files.begin(), files.end(), [](const fs::path& a, const fs::path& b) {
    return a.filename().string() < b.filename().string();
  });
  return files;
}

std::vector<std::string> read_corpus(const fs::path& dir) {
  std::vector<std::string> docs;
  for (const auto& f : corpus_files(dir)) docs.push_back(read_file(f));
  return docs;
}

std::string resolve_index(const std::string& flag) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv("FTS_INDEX"); env && *env) return env;
  throw UsageError("no index given (use --index or set FTS_INDEX)");
}

std::string json_escape(const std::string& s) { return nlohmann::json(s).dump(); }

// --- build -----------------------------------------------------------------

struct BuildArgs {
  std::string input, output, dict, ranks, families = "all";
  std::uint32_t max_distance = 5, sw_count = 700, fu_count = 2100;
  std::uint64_t min_count = 1;
  std::size_t batch_docs = 128;
  unsigned threads = std::max(1u, std::thread::hardware_concurrency());
  bool force = false;
};

int cmd_build(const BuildArgs& a) {
  BuildOptions opts;
  opts.config.max_distance = a.max_distance;
  opts.config.lexicon = {a.sw_count, a.fu_count};
  opts.config.min_count = a.min_count;
  opts.config.families = Families::parse(a.families);
  opts.batch_docs = a.batch_docs;
  opts.threads = a.threads;
  opts.overwrite = a.force;
  if (!a.dict.empty()) opts.dictionary = Dictionary::load(a.dict);
  if (!a.ranks.empty()) {
    std::istringstream in(read_file(a.ranks));
    for (std::string line; std::getline(in, line);) {
      while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
      if (!line.empty() && line[0] != '#') opts.config.ranked_lemmas.push_back(line);
    }
  }
  if (a.max_distance < 1) throw UsageError("--max-distance must be at least 1");
  if (fs::exists(a.output) && fs::is_directory(a.output) && !fs::is_empty(a.output) && !a.force)
    throw UsageError(a.output + " is not empty (use --force to overwrite)");

  std::cerr << "effective config: build " << a.input << ' ' << a.output << " --max-distance " << a.max_distance
            << " --sw-count " << a.sw_count << " --fu-count " << a.fu_count << " --min-count " << a.min_count
            << " --families " << a.families << " --batch-docs " << a.batch_docs
            << (a.dict.empty() ? "" : " --dict " + a.dict) << (a.ranks.empty() ? "" : " --ranks " + a.ranks) << '\n';
  const auto docs = read_corpus(a.input);
  const auto summary = build_index(docs, a.output, opts);
  std::cout << "documents\t" << summary.doc_count << '\n';
  std::cout << "words\t" << summary.word_count << '\n';
  std::cout << "lemmas\t" << summary.lemma_count << '\n';
  for (const auto& [name, f] : summary.families)
    std::cout << name << "\tkeys=" << f.keys << "\tpostings=" << f.postings << "\tbytes=" << f.bytes << '\n';
  return kOk;
}

// --- search ----------------------------------------------------------------

struct SearchArgs {
  std::string index, query, engine = "auto", format = "text";
  std::size_t limit = 0;
  bool metrics = false, no_final = false, no_refine = false;
};

int cmd_search(const SearchArgs& a) {
  const auto idx = Index::open(resolve_index(a.index));
  QueryConfig cfg;
  cfg.engine = parse_engine(a.engine);
  cfg.emit_final_fragment = !a.no_final;
  cfg.refine_lists = !a.no_refine;
  std::cerr << "effective config: search --index " << idx.directory().string() << " --engine " << a.engine
            << " --limit " << a.limit << " --format " << a.format << (a.no_final ? " --no-final-fragment" : "")
            << (a.no_refine ? " --no-refine" : "") << " " << json_escape(a.query) << '\n';

  const auto words = query_words(a.query);
  if (words.empty()) throw UsageError("malformed query: no words");
  QueryResult r;
  try {
    r = evaluate_query(words, idx, cfg);
  } catch (const QueryError& e) {
    throw UsageError(e.what());
  }
  for (const auto& n : r.notices) std::cerr << "notice: " << n << '\n';

  auto fragments = r.fragments;
  if (a.limit > 0 && fragments.size() > a.limit) fragments.resize(a.limit);
  if (a.format == "json") {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& f : fragments)
      arr.push_back({{"doc", f.doc}, {"start", f.start}, {"end", f.end}, {"snippet", snippet(idx, f)}});
    std::cout << arr.dump() << '\n';
  } else {
    for (const auto& f : fragments)
      std::cout << f.doc << '\t' << f.start << '\t' << f.end << '\t' << snippet(idx, f) << '\n';
  }
  if (a.metrics) std::cerr << r.metrics.to_json().dump() << '\n';
  return r.fragments.empty() ? kNoResults : kOk;
}

// --- stats -----------------------------------------------------------------

struct StatsArgs {
  std::string index, format = "text";
  bool verify = false;
};

int cmd_stats(const StatsArgs& a) {
  const auto idx = Index::open(resolve_index(a.index), a.verify);
  nlohmann::json out;
  out["manifest"] = idx.manifest();
  auto family = [&](const char* name, std::uint64_t keys, std::uint64_t postings, std::uint64_t bytes) {
    out["families"][name] = {{"keys", keys}, {"postings", postings}, {"bytes", bytes}};
  };
  if (idx.has_ordinary())
    family("ordinary", idx.ordinary().key_count(), idx.ordinary().posting_count(), idx.ordinary().file_size());
  if (idx.has_pair()) family("pair", idx.pairs().key_count(), idx.pairs().posting_count(), idx.pairs().file_size());
  if (idx.has_triple())
    family("triple", idx.triples().key_count(), idx.triples().posting_count(), idx.triples().file_size());
  if (!out.contains("families")) out["families"] = nlohmann::json::object();

  if (a.format == "json") {
    std::cout << out.dump(2) << '\n';
    return kOk;
  }
  const auto& m = idx.manifest();
  std::cout << "index\t" << idx.directory().string() << '\n';
  for (const char* k : {"format_version", "max_distance", "sw_count", "fu_count", "doc_count", "lemma_count",
                        "word_count"})
    if (m.contains(k)) std::cout << k << '\t' << m[k].dump() << '\n';
  std::cout << "family\tkeys\tpostings\tbytes\n";
  for (const auto& [name, f] : out["families"].items())
    std::cout << name << '\t' << f["keys"] << '\t' << f["postings"] << '\t' << f["bytes"] << '\n';
  return kOk;
}

// --- oracle-check ----------------------------------------------------------

struct OracleArgs {
  std::string index, corpus;
  std::size_t trials = 1000, min_length = 3, max_length = 5;
  std::uint64_t seed = 1;
  std::optional<std::uint32_t> max_distance, sw_count, fu_count;
};

int cmd_oracle_check(const OracleArgs& a) {
  const auto idx = Index::open(resolve_index(a.index));
  const auto& cfg = idx.config();
  auto mismatch = [&](const char* what, std::uint64_t requested, std::uint64_t built) {
    std::cerr << "config mismatch: " << what << " requested " << requested << " but the index manifest says " << built
              << '\n';
    return kDataError;
  };
  if (a.max_distance && *a.max_distance != cfg.max_distance)
    return mismatch("max_distance", *a.max_distance, cfg.max_distance);
  if (a.sw_count && *a.sw_count != cfg.lexicon.sw_count) return mismatch("sw_count", *a.sw_count, cfg.lexicon.sw_count);
  if (a.fu_count && *a.fu_count != cfg.lexicon.fu_count) return mismatch("fu_count", *a.fu_count, cfg.lexicon.fu_count);
  std::cerr << "effective config: oracle-check --index " << idx.directory().string() << ' ' << a.corpus
            << " --trials " << a.trials << " --seed " << a.seed << " --max-distance " << cfg.max_distance << '\n';

  const auto texts = read_corpus(a.corpus);
  if (texts.size() != idx.doc_count()) {
    std::cerr << "config mismatch: corpus has " << texts.size() << " documents, index has " << idx.doc_count() << '\n';
    return kDataError;
  }
  const OracleCorpus corpus(texts, idx.dictionary(), idx.lexicon());
  OracleConfig ocfg;
  ocfg.max_distance = cfg.max_distance;
  ocfg.lexicon = cfg.lexicon;
  ocfg.families = families_of(idx);

  std::vector<Engine> engines;
  if (idx.has_triple()) engines.push_back(Engine::Triple);
  if (idx.has_pair()) engines.push_back(Engine::Pair);
  if (engines.empty()) {
    std::cerr << "index has neither the triple nor the pair family\n";
    return kDataError;
  }
  const auto queries = generate_queries(idx.lexicon(), cfg.lexicon, {a.trials, a.min_length, a.max_length, a.seed});
  const auto t0 = std::chrono::steady_clock::now();
  std::size_t matched = 0;
  for (std::size_t t = 0; t < queries.size(); ++t) {
    const auto subs = expand_query(queries[t], idx.dictionary(), idx.lexicon());
    for (const auto& sub : subs) {
      ResultSet expected;
      for (auto e : engines) {
        QueryConfig qc;
        qc.engine = e;
        const auto got = evaluate_subquery(sub, idx, qc).fragments;
        ocfg.query = qc;
        const auto oracle = brute_force_search(sub, corpus, idx.lexicon(), ocfg);
        if (got != oracle) {
          std::cout << "DIVERGENCE\ttrial=" << t << "\tseed=" << a.seed << "\tengine=" << to_string(e)
                    << "\tquery=" << json_escape(join_words(queries[t])) << "\tengine_fragments=" << got.size()
                    << "\toracle_fragments=" << oracle.size() << '\n';
          return kDivergence;
        }
        expected = oracle;
      }
      matched += expected.empty() ? 0 : 1;
    }
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::cout << "PASS\ttrials=" << queries.size() << "\twith_results=" << matched << "\tseconds=" << secs << '\n';
  return kOk;
}

// --- bench -----------------------------------------------------------------

struct BenchArgs {
  std::string config, work = "bench-work", out, engines = "triple,pair,ordinary", format = "text";
  unsigned threads = std::max(1u, std::thread::hardware_concurrency());
  unsigned parallel = 1;
  bool force = false;
};

int cmd_bench(const BenchArgs& a) {
  nlohmann::json cfg = nlohmann::json::object();
  if (!a.config.empty()) {
    try {
      cfg = nlohmann::json::parse(read_file(a.config));
    } catch (const nlohmann::json::exception& e) {
      throw UsageError(std::string("bad bench config: ") + e.what());
    }
  }
  CorpusSpec corpus;
  const auto c = cfg.value("corpus", nlohmann::json::object());
  corpus.doc_count = c.value("doc_count", corpus.doc_count);
  corpus.words_min = c.value("words_min", corpus.words_min);
  corpus.words_max = c.value("words_max", corpus.words_max);
  corpus.vocab_size = c.value("vocab_size", corpus.vocab_size);
  corpus.zipf_exponent = c.value("zipf_exponent", corpus.zipf_exponent);
  corpus.seed = c.value("seed", corpus.seed);
  BuildOptions opts;
  const auto i = cfg.value("index", nlohmann::json::object());
  opts.config.max_distance = i.value("max_distance", 5u);
  opts.config.lexicon.sw_count = i.value("sw_count", 700u);
  opts.config.lexicon.fu_count = i.value("fu_count", 2100u);
  opts.threads = a.threads;
  opts.overwrite = a.force;
  QuerySpec qspec;
  const auto q = cfg.value("queries", nlohmann::json::object());
  qspec.count = q.value("count", qspec.count);
  qspec.min_length = q.value("min_length", qspec.min_length);
  qspec.max_length = q.value("max_length", qspec.max_length);
  qspec.seed = q.value("seed", qspec.seed);

  std::vector<Engine> engines;
  for (const auto& name : query_words(a.engines)) engines.push_back(parse_engine(name));

  nlohmann::json echo = {{"corpus",
                          {{"doc_count", corpus.doc_count},
                           {"words_min", corpus.words_min},
                           {"words_max", corpus.words_max},
                           {"vocab_size", corpus.vocab_size},
                           {"zipf_exponent", corpus.zipf_exponent},
                           {"seed", corpus.seed}}},
                         {"index",
                          {{"max_distance", opts.config.max_distance},
                           {"sw_count", opts.config.lexicon.sw_count},
                           {"fu_count", opts.config.lexicon.fu_count}}},
                         {"queries",
                          {{"count", qspec.count},
                           {"min_length", qspec.min_length},
                           {"max_length", qspec.max_length},
                           {"seed", qspec.seed}}}};
  std::cerr << "effective config: bench " << echo.dump() << '\n';

  const auto t0 = std::chrono::steady_clock::now();
  const auto docs = generate_corpus(corpus);
  build_index(docs, a.work, opts);
  const double build_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::cerr << "built index in " << build_s << " s\n";
  const auto idx = Index::open(a.work);
  const auto queries = generate_queries(idx.lexicon(), idx.config().lexicon, qspec);
  BenchReport report;
  try {
    report = run_benchmark(idx, queries, engines, {}, a.parallel);
  } catch (const EngineMismatch& e) {
    std::cerr << e.what() << '\n';
    return kDivergence;
  }
  report.config = echo;
  report.config["build_seconds"] = build_s;
  if (!a.out.empty()) std::ofstream(a.out) << report.to_json().dump(2) << '\n';
  if (a.format == "json")
    std::cout << report.to_json().dump(2) << '\n';
  else
    std::cout << report.table();
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Proximity full-text search with multi-component key indexes"};
  app.require_subcommand(1);

  BuildArgs build;
  auto* b = app.add_subcommand("build", "Index a directory of text files (one document per file)");
  b->add_option("input", build.input, "Input directory")->required();
  b->add_option("output", build.output, "Index directory to create")->required();
  b->add_option("--max-distance", build.max_distance, "Companion distance in words")->capture_default_str();
  b->add_option("--sw-count", build.sw_count, "Number of stop lemmas")->capture_default_str();
  b->add_option("--fu-count", build.fu_count, "Number of frequently used lemmas")->capture_default_str();
  b->add_option("--min-count", build.min_count, "Minimum count for a lemma to be ranked")->capture_default_str();
  b->add_option("--families", build.families, "Comma list of ordinary,pair,triple or all")->capture_default_str();
  b->add_option("--dict", build.dict, "Lemma dictionary TSV (word<TAB>lemma1,lemma2)");
  b->add_option("--ranks", build.ranks, "File of lemmas (one per line, most frequent first) that fixes their FL order");
  b->add_option("--batch-docs", build.batch_docs, "Documents per sorted run")->capture_default_str();
  b->add_option("--threads", build.threads, "Posting generation workers")->capture_default_str();
  b->add_flag("--force", build.force, "Overwrite a non-empty output directory");

  SearchArgs search;
  auto* s = app.add_subcommand("search", "Evaluate a query");
  s->add_option("query", search.query, "Query text")->required();
  s->add_option("--index", search.index, "Index directory (default $FTS_INDEX)");
  s->add_option("--engine", search.engine, "auto, triple, pair or ordinary")
      ->check(CLI::IsMember({"auto", "triple", "pair", "ordinary"}))
      ->capture_default_str();
  s->add_option("--limit", search.limit, "Print at most this many fragments (0 = all)");
  s->add_option("--format", search.format, "text or json")->check(CLI::IsMember({"text", "json"}));
  s->add_flag("--metrics", search.metrics, "Print cost counters as JSON on stderr");
  s->add_flag("--no-final-fragment", search.no_final, "Do not report the window open when a sweep ends");
  s->add_flag("--no-refine", search.no_refine, "Sweep unrefined intermediate lists");

  StatsArgs stats;
  auto* st = app.add_subcommand("stats", "Show manifest and per-family sizes");
  st->add_option("--index", stats.index, "Index directory (default $FTS_INDEX)");
  st->add_option("--format", stats.format, "text or json")->check(CLI::IsMember({"text", "json"}));
  st->add_flag("--verify", stats.verify, "Verify file checksums");

  OracleArgs oracle;
  std::uint32_t md = 0, sw = 0, fu = 0;
  auto* o = app.add_subcommand("oracle-check", "Compare engines with a brute-force search over the raw corpus");
  o->add_option("corpus", oracle.corpus, "Directory the index was built from")->required();
  o->add_option("--index", oracle.index, "Index directory (default $FTS_INDEX)");
  o->add_option("--trials", oracle.trials, "Number of random queries")->capture_default_str();
  o->add_option("--seed", oracle.seed, "Query generator seed")->capture_default_str();
  o->add_option("--min-length", oracle.min_length, "Shortest generated query")->capture_default_str();
  o->add_option("--max-length", oracle.max_length, "Longest generated query")->capture_default_str();
  auto* md_opt = o->add_option("--max-distance", md, "Expected max distance (checked against the manifest)");
  auto* sw_opt = o->add_option("--sw-count", sw, "Expected stop lemma count");
  auto* fu_opt = o->add_option("--fu-count", fu, "Expected frequently used lemma count");

  BenchArgs bench;
  auto* be = app.add_subcommand("bench", "Generate a Zipfian corpus, build all families and compare engines");
  be->add_option("--config", bench.config, "JSON file with corpus, index and queries sections");
  be->add_option("--work", bench.work, "Index directory to build into")->capture_default_str();
  be->add_option("--out", bench.out, "Write the JSON report here");
  be->add_option("--engines", bench.engines, "Comma list of engines")->capture_default_str();
  be->add_option("--format", bench.format, "text or json")->check(CLI::IsMember({"text", "json"}));
  be->add_option("--threads", bench.threads, "Index build workers")->capture_default_str();
  be->add_option("--parallel", bench.parallel, "Query workers (throughput mode)")->capture_default_str();
  be->add_flag("--force", bench.force, "Overwrite the work directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    if (*b) return cmd_build(build);
    if (*s) return cmd_search(search);
    if (*st) return cmd_stats(stats);
    if (*o) {
      if (*md_opt) oracle.max_distance = md;
      if (*sw_opt) oracle.sw_count = sw;
      if (*fu_opt) oracle.fu_count = fu;
      return cmd_oracle_check(oracle);
    }
    if (*be) return cmd_bench(bench);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const FormatError& e) {
    std::cerr << "format error: " << e.what() << '\n';
    return kDataError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kDataError;
  }
  return kUsage;
}
