// Synthetic Zipfian corpora, stop-lemma query sets and engine comparisons.
#pragma once

#include <cmath>
#include <exception>
#include <map>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "proxsearch/query.hpp"

namespace proxsearch {

struct CorpusSpec {
  std::size_t doc_count = 2000;
  std::size_t words_min = 1000;
  std::size_t words_max = 5000;
  std::size_t vocab_size = 20000;
  double zipf_exponent = 1.0;
  std::uint64_t seed = 1;

  void validate() const {
    if (doc_count == 0 || words_min == 0 || words_max < words_min || vocab_size == 0 || !(zipf_exponent > 0))
      throw std::invalid_argument("corpus spec values must be positive with words_min <= words_max");
  }
};

/// Vocabulary item of Zipf rank `rank` (0 = most frequent).
inline std::string vocabulary_word(std::size_t rank) { return "w" + std::to_string(rank); }

/// Documents of i.i.d. Zipf-distributed words, deterministic per seed.
inline std::vector<std::string> generate_corpus(const CorpusSpec& spec) {
  spec.validate();
  std::vector<double> weights(spec.vocab_size);
  for (std::size_t r = 0; r < spec.vocab_size; ++r) weights[r] = std::pow(static_cast<double>(r + 1), -spec.zipf_exponent);
  std::discrete_distribution<std::size_t> word(weights.begin(), weights.end());
  std::uniform_int_distribution<std::size_t> length(spec.words_min, spec.words_max);
  std::mt19937_64 rng(spec.seed);

  std::vector<std::string> vocab(spec.vocab_size);
  for (std::size_t r = 0; r < spec.vocab_size; ++r) vocab[r] = vocabulary_word(r);

  std::vector<std::string> docs(spec.doc_count);
  for (auto& doc : docs) {
    const auto n = length(rng);
    for (std::size_t i = 0; i < n; ++i) {
      if (i) doc.push_back(' ');
      doc += vocab[word(rng)];
    }
  }
  return docs;
}

struct QuerySpec {
  std::size_t count = 200;
  std::size_t min_length = 3;
  std::size_t max_length = 5;
  std::uint64_t seed = 7;
};

/// Queries of stop lemmas drawn with probability proportional to their
/// collection frequency; lengths uniform in [min_length, max_length].
inline std::vector<std::vector<std::string>> generate_queries(const Lexicon& lex, const LexiconConfig& lcfg,
                                                              const QuerySpec& spec) {
  if (spec.min_length == 0 || spec.max_length < spec.min_length)
    throw std::invalid_argument("query lengths must satisfy 1 <= min <= max");
  const auto stops = lex.stop_lemmas(lcfg);
  if (stops.empty()) throw std::invalid_argument("lexicon has no stop lemmas");
  std::vector<double> weights;
  for (auto id : stops) weights.push_back(static_cast<double>(std::max<std::uint64_t>(lex.count(id), 1)));
  std::discrete_distribution<std::size_t> pick(weights.begin(), weights.end());
  std::uniform_int_distribution<std::size_t> length(spec.min_length, spec.max_length);
  std::mt19937_64 rng(spec.seed);
  std::vector<std::vector<std::string>> out(spec.count);
  for (auto& q : out) {
    const auto n = length(rng);
    for (std::size_t i = 0; i < n; ++i) q.push_back(lex.text(stops[pick(rng)]));
  }
  return out;
}

inline std::string join_words(const std::vector<std::string>& words) {
  std::string s;
  for (const auto& w : words) {
    if (!s.empty()) s.push_back(' ');
    s += w;
  }
  return s;
}

class EngineMismatch : public std::runtime_error {
 public:
  EngineMismatch(const std::string& query, Engine a, Engine b)
      : std::runtime_error("engines " + std::string(to_string(a)) + " and " + to_string(b) +
                           " disagree on query \"" + query + "\""),
        query_(query) {}

  const std::string& query() const { return query_; }

 private:
  std::string query_;
};

struct EngineStats {
  double mean_wall_time_ms = 0;
  double mean_postings_read = 0;
  double mean_bytes_read = 0;
  double mean_fragments = 0;
  std::uint64_t total_postings_read = 0;
  std::uint64_t total_bytes_read = 0;
  std::uint64_t total_heap_ops = 0;
  std::uint64_t max_heap_length = 0;
};

struct BenchReport {
  std::size_t query_count = 0;
  std::map<std::string, EngineStats> engines;
  nlohmann::json config;

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["query_count"] = query_count;
    j["config"] = config;
    for (const auto& [name, s] : engines)
      j["engines"][name] = {{"mean_wall_time_ms", s.mean_wall_time_ms},
                            {"mean_postings_read", s.mean_postings_read},
                            {"mean_bytes_read", s.mean_bytes_read},
                            {"mean_fragments", s.mean_fragments},
                            {"total_postings_read", s.total_postings_read},
                            {"total_bytes_read", s.total_bytes_read},
                            {"total_heap_ops", s.total_heap_ops},
                            {"max_heap_length", s.max_heap_length}};
    return j;
  }

  std::string table() const {
    std::ostringstream os;
    os << "engine      mean_ms     mean_postings      mean_bytes  mean_fragments\n";
    for (const auto& [name, s] : engines) {
      char line[160];
      std::snprintf(line, sizeof line, "%-9s %9.3f %17.1f %15.1f %15.2f\n", name.c_str(), s.mean_wall_time_ms,
                    s.mean_postings_read, s.mean_bytes_read, s.mean_fragments);
      os << line;
    }
    return os.str();
  }
};

/// Runs every query through every engine, checks the engines agree, and
/// averages the cost counters. `threads` > 1 spreads queries over workers for
/// throughput runs; per-query latencies are then not comparable.
inline BenchReport run_benchmark(const Index& index, const std::vector<std::vector<std::string>>& queries,
                                 const std::vector<Engine>& engines, const QueryConfig& base = {},
                                 unsigned threads = 1) {
  struct Outcome {
    std::vector<QueryResult> per_engine;
  };
  std::vector<Outcome> outcomes(queries.size());
  std::vector<std::exception_ptr> failures(std::max(threads, 1u));
  auto work = [&](std::size_t first, std::size_t step) {
    try {
      for (std::size_t i = first; i < queries.size(); i += step) {
        for (auto e : engines) {
          QueryConfig cfg = base;
          cfg.engine = e;
          outcomes[i].per_engine.push_back(evaluate_query(queries[i], index, cfg));
        }
      }
    } catch (...) {
      failures[first] = std::current_exception();
    }
  };
  if (threads <= 1) {
    work(0, 1);
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(work, t, threads);
    for (auto& th : pool) th.join();
  }
  for (const auto& f : failures)
    if (f) std::rethrow_exception(f);

  BenchReport report;
  report.query_count = queries.size();
  for (auto e : engines) report.engines[to_string(e)];
  for (std::size_t i = 0; i < queries.size(); ++i) {
    const auto& results = outcomes[i].per_engine;
    for (std::size_t k = 0; k < engines.size(); ++k) {
      const auto& r = results[k];
      auto& s = report.engines[to_string(engines[k])];
      s.mean_wall_time_ms += r.metrics.wall_time_ms;
      s.total_postings_read += r.metrics.postings_read;
      s.total_bytes_read += r.metrics.bytes_read;
      s.total_heap_ops += r.metrics.heap_ops;
      s.max_heap_length = std::max(s.max_heap_length, r.metrics.max_heap_length);
      s.mean_fragments += static_cast<double>(r.fragments.size());
      if (k > 0 && r.fragments != results[0].fragments)
        throw EngineMismatch(join_words(queries[i]), engines[0], engines[k]);
    }
  }
  const double n = queries.empty() ? 1.0 : static_cast<double>(queries.size());
  for (auto& [name, s] : report.engines) {
    s.mean_wall_time_ms /= n;
    s.mean_fragments /= n;
    s.mean_postings_read = static_cast<double>(s.total_postings_read) / n;
    s.mean_bytes_read = static_cast<double>(s.total_bytes_read) / n;
  }
  return report;
}

/// Least-squares slope of log(frequency) against log(rank) over the ranks
/// with non-zero counts among the first `max_rank`.
inline double rank_frequency_slope(std::vector<std::uint64_t> counts, std::size_t max_rank) {
  std::sort(counts.begin(), counts.end(), std::greater<>());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  std::size_t n = 0;
  for (std::size_t r = 0; r < std::min(max_rank, counts.size()); ++r) {
    if (counts[r] == 0) break;
    const double x = std::log(static_cast<double>(r + 1));
    const double y = std::log(static_cast<double>(counts[r]));
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++n;
  }
  if (n < 2) return 0;
  return (static_cast<double>(n) * sxy - sx * sy) / (static_cast<double>(n) * sxx - sx * sx);
}

}  // namespace proxsearch
