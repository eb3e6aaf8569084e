// Sorts a stream of fixed-size records larger than memory: batches are sorted
// into run files, then merged with a k-way heap merge.
#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <functional>
#include <queue>
#include <string>
#include <type_traits>
#include <vector>

namespace proxsearch {

template <class Record, class Less = std::less<Record>>
class RunSorter {
  static_assert(std::is_trivially_copyable_v<Record>);

 public:
  RunSorter(std::filesystem::path run_dir, std::string prefix, std::size_t max_records_in_memory = 1 << 22)
      : dir_(std::move(run_dir)), prefix_(std::move(prefix)), max_records_(std::max<std::size_t>(max_records_in_memory, 1)) {}

  RunSorter(const RunSorter&) = delete;
  RunSorter& operator=(const RunSorter&) = delete;

  ~RunSorter() {
    std::error_code ec;
    for (const auto& p : runs_) std::filesystem::remove(p, ec);
  }

  void add(const Record& r) {
    buffer_.push_back(r);
    if (buffer_.size() >= max_records_) flush_run();
  }

  void add(const std::vector<Record>& records) {
    for (const auto& r : records) add(r);
  }

  /// Ends the current batch: sorts the buffered records into a run file.
  void flush_run() {
    if (buffer_.empty()) return;
    std::sort(buffer_.begin(), buffer_.end(), Less{});
    const auto path = dir_ / (prefix_ + "." + std::to_string(runs_.size()) + ".run");
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out.write(reinterpret_cast<const char*>(buffer_.data()),
              static_cast<std::streamsize>(buffer_.size() * sizeof(Record)));
    if (!out) throw std::runtime_error("cannot write run file " + path.string());
    runs_.push_back(path);
    buffer_.clear();
    buffer_.shrink_to_fit();
  }

  std::size_t run_count() const { return runs_.size(); }

  /// Delivers every record in sorted order.
  template <class Sink>
  void merge(Sink&& sink) {
    if (runs_.empty()) {
      std::sort(buffer_.begin(), buffer_.end(), Less{});
      for (const auto& r : buffer_) sink(r);
      buffer_.clear();
      return;
    }
    flush_run();

    std::vector<RunReader> readers;
    readers.reserve(runs_.size());
    for (const auto& p : runs_) readers.emplace_back(p);

    // ties between runs go to the lower run index, so output is deterministic
    auto greater = [&](std::size_t a, std::size_t b) {
      const Less less;
      if (less(readers[b].head(), readers[a].head())) return true;
      if (less(readers[a].head(), readers[b].head())) return false;
      return a > b;
    };
    std::priority_queue<std::size_t, std::vector<std::size_t>, decltype(greater)> heap(greater);
    for (std::size_t i = 0; i < readers.size(); ++i)
      if (readers[i].advance()) heap.push(i);
    while (!heap.empty()) {
      const auto i = heap.top();
      heap.pop();
      sink(readers[i].head());
      if (readers[i].advance()) heap.push(i);
    }
  }

 private:
  class RunReader {
   public:
    explicit RunReader(const std::filesystem::path& p) : in_(p, std::ios::binary) {
      if (!in_) throw std::runtime_error("cannot open run file " + p.string());
    }

    bool advance() {
      if (++at_ < chunk_.size()) return true;
      chunk_.resize(kChunk);
      in_.read(reinterpret_cast<char*>(chunk_.data()), static_cast<std::streamsize>(kChunk * sizeof(Record)));
      chunk_.resize(static_cast<std::size_t>(in_.gcount()) / sizeof(Record));
      at_ = 0;
      return !chunk_.empty();
    }

    const Record& head() const { return chunk_[at_]; }

   private:
    static constexpr std::size_t kChunk = 4096;
    std::ifstream in_;
    std::vector<Record> chunk_;
    std::size_t at_ = 0;
  };

  std::filesystem::path dir_;
  std::string prefix_;
  std::size_t max_records_;
  std::vector<Record> buffer_;
  std::vector<std::filesystem::path> runs_;
};

}  // namespace proxsearch
