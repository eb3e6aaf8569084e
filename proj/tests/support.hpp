// Helpers shared by the test binaries.
#pragma once

#include <atomic>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "proxsearch/bench.hpp"

namespace testing_support {

namespace fs = std::filesystem;

/// A fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag = "proxsearch") {
    static std::atomic<unsigned> serial{0};
    path_ = fs::temp_directory_path() /
            (tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(serial.fetch_add(1)));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& name) const { return path_ / name; }

 private:
  fs::path path_;
};

inline std::vector<std::uint8_t> read_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << text;
}

/// Random documents over a small vocabulary "v0".."v{vocab-1}" with a mild skew,
/// so short queries find matches.
inline std::vector<std::string> random_corpus(std::mt19937_64& rng, std::size_t docs, std::size_t max_words,
                                              std::size_t vocab) {
  std::vector<double> w(vocab);
  for (std::size_t i = 0; i < vocab; ++i) w[i] = 1.0 / static_cast<double>(i + 1);
  std::discrete_distribution<std::size_t> word(w.begin(), w.end());
  std::uniform_int_distribution<std::size_t> len(0, max_words);
  std::vector<std::string> out(docs);
  for (auto& d : out) {
    const auto n = len(rng);
    for (std::size_t i = 0; i < n; ++i) {
      if (i) d.push_back(' ');
      d += "v" + std::to_string(word(rng));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Reference codec, written from the byte-format description only: LEB128
// varints; ID as a delta from the previous posting; P as a delta inside the
// same document and absolute when the ID changes; offsets zigzag-encoded.

struct RefPosting {
  std::uint64_t doc = 0, pos = 0;
  std::vector<std::int64_t> offsets;
  bool operator==(const RefPosting&) const = default;
};

inline void ref_varint(std::vector<std::uint8_t>& out, std::uint64_t v) {
  do {
    std::uint8_t b = v & 0x7F;
    v >>= 7;
    if (v) b |= 0x80;
    out.push_back(b);
  } while (v);
}

inline std::uint64_t ref_read_varint(const std::vector<std::uint8_t>& in, std::size_t& at) {
  std::uint64_t v = 0;
  for (int shift = 0;; shift += 7) {
    if (at >= in.size() || shift > 63) throw std::runtime_error("bad varint");
    const std::uint8_t b = in[at++];
    v |= static_cast<std::uint64_t>(b & 0x7F) << shift;
    if (!(b & 0x80)) return v;
  }
}

inline std::vector<std::uint8_t> ref_encode(const std::vector<RefPosting>& list) {
  std::vector<std::uint8_t> out;
  std::uint64_t prev_doc = 0, prev_pos = 0;
  bool first = true;
  for (const auto& p : list) {
    ref_varint(out, p.doc - prev_doc);
    ref_varint(out, (!first && p.doc == prev_doc) ? p.pos - prev_pos : p.pos);
    for (auto d : p.offsets) ref_varint(out, d >= 0 ? static_cast<std::uint64_t>(d) * 2 : static_cast<std::uint64_t>(-d) * 2 - 1);
    prev_doc = p.doc;
    prev_pos = p.pos;
    first = false;
  }
  return out;
}

inline std::vector<RefPosting> ref_decode(const std::vector<std::uint8_t>& in, std::size_t offsets) {
  std::vector<RefPosting> out;
  std::size_t at = 0;
  std::uint64_t doc = 0, pos = 0;
  while (at < in.size()) {
    RefPosting p;
    const auto dd = ref_read_varint(in, at);
    doc += dd;
    const auto pv = ref_read_varint(in, at);
    pos = (out.empty() || dd != 0) ? pv : pos + pv;
    p.doc = doc;
    p.pos = pos;
    for (std::size_t k = 0; k < offsets; ++k) {
      const auto z = ref_read_varint(in, at);
      p.offsets.push_back((z & 1) ? -static_cast<std::int64_t>((z + 1) / 2) : static_cast<std::int64_t>(z / 2));
    }
    out.push_back(std::move(p));
  }
  return out;
}

template <std::size_t Offsets>
RefPosting to_ref(const proxsearch::Posting<Offsets>& p) {
  RefPosting r{p.doc, p.pos, {}};
  for (auto d : p.offsets) r.offsets.push_back(d);
  return r;
}

/// Reference reader for one index file: header, key table, posting blocks.
struct RefIndexFile {
  std::size_t arity = 0;
  std::uint64_t key_count = 0, posting_count = 0;
  std::vector<std::vector<std::uint32_t>> keys;
  std::vector<std::vector<RefPosting>> lists;

  static std::uint64_t le(const std::vector<std::uint8_t>& b, std::size_t at, int n) {
    std::uint64_t v = 0;
    for (int i = n - 1; i >= 0; --i) v = (v << 8) | b.at(at + static_cast<std::size_t>(i));
    return v;
  }

  static RefIndexFile read(const fs::path& path) {
    const auto b = read_bytes(path);
    if (b.size() < 40 || std::string(b.begin(), b.begin() + 4) != "PXSI") throw std::runtime_error("bad magic");
    RefIndexFile f;
    f.arity = b[6];
    f.key_count = le(b, 8, 8);
    f.posting_count = le(b, 16, 8);
    const auto table = le(b, 24, 8);
    const auto blocks = le(b, 32, 8);
    const std::size_t entry = f.arity * 4 + 24;
    for (std::uint64_t k = 0; k < f.key_count; ++k) {
      const std::size_t at = table + k * entry;
      std::vector<std::uint32_t> key;
      for (std::size_t i = 0; i < f.arity; ++i) key.push_back(static_cast<std::uint32_t>(le(b, at + 4 * i, 4)));
      const auto off = le(b, at + f.arity * 4, 8);
      const auto len = le(b, at + f.arity * 4 + 8, 8);
      const auto cnt = le(b, at + f.arity * 4 + 16, 8);
      std::vector<std::uint8_t> block(b.begin() + static_cast<std::ptrdiff_t>(blocks + off),
                                      b.begin() + static_cast<std::ptrdiff_t>(blocks + off + len));
      auto list = ref_decode(block, f.arity - 1);
      if (list.size() != cnt) throw std::runtime_error("posting count mismatch");
      f.keys.push_back(std::move(key));
      f.lists.push_back(std::move(list));
    }
    return f;
  }
};

}  // namespace testing_support
