// One index family on disk: a sorted key table followed by posting blocks.
//
// Layout, little-endian:
//   header (40 bytes)
//     char[4] magic "PXSI"
//     u16     format version
//     u8      key arity (1, 2 or 3)
//     u8      reserved, zero
//     u64     key count
//     u64     posting count
//     u64     key table offset
//     u64     posting blocks offset
//   key table, one entry per key in ascending key order
//     u32[arity] lemma ids
//     u64 block offset relative to the posting blocks offset
//     u64 block length in bytes
//     u64 postings in block
//   posting blocks (see codec.hpp)
#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "proxsearch/codec.hpp"

namespace proxsearch {

inline constexpr std::array<char, 4> kIndexMagic{'P', 'X', 'S', 'I'};
inline constexpr std::uint16_t kFormatVersion = 1;
inline constexpr std::size_t kIndexHeaderSize = 40;

/// Counters shared by every cursor of one query evaluation.
struct ReadCounters {
  std::uint64_t postings_read = 0;
  std::uint64_t bytes_read = 0;
};

namespace detail {

inline void put_le(std::vector<std::uint8_t>& out, std::uint64_t v, int bytes) {
  for (int i = 0; i < bytes; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

inline std::uint64_t get_le(std::span<const std::uint8_t> in, std::size_t at, int bytes) {
  std::uint64_t v = 0;
  for (int i = 0; i < bytes; ++i) v |= static_cast<std::uint64_t>(in[at + static_cast<std::size_t>(i)]) << (8 * i);
  return v;
}

inline std::vector<std::uint8_t> read_range(const std::filesystem::path& path, std::uint64_t offset,
                                            std::uint64_t length) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  in.seekg(static_cast<std::streamoff>(offset));
  std::vector<std::uint8_t> buf(length);
  in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(length));
  if (static_cast<std::uint64_t>(in.gcount()) != length)
    throw FormatError("unexpected end of file " + path.filename().string(), offset + static_cast<std::uint64_t>(in.gcount()));
  return buf;
}

}  // namespace detail

template <std::size_t Arity>
struct KeyEntry {
  Key<Arity> key;
  std::uint64_t block_offset = 0;
  std::uint64_t block_bytes = 0;
  std::uint64_t posting_count = 0;
};

template <std::size_t Arity>
constexpr std::size_t key_entry_size() {
  return Arity * 4 + 24;
}

/// Streams sorted (key, posting) pairs into an index file. Posting bytes are
/// spooled to a side file and appended after the key table on finish().
template <std::size_t Arity>
class IndexFileWriter {
 public:
  using PostingType = Posting<Arity - 1>;

  explicit IndexFileWriter(std::filesystem::path path)
      : path_(std::move(path)), spool_path_(path_.string() + ".blocks") {
    spool_.open(spool_path_, std::ios::binary | std::ios::trunc);
    if (!spool_) throw std::runtime_error("cannot create " + spool_path_.string());
  }

  IndexFileWriter(const IndexFileWriter&) = delete;
  IndexFileWriter& operator=(const IndexFileWriter&) = delete;

  ~IndexFileWriter() {
    if (!finished_) {
      spool_.close();
      std::error_code ec;
      std::filesystem::remove(spool_path_, ec);
    }
  }

  /// Keys ascending; postings of a key in (ID, P) order, exact duplicates
  /// are dropped.
  void add(const Key<Arity>& key, const PostingType& posting) {
    if (!entries_.empty() && entries_.back().key == key) {
      if (posting == last_) return;
    } else {
      if (!entries_.empty() && !(entries_.back().key < key)) throw std::logic_error("keys must be added in order");
      close_block();
      entries_.push_back(KeyEntry<Arity>{key, blocks_size_ + buffer_.size(), 0, 0});
      encoder_.emplace(buffer_);
    }
    encoder_->add(posting);
    last_ = posting;
    ++entries_.back().posting_count;
    ++posting_count_;
    if (buffer_.size() >= (1u << 20)) flush_buffer();
  }

  void finish() {
    close_block();
    flush_buffer();
    spool_.close();
    if (!spool_) throw std::runtime_error("write failed: " + spool_path_.string());

    std::vector<std::uint8_t> head;
    head.insert(head.end(), kIndexMagic.begin(), kIndexMagic.end());
    detail::put_le(head, kFormatVersion, 2);
    detail::put_le(head, Arity, 1);
    detail::put_le(head, 0, 1);
    detail::put_le(head, entries_.size(), 8);
    detail::put_le(head, posting_count_, 8);
    detail::put_le(head, kIndexHeaderSize, 8);
    detail::put_le(head, kIndexHeaderSize + entries_.size() * key_entry_size<Arity>(), 8);
    for (const auto& e : entries_) {
      for (auto l : e.key.lemmas) detail::put_le(head, l, 4);
      detail::put_le(head, e.block_offset, 8);
      detail::put_le(head, e.block_bytes, 8);
      detail::put_le(head, e.posting_count, 8);
    }

    std::ofstream out(path_, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot create " + path_.string());
    out.write(reinterpret_cast<const char*>(head.data()), static_cast<std::streamsize>(head.size()));
    std::ifstream spooled(spool_path_, std::ios::binary);
    if (spooled.peek() != std::ifstream::traits_type::eof()) out << spooled.rdbuf();
    spooled.close();
    out.close();
    if (!out) throw std::runtime_error("write failed: " + path_.string());
    std::filesystem::remove(spool_path_);
    finished_ = true;
  }

  std::uint64_t key_count() const { return entries_.size(); }
  std::uint64_t posting_count() const { return posting_count_; }

 private:
  void close_block() {
    if (entries_.empty() || !encoder_) return;
    entries_.back().block_bytes = blocks_size_ + buffer_.size() - entries_.back().block_offset;
    encoder_.reset();
  }

  void flush_buffer() {
    spool_.write(reinterpret_cast<const char*>(buffer_.data()), static_cast<std::streamsize>(buffer_.size()));
    blocks_size_ += buffer_.size();
    buffer_.clear();
  }

  std::filesystem::path path_;
  std::filesystem::path spool_path_;
  std::ofstream spool_;
  std::vector<KeyEntry<Arity>> entries_;
  std::vector<std::uint8_t> buffer_;
  std::optional<PostingEncoder<Arity - 1>> encoder_;
  PostingType last_{};
  std::uint64_t blocks_size_ = 0;
  std::uint64_t posting_count_ = 0;
  bool finished_ = false;
};

/// Sequential reader over one key's posting list.
///
/// Starts before the first posting; next() loads the following posting and
/// returns false once the list is exhausted. Every successful next() counts
/// one posting and the bytes it occupied.
template <std::size_t Offsets>
class PostingCursor {
 public:
  using PostingType = Posting<Offsets>;

  PostingCursor() = default;

  PostingCursor(std::vector<std::uint8_t> block, std::uint64_t count, std::uint64_t file_offset,
                ReadCounters* counters)
      : block_(std::make_shared<const std::vector<std::uint8_t>>(std::move(block))),
        remaining_(count),
        counters_(counters) {
    decoder_ = PostingDecoder<Offsets>(ByteReader(*block_, file_offset));
  }

  bool next() {
    started_ = true;
    if (remaining_ == 0) {
      exhausted_ = true;
      return false;
    }
    const auto before = decoder_.consumed();
    const auto p = decoder_.next();
    if (value_ && cursor_before(p, *value_)) throw FormatError("postings out of order", before);
    value_ = p;
    --remaining_;
    if (counters_) {
      ++counters_->postings_read;
      counters_->bytes_read += decoder_.consumed() - before;
    }
    return true;
  }

  bool started() const { return started_; }
  bool exhausted() const { return exhausted_; }
  const PostingType& value() const { return *value_; }

 private:
  std::shared_ptr<const std::vector<std::uint8_t>> block_;
  PostingDecoder<Offsets> decoder_;
  std::optional<PostingType> value_;
  std::uint64_t remaining_ = 0;
  ReadCounters* counters_ = nullptr;
  bool started_ = false;
  bool exhausted_ = false;
};

/// Opened index family. The key table is held in memory; posting blocks are
/// read from disk when a cursor is opened. Safe for concurrent readers.
template <std::size_t Arity>
class IndexFileReader {
 public:
  using Cursor = PostingCursor<Arity - 1>;

  static IndexFileReader open(const std::filesystem::path& path) {
    IndexFileReader r;
    r.path_ = path;
    std::error_code ec;
    const auto file_size = std::filesystem::file_size(path, ec);
    if (ec) throw std::runtime_error("cannot stat " + path.string());
    r.file_size_ = file_size;
    if (file_size < kIndexHeaderSize) throw FormatError("index file shorter than header", file_size);
    const auto head = detail::read_range(path, 0, kIndexHeaderSize);
    if (!std::equal(kIndexMagic.begin(), kIndexMagic.end(), head.begin())) throw FormatError("bad magic", 0);
    if (detail::get_le(head, 4, 2) != kFormatVersion) throw FormatError("unsupported format version", 4);
    if (detail::get_le(head, 6, 1) != Arity) throw FormatError("unexpected key arity", 6);
    const auto key_count = detail::get_le(head, 8, 8);
    r.posting_count_ = detail::get_le(head, 16, 8);
    const auto table_offset = detail::get_le(head, 24, 8);
    r.blocks_offset_ = detail::get_le(head, 32, 8);
    if (table_offset != kIndexHeaderSize) throw FormatError("bad key table offset", 24);
    if (key_count > (file_size - kIndexHeaderSize) / key_entry_size<Arity>() ||
        r.blocks_offset_ != table_offset + key_count * key_entry_size<Arity>() || r.blocks_offset_ > file_size)
      throw FormatError("key table exceeds file", 32);

    const auto table = detail::read_range(path, table_offset, key_count * key_entry_size<Arity>());
    r.entries_.reserve(key_count);
    std::uint64_t expected_offset = 0;
    std::uint64_t postings = 0;
    for (std::uint64_t i = 0; i < key_count; ++i) {
      const std::size_t at = i * key_entry_size<Arity>();
      KeyEntry<Arity> e;
      for (std::size_t c = 0; c < Arity; ++c)
        e.key.lemmas[c] = static_cast<LemmaId>(detail::get_le(table, at + 4 * c, 4));
      e.block_offset = detail::get_le(table, at + 4 * Arity, 8);
      e.block_bytes = detail::get_le(table, at + 4 * Arity + 8, 8);
      e.posting_count = detail::get_le(table, at + 4 * Arity + 16, 8);
      const auto entry_offset = table_offset + at;
      if (!r.entries_.empty() && !(r.entries_.back().key < e.key)) throw FormatError("key table not sorted", entry_offset);
      if (e.block_offset != expected_offset) throw FormatError("posting block offsets not contiguous", entry_offset);
      if (e.posting_count == 0 || e.block_bytes < e.posting_count * Arity)
        throw FormatError("implausible posting block", entry_offset);
      expected_offset += e.block_bytes;
      postings += e.posting_count;
      r.entries_.push_back(e);
    }
    if (r.blocks_offset_ + expected_offset != file_size) throw FormatError("posting blocks do not fill file", file_size);
    if (postings != r.posting_count_) throw FormatError("posting count mismatch", 16);
    return r;
  }

  const KeyEntry<Arity>* find(const Key<Arity>& key) const {
    auto it = std::lower_bound(entries_.begin(), entries_.end(), key,
                               [](const KeyEntry<Arity>& e, const Key<Arity>& k) { return e.key < k; });
    if (it == entries_.end() || it->key != key) return nullptr;
    return &*it;
  }

  /// Cursor over `key`'s postings; an absent key gives an exhausted cursor.
  Cursor cursor(const Key<Arity>& key, ReadCounters* counters = nullptr) const {
    const auto* e = find(key);
    if (!e) return Cursor({}, 0, 0, counters);
    const auto offset = blocks_offset_ + e->block_offset;
    return Cursor(detail::read_range(path_, offset, e->block_bytes), e->posting_count, offset, counters);
  }

  std::vector<typename Cursor::PostingType> read_all(const Key<Arity>& key) const {
    std::vector<typename Cursor::PostingType> out;
    auto c = cursor(key);
    while (c.next()) out.push_back(c.value());
    return out;
  }

  const std::vector<KeyEntry<Arity>>& entries() const { return entries_; }
  std::uint64_t key_count() const { return entries_.size(); }
  std::uint64_t posting_count() const { return posting_count_; }
  std::uint64_t file_size() const { return file_size_; }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
  std::vector<KeyEntry<Arity>> entries_;
  std::uint64_t posting_count_ = 0;
  std::uint64_t blocks_offset_ = 0;
  std::uint64_t file_size_ = 0;
};

}  // namespace proxsearch
