// LEB128 varints, zigzag offsets and the posting-block encoding.
//
// A posting block is a run of postings for one key, each written as
//   varint(ID - previous ID)
//   varint(P - previous P)   when the ID did not change, otherwise varint(P)
//   zigzag varint per offset
// The first posting of a block uses previous ID = 0 and an absolute P.
#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "proxsearch/postings.hpp"

namespace proxsearch {

/// Malformed index data; `offset` is the byte offset where decoding failed.
class FormatError : public std::runtime_error {
 public:
  FormatError(const std::string& what, std::uint64_t offset)
      : std::runtime_error(what + " at byte offset " + std::to_string(offset)), offset_(offset) {}

  std::uint64_t offset() const { return offset_; }

 private:
  std::uint64_t offset_;
};

inline void put_varint(std::vector<std::uint8_t>& out, std::uint64_t v) {
  while (v >= 0x80) {
    out.push_back(static_cast<std::uint8_t>(v | 0x80));
    v >>= 7;
  }
  out.push_back(static_cast<std::uint8_t>(v));
}

inline std::uint64_t zigzag(std::int64_t v) {
  return (static_cast<std::uint64_t>(v) << 1) ^ static_cast<std::uint64_t>(v >> 63);
}

inline std::int64_t unzigzag(std::uint64_t v) {
  return static_cast<std::int64_t>(v >> 1) ^ -static_cast<std::int64_t>(v & 1);
}

/// Reads varints from a byte span, tracking an absolute offset for errors.
class ByteReader {
 public:
  ByteReader() = default;
  ByteReader(std::span<const std::uint8_t> bytes, std::uint64_t base_offset = 0)
      : bytes_(bytes), base_(base_offset) {}

  bool at_end() const { return pos_ >= bytes_.size(); }
  std::size_t consumed() const { return pos_; }
  std::uint64_t offset() const { return base_ + pos_; }

  std::uint64_t varint() {
    std::uint64_t v = 0;
    const std::size_t start = pos_;
    for (int shift = 0; shift < 64; shift += 7) {
      if (pos_ >= bytes_.size()) throw FormatError("truncated varint", base_ + start);
      const std::uint8_t b = bytes_[pos_++];
      v |= static_cast<std::uint64_t>(b & 0x7F) << shift;
      if (!(b & 0x80)) return v;
    }
    throw FormatError("varint longer than 10 bytes", base_ + start);
  }

  std::uint32_t varint32(const char* what) {
    const std::size_t start = pos_;
    const auto v = varint();
    if (v > 0xFFFFFFFFu) throw FormatError(std::string(what) + " exceeds 32 bits", base_ + start);
    return static_cast<std::uint32_t>(v);
  }

 private:
  std::span<const std::uint8_t> bytes_;
  std::uint64_t base_ = 0;
  std::size_t pos_ = 0;
};

/// Incremental encoder for one posting block. Postings must arrive in
/// (ID, P) order.
template <std::size_t Offsets>
class PostingEncoder {
 public:
  explicit PostingEncoder(std::vector<std::uint8_t>& out) : out_(out) {}

  void add(const Posting<Offsets>& p) {
    if (count_ > 0 && cursor_before(p, last_))
      throw std::logic_error("postings must be added in (ID, P) order");
    const bool same_doc = count_ > 0 && p.doc == last_.doc;
    put_varint(out_, p.doc - (count_ > 0 ? last_.doc : 0));
    put_varint(out_, same_doc ? p.pos - last_.pos : p.pos);
    for (auto d : p.offsets) put_varint(out_, zigzag(d));
    last_ = p;
    ++count_;
  }

  std::size_t count() const { return count_; }

 private:
  std::vector<std::uint8_t>& out_;
  Posting<Offsets> last_{};
  std::size_t count_ = 0;
};

/// Incremental decoder mirroring PostingEncoder.
template <std::size_t Offsets>
class PostingDecoder {
 public:
  PostingDecoder() = default;
  explicit PostingDecoder(ByteReader reader) : reader_(reader) {}

  Posting<Offsets> next() {
    Posting<Offsets> p;
    const auto id_delta = reader_.varint();
    const auto doc = static_cast<std::uint64_t>(decoded_ > 0 ? last_.doc : 0) + id_delta;
    if (doc > 0xFFFFFFFFu) throw FormatError("document id exceeds 32 bits", reader_.offset());
    p.doc = static_cast<DocId>(doc);
    const auto pos_field = reader_.varint();
    const auto pos = (decoded_ > 0 && id_delta == 0) ? last_.pos + pos_field : pos_field;
    if (pos > 0xFFFFFFFFu) throw FormatError("position exceeds 32 bits", reader_.offset());
    p.pos = static_cast<Position>(pos);
    for (auto& d : p.offsets) {
      const auto z = unzigzag(reader_.varint());
      if (z < INT32_MIN || z > INT32_MAX) throw FormatError("offset exceeds 32 bits", reader_.offset());
      d = static_cast<std::int32_t>(z);
    }
    last_ = p;
    ++decoded_;
    return p;
  }

  std::size_t consumed() const { return reader_.consumed(); }
  bool at_end() const { return reader_.at_end(); }

 private:
  ByteReader reader_;
  Posting<Offsets> last_{};
  std::size_t decoded_ = 0;
};

template <std::size_t Offsets>
std::vector<std::uint8_t> encode_postings(std::span<const Posting<Offsets>> postings) {
  std::vector<std::uint8_t> out;
  PostingEncoder<Offsets> enc(out);
  for (const auto& p : postings) enc.add(p);
  return out;
}

template <std::size_t Offsets>
std::vector<Posting<Offsets>> decode_postings(std::span<const std::uint8_t> bytes, std::size_t count) {
  std::vector<Posting<Offsets>> out;
  out.reserve(count);
  PostingDecoder<Offsets> dec{ByteReader(bytes)};
  for (std::size_t i = 0; i < count; ++i) out.push_back(dec.next());
  if (!dec.at_end()) throw FormatError("trailing bytes after postings", dec.consumed());
  return out;
}

}  // namespace proxsearch
