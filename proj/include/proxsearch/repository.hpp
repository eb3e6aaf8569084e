// Compressed document texts, addressable by document id.
//
// docs.repo layout, little-endian:
//   char[4] magic "PXSR", u16 version, u16 reserved, u64 document count
//   per document: u64 data offset, u32 compressed bytes, u32 raw bytes
//   zlib streams, concatenated in document order
#pragma once

#include <zlib.h>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

#include "proxsearch/index_file.hpp"

namespace proxsearch {

class RepositoryWriter {
 public:
  void add(std::string_view text) {
    if (text.size() > 0xFFFFFFFFu) throw std::length_error("document larger than 4 GiB");
    uLongf bound = compressBound(static_cast<uLong>(text.size()));
    std::vector<std::uint8_t> buf(bound);
    if (compress2(buf.data(), &bound, reinterpret_cast<const Bytef*>(text.data()), static_cast<uLong>(text.size()),
                  Z_BEST_SPEED) != Z_OK)
      throw std::runtime_error("zlib compression failed");
    entries_.push_back({data_.size(), static_cast<std::uint32_t>(bound), static_cast<std::uint32_t>(text.size())});
    data_.insert(data_.end(), buf.begin(), buf.begin() + static_cast<std::ptrdiff_t>(bound));
  }

  std::size_t size() const { return entries_.size(); }

  void write(const std::filesystem::path& path) const {
    std::vector<std::uint8_t> head{'P', 'X', 'S', 'R'};
    detail::put_le(head, 1, 2);
    detail::put_le(head, 0, 2);
    detail::put_le(head, entries_.size(), 8);
    for (const auto& e : entries_) {
      detail::put_le(head, e.offset, 8);
      detail::put_le(head, e.compressed, 4);
      detail::put_le(head, e.raw, 4);
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out.write(reinterpret_cast<const char*>(head.data()), static_cast<std::streamsize>(head.size()));
    out.write(reinterpret_cast<const char*>(data_.data()), static_cast<std::streamsize>(data_.size()));
    if (!out) throw std::runtime_error("write failed: " + path.string());
  }

 private:
  struct Entry {
    std::uint64_t offset;
    std::uint32_t compressed;
    std::uint32_t raw;
  };
  std::vector<Entry> entries_;
  std::vector<std::uint8_t> data_;
};

class DocumentRepository {
 public:
  DocumentRepository() = default;

  static DocumentRepository open(const std::filesystem::path& path) {
    DocumentRepository repo;
    repo.path_ = path;
    const auto size = std::filesystem::file_size(path);
    if (size < 16) throw FormatError("repository shorter than header", size);
    const auto head = detail::read_range(path, 0, 16);
    if (head[0] != 'P' || head[1] != 'X' || head[2] != 'S' || head[3] != 'R') throw FormatError("bad repository magic", 0);
    const auto count = detail::get_le(head, 8, 8);
    if (count > (size - 16) / 16) throw FormatError("repository table exceeds file", 8);
    const auto table = detail::read_range(path, 16, count * 16);
    repo.data_offset_ = 16 + count * 16;
    for (std::uint64_t i = 0; i < count; ++i) {
      Entry e{detail::get_le(table, i * 16, 8), static_cast<std::uint32_t>(detail::get_le(table, i * 16 + 8, 4)),
              static_cast<std::uint32_t>(detail::get_le(table, i * 16 + 12, 4))};
      if (repo.data_offset_ + e.offset + e.compressed > size) throw FormatError("document exceeds file", 16 + i * 16);
      repo.entries_.push_back(e);
    }
    return repo;
  }

  std::size_t size() const { return entries_.size(); }

  std::string text(DocId id) const {
    const auto& e = entries_.at(id);
    const auto packed = detail::read_range(path_, data_offset_ + e.offset, e.compressed);
    std::string out(e.raw, '\0');
    uLongf raw = e.raw;
    if (uncompress(reinterpret_cast<Bytef*>(out.data()), &raw, packed.data(), e.compressed) != Z_OK || raw != e.raw)
      throw FormatError("corrupt document " + std::to_string(id), data_offset_ + e.offset);
    return out;
  }

 private:
  struct Entry {
    std::uint64_t offset;
    std::uint32_t compressed;
    std::uint32_t raw;
  };
  std::filesystem::path path_;
  std::vector<Entry> entries_;
  std::uint64_t data_offset_ = 0;
};

}  // namespace proxsearch
