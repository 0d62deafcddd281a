#include <filesystem>
#include <fstream>
#include <unordered_set>

#include "awe/corpus.hpp"
#include "awe/error.hpp"
#include "common/binary_io.hpp"

namespace awe::corpus {

namespace {
constexpr char kMagic[4] = {'A', 'W', 'E', 'F'};
}

void write_archive(const std::string& path, std::span<const NamedFeatures> records) {
  const std::uint32_t dim =
      records.empty() ? 0 : static_cast<std::uint32_t>(records.front().features.dim());
  const double frame_shift = records.empty() ? 0.01 : records.front().features.frame_shift();
  std::unordered_set<std::string_view> seen;
  for (const auto& r : records) {
    if (r.features.dim() != dim)
      throw DimensionMismatch("record " + r.id + " has dimension " +
                              std::to_string(r.features.dim()) + ", archive has " +
                              std::to_string(dim));
    if (!seen.insert(r.id).second) throw InvalidConfig("duplicate archive id " + r.id);
  }

  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot write " + path);
  os.write(kMagic, 4);
  io::put<std::uint32_t>(os, kArchiveVersion);
  io::put<std::uint32_t>(os, dim);
  io::put<double>(os, frame_shift);
  io::put<std::uint64_t>(os, records.size());
  io::put<std::uint64_t>(os, 0);  // index offset, patched below

  std::vector<std::uint64_t> offsets;
  offsets.reserve(records.size());
  std::uint64_t pos = kArchiveHeaderBytes;
  std::vector<float> buf;
  for (const auto& r : records) {
    offsets.push_back(pos);
    const auto data = r.features.data();
    buf.assign(data.begin(), data.end());
    os.write(reinterpret_cast<const char*>(buf.data()),
             static_cast<std::streamsize>(buf.size() * sizeof(float)));
    pos += buf.size() * sizeof(float);
  }
  const std::uint64_t index_offset = pos;
  for (std::size_t i = 0; i < records.size(); ++i) {
    io::put_string(os, records[i].id);
    io::put<std::uint64_t>(os, records[i].features.num_frames());
    io::put<std::uint64_t>(os, offsets[i]);
  }
  os.seekp(kArchiveHeaderBytes - sizeof(std::uint64_t));
  io::put<std::uint64_t>(os, index_offset);
  if (!os) throw IoError("write failed for " + path);
}

FeatureArchive FeatureArchive::open(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path);
  const std::uint64_t file_size = std::filesystem::file_size(path);

  char magic[4];
  if (!is.read(magic, 4)) throw CorruptIndex(path + ": truncated header");
  if (!std::equal(magic, magic + 4, kMagic)) throw BadMagic(path + ": not a feature archive");

  FeatureArchive ar;
  ar.path_ = path;
  std::uint32_t version = 0;
  std::uint64_t count = 0, index_offset = 0;
  if (!io::get(is, version)) throw CorruptIndex(path + ": truncated header");
  if (version != kArchiveVersion)
    throw VersionMismatch(path + ": archive version " + std::to_string(version) +
                          ", expected " + std::to_string(kArchiveVersion));
  if (!io::get(is, ar.dim_) || !io::get(is, ar.frame_shift_) || !io::get(is, count) ||
      !io::get(is, index_offset))
    throw CorruptIndex(path + ": truncated header");
  if (index_offset < kArchiveHeaderBytes || index_offset > file_size)
    throw CorruptIndex(path + ": index offset outside file");
  // Each index entry takes at least 20 bytes.
  if (count > (file_size - index_offset) / 20) throw CorruptIndex(path + ": record count too large");

  is.seekg(static_cast<std::streamoff>(index_offset));
  ar.entries_.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    Entry e;
    if (!io::get_string(is, e.id) || !io::get(is, e.num_frames) || !io::get(is, e.offset))
      throw CorruptIndex(path + ": truncated index");
    const std::uint64_t bytes = e.num_frames * ar.dim_ * sizeof(float);
    if (e.offset < kArchiveHeaderBytes || e.offset > index_offset ||
        bytes > index_offset - e.offset ||
        (ar.dim_ != 0 && e.num_frames > index_offset / (ar.dim_ * sizeof(float))))
      throw CorruptIndex(path + ": record " + e.id + " lies outside the data region");
    if (!ar.by_id_.emplace(e.id, ar.entries_.size()).second)
      throw CorruptIndex(path + ": duplicate id " + e.id);
    ar.entries_.push_back(std::move(e));
  }
  if (static_cast<std::uint64_t>(is.tellg()) != file_size)
    throw CorruptIndex(path + ": trailing bytes after index");
  return ar;
}

const FeatureArchive::Entry& FeatureArchive::entry(std::string_view id) const {
  auto it = by_id_.find(std::string(id));
  if (it == by_id_.end()) throw UnknownSegmentId(path_ + ": no record " + std::string(id));
  return entries_[it->second];
}

FeatureSequence FeatureArchive::load(std::string_view id) const {
  const Entry& e = entry(id);
  std::ifstream is(path_, std::ios::binary);
  if (!is) throw IoError("cannot open " + path_);
  is.seekg(static_cast<std::streamoff>(e.offset));
  std::vector<float> buf(e.num_frames * dim_);
  if (!is.read(reinterpret_cast<char*>(buf.data()),
               static_cast<std::streamsize>(buf.size() * sizeof(float))))
    throw CorruptIndex(path_ + ": short read for " + e.id);
  FeatureSequence f(e.num_frames, dim_, frame_shift_);
  std::copy(buf.begin(), buf.end(), f.data().begin());
  return f;
}

std::vector<NamedFeatures> FeatureArchive::load_all() const {
  std::vector<NamedFeatures> out;
  out.reserve(entries_.size());
  for (const auto& e : entries_) out.push_back({e.id, load(e.id)});
  return out;
}

std::vector<FeatureSequence> extract_segments(const FeatureArchive& archive,
                                              std::span<const WordSegment> segments) {
  std::vector<FeatureSequence> out;
  out.reserve(segments.size());
  std::string cached_id;
  FeatureSequence cached;
  for (const auto& s : segments) {
    if (s.utterance_id != cached_id) {
      cached = archive.load(s.utterance_id);
      cached_id = s.utterance_id;
    }
    out.push_back(featkit::slice_segment(cached, s.start_frame, s.end_frame));
  }
  return out;
}

}  // namespace awe::corpus
