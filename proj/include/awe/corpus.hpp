#pragma once

// Word segments, vocabularies, training pairs and the feature archive format.

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "awe/featkit.hpp"

namespace awe::corpus {

using featkit::FeatureSequence;

inline constexpr std::string_view kUnknownWord = "<unk>";

struct WordSegment {
  std::string segment_id;
  std::string utterance_id;
  std::size_t start_frame = 0;
  std::size_t end_frame = 0;
  std::string word_type{kUnknownWord};
  std::string language;
  std::string speaker;

  std::size_t num_frames() const { return end_frame - start_frame; }
  bool labeled() const { return !word_type.empty() && word_type != kUnknownWord; }
  bool same_type(const WordSegment& o) const {
    return labeled() && language == o.language && word_type == o.word_type;
  }
};

// Canonical id for a segment that has none of its own: "utt_start-end".
std::string make_segment_id(std::string_view utterance, std::size_t start, std::size_t end);

// One segment per line: "utterance start end word language speaker".
// Blank lines and lines starting with '#' are skipped.
std::vector<WordSegment> load_alignments(const std::string& path);
std::vector<WordSegment> parse_alignments(std::string_view text, const std::string& origin = "<text>");
void write_alignments(std::span<const WordSegment> segments, const std::string& path);

// Id -> index lookup over a segment list.
class SegmentIndex {
 public:
  explicit SegmentIndex(std::span<const WordSegment> segments);
  std::optional<std::size_t> find(std::string_view id) const;

 private:
  std::unordered_map<std::string, std::size_t> by_id_;
};

enum class PairSource { kUtd, kTrue };
std::string_view to_string(PairSource s);

// Pairs of indices into the segment list the pairs were built against.
struct PairList {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  PairSource source = PairSource::kTrue;

  std::size_t size() const { return pairs.size(); }
  bool empty() const { return pairs.empty(); }
  bool operator==(const PairList&) const = default;
};

struct PairSample {
  PairList list;
  std::size_t population = 0;  // same-type unordered pairs available
  bool exhausted = false;      // fewer than requested existed; all returned
};

inline constexpr std::size_t kDefaultTruePairs = 300000;

// Uniform sample without replacement over all unordered same-type pairs
// (same language and word type). Throws NoPairsAvailable when no word type
// has two instances.
PairSample sample_true_pairs(std::span<const WordSegment> segments, std::size_t n,
                             std::uint64_t seed);

// "segment_id segment_id" per line, resolved against `segments`.
PairList load_pairs(const std::string& path, PairSource source,
                    std::span<const WordSegment> segments);
PairList parse_pairs(std::string_view text, PairSource source,
                     std::span<const WordSegment> segments, const std::string& origin = "<text>");
void write_pairs(const PairList& pairs, std::span<const WordSegment> segments,
                 const std::string& path);

// Joint vocabulary over (language, word type) keys.
class Vocabulary {
 public:
  struct Entry {
    std::string language;
    std::string word;
    std::size_t count = 0;
  };

  Vocabulary() = default;
  explicit Vocabulary(std::vector<Entry> entries);

  std::size_t size() const { return entries_.size(); }
  const Entry& entry(std::size_t k) const { return entries_.at(k); }
  std::span<const Entry> entries() const { return entries_; }
  std::optional<std::size_t> index(std::string_view language, std::string_view word) const;
  std::optional<std::size_t> index(const WordSegment& s) const {
    return index(s.language, s.word_type);
  }

  void save(const std::string& path) const;
  static Vocabulary load(const std::string& path);

 private:
  std::vector<Entry> entries_;
  std::map<std::pair<std::string, std::string>, std::size_t, std::less<>> lookup_;
};

inline constexpr std::size_t kDefaultVocabularyCap = 10000;

// Keeps the cap_per_language most frequent types of each language (ties to
// the lexicographically smaller type). Classes are ordered by language code,
// then descending frequency, then word type.
Vocabulary build_vocabulary(std::span<const WordSegment> segments,
                            std::size_t cap_per_language = kDefaultVocabularyCap);

// Binary feature container. Layout (all little-endian):
//   "AWEF" u32 version u32 dim f64 frame_shift u64 count u64 index_offset
//   float32 frame data of every record, row-major
//   index: count x { u32 id_len, id bytes, u64 num_frames, u64 byte_offset }
inline constexpr std::uint32_t kArchiveVersion = 1;
inline constexpr std::size_t kArchiveHeaderBytes = 36;

struct NamedFeatures {
  std::string id;
  FeatureSequence features;
};

void write_archive(const std::string& path, std::span<const NamedFeatures> records);

class FeatureArchive {
 public:
  struct Entry {
    std::string id;
    std::uint64_t num_frames = 0;
    std::uint64_t offset = 0;
  };

  // Reads and validates the header and index; frames are loaded on demand.
  static FeatureArchive open(const std::string& path);

  std::uint32_t dim() const { return dim_; }
  double frame_shift() const { return frame_shift_; }
  std::size_t size() const { return entries_.size(); }
  std::span<const Entry> entries() const { return entries_; }
  bool contains(std::string_view id) const { return by_id_.contains(std::string(id)); }
  const Entry& entry(std::string_view id) const;

  FeatureSequence load(std::string_view id) const;
  std::vector<NamedFeatures> load_all() const;

 private:
  std::string path_;
  std::uint32_t dim_ = 0;
  double frame_shift_ = 0.0;
  std::vector<Entry> entries_;
  std::unordered_map<std::string, std::size_t> by_id_;
};

// Cuts each segment out of its utterance in `archive`.
std::vector<FeatureSequence> extract_segments(const FeatureArchive& archive,
                                              std::span<const WordSegment> segments);

}  // namespace awe::corpus
