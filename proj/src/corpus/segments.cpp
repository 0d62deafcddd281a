#include <algorithm>
#include <charconv>
#include <fstream>
#include <iterator>
#include <numeric>
#include <random>

#include "awe/corpus.hpp"
#include "awe/error.hpp"

namespace awe::corpus {

namespace {

std::string read_text(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open " + path);
  return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    std::size_t j = i;
    while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
    if (j > i) fields.push_back(line.substr(i, j - i));
    i = j;
  }
  return fields;
}

bool parse_index(std::string_view s, std::size_t& out) {
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

// Calls fn(line_number, fields) for every non-blank, non-comment line.
template <typename Fn>
void for_each_record(std::string_view text, Fn&& fn) {
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    const auto fields = split_ws(line);
    if (fields.empty() || fields.front().starts_with('#')) continue;
    fn(line_no, fields);
  }
}

}  // namespace

std::string make_segment_id(std::string_view utterance, std::size_t start, std::size_t end) {
  return std::string(utterance) + "_" + std::to_string(start) + "-" + std::to_string(end);
}

std::vector<WordSegment> parse_alignments(std::string_view text, const std::string& origin) {
  std::vector<WordSegment> out;
  for_each_record(text, [&](std::size_t line, const std::vector<std::string_view>& f) {
    if (f.size() != 6)
      throw ParseError(origin, line, "expected 6 fields, got " + std::to_string(f.size()));
    WordSegment s;
    s.utterance_id = f[0];
    if (!parse_index(f[1], s.start_frame) || !parse_index(f[2], s.end_frame))
      throw ParseError(origin, line, "frame bounds must be non-negative integers");
    if (s.start_frame >= s.end_frame) throw ParseError(origin, line, "start must precede end");
    s.word_type = f[3];
    s.language = f[4];
    s.speaker = f[5];
    s.segment_id = make_segment_id(s.utterance_id, s.start_frame, s.end_frame);
    out.push_back(std::move(s));
  });
  return out;
}

std::vector<WordSegment> load_alignments(const std::string& path) {
  return parse_alignments(read_text(path), path);
}

void write_alignments(std::span<const WordSegment> segments, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot write " + path);
  for (const auto& s : segments)
    os << s.utterance_id << ' ' << s.start_frame << ' ' << s.end_frame << ' ' << s.word_type
       << ' ' << s.language << ' ' << s.speaker << '\n';
}

SegmentIndex::SegmentIndex(std::span<const WordSegment> segments) {
  by_id_.reserve(segments.size());
  for (std::size_t i = 0; i < segments.size(); ++i) by_id_.emplace(segments[i].segment_id, i);
}

std::optional<std::size_t> SegmentIndex::find(std::string_view id) const {
  auto it = by_id_.find(std::string(id));
  if (it == by_id_.end()) return std::nullopt;
  return it->second;
}

std::string_view to_string(PairSource s) { return s == PairSource::kUtd ? "utd" : "true"; }

PairSample sample_true_pairs(std::span<const WordSegment> segments, std::size_t n,
                             std::uint64_t seed) {
  // Group labeled segments by (language, word type) in first-seen order.
  std::map<std::pair<std::string_view, std::string_view>, std::size_t> group_of;
  std::vector<std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < segments.size(); ++i) {
    if (!segments[i].labeled()) continue;
    auto key = std::pair<std::string_view, std::string_view>(segments[i].language,
                                                             segments[i].word_type);
    auto [it, inserted] = group_of.emplace(key, groups.size());
    if (inserted) groups.emplace_back();
    groups[it->second].push_back(i);
  }

  // Pairs are ranked group by group; within a group of size m, rank r maps
  // to (a, b), a < b, in row-major order of the strict upper triangle.
  std::vector<std::size_t> first_rank;
  std::size_t population = 0;
  for (const auto& g : groups) {
    first_rank.push_back(population);
    population += g.size() * (g.size() - 1) / 2;
  }
  if (population == 0) throw NoPairsAvailable("no word type has two or more instances");

  std::vector<std::size_t> ranks;
  if (n >= population) {
    ranks.resize(population);
    std::iota(ranks.begin(), ranks.end(), std::size_t{0});
  } else {
    // Selection sampling: each rank is kept with probability needed/remaining.
    std::mt19937_64 rng(seed);
    ranks.reserve(n);
    std::size_t needed = n;
    for (std::size_t r = 0; r < population && needed > 0; ++r) {
      std::uniform_int_distribution<std::size_t> pick(0, population - r - 1);
      if (pick(rng) < needed) {
        ranks.push_back(r);
        --needed;
      }
    }
  }

  PairSample out;
  out.population = population;
  out.exhausted = n >= population;
  out.list.source = PairSource::kTrue;
  out.list.pairs.reserve(ranks.size());
  std::size_t g = 0;
  for (std::size_t r : ranks) {  // ranks ascend, so the group cursor only moves forward
    while (g + 1 < groups.size() && first_rank[g + 1] <= r) ++g;
    const std::size_t m = groups[g].size();
    std::size_t local = r - first_rank[g];
    std::size_t a = 0;
    while (local >= m - 1 - a) {
      local -= m - 1 - a;
      ++a;
    }
    const std::size_t b = a + 1 + local;
    out.list.pairs.emplace_back(groups[g][a], groups[g][b]);
  }
  return out;
}

PairList parse_pairs(std::string_view text, PairSource source,
                     std::span<const WordSegment> segments, const std::string& origin) {
  const SegmentIndex index(segments);
  PairList out;
  out.source = source;
  for_each_record(text, [&](std::size_t line, const std::vector<std::string_view>& f) {
    if (f.size() != 2)
      throw ParseError(origin, line, "expected 2 segment ids, got " + std::to_string(f.size()));
    if (f[0] == f[1])
      throw SelfPair(origin + ":" + std::to_string(line) + ": segment paired with itself: " +
                     std::string(f[0]));
    auto a = index.find(f[0]);
    auto b = index.find(f[1]);
    if (!a || !b)
      throw UnknownSegmentId(origin + ":" + std::to_string(line) + ": unknown segment id " +
                             std::string(!a ? f[0] : f[1]));
    out.pairs.emplace_back(*a, *b);
  });
  return out;
}

PairList load_pairs(const std::string& path, PairSource source,
                    std::span<const WordSegment> segments) {
  return parse_pairs(read_text(path), source, segments, path);
}

void write_pairs(const PairList& pairs, std::span<const WordSegment> segments,
                 const std::string& path) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot write " + path);
  for (const auto& [a, b] : pairs.pairs)
    os << segments[a].segment_id << ' ' << segments[b].segment_id << '\n';
}

}  // namespace awe::corpus
