#include <algorithm>
#include <fstream>
#include <sstream>

#include "awe/corpus.hpp"
#include "awe/error.hpp"

namespace awe::corpus {

Vocabulary::Vocabulary(std::vector<Entry> entries) : entries_(std::move(entries)) {
  for (std::size_t k = 0; k < entries_.size(); ++k) {
    auto [it, inserted] = lookup_.emplace(std::pair(entries_[k].language, entries_[k].word), k);
    if (!inserted)
      throw InvalidConfig("duplicate vocabulary entry " + entries_[k].language + "/" +
                          entries_[k].word);
  }
}

std::optional<std::size_t> Vocabulary::index(std::string_view language,
                                             std::string_view word) const {
  auto it = lookup_.find(std::pair(std::string(language), std::string(word)));
  if (it == lookup_.end()) return std::nullopt;
  return it->second;
}

void Vocabulary::save(const std::string& path) const {
  std::ofstream os(path);
  if (!os) throw IoError("cannot write " + path);
  for (std::size_t k = 0; k < entries_.size(); ++k)
    os << k << ' ' << entries_[k].language << ' ' << entries_[k].word << ' '
       << entries_[k].count << '\n';
}

Vocabulary Vocabulary::load(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open " + path);
  std::vector<Entry> entries;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::size_t k = 0;
    Entry e;
    if (!(ls >> k >> e.language >> e.word >> e.count) || k != entries.size())
      throw ParseError(path, line_no, "expected dense 'index language word count'");
    entries.push_back(std::move(e));
  }
  return Vocabulary(std::move(entries));
}

Vocabulary build_vocabulary(std::span<const WordSegment> segments,
                            std::size_t cap_per_language) {
  std::map<std::string, std::map<std::string, std::size_t>> counts;
  for (const auto& s : segments)
    if (s.labeled()) ++counts[s.language][s.word_type];

  std::vector<Vocabulary::Entry> entries;
  for (const auto& [language, words] : counts) {  // map order: language code ascending
    std::vector<Vocabulary::Entry> ranked;
    ranked.reserve(words.size());
    for (const auto& [word, count] : words) ranked.push_back({language, word, count});
    std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
      if (a.count != b.count) return a.count > b.count;
      return a.word < b.word;
    });
    if (ranked.size() > cap_per_language) ranked.resize(cap_per_language);
    entries.insert(entries.end(), ranked.begin(), ranked.end());
  }
  return Vocabulary(std::move(entries));
}

}  // namespace awe::corpus
