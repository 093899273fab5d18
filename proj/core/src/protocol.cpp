// Copyright 2026 The sasvkit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#include "sasv/protocol.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <istream>
#include <map>
#include <ostream>
#include <set>

#include "sasv/error.hpp"

namespace sasv::protocol {

namespace {

constexpr std::array<char, 4> kEmbeddingMagic = {'S', 'V', 'K', '1'};

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    const std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t') ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

// Line cursor over a text stream; strips a trailing CR.
class LineReader {
 public:
  explicit LineReader(std::istream& in) : in_(in) {}

  // Next line carrying data. Comment lines are skipped after their
  // version (if any) is checked; the first comment line is remembered.
  bool next(std::vector<std::string_view>& fields) {
    while (std::getline(in_, line_)) {
      ++number_;
      if (!line_.empty() && line_.back() == '\r') line_.pop_back();
      fields = split_fields(line_);
      if (fields.empty()) continue;
      if (fields.front().starts_with('#')) {
        check_header(fields);
        continue;
      }
      return true;
    }
    return false;
  }

  std::size_t line() const { return number_; }
  const std::vector<std::string>& header() const { return header_; }

 private:
  void check_header(const std::vector<std::string_view>& fields) {
    std::vector<std::string_view> rest(fields.begin(), fields.end());
    if (rest.front() == "#") {
      rest.erase(rest.begin());
    } else {
      rest.front().remove_prefix(1);
    }
    if (rest.empty() || !rest.front().starts_with("sasvkit-")) return;
    if (rest.front() != kFormatVersion) {
      throw ParseError("unsupported format version", number_,
                       std::string(rest.front()));
    }
    if (header_.empty()) header_.assign(rest.begin(), rest.end());
  }

  std::istream& in_;
  std::string line_;
  std::size_t number_ = 0;
  std::vector<std::string> header_;
};

double parse_double(std::string_view token, std::size_t line) {
  double v = 0.0;
  const auto* first = token.data();
  const auto* last = token.data() + token.size();
  if (!token.empty() && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || !std::isfinite(v)) {
    throw ParseError("malformed number", line, std::string(token));
  }
  return v;
}

long long parse_int(std::string_view token, std::size_t line) {
  long long v = 0;
  auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
  if (ec != std::errc() || ptr != token.data() + token.size()) {
    throw ParseError("malformed integer", line, std::string(token));
  }
  return v;
}

void expect_fields(const std::vector<std::string_view>& f, std::size_t n,
                   std::size_t line) {
  if (f.size() != n) {
    throw ParseError("expected " + std::to_string(n) + " fields, got " +
                         std::to_string(f.size()),
                     line, f.size() > n ? std::string(f[n]) : std::string());
  }
}

void write_header(std::ostream& out, std::string_view kind) {
  out << "# " << kFormatVersion << ' ' << kind << '\n';
}

std::string format_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// Binary helpers, little-endian regardless of host order.
bool read_bytes(std::istream& in, char* dst, std::size_t n) {
  in.read(dst, static_cast<std::streamsize>(n));
  return static_cast<std::size_t>(in.gcount()) == n;
}

template <typename UInt>
UInt read_uint(std::istream& in, const char* what) {
  std::array<unsigned char, sizeof(UInt)> b{};
  if (!read_bytes(in, reinterpret_cast<char*>(b.data()), b.size())) {
    throw ParseError(std::string("truncated stream reading ") + what, 0);
  }
  UInt v = 0;
  for (std::size_t i = 0; i < b.size(); ++i) v |= static_cast<UInt>(b[i]) << (8 * i);
  return v;
}

template <typename UInt>
void write_uint(std::ostream& out, UInt v) {
  for (std::size_t i = 0; i < sizeof(UInt); ++i) {
    out.put(static_cast<char>((v >> (8 * i)) & 0xFF));
  }
}

EmbeddingTable parse_embeddings_binary(std::istream& in) {
  std::array<char, 4> magic{};
  if (!read_bytes(in, magic.data(), magic.size()) || magic != kEmbeddingMagic) {
    throw ParseError("bad embedding magic", 0);
  }
  const auto dim = read_uint<std::uint32_t>(in, "dimension");
  const auto count = read_uint<std::uint32_t>(in, "record count");
  if (dim < 2) throw ParseError("embedding dimension must be >= 2", 0);
  EmbeddingTable table;
  for (std::uint32_t r = 0; r < count; ++r) {
    const auto len = read_uint<std::uint16_t>(in, "id length");
    std::string id(len, '\0');
    if (!read_bytes(in, id.data(), len)) {
      throw ParseError("truncated stream reading id of record " +
                           std::to_string(r + 1), 0);
    }
    std::vector<double> values;
    for (std::uint32_t d = 0; d < dim; ++d) {
      const auto bits = read_uint<std::uint64_t>(in, "embedding value");
      double v = 0.0;
      static_assert(sizeof(v) == sizeof(bits));
      std::memcpy(&v, &bits, sizeof(v));
      if (!std::isfinite(v)) {
        throw ParseError("non-finite value in record '" + id + "'", 0);
      }
      values.push_back(v);
    }
    if (!table.emplace(id, Embedding(std::move(values))).second) {
      throw ParseError("duplicate utt_id", 0, id);
    }
  }
  if (in.peek() != std::char_traits<char>::eof()) {
    throw ParseError("trailing bytes after last embedding record", 0);
  }
  return table;
}

EmbeddingTable parse_embeddings_text(std::istream& in) {
  LineReader reader(in);
  std::vector<std::string_view> f;
  EmbeddingTable table;
  std::size_t dim = 0;
  while (reader.next(f)) {
    if (f.size() < 3) {
      throw ParseError("embedding row needs an id and >= 2 values",
                       reader.line(), std::string(f.front()));
    }
    if (dim == 0) dim = f.size() - 1;
    if (f.size() - 1 != dim) {
      throw ParseError("dimension mismatch: expected " + std::to_string(dim) +
                           ", got " + std::to_string(f.size() - 1),
                       reader.line(), std::string(f.front()));
    }
    std::vector<double> values;
    values.reserve(dim);
    for (std::size_t i = 1; i < f.size(); ++i) {
      values.push_back(parse_double(f[i], reader.line()));
    }
    if (!table.emplace(std::string(f.front()), Embedding(std::move(values))).second) {
      throw ParseError("duplicate utt_id", reader.line(), std::string(f.front()));
    }
  }
  return table;
}

}  // namespace

std::vector<TrialRecord> parse_trials(std::istream& in) {
  LineReader reader(in);
  std::vector<std::string_view> f;
  std::vector<TrialRecord> out;
  while (reader.next(f)) {
    expect_fields(f, 4, reader.line());
    TrialRecord t;
    t.enrol_speaker = std::string(f[0]);
    t.test_utt = std::string(f[1]);
    const auto cm = parse_cm_label(f[2]);
    if (!cm) throw ParseError("unknown CM label", reader.line(), std::string(f[2]));
    const auto label = parse_trial_label(f[3]);
    if (!label) {
      throw ParseError("unknown trial label", reader.line(), std::string(f[3]));
    }
    t.cm = *cm;
    t.label = *label;
    if (!t.consistent()) {
      throw ParseError("CM label '" + std::string(f[2]) +
                           "' inconsistent with trial label '" +
                           std::string(f[3]) + "'",
                       reader.line());
    }
    out.push_back(std::move(t));
  }
  return out;
}

void write_trials(std::ostream& out, std::span<const TrialRecord> trials) {
  write_header(out, "trials");
  for (const auto& t : trials) {
    out << t.enrol_speaker << ' ' << t.test_utt << ' ' << to_string(t.cm)
        << ' ' << to_string(t.label) << '\n';
  }
}

EmbeddingTable parse_embeddings(std::istream& in) {
  std::array<char, 4> head{};
  in.read(head.data(), head.size());
  const auto got = static_cast<std::size_t>(in.gcount());
  in.clear();
  for (std::size_t i = got; i > 0; --i) in.putback(head[i - 1]);
  if (!in) throw ParseError("unreadable embedding stream", 0);
  if (got == head.size() && head == kEmbeddingMagic) {
    return parse_embeddings_binary(in);
  }
  return parse_embeddings_text(in);
}

void write_embeddings_text(std::ostream& out, const EmbeddingTable& table) {
  write_header(out, "embeddings");
  for (const auto& [id, e] : table) {
    out << id;
    for (double v : e.values()) out << '\t' << format_g17(v);
    out << '\n';
  }
}

void write_embeddings_binary(std::ostream& out, const EmbeddingTable& table) {
  const std::uint32_t dim =
      table.empty() ? 2 : static_cast<std::uint32_t>(table.begin()->second.dim());
  out.write(kEmbeddingMagic.data(), kEmbeddingMagic.size());
  write_uint<std::uint32_t>(out, dim);
  write_uint<std::uint32_t>(out, static_cast<std::uint32_t>(table.size()));
  for (const auto& [id, e] : table) {
    if (e.dim() != dim) throw ContractError("write_embeddings: mixed dimensions");
    if (id.size() > 0xFFFF) throw ContractError("write_embeddings: id too long");
    write_uint<std::uint16_t>(out, static_cast<std::uint16_t>(id.size()));
    out.write(id.data(), static_cast<std::streamsize>(id.size()));
    for (double v : e.values()) {
      std::uint64_t bits = 0;
      std::memcpy(&bits, &v, sizeof(v));
      write_uint<std::uint64_t>(out, bits);
    }
  }
}

CsPairing parse_cs_pairing(std::istream& in, const Dataset& dataset) {
  std::map<std::string_view, const LabeledUtterance*> by_id;
  for (const auto& u : dataset.utterances) by_id.emplace(u.utt_id, &u);

  LineReader reader(in);
  std::vector<std::string_view> f;
  CsPairing out;
  while (reader.next(f)) {
    expect_fields(f, 3, reader.line());
    const auto vocoder = parse_vocoder(f[1]);
    if (!vocoder) throw ParseError("unknown vocoder", reader.line(), std::string(f[1]));
    auto bona = by_id.find(f[0]);
    if (bona == by_id.end()) {
      throw ParseError("dangling reference to bona fide utterance",
                       reader.line(), std::string(f[0]));
    }
    auto cs = by_id.find(f[2]);
    if (cs == by_id.end()) {
      throw ParseError("dangling reference to copy-synthesis utterance",
                       reader.line(), std::string(f[2]));
    }
    if (bona->second->cm != CmLabel::bonafide) {
      throw ParseError("paired source is not bona fide", reader.line(),
                       std::string(f[0]));
    }
    if (cs->second->cm != CmLabel::spoof) {
      throw ParseError("copy-synthesis utterance is not labelled spoof",
                       reader.line(), std::string(f[2]));
    }
    if (cs->second->speaker != bona->second->speaker) {
      throw ParseError("copy-synthesis utterance changes speaker", reader.line(),
                       std::string(f[2]));
    }
    out[std::string(f[0])].push_back({*vocoder, std::string(f[2])});
  }
  return out;
}

void write_cs_pairing(std::ostream& out, const CsPairing& pairing) {
  write_header(out, "cs-pairing");
  for (const auto& [bona, counterparts] : pairing) {
    for (const auto& c : counterparts) {
      out << bona << ' ' << to_string(c.vocoder) << ' ' << c.utt_id << '\n';
    }
  }
}

std::string format_score(double score) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.12e", score);
  std::string s(buf);
  // Drop exponent zero padding: e-01 -> e-1, e+00 -> e+0.
  const auto e = s.find('e');
  if (e != std::string::npos && e + 2 < s.size()) {
    std::size_t digits = e + 2;
    while (digits + 1 < s.size() && s[digits] == '0') s.erase(digits, 1);
  }
  return s;
}

std::vector<ScoreEntry> parse_scores(std::istream& in) {
  LineReader reader(in);
  std::vector<std::string_view> f;
  std::vector<ScoreEntry> out;
  while (reader.next(f)) {
    expect_fields(f, 3, reader.line());
    out.push_back({std::string(f[0]), std::string(f[1]),
                   parse_double(f[2], reader.line())});
  }
  return out;
}

void write_scores(std::ostream& out, std::span<const ScoreEntry> scores) {
  write_header(out, "scores");
  for (const auto& s : scores) {
    out << s.enrol_speaker << ' ' << s.test_utt << ' ' << format_score(s.score)
        << '\n';
  }
}

void write_scores(std::ostream& out, std::span<const ScoredTrial> scored) {
  std::vector<ScoreEntry> entries;
  entries.reserve(scored.size());
  for (const auto& s : scored) {
    entries.push_back({s.trial.enrol_speaker, s.trial.test_utt, s.score});
  }
  write_scores(out, entries);
}

std::vector<ScoredTrial> join_scores(std::span<const ScoreEntry> scores,
                                     std::span<const TrialRecord> trials) {
  std::map<std::pair<std::string, std::string>, const TrialRecord*> by_key;
  for (const auto& t : trials) {
    by_key.emplace(std::make_pair(t.enrol_speaker, t.test_utt), &t);
  }
  std::vector<ScoredTrial> out;
  std::set<std::pair<std::string, std::string>> used;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const auto key = std::make_pair(scores[i].enrol_speaker, scores[i].test_utt);
    auto it = by_key.find(key);
    if (it == by_key.end()) {
      throw ContractError("score line " + std::to_string(i + 1) +
                          " matches no trial: " + key.first + " " + key.second);
    }
    used.insert(key);
    out.push_back({*it->second, scores[i].score});
  }
  if (used.size() != by_key.size()) {
    throw ContractError("score file covers " + std::to_string(used.size()) +
                        " of " + std::to_string(by_key.size()) + " trials");
  }
  return out;
}

Dataset parse_dataset(std::istream& in) {
  LineReader reader(in);
  std::vector<std::string_view> f;
  Dataset d;
  std::size_t dim = 0;
  bool have_header = false;
  std::set<std::string, std::less<>> ids;
  while (reader.next(f)) {
    if (!have_header) {
      const auto& h = reader.header();
      if (h.size() != 5 || h[1] != "dataset") {
        throw ParseError("missing dataset header line", reader.line());
      }
      d.name = h[2];
      const long long speakers = parse_int(h[3], 1);
      const long long features = parse_int(h[4], 1);
      if (speakers < 1 || speakers > (1 << 30) || features < 1 ||
          features > (1 << 20)) {
        throw ParseError("dataset header out of range", 1);
      }
      d.num_speakers = static_cast<int>(speakers);
      dim = static_cast<std::size_t>(features);
      have_header = true;
    }
    if (f.size() != 4 + dim) {
      throw ParseError("expected " + std::to_string(4 + dim) + " fields, got " +
                           std::to_string(f.size()),
                       reader.line(), std::string(f.front()));
    }
    LabeledUtterance u;
    u.utt_id = std::string(f[0]);
    if (!ids.insert(u.utt_id).second) {
      throw ParseError("duplicate utt_id", reader.line(), u.utt_id);
    }
    const long long speaker = parse_int(f[1], reader.line());
    if (speaker < 1 || speaker > d.num_speakers) {
      throw ParseError("speaker index out of range", reader.line(),
                       std::string(f[1]));
    }
    u.speaker.index = static_cast<int>(speaker);
    const auto cm = parse_cm_label(f[2]);
    if (!cm) throw ParseError("unknown CM label", reader.line(), std::string(f[2]));
    u.cm = *cm;
    if (f[3] != "-") u.source = std::string(f[3]);
    if (u.cm == CmLabel::spoof && !u.source) {
      throw ParseError("spoof utterance without source tag", reader.line(),
                       u.utt_id);
    }
    u.features.reserve(dim);
    for (std::size_t i = 4; i < f.size(); ++i) {
      u.features.push_back(parse_double(f[i], reader.line()));
    }
    d.utterances.push_back(std::move(u));
  }
  if (!have_header) {
    const auto& h = reader.header();
    if (h.size() != 5 || h[1] != "dataset") {
      throw ParseError("missing dataset header line", reader.line());
    }
    d.name = h[2];
    d.num_speakers = static_cast<int>(parse_int(h[3], 1));
  }
  return d;
}

void write_dataset(std::ostream& out, const Dataset& dataset) {
  out << "# " << kFormatVersion << " dataset " << dataset.name << ' '
      << dataset.num_speakers << ' ' << dataset.feature_dim() << '\n';
  for (const auto& u : dataset.utterances) {
    out << u.utt_id << ' ' << u.speaker.index << ' ' << to_string(u.cm) << ' '
        << (u.source ? *u.source : std::string("-"));
    for (double v : u.features) out << ' ' << format_g17(v);
    out << '\n';
  }
}

}  // namespace sasv::protocol
