#include "vsam/embeddings.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "vsam/errors.hpp"

namespace vsam {

Vocabulary::Vocabulary() {
  tokens_ = {"<pad>", "<unk>"};
  index_ = {{"<pad>", kPad}, {"<unk>", kUnk}};
}

std::size_t Vocabulary::add(std::string token) {
  auto it = index_.find(token);
  if (it != index_.end()) return it->second;
  std::size_t idx = tokens_.size();
  index_.emplace(token, idx);
  tokens_.push_back(std::move(token));
  return idx;
}

std::size_t Vocabulary::lookup(std::string_view token) const {
  auto it = index_.find(std::string(token));
  return it == index_.end() ? kUnk : it->second;
}

bool Vocabulary::contains(std::string_view token) const {
  return index_.contains(std::string(token));
}

const std::string& Vocabulary::token(std::size_t index) const {
  if (index >= tokens_.size()) {
    throw ContractError("vocabulary index " + std::to_string(index) +
                        " out of range for size " +
                        std::to_string(tokens_.size()));
  }
  return tokens_[index];
}

std::vector<double> EmbeddingMatrix::column(std::size_t index) const {
  std::size_t d = dim();
  std::size_t n = vocab_size();
  if (index >= n) {
    throw ContractError("embedding column " + std::to_string(index) +
                        " out of range for vocabulary size " +
                        std::to_string(n));
  }
  std::vector<double> out(d);
  auto w = weights.values();
  for (std::size_t i = 0; i < d; ++i) out[i] = w[i * n + index];
  return out;
}

namespace {

bool parse_double(std::string_view s, double& out) {
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && ptr == s.data() + s.size();
}

bool looks_like_integer(std::string_view s) {
  if (s.empty()) return false;
  std::size_t start = (s[0] == '-' || s[0] == '+') ? 1 : 0;
  if (start == s.size()) return false;
  return std::all_of(s.begin() + start, s.end(),
                     [](char c) { return std::isdigit(static_cast<unsigned char>(c)); });
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t') ++i;
    if (i > start) fields.push_back(line.substr(start, i - start));
  }
  return fields;
}

}  // namespace

std::pair<Vocabulary, EmbeddingMatrix> load_pretrained(
    const std::filesystem::path& path, std::size_t expected_dim,
    EmbeddingLoadStats* stats) {
  std::ifstream in(path);
  if (!in) {
    throw IoError("cannot open embedding file: " + path.string());
  }

  Vocabulary vocab;
  std::vector<std::vector<double>> columns;  // per loaded token
  EmbeddingLoadStats local;

  std::string line;
  bool first_line = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    auto fields = split_fields(line);
    if (fields.empty()) continue;
    // word2vec-style "count dim" header
    if (first_line && looks_like_integer(fields[0])) {
      first_line = false;
      continue;
    }
    first_line = false;
    if (fields.size() != expected_dim + 1) {
      ++local.skipped;
      continue;
    }
    std::vector<double> vec(expected_dim);
    bool ok = true;
    for (std::size_t i = 0; i < expected_dim; ++i) {
      if (!parse_double(fields[i + 1], vec[i]) || !std::isfinite(vec[i])) {
        ok = false;
        break;
      }
    }
    if (!ok) {
      ++local.skipped;
      continue;
    }
    std::size_t expected_index = columns.size() + 2;
    std::size_t idx = vocab.add(std::string(fields[0]));
    if (idx != expected_index) {
      // duplicate token; keep the first occurrence
      ++local.skipped;
      continue;
    }
    columns.push_back(std::move(vec));
    ++local.loaded;
  }

  if (columns.empty()) {
    throw IoError("no parseable embedding lines in " + path.string());
  }

  std::size_t n = vocab.size();
  std::vector<double> unk(expected_dim, 0.0);
  for (const auto& c : columns) {
    for (std::size_t i = 0; i < expected_dim; ++i) unk[i] += c[i];
  }
  for (auto& v : unk) v /= static_cast<double>(columns.size());

  std::vector<double> data(expected_dim * n, 0.0);
  for (std::size_t i = 0; i < expected_dim; ++i) {
    data[i * n + Vocabulary::kUnk] = unk[i];
    for (std::size_t c = 0; c < columns.size(); ++c) {
      data[i * n + (c + 2)] = columns[c][i];
    }
  }

  if (stats) *stats = local;
  EmbeddingMatrix emb{Tensor::from_data({expected_dim, n}, std::move(data)),
                      /*frozen=*/true};
  return {std::move(vocab), std::move(emb)};
}

std::pair<Vocabulary, EmbeddingMatrix> random_embeddings(
    const std::vector<std::string>& tokens, std::size_t dim, Rng& rng) {
  Vocabulary vocab;
  for (const auto& t : tokens) vocab.add(t);
  std::size_t n = vocab.size();
  double bound = 1.0 / std::sqrt(static_cast<double>(dim));
  std::vector<double> data(dim * n, 0.0);
  for (std::size_t c = 1; c < n; ++c) {  // PAD column stays zero
    for (std::size_t i = 0; i < dim; ++i) {
      data[i * n + c] = rng.uniform(-bound, bound);
    }
  }
  EmbeddingMatrix emb{Tensor::from_data({dim, n}, std::move(data)),
                      /*frozen=*/true};
  return {std::move(vocab), std::move(emb)};
}

std::vector<std::string> tokenize(std::string_view text) {
  static constexpr std::string_view punct = "!\"#$%&'()*+,-./:;<=>?@[\\]^_`{|}~";
  std::vector<std::string> tokens;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() &&
           std::isspace(static_cast<unsigned char>(text[i]))) {
      ++i;
    }
    std::size_t start = i;
    while (i < text.size() &&
           !std::isspace(static_cast<unsigned char>(text[i]))) {
      ++i;
    }
    if (i == start) break;
    std::string_view word = text.substr(start, i - start);
    while (!word.empty() && punct.find(word.front()) != std::string_view::npos)
      word.remove_prefix(1);
    while (!word.empty() && punct.find(word.back()) != std::string_view::npos)
      word.remove_suffix(1);
    if (word.empty()) continue;
    std::string lowered(word);
    std::transform(lowered.begin(), lowered.end(), lowered.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    tokens.push_back(std::move(lowered));
  }
  return tokens;
}

EmbeddedSentence embed(std::span<const std::string> tokens,
                       const Vocabulary& vocab, const EmbeddingMatrix& emb,
                       std::size_t n_max) {
  if (tokens.empty()) {
    throw DegenerateInputError("embed: empty token list");
  }
  if (n_max == 0) throw ContractError("embed: n_max must be >= 1");

  EmbeddedSentence out;
  out.token_ids.assign(n_max, Vocabulary::kPad);
  out.mask.assign(n_max, 0);
  std::size_t n = std::min(tokens.size(), n_max);
  for (std::size_t j = 0; j < n; ++j) {
    out.token_ids[j] = vocab.lookup(tokens[j]);
    out.mask[j] = 1;
  }

  std::size_t d = emb.dim();
  std::size_t cols = emb.vocab_size();
  std::vector<double> h(d * n_max, 0.0);
  auto w = emb.weights.values();
  for (std::size_t j = 0; j < n; ++j) {
    std::size_t id = out.token_ids[j];
    for (std::size_t i = 0; i < d; ++i) h[i * n_max + j] = w[i * cols + id];
  }
  out.embedded = Tensor::from_data({d, n_max}, std::move(h));
  return out;
}

SentenceBatch embed_batch(
    const std::vector<std::vector<std::string>>& sentences,
    const Vocabulary& vocab, const EmbeddingMatrix& emb, std::size_t n_max) {
  SentenceBatch batch;
  batch.rows.reserve(sentences.size());
  for (const auto& s : sentences) {
    batch.rows.push_back(embed(s, vocab, emb, n_max));
  }
  return batch;
}

}  // namespace vsam
