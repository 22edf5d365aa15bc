#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "vsam/rng.hpp"
#include "vsam/tensor.hpp"

namespace vsam {

// Token-to-index map with two reserved entries: 0 = PAD, 1 = UNK.
// Lookups of unknown tokens fall back to UNK and never fail.
class Vocabulary {
 public:
  static constexpr std::size_t kPad = 0;
  static constexpr std::size_t kUnk = 1;

  Vocabulary();

  // Adds the token if absent; returns its index either way.
  std::size_t add(std::string token);

  std::size_t lookup(std::string_view token) const;
  bool contains(std::string_view token) const;
  const std::string& token(std::size_t index) const;
  std::size_t size() const { return tokens_.size(); }

 private:
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<std::string> tokens_;
};

// W^e as a (D, N) tensor, one column per vocabulary entry. The PAD column
// is all-zero and excluded from every gradient path.
struct EmbeddingMatrix {
  Tensor weights;  // (dim, vocab_size)
  bool frozen = true;

  std::size_t dim() const { return weights.shape()[0]; }
  std::size_t vocab_size() const { return weights.shape()[1]; }
  std::vector<double> column(std::size_t index) const;
};

struct EmbeddingLoadStats {
  std::size_t loaded = 0;
  std::size_t skipped = 0;
};

// Plain-text embedding file, one record per line: token then D floats.
// Header lines whose first field parses as an integer are skipped, as are
// malformed or wrong-dimension lines (counted in stats). UNK becomes the
// mean of all loaded vectors, PAD stays zero.
std::pair<Vocabulary, EmbeddingMatrix> load_pretrained(
    const std::filesystem::path& path, std::size_t expected_dim,
    EmbeddingLoadStats* stats = nullptr);

// Seeded random embeddings over a fixed token list, uniform in
// (-1/sqrt(D), 1/sqrt(D)); used for synthetic experiments.
std::pair<Vocabulary, EmbeddingMatrix> random_embeddings(
    const std::vector<std::string>& tokens, std::size_t dim, Rng& rng);

// Lowercase, split on whitespace, strip leading/trailing ASCII
// punctuation, drop empties.
std::vector<std::string> tokenize(std::string_view text);

// One sentence padded/truncated to n_max: token ids, validity mask, and
// the embedded (D, n_max) matrix H with zero columns at padding.
struct EmbeddedSentence {
  std::vector<std::size_t> token_ids;
  Mask mask;
  Tensor embedded;
};

EmbeddedSentence embed(std::span<const std::string> tokens,
                       const Vocabulary& vocab, const EmbeddingMatrix& emb,
                       std::size_t n_max);

// Padded batch: one EmbeddedSentence per input sentence.
struct SentenceBatch {
  std::vector<EmbeddedSentence> rows;

  std::size_t size() const { return rows.size(); }
};

SentenceBatch embed_batch(
    const std::vector<std::vector<std::string>>& sentences,
    const Vocabulary& vocab, const EmbeddingMatrix& emb, std::size_t n_max);

}  // namespace vsam
