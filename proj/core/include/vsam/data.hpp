#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace vsam {

enum class Stance : std::uint8_t {
  agree = 0,
  disagree = 1,
  discuss = 2,
  unrelated = 3,
};

inline constexpr std::size_t kNumStances = 4;
inline constexpr std::array<std::string_view, kNumStances> kStanceNames = {
    "agree", "disagree", "discuss", "unrelated"};

// Case-insensitive stance parse; nullopt for unknown strings.
std::optional<Stance> parse_stance(std::string_view s);

struct StanceExample {
  std::vector<std::string> headline;
  std::vector<std::string> body;
  Stance stance = Stance::unrelated;
  int body_id = -1;
};

struct Dataset {
  std::vector<StanceExample> examples;
  std::string split;  // train | test | synthetic
};

// RFC-4180-style CSV: quoted fields may contain commas, doubled quotes,
// and embedded newlines.
std::vector<std::vector<std::string>> parse_csv(std::istream& in);

struct Fnc1LoadReport {
  std::size_t accepted = 0;
  std::size_t bad_stance = 0;
  std::size_t missing_body = 0;
  std::size_t empty_text = 0;
};

// Joins a stances file (Headline, Body ID, Stance) with a bodies file
// (Body ID, articleBody) and tokenizes both texts. Output order follows
// the stances-file row order of accepted rows.
Dataset load_fnc1(const std::filesystem::path& stances_path,
                  const std::filesystem::path& bodies_path,
                  Fnc1LoadReport* report = nullptr);

struct ClassStats {
  std::array<std::size_t, kNumStances> counts{};
  std::size_t total = 0;

  double percentage(std::size_t c) const;  // exact, in [0, 100]
};

ClassStats class_stats(const Dataset& d);

// Half-up rounding to two decimals, used wherever percentages are shown.
double round2(double x);

// ----- synthetic stance data -----
//
// Four disjoint topic word sets plus four stance-cue words and a noise
// pool. Every example draws a headline topic and a body topic; the label
// is a fixed function of that pair: same topic -> discuss, one designated
// pair -> agree, another -> disagree, anything else -> unrelated. The
// body's first token is the cue word of the label and its second token
// names the body topic, so the rule is recoverable from the text.

struct SyntheticLayout {
  std::array<std::string, kNumStances> cue_words;
  std::array<std::vector<std::string>, 4> topic_words;
  std::vector<std::string> noise_words;

  std::vector<std::string> all_tokens() const;
};

SyntheticLayout synthetic_layout(std::size_t vocab_size);

// Label rule on (headline topic, body topic).
Stance synthetic_relation(std::size_t topic_h, std::size_t topic_b);

struct SyntheticSpec {
  std::size_t n_examples = 2000;
  std::size_t vocab_size = 64;
  std::uint64_t seed = 7;
  std::array<double, kNumStances> class_proportions{0.25, 0.25, 0.25, 0.25};
  std::size_t headline_len_min = 3;
  std::size_t headline_len_max = 8;
  std::size_t body_len_min = 8;
  std::size_t body_len_max = 16;
};

Dataset make_synthetic(const SyntheticSpec& spec);
Dataset make_synthetic(std::size_t n_examples, std::size_t vocab_size,
                       std::uint64_t seed);

}  // namespace vsam
