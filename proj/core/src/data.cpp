#include "vsam/data.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <unordered_map>

#include "vsam/embeddings.hpp"
#include "vsam/errors.hpp"
#include "vsam/rng.hpp"

namespace vsam {

std::optional<Stance> parse_stance(std::string_view s) {
  std::string lowered(s);
  std::transform(lowered.begin(), lowered.end(), lowered.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  for (std::size_t i = 0; i < kNumStances; ++i) {
    if (lowered == kStanceNames[i]) return static_cast<Stance>(i);
  }
  return std::nullopt;
}

std::vector<std::vector<std::string>> parse_csv(std::istream& in) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;

  auto end_field = [&]() {
    row.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  auto end_row = [&]() {
    end_field();
    // skip blank lines outside records
    if (!(row.size() == 1 && row[0].empty())) rows.push_back(std::move(row));
    row.clear();
  };

  char c;
  while (in.get(c)) {
    if (in_quotes) {
      if (c == '"') {
        if (in.peek() == '"') {
          in.get(c);
          field.push_back('"');
        } else {
          in_quotes = false;
        }
      } else {
        field.push_back(c);
      }
      continue;
    }
    switch (c) {
      case '"':
        if (!field_started && field.empty()) {
          in_quotes = true;
          field_started = true;
        } else {
          field.push_back(c);
        }
        break;
      case ',':
        end_field();
        break;
      case '\r':
        break;
      case '\n':
        end_row();
        break;
      default:
        field.push_back(c);
        field_started = true;
        break;
    }
  }
  if (!field.empty() || !row.empty() || field_started) end_row();
  return rows;
}

namespace {

std::vector<std::vector<std::string>> read_csv_file(
    const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open file: " + path.string());
  return parse_csv(in);
}

// Header lookup tolerant of case and a UTF-8 BOM on the first cell.
std::size_t find_column(const std::vector<std::string>& header,
                        std::string_view name,
                        const std::filesystem::path& path) {
  for (std::size_t i = 0; i < header.size(); ++i) {
    std::string cell = header[i];
    if (i == 0 && cell.size() >= 3 && cell[0] == '\xEF' && cell[1] == '\xBB' &&
        cell[2] == '\xBF') {
      cell.erase(0, 3);
    }
    std::string lowered(cell);
    std::transform(lowered.begin(), lowered.end(), lowered.begin(),
                   [](unsigned char ch) { return std::tolower(ch); });
    std::string want(name);
    std::transform(want.begin(), want.end(), want.begin(),
                   [](unsigned char ch) { return std::tolower(ch); });
    if (lowered == want) return i;
  }
  throw IoError("missing column '" + std::string(name) + "' in " +
                path.string());
}

bool parse_int(std::string_view s, int& out) {
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && ptr == s.data() + s.size();
}

}  // namespace

Dataset load_fnc1(const std::filesystem::path& stances_path,
                  const std::filesystem::path& bodies_path,
                  Fnc1LoadReport* report) {
  auto bodies_rows = read_csv_file(bodies_path);
  if (bodies_rows.empty()) {
    throw IoError("empty bodies file: " + bodies_path.string());
  }
  std::size_t body_id_col = find_column(bodies_rows[0], "Body ID", bodies_path);
  std::size_t body_text_col =
      find_column(bodies_rows[0], "articleBody", bodies_path);

  std::unordered_map<int, std::vector<std::string>> bodies;
  for (std::size_t r = 1; r < bodies_rows.size(); ++r) {
    const auto& row = bodies_rows[r];
    if (row.size() <= std::max(body_id_col, body_text_col)) continue;
    int id;
    if (!parse_int(row[body_id_col], id)) continue;
    bodies.emplace(id, tokenize(row[body_text_col]));
  }

  auto stance_rows = read_csv_file(stances_path);
  if (stance_rows.empty()) {
    throw IoError("empty stances file: " + stances_path.string());
  }
  std::size_t headline_col =
      find_column(stance_rows[0], "Headline", stances_path);
  std::size_t id_col = find_column(stance_rows[0], "Body ID", stances_path);
  std::size_t stance_col = find_column(stance_rows[0], "Stance", stances_path);

  Fnc1LoadReport local;
  Dataset out;
  for (std::size_t r = 1; r < stance_rows.size(); ++r) {
    const auto& row = stance_rows[r];
    if (row.size() <= std::max({headline_col, id_col, stance_col})) {
      ++local.bad_stance;
      continue;
    }
    auto stance = parse_stance(row[stance_col]);
    if (!stance) {
      ++local.bad_stance;
      continue;
    }
    int id;
    if (!parse_int(row[id_col], id) || !bodies.contains(id)) {
      ++local.missing_body;
      continue;
    }
    StanceExample ex;
    ex.headline = tokenize(row[headline_col]);
    ex.body = bodies.at(id);
    ex.stance = *stance;
    ex.body_id = id;
    if (ex.headline.empty() || ex.body.empty()) {
      ++local.empty_text;
      continue;
    }
    out.examples.push_back(std::move(ex));
    ++local.accepted;
  }

  if (report) *report = local;
  if (out.examples.empty()) {
    throw DegenerateInputError("no valid rows in " + stances_path.string());
  }
  return out;
}

double ClassStats::percentage(std::size_t c) const {
  if (total == 0) return 0.0;
  return 100.0 * static_cast<double>(counts[c]) / static_cast<double>(total);
}

ClassStats class_stats(const Dataset& d) {
  if (d.examples.empty()) {
    throw ContractError("class_stats: empty dataset");
  }
  ClassStats s;
  for (const auto& ex : d.examples) {
    ++s.counts[static_cast<std::size_t>(ex.stance)];
  }
  s.total = d.examples.size();
  return s;
}

double round2(double x) { return std::floor(x * 100.0 + 0.5) / 100.0; }

// ----- synthetic data -----

std::vector<std::string> SyntheticLayout::all_tokens() const {
  std::vector<std::string> out;
  for (const auto& c : cue_words) out.push_back(c);
  for (const auto& set : topic_words)
    for (const auto& w : set) out.push_back(w);
  for (const auto& w : noise_words) out.push_back(w);
  return out;
}

SyntheticLayout synthetic_layout(std::size_t vocab_size) {
  if (vocab_size < 8) {
    throw ContractError("synthetic vocabulary must have at least 8 words");
  }
  SyntheticLayout layout;
  layout.cue_words = {"cue_agree", "cue_disagree", "cue_discuss",
                      "cue_unrelated"};
  std::size_t remaining = vocab_size - kNumStances;
  std::size_t per_topic = std::max<std::size_t>(1, remaining / 6);
  for (std::size_t t = 0; t < 4; ++t) {
    for (std::size_t i = 0; i < per_topic; ++i) {
      layout.topic_words[t].push_back("topic" + std::to_string(t) + "_w" +
                                      std::to_string(i));
    }
  }
  std::size_t noise_count = remaining - 4 * per_topic;
  for (std::size_t i = 0; i < noise_count; ++i) {
    layout.noise_words.push_back("noise_" + std::to_string(i));
  }
  return layout;
}

Stance synthetic_relation(std::size_t topic_h, std::size_t topic_b) {
  if (topic_h >= 4 || topic_b >= 4) {
    throw ContractError("synthetic_relation: topics must be in [0, 4)");
  }
  if (topic_h == topic_b) return Stance::discuss;
  if ((topic_h == 0 && topic_b == 1) || (topic_h == 1 && topic_b == 0)) {
    return Stance::agree;
  }
  if ((topic_h == 2 && topic_b == 3) || (topic_h == 3 && topic_b == 2)) {
    return Stance::disagree;
  }
  return Stance::unrelated;
}

Dataset make_synthetic(const SyntheticSpec& spec) {
  if (spec.n_examples < 4) {
    throw ContractError("make_synthetic: need at least 4 examples");
  }
  SyntheticLayout layout = synthetic_layout(spec.vocab_size);
  Rng rng(spec.seed);

  double total_p = 0.0;
  for (double p : spec.class_proportions) total_p += p;
  if (total_p <= 0.0) {
    throw ContractError("make_synthetic: class proportions must sum > 0");
  }

  // distractor pool: noise words plus the cue words themselves, so bag-of-
  // words counts of cues are noisy while position 0 stays exact
  std::vector<std::string> distractors = layout.noise_words;
  for (const auto& c : layout.cue_words) distractors.push_back(c);

  auto pick = [&rng](const std::vector<std::string>& pool) -> const std::string& {
    return pool[rng.next_below(pool.size())];
  };

  Dataset out;
  out.split = "synthetic";
  out.examples.reserve(spec.n_examples);
  for (std::size_t n = 0; n < spec.n_examples; ++n) {
    // sample the label from the configured proportions
    double u = rng.uniform() * total_p;
    std::size_t label = kNumStances - 1;
    double acc = 0.0;
    for (std::size_t c = 0; c < kNumStances; ++c) {
      acc += spec.class_proportions[c];
      if (u < acc) {
        label = c;
        break;
      }
    }
    Stance stance = static_cast<Stance>(label);

    // choose a topic pair consistent with the label
    std::size_t t_h = 0, t_b = 0;
    switch (stance) {
      case Stance::discuss:
        t_h = t_b = rng.next_below(4);
        break;
      case Stance::agree:
        t_h = rng.next_below(2);
        t_b = 1 - t_h;
        break;
      case Stance::disagree:
        t_h = 2 + rng.next_below(2);
        t_b = t_h == 2 ? 3 : 2;
        break;
      case Stance::unrelated:
        do {
          t_h = rng.next_below(4);
          t_b = rng.next_below(4);
        } while (synthetic_relation(t_h, t_b) != Stance::unrelated);
        break;
    }

    StanceExample ex;
    ex.stance = stance;
    ex.body_id = static_cast<int>(n);

    std::size_t len_h = spec.headline_len_min +
                        rng.next_below(spec.headline_len_max -
                                       spec.headline_len_min + 1);
    ex.headline.push_back(pick(layout.topic_words[t_h]));
    for (std::size_t i = 1; i < len_h; ++i) {
      bool topical = rng.uniform() < 0.7 || distractors.empty();
      ex.headline.push_back(topical ? pick(layout.topic_words[t_h])
                                    : pick(distractors));
    }

    std::size_t len_b =
        spec.body_len_min +
        rng.next_below(spec.body_len_max - spec.body_len_min + 1);
    ex.body.push_back(layout.cue_words[label]);
    ex.body.push_back(layout.topic_words[t_b][rng.next_below(
        layout.topic_words[t_b].size())]);
    for (std::size_t i = 2; i < len_b; ++i) {
      bool topical = rng.uniform() < 0.6 || distractors.empty();
      ex.body.push_back(topical ? pick(layout.topic_words[t_b])
                                : pick(distractors));
    }
    out.examples.push_back(std::move(ex));
  }
  return out;
}

Dataset make_synthetic(std::size_t n_examples, std::size_t vocab_size,
                       std::uint64_t seed) {
  SyntheticSpec spec;
  spec.n_examples = n_examples;
  spec.vocab_size = vocab_size;
  spec.seed = seed;
  return make_synthetic(spec);
}

}  // namespace vsam
