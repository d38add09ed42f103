#include "entrain/quality.hpp"

#include <cmath>
#include <json.hpp>
#include <map>

#include "entrain/error.hpp"
#include "entrain/io.hpp"

namespace entrain {

namespace {

using NgramCounts = std::map<std::vector<std::string>, std::size_t>;

NgramCounts ngrams(const std::vector<std::string>& tokens, std::size_t n) {
  NgramCounts counts;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
    ++counts[std::vector<std::string>(tokens.begin() + static_cast<std::ptrdiff_t>(i),
                                      tokens.begin() + static_cast<std::ptrdiff_t>(i + n))];
  }
  return counts;
}

}  // namespace

BleuScore corpus_bleu(const std::vector<std::vector<std::string>>& references,
                      const std::vector<std::vector<std::string>>& hypotheses, std::size_t max_n) {
  if (hypotheses.empty()) throw DataError("BLEU needs at least one hypothesis");
  if (references.size() != hypotheses.size()) {
    throw DataError("BLEU needs one reference per hypothesis (" + std::to_string(references.size()) + " vs " +
                    std::to_string(hypotheses.size()) + ")");
  }
  if (max_n == 0) throw ConfigError("BLEU max_n must be positive");

  std::vector<std::size_t> matches(max_n, 0), totals(max_n, 0);
  BleuScore score;
  for (std::size_t s = 0; s < hypotheses.size(); ++s) {
    score.hypothesis_length += hypotheses[s].size();
    score.reference_length += references[s].size();
    for (std::size_t n = 1; n <= max_n; ++n) {
      auto hyp = ngrams(hypotheses[s], n);
      auto ref = ngrams(references[s], n);
      for (const auto& [gram, count] : hyp) {
        totals[n - 1] += count;
        auto it = ref.find(gram);
        if (it != ref.end()) matches[n - 1] += std::min(count, it->second);
      }
    }
  }

  double log_sum = 0.0;
  for (std::size_t n = 0; n < max_n; ++n) {
    double precision = totals[n] == 0 ? 0.0 : static_cast<double>(matches[n]) / static_cast<double>(totals[n]);
    if (precision == 0.0) precision = kBleuEpsilon;
    score.precisions.push_back(precision);
    log_sum += std::log(precision);
  }
  const double c = static_cast<double>(score.hypothesis_length);
  const double r = static_cast<double>(score.reference_length);
  if (c == 0.0) {
    score.bp = 0.0;
  } else {
    score.bp = c >= r ? 1.0 : std::exp(1.0 - r / c);
  }
  score.lr = r == 0.0 ? (c == 0.0 ? 1.0 : INFINITY) : c / r;
  score.bleu = score.bp * std::exp(log_sum / static_cast<double>(max_n));
  return score;
}

BleuScore corpus_bleu_text(const std::vector<std::string>& references, const std::vector<std::string>& hypotheses,
                           std::size_t max_n) {
  auto norms = [](const std::string& text) {
    std::vector<std::string> out;
    for (const auto& t : tokenize(text)) out.push_back(t.norm);
    return out;
  };
  std::vector<std::vector<std::string>> refs, hyps;
  for (const auto& r : references) refs.push_back(norms(r));
  for (const auto& h : hypotheses) hyps.push_back(norms(h));
  return corpus_bleu(refs, hyps, max_n);
}

std::string describe(const GenerationKey& key) {
  return key.sample_id + "/" + key.model + "/" + std::string(to_string(key.model_type)) + "/" +
         std::to_string(key.generation_index);
}

std::string describe(const GroupKey& key) {
  return key.model + "/" + std::string(to_string(key.model_type)) + "/" + std::to_string(key.generation_index);
}

namespace {

template <typename OnRecord>
void for_each_json_line(std::string_view content, std::vector<std::string>& warnings, OnRecord&& on_record) {
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < content.size()) {
    auto end = content.find('\n', pos);
    if (end == std::string_view::npos) end = content.size();
    std::string_view line = content.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    try {
      on_record(nlohmann::json::parse(line), line_no);
    } catch (const nlohmann::json::exception& e) {
      warnings.push_back("line " + std::to_string(line_no) + ": skipped: " + e.what());
    } catch (const DataError& e) {
      warnings.push_back("line " + std::to_string(line_no) + ": skipped: " + e.what());
    }
  }
}

std::optional<double> optional_number(const nlohmann::json& j, const char* field) {
  if (!j.contains(field) || j.at(field).is_null()) return std::nullopt;
  return j.at(field).get<double>();
}

ModelType model_type_of(const nlohmann::json& j) {
  auto type = parse_model_type(j.at("model_type").get<std::string>());
  if (type == ModelType::kNone) throw DataError("model_type must be 'base' or 'tuned'");
  return type;
}

}  // namespace

std::vector<GenerationRecord> parse_generations(std::string_view content) {
  std::vector<GenerationRecord> out;
  std::vector<std::string> warnings;
  for_each_json_line(content, warnings, [&](const nlohmann::json& j, std::size_t) {
    GenerationRecord g;
    g.sample_id = j.at("sample_id").get<std::string>();
    g.model = j.at("model").get<std::string>();
    g.model_type = model_type_of(j);
    g.generation_index = j.at("generation_index").get<std::size_t>();
    g.text = j.at("text").get<std::string>();
    g.tokens = tokenize(g.text);
    out.push_back(std::move(g));
  });
  if (!warnings.empty()) throw DataError("generation file: " + warnings.front());
  return out;
}

KeyedLoad<GenerationKey, ExternalScores> parse_external_scores(std::string_view content) {
  KeyedLoad<GenerationKey, ExternalScores> load;
  for_each_json_line(content, load.warnings, [&](const nlohmann::json& j, std::size_t line) {
    GenerationKey key{j.at("sample_id").get<std::string>(), j.at("model").get<std::string>(), model_type_of(j),
                      j.at("generation_index").get<std::size_t>()};
    ExternalScores s;
    s.bert_p = optional_number(j, "bert_p");
    s.bert_r = optional_number(j, "bert_r");
    s.bert_f1 = optional_number(j, "bert_f1");
    if (j.contains("ppl") && j.at("ppl").is_object()) {
      const auto& ppl = j.at("ppl");
      if (ppl.contains("evaluator") && ppl.at("evaluator").is_string()) {
        s.ppl_evaluator = ppl.at("evaluator").get<std::string>();
      }
      s.ppl_ii = optional_number(ppl, "ii");
      s.ppl_id = optional_number(ppl, "id");
    }
    ++load.rows;
    auto [it, inserted] = load.values.insert_or_assign(std::move(key), std::move(s));
    if (!inserted) {
      ++load.duplicates;
      load.warnings.push_back("line " + std::to_string(line) + ": duplicate key " + describe(it->first) +
                              ", keeping the later line");
    }
  });
  return load;
}

KeyedLoad<GroupKey, double> parse_mauve(std::string_view content) {
  KeyedLoad<GroupKey, double> load;
  for_each_json_line(content, load.warnings, [&](const nlohmann::json& j, std::size_t line) {
    GroupKey key{j.at("model").get<std::string>(), model_type_of(j), j.at("generation_index").get<std::size_t>()};
    double value = j.at("mauve").get<double>();
    ++load.rows;
    auto [it, inserted] = load.values.insert_or_assign(std::move(key), value);
    if (!inserted) {
      ++load.duplicates;
      load.warnings.push_back("line " + std::to_string(line) + ": duplicate MAUVE group " + describe(it->first) +
                              ", keeping the later line");
    }
  });
  return load;
}

JoinReport join_scores(const std::vector<GenerationRecord>& generations,
                       const KeyedLoad<GenerationKey, ExternalScores>& scores,
                       const KeyedLoad<GroupKey, double>& mauve) {
  JoinReport report;
  report.score_rows = scores.rows;
  report.duplicates = scores.duplicates;
  report.warnings = scores.warnings;
  report.warnings.insert(report.warnings.end(), mauve.warnings.begin(), mauve.warnings.end());

  std::map<GenerationKey, bool> used;
  for (const auto& g : generations) {
    QualityRow row;
    row.key = {g.sample_id, g.model, g.model_type, g.generation_index};
    if (auto it = scores.values.find(row.key); it != scores.values.end()) {
      row.scores = it->second;
      used[row.key] = true;
    }
    if (auto it = mauve.values.find({g.model, g.model_type, g.generation_index}); it != mauve.values.end()) {
      row.mauve = it->second;
    }
    report.rows.push_back(std::move(row));
  }
  for (const auto& [key, _] : scores.values) {
    if (used.contains(key)) {
      ++report.matched;
    } else {
      report.unmatched.push_back(describe(key));
    }
  }
  return report;
}

std::string quality_rows_to_csv(const std::vector<QualityRow>& rows) {
  std::string out = io::csv_row({"sample_id", "model", "model_type", "generation_index", "bert_p", "bert_r",
                                 "bert_f1", "ppl_evaluator", "ppl_ii", "ppl_id", "mauve"});
  for (const auto& r : rows) {
    out += io::csv_row({r.key.sample_id, r.key.model, std::string(to_string(r.key.model_type)),
                        std::to_string(r.key.generation_index), io::format_optional(r.scores.bert_p),
                        io::format_optional(r.scores.bert_r), io::format_optional(r.scores.bert_f1),
                        r.scores.ppl_evaluator.value_or(""), io::format_optional(r.scores.ppl_ii),
                        io::format_optional(r.scores.ppl_id), io::format_optional(r.mauve)});
  }
  return out;
}

std::string_view to_string(LikenessMetric metric) noexcept {
  switch (metric) {
    case LikenessMetric::kCo: return "co";
    case LikenessMetric::kVo: return "vo";
    case LikenessMetric::kPropRepetition: return "prop_repetition";
  }
  return "co";
}

std::vector<HumanLikenessRecord> humanlikeness_distances(double human_value,
                                                         const std::map<GroupKey, double>& model_values,
                                                         LikenessMetric metric) {
  std::vector<HumanLikenessRecord> out;
  for (const auto& [group, value] : model_values) out.push_back({group, metric, std::abs(human_value - value)});
  return out;
}

stats::CorrelationResult humanlikeness_correlation(const std::vector<HumanLikenessRecord>& distances,
                                                   const std::map<GroupKey, double>& quality) {
  std::vector<double> x, y;
  for (const auto& d : distances) {
    auto it = quality.find(d.group);
    if (it == quality.end()) continue;
    x.push_back(d.distance);
    y.push_back(it->second);
  }
  if (x.size() < 3) throw DataError("human-likeness correlation needs at least 3 joined groups, found " +
                                    std::to_string(x.size()));
  return stats::spearman(x, y);
}

double prop_repetition(const Utterance& utterance, const ConstructionLexicon& lexicon) {
  std::vector<bool> covered(utterance.tokens.size(), false);
  lexicon.sequences().scan(utterance.tokens, [&](std::size_t offset, std::size_t length, std::size_t) {
    for (std::size_t k = offset; k < offset + length; ++k) covered[k] = true;
  });
  std::size_t words = 0, hits = 0;
  for (std::size_t i = 0; i < utterance.tokens.size(); ++i) {
    if (utterance.tokens[i].is_punct) continue;
    ++words;
    if (covered[i]) ++hits;
  }
  return words == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(words);
}

}  // namespace entrain
