#include "entrain/attribution.hpp"

#include <cmath>
#include <json.hpp>
#include <map>

#include "entrain/error.hpp"
#include "entrain/io.hpp"

namespace entrain {

std::string_view to_string(ElementKind kind) noexcept {
  switch (kind) {
    case ElementKind::kSpeakerLabel: return "speaker_label";
    case ElementKind::kUtterance: return "utterance";
    case ElementKind::kTargetLabel: return "target_label";
    case ElementKind::kTarget: return "target";
  }
  return "utterance";
}

ElementKind parse_element_kind(std::string_view text) {
  if (text == "speaker_label") return ElementKind::kSpeakerLabel;
  if (text == "utterance") return ElementKind::kUtterance;
  if (text == "target_label") return ElementKind::kTargetLabel;
  if (text == "target") return ElementKind::kTarget;
  throw DataError("unknown element kind '" + std::string(text) + "'");
}

namespace {

[[noreturn]] void reject(const AttributionRecord& record, const std::string& reason) {
  throw DataError("sample '" + record.sample_id + "': " + reason);
}

}  // namespace

void validate(const AttributionRecord& record) {
  const auto rows = static_cast<std::size_t>(record.matrix.rows());
  const auto cols = static_cast<std::size_t>(record.matrix.cols());
  if (rows != record.input_tokens.size()) {
    reject(record, "matrix has " + std::to_string(rows) + " rows for " +
                       std::to_string(record.input_tokens.size()) + " input tokens");
  }
  if (record.target_len == 0) reject(record, "target_len must be positive");
  if (cols != record.target_len) {
    reject(record, "matrix has " + std::to_string(cols) + " columns, target_len is " +
                       std::to_string(record.target_len));
  }
  if (!record.matrix.allFinite()) reject(record, "matrix holds non-finite values");
  if (record.elements.empty()) reject(record, "no element spans");

  std::size_t cursor = 0;
  std::size_t targets = 0;
  for (const auto& span : record.elements) {
    if (span.start != cursor) {
      reject(record, span.start < cursor ? "element spans overlap at token " + std::to_string(span.start)
                                         : "tokens " + std::to_string(cursor) + ".." +
                                               std::to_string(span.start) + " not covered by any element");
    }
    if (span.end <= span.start) reject(record, "empty element span at token " + std::to_string(span.start));
    if (span.utterance_index && (*span.utterance_index < 1 || *span.utterance_index > 9)) {
      reject(record, "utterance index " + std::to_string(*span.utterance_index) + " outside 1..9");
    }
    if (span.kind == ElementKind::kUtterance && !span.utterance_index) {
      reject(record, "utterance element without an utterance index");
    }
    if (span.kind == ElementKind::kTarget) ++targets;
    cursor = span.end;
  }
  if (cursor != rows) {
    reject(record, "tokens " + std::to_string(cursor) + ".." + std::to_string(rows) + " not covered by any element");
  }
  if (targets != 1) reject(record, "expected exactly one target span, found " + std::to_string(targets));
  const auto& target = record.elements.back();
  if (target.kind != ElementKind::kTarget) reject(record, "target span must be last");
  if (target.size() != record.target_len) {
    reject(record, "target span covers " + std::to_string(target.size()) + " tokens, target_len is " +
                       std::to_string(record.target_len));
  }
  // Token j of the target sits at input position target.start + j and may only
  // draw on earlier positions.
  for (std::size_t j = 0; j < cols; ++j) {
    for (std::size_t i = target.start + j; i < rows; ++i) {
      if (record.matrix(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) != 0.0) {
        reject(record, "causal mask violated at input " + std::to_string(i) + ", target " + std::to_string(j));
      }
    }
  }
}

AggregatedAttribution aggregate(const AttributionRecord& record) {
  AggregatedAttribution out;
  out.sample_id = record.sample_id;
  out.model = record.model;
  out.model_type = record.model_type;
  out.elements = record.elements;
  out.phi_raw = element_sums(record.matrix, record.elements);
  out.phi = relative_boost(out.phi_raw);
  return out;
}

namespace {

AttributionRecord record_from_json(const nlohmann::json& j) {
  AttributionRecord r;
  r.sample_id = j.at("sample_id").get<std::string>();
  r.model = j.at("model").get<std::string>();
  const auto type = j.at("model_type").get<std::string>();
  if (type != "base" && type != "tuned") throw DataError("model_type must be 'base' or 'tuned'");
  r.model_type = parse_model_type(type);
  r.input_tokens = j.at("input_tokens").get<std::vector<std::string>>();
  r.target_len = j.at("target_len").get<std::size_t>();
  for (const auto& e : j.at("elements")) {
    ElementSpan span;
    span.kind = parse_element_kind(e.at("kind").get<std::string>());
    if (e.contains("u") && !e.at("u").is_null()) span.utterance_index = e.at("u").get<std::size_t>();
    span.start = e.at("start").get<std::size_t>();
    span.end = e.at("end").get<std::size_t>();
    r.elements.push_back(span);
  }
  const auto& rows = j.at("matrix");
  const auto n_rows = rows.size();
  const auto n_cols = n_rows ? rows.at(0).size() : 0;
  r.matrix.resize(static_cast<Eigen::Index>(n_rows), static_cast<Eigen::Index>(n_cols));
  for (std::size_t i = 0; i < n_rows; ++i) {
    const auto& row = rows.at(i);
    if (row.size() != n_cols) {
      throw DataError("matrix row " + std::to_string(i) + " has " + std::to_string(row.size()) +
                      " values, expected " + std::to_string(n_cols));
    }
    for (std::size_t k = 0; k < n_cols; ++k) {
      r.matrix(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = row.at(k).get<double>();
    }
  }
  return r;
}

}  // namespace

AttributionLoad parse_attributions(std::string_view content) {
  AttributionLoad load;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < content.size()) {
    auto end = content.find('\n', pos);
    if (end == std::string_view::npos) end = content.size();
    std::string_view line = content.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;

    std::string sample_id;
    try {
      auto j = nlohmann::json::parse(line);
      if (j.is_object() && j.contains("sample_id") && j["sample_id"].is_string()) {
        sample_id = j["sample_id"].get<std::string>();
      }
      auto record = record_from_json(j);
      validate(record);
      load.records.push_back(std::move(record));
    } catch (const nlohmann::json::exception& e) {
      load.rejected.push_back({line_no, sample_id, e.what()});
    } catch (const DataError& e) {
      load.rejected.push_back({line_no, sample_id, e.what()});
    }
  }
  return load;
}

AttributionLoad load_attributions(const std::filesystem::path& path) {
  return parse_attributions(io::read_file(path));
}

std::string attribution_to_jsonl(const AttributionRecord& r) {
  nlohmann::ordered_json j;
  j["sample_id"] = r.sample_id;
  j["model"] = r.model;
  j["model_type"] = to_string(r.model_type);
  j["input_tokens"] = r.input_tokens;
  j["target_len"] = r.target_len;
  auto elements = nlohmann::ordered_json::array();
  for (const auto& span : r.elements) {
    nlohmann::ordered_json e;
    e["kind"] = to_string(span.kind);
    e["u"] = span.utterance_index ? nlohmann::ordered_json(*span.utterance_index) : nlohmann::ordered_json(nullptr);
    e["start"] = span.start;
    e["end"] = span.end;
    elements.push_back(std::move(e));
  }
  j["elements"] = std::move(elements);
  auto matrix = nlohmann::ordered_json::array();
  for (Eigen::Index i = 0; i < r.matrix.rows(); ++i) {
    auto row = nlohmann::ordered_json::array();
    for (Eigen::Index k = 0; k < r.matrix.cols(); ++k) row.push_back(r.matrix(i, k));
    matrix.push_back(std::move(row));
  }
  j["matrix"] = std::move(matrix);
  return j.dump() + "\n";
}

std::vector<ElementRow> element_table(const std::vector<AggregatedAttribution>& aggregations,
                                      const std::vector<RepetitionRecord>& records, std::size_t window) {
  std::map<std::pair<std::string, std::size_t>, const RepetitionRecord*> human;
  for (const auto& r : records) {
    if (r.producer == "human" && r.cur_index == window) human[{r.sample_id, r.prev_index}] = &r;
  }

  std::vector<ElementRow> rows;
  for (const auto& agg : aggregations) {
    for (std::size_t e = 0; e < agg.elements.size(); ++e) {
      const auto& span = agg.elements[e];
      ElementRow row;
      row.sample_id = agg.sample_id;
      row.model = agg.model;
      row.model_type = agg.model_type;
      row.kind = span.kind;
      row.utterance_index = span.utterance_index;
      row.phi = agg.phi(static_cast<Eigen::Index>(e));
      if (span.utterance_index && *span.utterance_index < window) {
        const auto distance = window - *span.utterance_index;
        row.distance = distance;
        row.speaker_relation = distance % 2 == 1 ? SpeakerRelation::kBetween : SpeakerRelation::kWithin;
        if (span.kind == ElementKind::kUtterance) {
          auto it = human.find({agg.sample_id, *span.utterance_index});
          if (it != human.end()) {
            row.co = it->second->co;
            row.vo = it->second->vo;
            row.pmi_avg = it->second->pmi_avg;
          }
        }
      }
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

const std::vector<std::string>& element_csv_header() {
  static const std::vector<std::string> header{"sample_id", "model",    "model_type",       "kind",
                                               "utterance_index", "distance", "speaker_relation", "phi",
                                               "co",        "vo",       "pmi_avg"};
  return header;
}

std::string element_rows_to_csv(const std::vector<ElementRow>& rows) {
  auto opt_index = [](const std::optional<std::size_t>& v) { return v ? std::to_string(*v) : std::string{}; };
  std::string out = io::csv_row(element_csv_header());
  for (const auto& r : rows) {
    out += io::csv_row({r.sample_id, r.model, std::string(to_string(r.model_type)), std::string(to_string(r.kind)),
                        opt_index(r.utterance_index), opt_index(r.distance),
                        r.speaker_relation ? std::string(to_string(*r.speaker_relation)) : std::string{},
                        io::format_double(r.phi), io::format_optional(r.co), io::format_optional(r.vo),
                        io::format_optional(r.pmi_avg)});
  }
  return out;
}

}  // namespace entrain
