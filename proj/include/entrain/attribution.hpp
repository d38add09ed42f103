#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "entrain/metrics.hpp"

namespace entrain {

enum class ElementKind { kSpeakerLabel, kUtterance, kTargetLabel, kTarget };

std::string_view to_string(ElementKind kind) noexcept;
ElementKind parse_element_kind(std::string_view text);

/// Half-open range [start, end) of input tokens forming one element.
struct ElementSpan {
  ElementKind kind = ElementKind::kUtterance;
  std::optional<std::size_t> utterance_index;  // 1..9 for context utterances
  std::size_t start = 0;
  std::size_t end = 0;

  std::size_t size() const noexcept { return end - start; }
};

struct AttributionRecord {
  std::string sample_id;
  std::string model;
  ModelType model_type = ModelType::kBase;
  std::vector<std::string> input_tokens;
  std::size_t target_len = 0;
  Eigen::MatrixXd matrix;  // input tokens x target tokens, embedding dimension already summed
  std::vector<ElementSpan> elements;
};

struct AggregatedAttribution {
  std::string sample_id;
  std::string model;
  ModelType model_type = ModelType::kBase;
  std::vector<ElementSpan> elements;
  Eigen::VectorXd phi_raw;  // per-element summed attribution
  Eigen::VectorXd phi;      // max-abs normalised, then mean-centred
};

/// Per-element sums: rows of each span, all target columns.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> element_sums(
    const Eigen::MatrixBase<Derived>& matrix, const std::vector<ElementSpan>& elements) {
  using Scalar = typename Derived::Scalar;
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> row_totals = matrix.rowwise().sum();
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> sums(static_cast<Eigen::Index>(elements.size()));
  for (std::size_t e = 0; e < elements.size(); ++e) {
    const auto& span = elements[e];
    sums(static_cast<Eigen::Index>(e)) =
        row_totals.segment(static_cast<Eigen::Index>(span.start), static_cast<Eigen::Index>(span.size())).sum();
  }
  return sums;
}

/// Divides by the largest magnitude (all-zero input stays zero).
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> max_abs_normalize(
    const Eigen::MatrixBase<Derived>& scores) {
  using Scalar = typename Derived::Scalar;
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> out = scores;
  if (out.size() == 0) return out;
  const Scalar peak = out.cwiseAbs().maxCoeff();
  if (peak > Scalar(0)) out /= peak;
  return out;
}

/// Relative boosting effect: max-abs normalisation followed by mean centring.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> relative_boost(
    const Eigen::MatrixBase<Derived>& scores) {
  auto normalized = max_abs_normalize(scores);
  if (normalized.size() == 0) return normalized;
  return normalized.array() - normalized.mean();
}

/// Checks dimensions, span coverage and the causal mask. Throws DataError
/// carrying the sample_id on the first violation.
void validate(const AttributionRecord& record);

AggregatedAttribution aggregate(const AttributionRecord& record);

struct Rejection {
  std::size_t line = 0;
  std::string sample_id;  // empty when the line could not be parsed
  std::string reason;
};

struct AttributionLoad {
  std::vector<AttributionRecord> records;
  std::vector<Rejection> rejected;
};

/// Parses the JSONL exchange format; invalid records are rejected one by one.
AttributionLoad parse_attributions(std::string_view content);
AttributionLoad load_attributions(const std::filesystem::path& path);
std::string attribution_to_jsonl(const AttributionRecord& record);

struct ElementRow {
  std::string sample_id;
  std::string model;
  ModelType model_type = ModelType::kBase;
  ElementKind kind = ElementKind::kUtterance;
  std::optional<std::size_t> utterance_index;
  std::optional<std::size_t> distance;  // window - utterance_index
  std::optional<SpeakerRelation> speaker_relation;
  double phi = 0.0;
  std::optional<double> co;
  std::optional<double> vo;
  std::optional<double> pmi_avg;
};

/// One row per (sample, element). Speaker relation to the target follows from
/// turn alternation: odd distances are between-speaker. Human target-mode
/// repetition records, when given, are joined on (sample_id, utterance_index).
std::vector<ElementRow> element_table(const std::vector<AggregatedAttribution>& aggregations,
                                      const std::vector<RepetitionRecord>& records = {},
                                      std::size_t window = 10);

const std::vector<std::string>& element_csv_header();
std::string element_rows_to_csv(const std::vector<ElementRow>& rows);

}  // namespace entrain
