#include <doctest.h>

#include <numeric>
#include <random>
#include <set>

#include "entrain/attribution.hpp"
#include "entrain/error.hpp"
#include "entrain/io.hpp"

using namespace entrain;

namespace {

// Speaker label and utterance spans for u = 1..9, then target label and target.
AttributionRecord layout(std::mt19937_64& rng, std::size_t target_len = 3) {
  AttributionRecord r;
  r.sample_id = "s:0";
  r.model = "m";
  r.model_type = ModelType::kBase;
  r.target_len = target_len;
  std::size_t pos = 0;
  auto add = [&](ElementKind kind, std::optional<std::size_t> u, std::size_t n) {
    r.elements.push_back({kind, u, pos, pos + n});
    for (std::size_t k = 0; k < n; ++k) r.input_tokens.push_back("t" + std::to_string(pos + k));
    pos += n;
  };
  for (std::size_t u = 1; u <= 9; ++u) {
    add(ElementKind::kSpeakerLabel, u, 1);
    add(ElementKind::kUtterance, u, 1 + rng() % 4);
  }
  add(ElementKind::kTargetLabel, std::nullopt, 1);
  add(ElementKind::kTarget, std::nullopt, target_len);
  r.matrix = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(pos), static_cast<Eigen::Index>(target_len));
  const auto start = r.elements.back().start;
  std::uniform_real_distribution<double> value(-1.0, 1.0);
  for (std::size_t j = 0; j < target_len; ++j) {
    for (std::size_t i = 0; i < start + j; ++i) r.matrix(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = value(rng);
  }
  return r;
}

std::string message_of(const AttributionRecord& r) {
  try {
    validate(r);
  } catch (const DataError& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST_CASE("element sums") {
  Eigen::MatrixXd m(2, 2);
  m << 1, 2, 3, 4;
  std::vector<ElementSpan> spans{{ElementKind::kUtterance, 1, 0, 1}, {ElementKind::kTarget, std::nullopt, 1, 2}};
  auto sums = element_sums(m, spans);
  CHECK(sums(0) == 3.0);
  CHECK(sums(1) == 7.0);
}

TEST_CASE("relative boost hand example") {
  Eigen::Vector3d raw(2, -1, 1);
  auto normalized = max_abs_normalize(raw);
  CHECK(normalized(0) == 1.0);
  CHECK(normalized(1) == -0.5);
  CHECK(normalized(2) == 0.5);
  auto phi = relative_boost(raw);
  CHECK(std::abs(phi(0) - 2.0 / 3.0) <= 1e-12);
  CHECK(std::abs(phi(1) + 5.0 / 6.0) <= 1e-12);
  CHECK(std::abs(phi(2) - 1.0 / 6.0) <= 1e-12);

  Eigen::Vector3d constant(4, 4, 4);
  CHECK(relative_boost(constant).cwiseAbs().maxCoeff() <= 1e-15);
  Eigen::Vector3d zero = Eigen::Vector3d::Zero();
  CHECK(relative_boost(zero).isZero());
}

TEST_CASE("templates work for float") {
  Eigen::Vector3f raw(2, -1, 1);
  Eigen::Vector3f phi = relative_boost(raw);
  CHECK(phi(0) == doctest::Approx(2.0 / 3.0).epsilon(1e-6));
}

TEST_CASE("a well-formed record validates and aggregates") {
  std::mt19937_64 rng(1);
  auto r = layout(rng);
  CHECK(r.elements.size() == 20);
  CHECK_NOTHROW(validate(r));
  auto agg = aggregate(r);
  CHECK(agg.phi.size() == 20);
  CHECK(std::abs(agg.phi.mean()) <= 1e-12);
}

TEST_CASE("validation failures name the sample") {
  std::mt19937_64 rng(2);
  auto base = layout(rng);

  auto rows = base;
  rows.input_tokens.push_back("extra");
  CHECK(message_of(rows).find("s:0") != std::string::npos);
  CHECK(message_of(rows).find("rows") != std::string::npos);

  auto cols = base;
  cols.target_len = 2;
  CHECK(message_of(cols).find("columns") != std::string::npos);

  auto gap = base;
  gap.elements[3].start += 1;
  CHECK(message_of(gap).find("not covered") != std::string::npos);

  auto overlap = base;
  overlap.elements[3].start -= 1;
  CHECK(message_of(overlap).find("overlap") != std::string::npos);

  auto nan = base;
  nan.matrix(0, 0) = std::nan("");
  CHECK(message_of(nan).find("non-finite") != std::string::npos);

  auto mask = base;
  mask.matrix(mask.matrix.rows() - 1, 0) = 0.25;
  CHECK(message_of(mask).find("causal mask") != std::string::npos);

  auto no_target = base;
  no_target.elements.back().kind = ElementKind::kUtterance;
  no_target.elements.back().utterance_index = 9;
  CHECK(message_of(no_target).find("target") != std::string::npos);

  auto bad_u = base;
  bad_u.elements[1].utterance_index = 10;
  CHECK(message_of(bad_u).find("outside 1..9") != std::string::npos);
}

TEST_CASE("aggregation properties on random records") {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 300; ++trial) {
    auto r = layout(rng, 1 + rng() % 6);
    auto agg = aggregate(r);
    CHECK(std::abs(agg.phi.mean()) <= 1e-9);
    CHECK(agg.phi.maxCoeff() <= 2.0);
    CHECK(agg.phi.minCoeff() >= -2.0);
    CHECK(std::abs(max_abs_normalize(agg.phi_raw).cwiseAbs().maxCoeff() - 1.0) <= 1e-9);

    auto scaled = r;
    scaled.matrix *= 3.7;
    CHECK((aggregate(scaled).phi - agg.phi).cwiseAbs().maxCoeff() <= 1e-9);
    auto negated = r;
    negated.matrix *= -0.4;
    CHECK((aggregate(negated).phi + agg.phi).cwiseAbs().maxCoeff() <= 1e-9);

    auto other = layout(rng, static_cast<std::size_t>(r.matrix.cols()));
    if (other.matrix.rows() == r.matrix.rows()) {
      auto sum = r;
      sum.matrix += other.matrix;
      CHECK((aggregate(sum).phi_raw - agg.phi_raw - element_sums(other.matrix, r.elements)).cwiseAbs().maxCoeff() <=
            1e-9);
    }

    // Permuting elements permutes phi the same way.
    std::vector<std::size_t> order(r.elements.size());
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<ElementSpan> permuted;
    for (auto k : order) permuted.push_back(r.elements[k]);
    Eigen::VectorXd phi = relative_boost(element_sums(r.matrix, permuted));
    for (std::size_t k = 0; k < order.size(); ++k) {
      CHECK(std::abs(phi(static_cast<Eigen::Index>(k)) - agg.phi(static_cast<Eigen::Index>(order[k]))) <= 1e-12);
    }
  }
}

TEST_CASE("fixture file loads with per-line rejections") {
  auto load = load_attributions(ENTRAIN_FIXTURES "/attributions.jsonl");
  CHECK(load.records.size() == 8);
  REQUIRE(load.rejected.size() == 3);
  CHECK(load.rejected[0].line == 5);
  CHECK(load.rejected[0].sample_id == "d1:0");
  CHECK(load.rejected[1].reason.find("causal mask") != std::string::npos);
  CHECK(load.rejected[2].sample_id.empty());
  for (const auto& r : load.records) {
    CHECK_NOTHROW(validate(r));
    CHECK(r.elements.size() == 20);
  }
}

TEST_CASE("attribution jsonl round trip") {
  std::mt19937_64 rng(4);
  auto r = layout(rng);
  auto back = parse_attributions(attribution_to_jsonl(r));
  REQUIRE(back.records.size() == 1);
  CHECK(back.rejected.empty());
  CHECK(back.records[0].matrix == r.matrix);
  CHECK(back.records[0].input_tokens == r.input_tokens);
  CHECK(back.records[0].elements.size() == r.elements.size());
}

TEST_CASE("element table distances, relations and joins") {
  std::mt19937_64 rng(6);
  auto agg = aggregate(layout(rng));
  RepetitionRecord rec;
  rec.sample_id = "s:0";
  rec.prev_index = 7;
  rec.cur_index = 10;
  rec.distance = 3;
  rec.co = 0.25;
  rec.vo = 0.5;
  rec.pmi_avg = 4.0;
  auto rows = element_table({agg}, {rec});
  REQUIRE(rows.size() == 20);
  std::set<std::size_t> distances;
  for (const auto& row : rows) {
    if (row.kind != ElementKind::kUtterance) continue;
    REQUIRE(row.distance);
    distances.insert(*row.distance);
    CHECK(*row.distance == 10 - *row.utterance_index);
    CHECK(*row.speaker_relation == (*row.distance % 2 ? SpeakerRelation::kBetween : SpeakerRelation::kWithin));
    CHECK(row.co.has_value() == (*row.utterance_index == 7));
  }
  CHECK(distances == std::set<std::size_t>{1, 2, 3, 4, 5, 6, 7, 8, 9});
  CHECK_FALSE(rows.back().distance);

  auto csv = io::CsvTable::parse(element_rows_to_csv(rows));
  CHECK(csv.header() == element_csv_header());
  CHECK(csv.rows().size() == rows.size());
  CHECK(csv.rows()[13][csv.column("co")] == "0.25");
}
