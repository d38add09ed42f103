#include "entrain/stats.hpp"

#include <algorithm>
#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <set>

#include "entrain/error.hpp"
#include "entrain/io.hpp"

namespace entrain::stats {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double student_t_cdf(double t, double df) {
  if (std::isinf(df)) return normal_cdf(t);
  boost::math::students_t_distribution<double> dist(df);
  return boost::math::cdf(dist, t);
}

double two_sided_normal_p(double z) {
  if (std::isnan(z)) return 1.0;
  return std::min(1.0, std::erfc(std::abs(z) / std::sqrt(2.0)));
}

double two_sided_t_p(double t, double df) {
  if (std::isnan(t)) return 1.0;
  if (std::isinf(t)) return 0.0;
  boost::math::students_t_distribution<double> dist(df);
  return std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t))));
}

namespace {

double mean_of(std::span<const double> v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double sample_variance(std::span<const double> v, double mean) {
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return ss / static_cast<double>(v.size() - 1);
}

}  // namespace

TTestResult welch_t(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 2) throw DataError("welch_t: group a needs at least 2 values, has " + std::to_string(a.size()));
  if (b.size() < 2) throw DataError("welch_t: group b needs at least 2 values, has " + std::to_string(b.size()));
  TTestResult r;
  r.mean_a = mean_of(a);
  r.mean_b = mean_of(b);
  const double va = sample_variance(a, r.mean_a) / static_cast<double>(a.size());
  const double vb = sample_variance(b, r.mean_b) / static_cast<double>(b.size());
  if (va + vb == 0.0) throw DataError("welch_t: both groups have zero variance");
  r.t = (r.mean_a - r.mean_b) / std::sqrt(va + vb);
  r.df = (va + vb) * (va + vb) /
         (va * va / static_cast<double>(a.size() - 1) + vb * vb / static_cast<double>(b.size() - 1));
  r.p = two_sided_t_p(r.t, r.df);
  return r;
}

std::vector<double> average_ranks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto i, auto j) { return values[i] < values[j]; });
  std::vector<double> ranks(values.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && values[order[j]] == values[order[i]]) ++j;
    const double rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t k = i; k < j; ++k) ranks[order[k]] = rank;
    i = j;
  }
  return ranks;
}

double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw DataError("pearson: need two equal-length series");
  const double mx = mean_of(x);
  const double my = mean_of(y);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) throw DataError("correlation undefined for a constant series");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

CorrelationResult spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw DataError("spearman: series lengths differ");
  if (x.size() < 3) throw DataError("spearman: need at least 3 pairs");
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  CorrelationResult r;
  r.n = x.size();
  r.rho = pearson(rx, ry);
  const double df = static_cast<double>(r.n) - 2.0;
  if (std::abs(r.rho) >= 1.0) {
    r.p = 0.0;
  } else {
    r.p = two_sided_t_p(r.rho * std::sqrt(df / (1.0 - r.rho * r.rho)), df);
  }
  return r;
}

void Frame::check_rows(std::size_t n, const std::string& name) {
  if (sized_ && n != rows_) {
    throw DataError("column '" + name + "' has " + std::to_string(n) + " rows, frame has " + std::to_string(rows_));
  }
  rows_ = n;
  sized_ = true;
}

Frame& Frame::add_numeric(std::string name, std::vector<double> values) {
  check_rows(values.size(), name);
  numeric_[std::move(name)] = std::move(values);
  return *this;
}

Frame& Frame::add_categorical(std::string name, std::vector<std::string> values) {
  check_rows(values.size(), name);
  categorical_[std::move(name)] = std::move(values);
  return *this;
}

bool Frame::has_numeric(std::string_view name) const { return numeric_.find(name) != numeric_.end(); }
bool Frame::has_categorical(std::string_view name) const { return categorical_.find(name) != categorical_.end(); }

const std::vector<double>& Frame::numeric(std::string_view name) const {
  auto it = numeric_.find(name);
  if (it == numeric_.end()) throw DataError("no numeric column '" + std::string(name) + "'");
  return it->second;
}

const std::vector<std::string>& Frame::categorical(std::string_view name) const {
  auto it = categorical_.find(name);
  if (it == categorical_.end()) throw DataError("no categorical column '" + std::string(name) + "'");
  return it->second;
}

std::vector<std::string> Frame::levels(std::string_view name) const {
  const auto& values = categorical(name);
  std::set<std::string> unique(values.begin(), values.end());
  return {unique.begin(), unique.end()};
}

namespace {

std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> parts;
  std::size_t pos = 0;
  while (true) {
    auto next = s.find(sep, pos);
    parts.push_back(trim(s.substr(pos, next == std::string_view::npos ? std::string_view::npos : next - pos)));
    if (next == std::string_view::npos) break;
    pos = next + 1;
  }
  return parts;
}

std::vector<std::string> sorted(std::vector<std::string> v) {
  std::sort(v.begin(), v.end());
  return v;
}

}  // namespace

Formula Formula::parse(std::string_view text) {
  auto tilde = text.find('~');
  if (tilde == std::string_view::npos) throw ConfigError("formula needs '~': " + std::string(text));
  Formula f;
  f.response = trim(text.substr(0, tilde));
  if (f.response.empty()) throw ConfigError("formula has no response: " + std::string(text));
  std::string rhs(text.substr(tilde + 1));
  // "- 1" is written as a separate summand
  std::string normalized;
  for (std::size_t i = 0; i < rhs.size(); ++i) {
    if (rhs[i] == '-') {
      normalized += "+-";
    } else {
      normalized += rhs[i];
    }
  }
  for (const auto& summand : split(normalized, '+')) {
    if (summand.empty()) continue;
    if (summand == "1") {
      f.intercept = true;
      continue;
    }
    if (summand == "0" || summand == "-1" || summand == "- 1") {
      f.intercept = false;
      continue;
    }
    auto factors = split(summand, ':');
    for (const auto& factor : factors) {
      if (factor.empty() || factor.front() == '-') throw ConfigError("bad formula term '" + summand + "'");
    }
    f.terms.push_back(std::move(factors));
  }
  return f;
}

Design build_design(const Frame& frame, const Formula& formula) {
  const auto n = frame.rows();
  std::set<std::vector<std::string>> present;
  for (const auto& term : formula.terms) present.insert(sorted(term));

  auto term_in_model = [&](std::vector<std::string> factors) {
    if (factors.empty()) return formula.intercept;
    return present.contains(sorted(std::move(factors)));
  };

  struct Column {
    std::string name;
    Eigen::VectorXd values;
  };
  std::vector<Column> columns;
  if (formula.intercept) columns.push_back({"Intercept", Eigen::VectorXd::Ones(static_cast<Eigen::Index>(n))});

  for (const auto& term : formula.terms) {
    // Start from a single all-ones column and multiply in each factor.
    std::vector<Column> partial{{"", Eigen::VectorXd::Ones(static_cast<Eigen::Index>(n))}};
    for (std::size_t f = 0; f < term.size(); ++f) {
      const auto& factor = term[f];
      std::vector<Column> expanded;
      if (frame.has_numeric(factor)) {
        const auto& values = frame.numeric(factor);
        Eigen::Map<const Eigen::VectorXd> v(values.data(), static_cast<Eigen::Index>(n));
        for (auto& c : partial) {
          expanded.push_back({c.name.empty() ? factor : c.name + ":" + factor, c.values.cwiseProduct(v)});
        }
      } else if (frame.has_categorical(factor)) {
        std::vector<std::string> rest;
        for (std::size_t g = 0; g < term.size(); ++g) {
          if (g != f) rest.push_back(term[g]);
        }
        const bool full = !term_in_model(rest);
        const auto levels = frame.levels(factor);
        const auto& values = frame.categorical(factor);
        for (auto& c : partial) {
          for (std::size_t l = full ? 0 : 1; l < levels.size(); ++l) {
            Eigen::VectorXd indicator(static_cast<Eigen::Index>(n));
            for (std::size_t i = 0; i < n; ++i) indicator(static_cast<Eigen::Index>(i)) = values[i] == levels[l] ? 1.0 : 0.0;
            std::string label = factor + (full ? "[" + levels[l] + "]" : "[T." + levels[l] + "]");
            expanded.push_back({c.name.empty() ? label : c.name + ":" + label, c.values.cwiseProduct(indicator)});
          }
        }
      } else {
        throw DataError("formula refers to unknown column '" + factor + "'");
      }
      partial = std::move(expanded);
    }
    for (auto& c : partial) columns.push_back(std::move(c));
  }

  Design design;
  design.matrix.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(columns.size()));
  for (std::size_t k = 0; k < columns.size(); ++k) {
    design.matrix.col(static_cast<Eigen::Index>(k)) = columns[k].values;
    design.names.push_back(columns[k].name);
  }
  return design;
}

const Coefficient& RegressionResult::at(std::string_view name) const {
  for (const auto& c : coefficients) {
    if (c.name == name) return c;
  }
  throw DataError("no coefficient named '" + std::string(name) + "'");
}

RegressionResult ols(const Frame& frame, std::string_view formula_text) {
  const auto formula = Formula::parse(formula_text);
  RegressionResult result;
  result.formula = std::string(formula_text);
  result.design = build_design(frame, formula);
  const auto& x = result.design.matrix;
  const auto& response = frame.numeric(formula.response);
  Eigen::Map<const Eigen::VectorXd> y(response.data(), static_cast<Eigen::Index>(response.size()));
  const auto n = static_cast<std::size_t>(x.rows());
  const auto p = static_cast<std::size_t>(x.cols());
  if (p == 0) throw DataError("formula produces no design columns");
  if (n <= p) {
    throw DataError("need more rows than coefficients (" + std::to_string(n) + " rows, " + std::to_string(p) +
                    " coefficients)");
  }

  auto fit = least_squares(x, y);
  if (fit.rank < static_cast<Eigen::Index>(p)) {
    std::string names;
    for (auto c : fit.dependent_columns) {
      if (!names.empty()) names += ", ";
      names += result.design.names[static_cast<std::size_t>(c)];
    }
    throw DataError("rank-deficient design (rank " + std::to_string(fit.rank) + " of " + std::to_string(p) +
                    "); collinear columns: " + names);
  }

  const double rss = fit.residuals.squaredNorm();
  const double sigma2 = rss / static_cast<double>(n - p);
  result.n = n;
  result.sigma = std::sqrt(sigma2);
  const double tss = (y.array() - y.mean()).matrix().squaredNorm();
  result.r_squared = tss > 0.0 ? 1.0 - rss / tss : (rss == 0.0 ? 1.0 : 0.0);
  result.residuals = fit.residuals;
  for (std::size_t k = 0; k < p; ++k) {
    const auto i = static_cast<Eigen::Index>(k);
    Coefficient c;
    c.name = result.design.names[k];
    c.coef = fit.coef(i);
    c.std_err = std::sqrt(std::max(0.0, sigma2 * fit.xtx_inverse(i, i)));
    if (c.std_err > 0.0) {
      c.z = c.coef / c.std_err;
    } else {
      c.z = c.coef == 0.0 ? 0.0 : std::copysign(INFINITY, c.coef);
    }
    c.p = std::isinf(c.z) ? 0.0 : two_sided_normal_p(c.z);
    c.ci_low = c.coef - kZ975 * c.std_err;
    c.ci_high = c.coef + kZ975 * c.std_err;
    result.coefficients.push_back(std::move(c));
  }
  return result;
}

Measure parse_measure(std::string_view text) {
  if (text == "co") return Measure::kCo;
  if (text == "vo") return Measure::kVo;
  throw ConfigError("measure must be 'co' or 'vo'");
}

std::string_view to_string(Measure measure) noexcept { return measure == Measure::kVo ? "vo" : "co"; }

RegressionResult decay_slope(const std::vector<RepetitionRecord>& records, Measure measure) {
  std::vector<double> values, dist;
  std::vector<std::string> relation;
  std::set<std::size_t> between_distances, within_distances;
  for (const auto& r : records) {
    values.push_back(measure == Measure::kCo ? r.co : r.vo);
    dist.push_back(static_cast<double>(r.distance));
    const bool within = r.speaker_relation == SpeakerRelation::kWithin;
    relation.emplace_back(within ? "same" : "diff");
    (within ? within_distances : between_distances).insert(r.distance);
  }
  if (between_distances.size() < 2 || within_distances.size() < 2) {
    throw DataError("decay regression needs at least 2 distinct distances per speaker relation");
  }
  Frame frame;
  const std::string name(to_string(measure));
  frame.add_numeric(name, std::move(values)).add_numeric("dist", std::move(dist)).add_categorical("S", std::move(relation));
  return ols(frame, name + " ~ S + dist:S");
}

namespace {

std::string fixed(double v, int digits = 4) {
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), "%.*f", digits, v);
  return buffer;
}

}  // namespace

std::string regression_table(const RegressionResult& result, std::string_view title) {
  std::size_t width = 12;
  for (const auto& c : result.coefficients) width = std::max(width, c.name.size() + 2);
  std::string out;
  if (!title.empty()) out += std::string(title) + "\n";
  out += "Model: OLS (fixed effects only; random effects not modelled)\n";
  out += "Formula: " + result.formula + "\n";
  out += "No. observations: " + std::to_string(result.n) + "    R-squared: " + fixed(result.r_squared) +
         "    Residual std. error: " + fixed(result.sigma, 6) + "\n";
  char line[256];
  std::snprintf(line, sizeof(line), "%-*s %10s %10s %10s %8s %10s %10s\n", static_cast<int>(width), "", "Coef.", "Std.",
                "z", "P>|z|", "[0.025", "0.975]");
  out += line;
  for (const auto& c : result.coefficients) {
    std::snprintf(line, sizeof(line), "%-*s %10.6f %10.6f %10.3f %8.3f %10.6f %10.6f\n", static_cast<int>(width),
                  c.name.c_str(), c.coef, c.std_err, c.z, c.p, c.ci_low, c.ci_high);
    out += line;
  }
  return out;
}

std::string regression_csv(const RegressionResult& result) {
  std::string out = io::csv_row({"term", "Coef.", "Std.", "z", "P>|z|", "[0.025", "0.975]"});
  for (const auto& c : result.coefficients) {
    out += io::csv_row({c.name, io::format_double(c.coef), io::format_double(c.std_err), io::format_double(c.z),
                        io::format_double(c.p), io::format_double(c.ci_low), io::format_double(c.ci_high)});
  }
  return out;
}

}  // namespace entrain::stats
