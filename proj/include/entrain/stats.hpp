#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "entrain/metrics.hpp"

namespace entrain::stats {

/// 97.5% standard normal quantile used for every confidence interval.
inline constexpr double kZ975 = 1.959964;

double normal_cdf(double x);
/// Student t cumulative distribution; df may be fractional.
double student_t_cdf(double t, double df);
double two_sided_normal_p(double z);
double two_sided_t_p(double t, double df);

struct TTestResult {
  double t = 0.0;
  double df = 0.0;  // Welch-Satterthwaite
  double p = 1.0;
  double mean_a = 0.0;
  double mean_b = 0.0;
};

/// Unequal-variance two-sample t-test.
TTestResult welch_t(std::span<const double> a, std::span<const double> b);

struct CorrelationResult {
  double rho = 0.0;
  double p = 1.0;
  std::size_t n = 0;
};

/// 1-based ranks; ties share the mean of the positions they span.
std::vector<double> average_ranks(std::span<const double> values);
double pearson(std::span<const double> x, std::span<const double> y);
/// Pearson correlation of average ranks; p from the t approximation with n-2 df.
CorrelationResult spearman(std::span<const double> x, std::span<const double> y);

/// Column store for regression inputs: numeric and categorical columns.
class Frame {
 public:
  Frame& add_numeric(std::string name, std::vector<double> values);
  Frame& add_categorical(std::string name, std::vector<std::string> values);

  std::size_t rows() const noexcept { return rows_; }
  bool has_numeric(std::string_view name) const;
  bool has_categorical(std::string_view name) const;
  const std::vector<double>& numeric(std::string_view name) const;
  const std::vector<std::string>& categorical(std::string_view name) const;
  /// Sorted distinct values of a categorical column.
  std::vector<std::string> levels(std::string_view name) const;

 private:
  void check_rows(std::size_t n, const std::string& name);
  std::map<std::string, std::vector<double>, std::less<>> numeric_;
  std::map<std::string, std::vector<std::string>, std::less<>> categorical_;
  std::size_t rows_ = 0;
  bool sized_ = false;
};

/// `response ~ term + term`, where a term is one or more column names joined
/// by ':' (products). "0" or "-1" drops the intercept.
struct Formula {
  std::string response;
  std::vector<std::vector<std::string>> terms;
  bool intercept = true;

  static Formula parse(std::string_view text);
};

struct Design {
  Eigen::MatrixXd matrix;
  std::vector<std::string> names;
};

/// Treatment coding with the lexicographically first level as reference
/// ("S[T.same]"). A categorical inside an interaction whose remaining factors
/// do not form a term of their own gets one column per level ("dist:S[diff]").
Design build_design(const Frame& frame, const Formula& formula);

template <typename Scalar>
struct LeastSquaresFit {
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  Vector coef;
  Vector residuals;
  Matrix xtx_inverse;
  Eigen::Index rank = 0;
  std::vector<Eigen::Index> dependent_columns;
};

/// Column-pivoted Householder QR solve. When the design is rank deficient,
/// only `rank` and `dependent_columns` are filled.
template <typename DerivedX, typename DerivedY>
LeastSquaresFit<typename DerivedX::Scalar> least_squares(const Eigen::MatrixBase<DerivedX>& x,
                                                         const Eigen::MatrixBase<DerivedY>& y) {
  using Scalar = typename DerivedX::Scalar;
  using Fit = LeastSquaresFit<Scalar>;
  Fit fit;
  Eigen::ColPivHouseholderQR<typename Fit::Matrix> qr(x);
  fit.rank = qr.rank();
  const Eigen::Index p = x.cols();
  if (fit.rank < p) {
    for (Eigen::Index k = fit.rank; k < p; ++k) fit.dependent_columns.push_back(qr.colsPermutation().indices()(k));
    return fit;
  }
  fit.coef = qr.solve(y);
  fit.residuals = y - x * fit.coef;
  typename Fit::Matrix r = qr.matrixR().topLeftCorner(p, p).template triangularView<Eigen::Upper>();
  typename Fit::Matrix r_inv =
      r.template triangularView<Eigen::Upper>().solve(Fit::Matrix::Identity(p, p));
  typename Fit::Matrix permuted = r_inv * r_inv.transpose();
  fit.xtx_inverse = qr.colsPermutation() * permuted * qr.colsPermutation().transpose();
  return fit;
}

struct Coefficient {
  std::string name;
  double coef = 0.0;
  double std_err = 0.0;
  double z = 0.0;
  double p = 1.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
};

struct RegressionResult {
  std::string formula;
  std::vector<Coefficient> coefficients;
  std::size_t n = 0;
  double r_squared = 0.0;
  double sigma = 0.0;  // residual standard error
  Eigen::VectorXd residuals;
  Design design;

  const Coefficient& at(std::string_view name) const;
};

/// Ordinary least squares. Throws DataError on rank deficiency (listing the
/// collinear columns) or when n does not exceed the number of coefficients.
RegressionResult ols(const Frame& frame, std::string_view formula);

enum class Measure { kCo, kVo };
Measure parse_measure(std::string_view text);
std::string_view to_string(Measure measure) noexcept;

/// `measure ~ S + dist:S` with S = diff (between) / same (within).
RegressionResult decay_slope(const std::vector<RepetitionRecord>& records, Measure measure);

/// Aligned text table: Coef., Std., z, P>|z|, [0.025, 0.975].
std::string regression_table(const RegressionResult& result, std::string_view title = {});
std::string regression_csv(const RegressionResult& result);

}  // namespace entrain::stats
