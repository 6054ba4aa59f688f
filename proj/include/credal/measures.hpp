#pragma once

// Distributions over a univariate covariate (environments), conditional label
// mechanisms (labelers) and every total-variation computation built on them.

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "credal/quadrature.hpp"

namespace credal {

struct Gaussian {
  double mean = 0.0;
  double std = 1.0;
};

struct DiscreteGrid {
  std::vector<double> points;   // strictly increasing
  std::vector<double> weights;  // on the simplex
};

/// One plausible covariate distribution. Immutable after construction.
class Environment {
 public:
  static Environment gaussian(double mean, double std);
  static Environment discrete(std::vector<double> points, std::vector<double> weights);

  bool is_gaussian() const { return std::holds_alternative<Gaussian>(v_); }
  const Gaussian& as_gaussian() const;
  const DiscreteGrid& as_discrete() const;

  double cdf(double x) const;
  /// P(a < X <= b); infinite endpoints allowed.
  double mass(double a, double b) const;
  /// Smallest x with cdf(x) >= p.
  double quantile(double p) const;
  /// Gaussian density; throws for discrete grids.
  double pdf(double x) const;
  /// [mean - w*std, mean + w*std] for Gaussians, [min point, max point] for grids.
  std::pair<double, double> window(double halfwidth_sigmas) const;

  std::string describe() const;
  bool operator==(const Environment&) const = default;

 private:
  explicit Environment(std::variant<Gaussian, DiscreteGrid> v) : v_(std::move(v)) {}
  std::variant<Gaussian, DiscreteGrid> v_;
};

// Binary mechanisms: class 1 is the positive event, ties go to class 0.
struct Threshold {
  double theta = 0.0;  // class 1 iff x > theta; +inf means "never"
  bool operator==(const Threshold&) const = default;
};
struct Interval {
  double a = 0.0;  // class 1 iff a < x <= b
  double b = 1.0;
  bool operator==(const Interval&) const = default;
};
struct Sigmoid {
  double slope = 1.0;  // P(1|x) = logistic(slope*x + bias)
  double bias = 0.0;
  bool operator==(const Sigmoid&) const = default;
};
struct Probit {
  double kappa = 1.0;  // P(1|x) = Phi(kappa*x + bias)
  double bias = 0.0;
  bool operator==(const Probit&) const = default;
};
struct SymmetricNoise {
  std::variant<Threshold, Interval> base;
  double epsilon = 0.0;  // flip probability, in [0, 0.5]
  bool operator==(const SymmetricNoise&) const = default;
};
struct Tabular {
  std::vector<double> grid;   // strictly increasing
  std::vector<double> probs;  // grid.size() x classes, row-major
  int classes = 2;
  bool operator==(const Tabular&) const = default;
};

/// A conditional label distribution P(Y | X = x) over `class_count()` classes.
class Labeler {
 public:
  using Variant = std::variant<Threshold, Interval, Sigmoid, Probit, SymmetricNoise, Tabular>;

  static Labeler threshold(double theta);
  static Labeler interval(double a, double b);
  static Labeler sigmoid(double slope, double bias);
  static Labeler probit(double kappa, double bias);
  static Labeler noisy(const Labeler& base, double epsilon);
  static Labeler tabular(std::vector<double> grid, std::vector<std::vector<double>> rows);

  const Variant& variant() const { return v_; }
  int class_count() const;
  bool is_deterministic() const;
  bool is_binary() const { return class_count() == 2; }

  /// P(Y = 1 | x) for binary labelers.
  double prob_one(double x) const;
  /// Full conditional vector; Tabular throws off-grid.
  std::vector<double> conditional(double x) const;
  void conditional(double x, std::span<double> out) const;
  /// Points where the conditional jumps (deterministic boundaries).
  std::vector<double> breakpoints() const;
  /// Grid of definition for Tabular labelers, empty otherwise.
  std::span<const double> support_grid() const;

  std::string describe() const;
  bool operator==(const Labeler&) const = default;

 private:
  explicit Labeler(Variant v) : v_(std::move(v)) {}
  Variant v_;
};

/// Standard normal CDF.
double normal_cdf(double z);
/// Standard normal quantile.
double normal_quantile(double p);
double logistic(double z);

/// Half-L1 distance between two probability vectors.
double tv_discrete(std::span<const double> p, std::span<const double> q);

double tv_env(const Environment& e1, const Environment& e2, const QuadratureConfig& cfg = {});
/// Half-L1 integral between two Gaussians by quadrature, bypassing the
/// equal-variance closed form.
double tv_gaussian_quadrature(const Gaussian& g1, const Gaussian& g2, const QuadratureConfig& cfg);

double conditional_tv(const Labeler& l1, const Labeler& l2, double x);

/// E_env[conditional_tv(l1, l2, X)]. Deterministic pairs go through
/// disagreement_mass; everything else is integrated numerically.
double expected_conditional_tv(const Environment& env, const Labeler& l1, const Labeler& l2,
                               const QuadratureConfig& cfg = {});

/// Mass of {x : l1(x) != l2(x)} for deterministic labelers, computed from the
/// environment CDF. Throws for non-deterministic labelers.
double disagreement_mass(const Environment& env, const Labeler& l1, const Labeler& l2);

struct Domain {
  double lo = -4.0;
  double hi = 4.0;
};

/// Grid maximum of conditional_tv with one refinement pass around the
/// argmax. A lower estimate of the true supremum; exact for Tabular labelers
/// (maximum over their grid points inside the domain).
double sup_conditional_tv(const Labeler& l1, const Labeler& l2, Domain domain, int grid_n = 2048);

double joint_tv_exact(const Environment& e1, const Labeler& l1, const Environment& e2,
                      const Labeler& l2, const QuadratureConfig& cfg = {});

/// Clamp to [0, 1]; values further than `slack` outside are a logic error.
double clamp_unit(double v);

}  // namespace credal
