#pragma once

// The structured credal set: the convex hull of every (environment, labeler)
// product measure, plus the distance bounds and diameters defined on it.

#include <compare>
#include <cstddef>
#include <optional>
#include <utility>
#include <vector>

#include "credal/measures.hpp"

namespace credal {

/// A world (i, j): environment i paired with labeler j.
struct VertexIndex {
  std::size_t env = 0;
  std::size_t lab = 0;
  auto operator<=>(const VertexIndex&) const = default;
};

struct VertexPair {
  VertexIndex a;
  VertexIndex b;
  auto operator<=>(const VertexPair&) const = default;
};

class CredalSpec {
 public:
  /// Throws if either list is empty or the labelers disagree on the class count.
  CredalSpec(std::vector<Environment> environments, std::vector<Labeler> labelers);

  std::size_t env_count() const { return envs_.size(); }
  std::size_t labeler_count() const { return labs_.size(); }
  std::size_t vertex_count() const { return envs_.size() * labs_.size(); }
  int class_count() const { return classes_; }

  const Environment& env(std::size_t i) const { return envs_.at(i); }
  const Labeler& labeler(std::size_t j) const { return labs_.at(j); }
  const std::vector<Environment>& environments() const { return envs_; }
  const std::vector<Labeler>& labelers() const { return labs_; }

  /// Row-major flattening: flat = env * labeler_count + lab.
  std::size_t flat(VertexIndex v) const;
  VertexIndex vertex(std::size_t flat) const;
  void check(VertexIndex v) const;

  /// Every unordered pair of distinct vertices, lexicographic.
  std::vector<VertexPair> distinct_pairs() const;

 private:
  std::vector<Environment> envs_;
  std::vector<Labeler> labs_;
  int classes_ = 2;
};

/// Distance bounds between two worlds.
///   cov_dist       d_TV between the two environments
///   exp_dis_a/b    expected labeler disagreement under each environment
struct PairwiseBounds {
  VertexPair pair;
  double cov_dist = 0.0;
  double exp_dis_a = 0.0;
  double exp_dis_b = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  std::optional<double> exact;
};

PairwiseBounds pairwise_bounds(const CredalSpec& spec, VertexIndex a, VertexIndex b,
                               const QuadratureConfig& cfg = {}, bool with_exact = false);

struct ComponentDiameters {
  double eta_x = 0.0;     // largest covariate TV
  double eta_star = 0.0;  // largest expected labeler disagreement
  double eta_bar = 0.0;   // largest pointwise labeler disagreement
};

/// Union of mean +/- w*std over Gaussian environments and of grid extents
/// over discrete ones.
Domain default_sup_domain(const CredalSpec& spec, const QuadratureConfig& cfg = {});

ComponentDiameters component_diameters(const CredalSpec& spec, const QuadratureConfig& cfg,
                                       Domain sup_domain);

struct DiameterReport {
  double eta_x = 0.0;
  double eta_star = 0.0;
  double eta_bar = 0.0;
  double eta_eff = 0.0;  // min(eta_star, (1 - eta_x) * eta_bar)
  double lower = 0.0;    // max(eta_x, eta_star)
  double upper = 0.0;    // eta_x + eta_eff, clamped to 1
  std::optional<double> exact;
  std::optional<VertexPair> argmax_pair;
  double abs_tol = 0.0;  // quadrature tolerance the numbers were computed with
};

DiameterReport diameter_bounds(const CredalSpec& spec, const QuadratureConfig& cfg,
                               Domain sup_domain, bool with_exact = false);
inline DiameterReport diameter_bounds(const CredalSpec& spec, const QuadratureConfig& cfg = {},
                                      bool with_exact = false) {
  return diameter_bounds(spec, cfg, default_sup_domain(spec, cfg), with_exact);
}

/// eps_star + report.upper: a certified upper bound on the robustness penalty.
double robust_penalty(const DiameterReport& report, double eps_star);

}  // namespace credal
