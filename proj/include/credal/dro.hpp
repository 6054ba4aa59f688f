#pragma once

// Finite min-max learning over the worlds of a credal set: per-world risks,
// worst-world descent, the log-sum-exp surrogate and a grid oracle.

#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "credal/credal_set.hpp"

namespace credal {

/// Predicts class 1 iff orientation * (x - theta) > 0 (ties go to class 0).
struct ThresholdClassifier {
  double theta = 0.0;
  int orientation = 1;
};
/// Predicts class 1 iff weight * x + bias > 0.
struct LinearLogistic {
  double weight = 1.0;
  double bias = 0.0;
};
using Hypothesis = std::variant<ThresholdClassifier, LinearLogistic>;

std::string describe(const Hypothesis& h);
std::vector<double> parameters(const Hypothesis& h);
Hypothesis with_parameters(const Hypothesis& h, std::span<const double> params);

/// The hypothesis' decision rule as a deterministic labeler.
Labeler decision_labeler(const Hypothesis& h);

struct WorldRisk {
  std::size_t n_env = 0;
  std::size_t n_lab = 0;
  std::vector<double> risks;  // n_env x n_lab, row-major
  VertexIndex worst_world;
  double worst_value = 0.0;
  std::optional<double> lse_value;
  std::optional<std::vector<double>> weights;

  double at(std::size_t i, std::size_t j) const { return risks[i * n_lab + j]; }
};

/// Builds a WorldRisk from a risk matrix, filling the lexicographic worst world.
WorldRisk make_world_risk(std::size_t n_env, std::size_t n_lab, std::vector<double> risks);

/// Exact 0-1 risk of h in every world.
WorldRisk world_risks(const Hypothesis& h, const CredalSpec& spec, const QuadratureConfig& cfg = {});

struct LseResult {
  double value = 0.0;
  std::vector<double> weights;  // softmax(risks / tau)
};
/// tau * log sum exp(risk / tau), evaluated with max subtraction.
LseResult lse_objective(std::span<const double> risks, double tau);
inline LseResult lse_objective(const WorldRisk& r, double tau) { return lse_objective(r.risks, tau); }

/// Smoothed 0-1 risks E[p1 (1 - s) + (1 - p1) s] with a logistic soft
/// decision s, and their gradients in the hypothesis parameters.
struct SmoothedRisks {
  std::vector<double> values;              // per world, flat order
  std::vector<std::vector<double>> grads;  // per world
};
SmoothedRisks smoothed_risks(const Hypothesis& h, const CredalSpec& spec, double smoothing,
                             const QuadratureConfig& cfg = {});

enum class TrainMode { greedy, lse };
enum class TrainLoss { zero_one, logistic };
enum class HypothesisFamily { threshold, linear_logistic };
std::string to_string(TrainMode m);
TrainMode train_mode_from_string(const std::string& s);

struct TrainConfig {
  TrainMode mode = TrainMode::greedy;
  std::optional<double> tau;  // required iff mode == lse
  double step_size = 0.1;
  double backoff = 0.5;
  int steps = 200;
  std::uint64_t seed = 0;
  TrainLoss loss = TrainLoss::logistic;  // zero_one is evaluation only
  HypothesisFamily family = HypothesisFamily::threshold;
  int orientation = 1;
  double smoothing = 0.05;  // width of the logistic soft threshold
  /// 0 trains on population risks; otherwise every Gaussian environment is
  /// replaced by the empirical law of this many seeded draws.
  std::size_t sample_size = 0;

  void validate() const;
};

struct TrainResult {
  Hypothesis h;
  std::vector<WorldRisk> trace;  // 0-1 risks at every accepted state, first entry initial
};

class TrainDivergence : public std::runtime_error {
 public:
  TrainDivergence(const std::string& what, std::vector<WorldRisk> trace)
      : std::runtime_error(what), trace_(std::move(trace)) {}
  const std::vector<WorldRisk>& trace() const { return trace_; }

 private:
  std::vector<WorldRisk> trace_;
};

TrainResult train(const CredalSpec& spec, const TrainConfig& cfg, const QuadratureConfig& quad = {});

/// Objective the trainer minimises: max of smoothed risks (greedy) or their
/// LSE (lse mode); gradient is the worst world's or the softmax-weighted sum.
struct SurrogateValue {
  double value = 0.0;
  std::vector<double> grad;
};
SurrogateValue surrogate_objective(const Hypothesis& h, const CredalSpec& spec, const TrainConfig& cfg,
                                   const QuadratureConfig& quad = {});

struct MinimaxSolution {
  ThresholdClassifier h;
  double worst_value = 0.0;
};
/// Exhaustive min over the grid (both orientations) of the max 0-1 risk.
MinimaxSolution brute_force_minimax(const CredalSpec& spec, std::span<const double> theta_grid,
                                    const QuadratureConfig& cfg = {});

/// Average-risk (ERM over the uniform mixture of worlds) minimiser on a grid;
/// worst_value holds the minimised average risk.
MinimaxSolution brute_force_average(const CredalSpec& spec, std::span<const double> theta_grid,
                                    const QuadratureConfig& cfg = {});

}  // namespace credal
