#pragma once

// Empirical diameter estimators for the pure labeling regime, noisy-annotator
// closed forms, Hoeffding radii and certificate assembly.

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "credal/annotations.hpp"
#include "credal/kernels.hpp"

namespace credal {

struct DisagreementMatrix {
  std::size_t n = 0;
  int k = 0;
  LabelKind kind = LabelKind::hard;
  std::vector<double> values;  // k x k, row-major, symmetric, zero diagonal
  double eta_hat = 0.0;
  std::pair<int, int> argmax{0, 1};  // first maximum in (j, j') order

  double at(int j, int l) const { return values[static_cast<std::size_t>(j * k + l)]; }
};

DisagreementMatrix empirical_disagreement_hard(const AnnotationTable& table, Exec exec = Exec::parallel);
DisagreementMatrix empirical_disagreement_soft(const AnnotationTable& table, Exec exec = Exec::parallel);
/// Dispatches on the table kind.
DisagreementMatrix empirical_disagreement(const AnnotationTable& table, Exec exec = Exec::parallel);

DisagreementMatrix empirical_disagreement_hard(std::span<const AnnotatedSample> samples, int classes);
DisagreementMatrix empirical_disagreement_soft(std::span<const AnnotatedSample> samples, int classes);

struct NoisyClosedForm {
  double eta_star = 0.0;  // max_{j<j'} e_j + e_j' - 2 e_j e_j'
  double bound = 0.0;     // 2 e_max - 2 e_max^2
};
/// Binary symmetric annotators over a shared ground truth.
NoisyClosedForm noisy_closed_form(std::span<const double> epsilons);

/// sqrt(ln(k(k-1)/delta) / (2n)); not clamped.
double hoeffding_epsilon(std::size_t n, int k, double delta);
/// Smallest n with hoeffding_epsilon(n, k, delta) <= epsilon.
std::size_t required_samples(double epsilon, int k, double delta);

enum class Regime { exact_hard_deterministic, exact_soft, conservative_stochastic_hard, closed_form_noisy };
std::string to_string(Regime r);
Regime regime_from_string(const std::string& s);

struct Certificate {
  double eta_hat = 0.0;
  double epsilon = 0.0;
  double delta = 0.05;
  std::size_t n = 0;
  int k = 0;
  Regime regime = Regime::exact_hard_deterministic;
  double penalty_upper = 0.0;  // eta_hat + epsilon
  std::optional<double> eps_star_input;
  /// eps_star_input + penalty_upper when eps_star is given.
  std::optional<double> total_bound;
  /// True when eta_hat over-estimates the diameter rather than estimating it.
  bool conservative() const { return regime == Regime::conservative_stochastic_hard; }
};

Certificate certificate(const DisagreementMatrix& m, double delta, Regime regime,
                        std::optional<double> eps_star = std::nullopt);

}  // namespace credal
