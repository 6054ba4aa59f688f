#include "credal/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace credal {
namespace {

void finish(DisagreementMatrix& m) {
  m.eta_hat = 0.0;
  m.argmax = {0, m.k > 1 ? 1 : 0};
  for (int j = 0; j < m.k; ++j)
    for (int l = j + 1; l < m.k; ++l)
      if (m.at(j, l) > m.eta_hat) {
        m.eta_hat = m.at(j, l);
        m.argmax = {j, l};
      }
}

void require_nonempty(const AnnotationTable& t) {
  if (t.empty()) throw std::invalid_argument("empirical disagreement needs at least one sample");
  if (t.annotators() < 2) throw std::invalid_argument("empirical disagreement needs at least two annotators");
}

}  // namespace

DisagreementMatrix empirical_disagreement_hard(const AnnotationTable& t, Exec exec) {
  require_nonempty(t);
  if (t.kind() != LabelKind::hard) throw std::invalid_argument("expected hard labels");
  const auto counts = exec == Exec::serial ? kernels::disagreement_counts_serial(t)
                                           : kernels::disagreement_counts_omp(t);
  DisagreementMatrix m;
  m.n = t.size();
  m.k = t.annotators();
  m.kind = LabelKind::hard;
  m.values.resize(counts.size());
  const double n = static_cast<double>(m.n);
  for (std::size_t c = 0; c < counts.size(); ++c) m.values[c] = static_cast<double>(counts[c]) / n;
  finish(m);
  return m;
}

DisagreementMatrix empirical_disagreement_soft(const AnnotationTable& t, Exec exec) {
  require_nonempty(t);
  if (t.kind() != LabelKind::soft) throw std::invalid_argument("expected soft labels");
  const auto sums = exec == Exec::serial ? kernels::soft_l1_sums_serial(t) : kernels::soft_l1_sums_omp(t);
  DisagreementMatrix m;
  m.n = t.size();
  m.k = t.annotators();
  m.kind = LabelKind::soft;
  m.values.resize(sums.size());
  const double n = static_cast<double>(m.n);
  for (std::size_t c = 0; c < sums.size(); ++c) m.values[c] = clamp_unit(sums[c] / n);
  finish(m);
  return m;
}

DisagreementMatrix empirical_disagreement(const AnnotationTable& t, Exec exec) {
  return t.kind() == LabelKind::hard ? empirical_disagreement_hard(t, exec) : empirical_disagreement_soft(t, exec);
}

DisagreementMatrix empirical_disagreement_hard(std::span<const AnnotatedSample> samples, int classes) {
  const auto t = AnnotationTable::from_samples(samples, classes);
  return empirical_disagreement_hard(t);
}

DisagreementMatrix empirical_disagreement_soft(std::span<const AnnotatedSample> samples, int classes) {
  const auto t = AnnotationTable::from_samples(samples, classes);
  return empirical_disagreement_soft(t);
}

NoisyClosedForm noisy_closed_form(std::span<const double> eps) {
  if (eps.size() < 2) throw std::invalid_argument("noisy_closed_form needs at least two annotators");
  for (double e : eps)
    if (!(e >= 0.0 && e <= 0.5)) throw std::invalid_argument("annotator flip rate must lie in [0, 0.5]");
  NoisyClosedForm out;
  for (std::size_t j = 0; j < eps.size(); ++j)
    for (std::size_t l = j + 1; l < eps.size(); ++l)
      out.eta_star = std::max(out.eta_star, eps[j] + eps[l] - 2.0 * eps[j] * eps[l]);
  const double em = *std::max_element(eps.begin(), eps.end());
  out.bound = 2.0 * em - 2.0 * em * em;
  return out;
}

double hoeffding_epsilon(std::size_t n, int k, double delta) {
  if (n < 1) throw std::invalid_argument("hoeffding_epsilon: n must be at least 1");
  if (k < 2) throw std::invalid_argument("hoeffding_epsilon: k must be at least 2");
  if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("hoeffding_epsilon: delta must lie in (0, 1)");
  const double kk = static_cast<double>(k);
  return std::sqrt(std::log(kk * (kk - 1.0) / delta) / (2.0 * static_cast<double>(n)));
}

std::size_t required_samples(double epsilon, int k, double delta) {
  if (!(epsilon > 0.0)) throw std::invalid_argument("required_samples: epsilon must be positive");
  if (k < 2) throw std::invalid_argument("required_samples: k must be at least 2");
  if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("required_samples: delta must lie in (0, 1)");
  if (epsilon >= 1.0) return 1;
  const double kk = static_cast<double>(k);
  auto n = static_cast<std::size_t>(std::ceil(std::log(kk * (kk - 1.0) / delta) / (2.0 * epsilon * epsilon)));
  n = std::max<std::size_t>(n, 1);
  // Guard the ceiling against rounding in either direction.
  while (n > 1 && hoeffding_epsilon(n - 1, k, delta) <= epsilon) --n;
  while (hoeffding_epsilon(n, k, delta) > epsilon) ++n;
  return n;
}

std::string to_string(Regime r) {
  switch (r) {
    case Regime::exact_hard_deterministic: return "exact_hard_deterministic";
    case Regime::exact_soft: return "exact_soft";
    case Regime::conservative_stochastic_hard: return "conservative_stochastic_hard";
    case Regime::closed_form_noisy: return "closed_form_noisy";
  }
  return "?";
}

Regime regime_from_string(const std::string& s) {
  for (auto r : {Regime::exact_hard_deterministic, Regime::exact_soft, Regime::conservative_stochastic_hard,
                 Regime::closed_form_noisy})
    if (to_string(r) == s) return r;
  throw std::invalid_argument("unknown regime '" + s + "'");
}

Certificate certificate(const DisagreementMatrix& m, double delta, Regime regime, std::optional<double> eps_star) {
  if (m.k < 2 || m.n < 1 || m.values.size() != static_cast<std::size_t>(m.k * m.k))
    throw std::invalid_argument("certificate: malformed disagreement matrix");
  const bool soft_regime = regime == Regime::exact_soft;
  if (soft_regime != (m.kind == LabelKind::soft))
    throw std::invalid_argument("certificate: regime " + to_string(regime) + " does not match " +
                                to_string(m.kind) + "-label matrix");
  if (eps_star && !(*eps_star >= 0.0)) throw std::invalid_argument("certificate: eps_star must be non-negative");
  Certificate c;
  c.eta_hat = m.eta_hat;
  c.epsilon = hoeffding_epsilon(m.n, m.k, delta);
  c.delta = delta;
  c.n = m.n;
  c.k = m.k;
  c.regime = regime;
  c.penalty_upper = c.eta_hat + c.epsilon;
  c.eps_star_input = eps_star;
  if (eps_star) c.total_bound = *eps_star + c.penalty_upper;
  return c;
}

}  // namespace credal
