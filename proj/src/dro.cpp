#include "credal/dro.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "credal/parallel.hpp"
#include "credal/synthgen.hpp"

namespace credal {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void require_binary(const CredalSpec& spec) {
  if (spec.class_count() != 2) throw std::invalid_argument("min-max training needs a binary credal set");
}

// E_env[f(x)] for a bounded integrand with jumps at `breaks`.
double env_expectation(const Environment& env, const std::function<double(double)>& f,
                       std::span<const double> breaks, const QuadratureConfig& cfg) {
  if (!env.is_gaussian()) {
    const auto& d = env.as_discrete();
    double acc = 0.0;
    for (std::size_t k = 0; k < d.points.size(); ++k)
      if (d.weights[k] > 0.0) acc += d.weights[k] * f(d.points[k]);
    return acc;
  }
  const auto [lo, hi] = env.window(cfg.domain_halfwidth_sigmas);
  return quad::integrate_piecewise([&](double x) { return env.pdf(x) * f(x); }, lo, hi, breaks, cfg);
}

// Logit of the soft decision and its parameter derivatives.
struct SoftDecision {
  double z = 0.0;
  double dz[2] = {0.0, 0.0};
};

SoftDecision soft_decision(const Hypothesis& h, double smoothing, double x) {
  return std::visit(overloaded{[&](const ThresholdClassifier& t) {
                                 SoftDecision d;
                                 const double o = static_cast<double>(t.orientation);
                                 d.z = o * (x - t.theta) / smoothing;
                                 d.dz[0] = -o / smoothing;
                                 return d;
                               },
                               [&](const LinearLogistic& l) {
                                 SoftDecision d;
                                 d.z = l.weight * x + l.bias;
                                 d.dz[0] = x;
                                 d.dz[1] = 1.0;
                                 return d;
                               }},
                    h);
}

std::vector<double> hypothesis_breaks(const Hypothesis& h) {
  return std::visit(overloaded{[](const ThresholdClassifier& t) { return std::vector<double>{t.theta}; },
                               [](const LinearLogistic& l) {
                                 if (l.weight == 0.0) return std::vector<double>{};
                                 return std::vector<double>{-l.bias / l.weight};
                               }},
                    h);
}

Hypothesis initial_hypothesis(const TrainConfig& cfg) {
  auto rng = GenSeed{cfg.seed, 0}.engine();
  const double u = 2.0 * draw_unit(rng) - 1.0;
  if (cfg.family == HypothesisFamily::threshold) return ThresholdClassifier{u, cfg.orientation};
  return LinearLogistic{static_cast<double>(cfg.orientation), -static_cast<double>(cfg.orientation) * u};
}

// Gaussian environments replaced by the empirical law of seeded draws.
CredalSpec empirical_spec(const CredalSpec& spec, std::size_t n, std::uint64_t seed) {
  std::vector<Environment> envs;
  for (std::size_t i = 0; i < spec.env_count(); ++i) {
    const auto& e = spec.env(i);
    if (!e.is_gaussian()) {
      envs.push_back(e);
      continue;
    }
    auto rng = GenSeed{seed, 1000 + i}.engine();
    std::vector<double> xs(n);
    for (auto& x : xs) x = draw_x(e, rng);
    std::sort(xs.begin(), xs.end());
    std::vector<double> pts, w;
    for (double x : xs) {
      if (!pts.empty() && pts.back() == x) {
        w.back() += 1.0;
      } else {
        pts.push_back(x);
        w.push_back(1.0);
      }
    }
    double total = 0.0;
    for (auto& v : w) total += (v /= static_cast<double>(n));
    w.back() += 1.0 - total;
    envs.push_back(Environment::discrete(std::move(pts), std::move(w)));
  }
  return CredalSpec(std::move(envs), spec.labelers());
}

}  // namespace

std::string describe(const Hypothesis& h) {
  std::ostringstream os;
  os.precision(17);
  std::visit(overloaded{[&](const ThresholdClassifier& t) {
                          os << "threshold(theta=" << t.theta << ", orientation=" << t.orientation << ")";
                        },
                        [&](const LinearLogistic& l) {
                          os << "linear_logistic(weight=" << l.weight << ", bias=" << l.bias << ")";
                        }},
             h);
  return os.str();
}

std::vector<double> parameters(const Hypothesis& h) {
  return std::visit(overloaded{[](const ThresholdClassifier& t) { return std::vector<double>{t.theta}; },
                               [](const LinearLogistic& l) { return std::vector<double>{l.weight, l.bias}; }},
                    h);
}

Hypothesis with_parameters(const Hypothesis& h, std::span<const double> p) {
  return std::visit(overloaded{[&](const ThresholdClassifier& t) -> Hypothesis {
                                 if (p.size() != 1) throw std::invalid_argument("threshold has one parameter");
                                 return ThresholdClassifier{p[0], t.orientation};
                               },
                               [&](const LinearLogistic&) -> Hypothesis {
                                 if (p.size() != 2) throw std::invalid_argument("linear logistic has two parameters");
                                 return LinearLogistic{p[0], p[1]};
                               }},
                    h);
}

Labeler decision_labeler(const Hypothesis& h) {
  return std::visit(overloaded{[](const ThresholdClassifier& t) {
                                 if (t.orientation != 1 && t.orientation != -1)
                                   throw std::invalid_argument("orientation must be +1 or -1");
                                 if (!std::isfinite(t.theta)) throw std::invalid_argument("threshold must be finite");
                                 return t.orientation == 1 ? Labeler::threshold(t.theta)
                                                           : Labeler::interval(-kInf, t.theta);
                               },
                               [](const LinearLogistic& l) {
                                 if (!std::isfinite(l.weight) || !std::isfinite(l.bias))
                                   throw std::invalid_argument("logistic parameters must be finite");
                                 if (l.weight == 0.0)
                                   return l.bias > 0.0 ? Labeler::interval(-kInf, kInf) : Labeler::threshold(kInf);
                                 const double cut = -l.bias / l.weight;
                                 return l.weight > 0.0 ? Labeler::threshold(cut) : Labeler::interval(-kInf, cut);
                               }},
                    h);
}

WorldRisk make_world_risk(std::size_t n_env, std::size_t n_lab, std::vector<double> risks) {
  if (risks.size() != n_env * n_lab || risks.empty()) throw std::invalid_argument("risk matrix has the wrong size");
  WorldRisk r;
  r.n_env = n_env;
  r.n_lab = n_lab;
  r.risks = std::move(risks);
  std::size_t best = 0;
  for (std::size_t k = 1; k < r.risks.size(); ++k)
    if (r.risks[k] > r.risks[best]) best = k;
  r.worst_world = {best / n_lab, best % n_lab};
  r.worst_value = r.risks[best];
  return r;
}

WorldRisk world_risks(const Hypothesis& h, const CredalSpec& spec, const QuadratureConfig& cfg) {
  require_binary(spec);
  const Labeler dec = decision_labeler(h);
  const std::size_t w = spec.vertex_count();
  std::vector<double> risks(w);
  ExceptionSlot slot;
  const auto nw = static_cast<std::ptrdiff_t>(w);
#pragma omp parallel for schedule(dynamic, 1) if (nw > 1)
  for (std::ptrdiff_t k = 0; k < nw; ++k) {
    slot.run([&] {
      const auto v = spec.vertex(static_cast<std::size_t>(k));
      risks[static_cast<std::size_t>(k)] = expected_conditional_tv(spec.env(v.env), dec, spec.labeler(v.lab), cfg);
    });
  }
  slot.rethrow();
  return make_world_risk(spec.env_count(), spec.labeler_count(), std::move(risks));
}

LseResult lse_objective(std::span<const double> risks, double tau) {
  if (!(tau > 0.0) || !std::isfinite(tau)) throw std::invalid_argument("lse tau must be positive");
  if (risks.empty()) throw std::invalid_argument("lse over an empty set of worlds");
  const double m = *std::max_element(risks.begin(), risks.end());
  LseResult out;
  out.weights.resize(risks.size());
  double sum = 0.0;
  for (std::size_t k = 0; k < risks.size(); ++k) {
    out.weights[k] = std::exp((risks[k] - m) / tau);
    sum += out.weights[k];
  }
  for (auto& v : out.weights) v /= sum;
  out.value = m + tau * std::log(sum);
  return out;
}

SmoothedRisks smoothed_risks(const Hypothesis& h, const CredalSpec& spec, double smoothing,
                             const QuadratureConfig& cfg) {
  require_binary(spec);
  if (!(smoothing > 0.0)) throw std::invalid_argument("smoothing must be positive");
  const std::size_t dim = parameters(h).size();
  const std::size_t w = spec.vertex_count();
  SmoothedRisks out;
  out.values.resize(w);
  out.grads.assign(w, std::vector<double>(dim, 0.0));
  const auto hb = hypothesis_breaks(h);

  ExceptionSlot slot;
  const auto nw = static_cast<std::ptrdiff_t>(w);
#pragma omp parallel for schedule(dynamic, 1) if (nw > 1)
  for (std::ptrdiff_t k = 0; k < nw; ++k) {
    slot.run([&] {
      const auto v = spec.vertex(static_cast<std::size_t>(k));
      const Labeler& lab = spec.labeler(v.lab);
      auto breaks = lab.breakpoints();
      breaks.insert(breaks.end(), hb.begin(), hb.end());
      std::sort(breaks.begin(), breaks.end());
      const auto& env = spec.env(v.env);
      const auto s_of = [&](double x) { return logistic(soft_decision(h, smoothing, x).z); };
      out.values[static_cast<std::size_t>(k)] = env_expectation(
          env,
          [&](double x) {
            const double p1 = lab.prob_one(x);
            const double s = s_of(x);
            return p1 * (1.0 - s) + (1.0 - p1) * s;
          },
          breaks, cfg);
      for (std::size_t d = 0; d < dim; ++d) {
        out.grads[static_cast<std::size_t>(k)][d] = env_expectation(
            env,
            [&](double x) {
              const auto sd = soft_decision(h, smoothing, x);
              const double s = logistic(sd.z);
              return (1.0 - 2.0 * lab.prob_one(x)) * s * (1.0 - s) * sd.dz[d];
            },
            breaks, cfg);
      }
    });
  }
  slot.rethrow();
  return out;
}

std::string to_string(TrainMode m) { return m == TrainMode::greedy ? "greedy" : "lse"; }

TrainMode train_mode_from_string(const std::string& s) {
  if (s == "greedy") return TrainMode::greedy;
  if (s == "lse") return TrainMode::lse;
  throw std::invalid_argument("unknown training mode '" + s + "'");
}

void TrainConfig::validate() const {
  if (mode == TrainMode::lse && !tau) throw std::invalid_argument("lse mode requires tau");
  if (mode == TrainMode::greedy && tau) throw std::invalid_argument("tau is only meaningful in lse mode");
  if (tau && !(*tau > 0.0)) throw std::invalid_argument("tau must be positive");
  if (!(step_size > 0.0)) throw std::invalid_argument("step_size must be positive");
  if (!(backoff > 0.0 && backoff < 1.0)) throw std::invalid_argument("backoff must lie in (0, 1)");
  if (steps < 0) throw std::invalid_argument("steps must be non-negative");
  if (loss == TrainLoss::zero_one)
    throw std::invalid_argument("the 0-1 loss is evaluation only; train with the logistic surrogate");
  if (orientation != 1 && orientation != -1) throw std::invalid_argument("orientation must be +1 or -1");
  if (!(smoothing > 0.0)) throw std::invalid_argument("smoothing must be positive");
}

SurrogateValue surrogate_objective(const Hypothesis& h, const CredalSpec& spec, const TrainConfig& cfg,
                                   const QuadratureConfig& quad) {
  const auto sr = smoothed_risks(h, spec, cfg.smoothing, quad);
  SurrogateValue out;
  const std::size_t dim = parameters(h).size();
  out.grad.assign(dim, 0.0);
  if (cfg.mode == TrainMode::greedy) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < sr.values.size(); ++k)
      if (sr.values[k] > sr.values[best]) best = k;
    out.value = sr.values[best];
    out.grad = sr.grads[best];
  } else {
    const auto lse = lse_objective(sr.values, *cfg.tau);
    out.value = lse.value;
    for (std::size_t d = 0; d < dim; ++d) {
      // Kahan summation keeps the weighted sum independent of world count.
      double sum = 0.0, comp = 0.0;
      for (std::size_t k = 0; k < sr.values.size(); ++k) {
        const double y = lse.weights[k] * sr.grads[k][d] - comp;
        const double t = sum + y;
        comp = (t - sum) - y;
        sum = t;
      }
      out.grad[d] = sum;
    }
  }
  return out;
}

TrainResult train(const CredalSpec& input_spec, const TrainConfig& cfg, const QuadratureConfig& quad) {
  cfg.validate();
  require_binary(input_spec);
  const CredalSpec spec = cfg.sample_size > 0 ? empirical_spec(input_spec, cfg.sample_size, cfg.seed) : input_spec;

  TrainResult res{initial_hypothesis(cfg), {}};
  const auto record = [&](const Hypothesis& h) {
    auto wr = world_risks(h, spec, quad);
    if (cfg.mode == TrainMode::lse) {
      const auto lse = lse_objective(wr, *cfg.tau);
      wr.lse_value = lse.value;
      wr.weights = lse.weights;
    }
    res.trace.push_back(std::move(wr));
  };
  record(res.h);

  auto cur = surrogate_objective(res.h, spec, cfg, quad);
  int rising = 0;
  for (int step = 0; step < cfg.steps; ++step) {
    const auto p = parameters(res.h);
    double eta = cfg.step_size;
    bool accepted = false;
    for (int tries = 0; tries < 40 && !accepted; ++tries, eta *= cfg.backoff) {
      std::vector<double> q(p.size());
      for (std::size_t d = 0; d < p.size(); ++d) q[d] = p[d] - eta * cur.grad[d];
      const auto cand = with_parameters(res.h, q);
      auto next = surrogate_objective(cand, spec, cfg, quad);
      if (next.value <= cur.value) {
        res.h = cand;
        cur = std::move(next);
        accepted = true;
      }
    }
    if (!accepted) break;  // no descent direction left at machine resolution
    const double before = res.trace.back().worst_value;
    record(res.h);
    // Changes below the quadrature tolerance are not counted as increases.
    rising = res.trace.back().worst_value > before + quad.abs_tol ? rising + 1 : 0;
    if (rising >= 50)
      throw TrainDivergence("worst-world risk increased for 50 consecutive steps", std::move(res.trace));
  }
  return res;
}

namespace {

template <class Score>
MinimaxSolution grid_search(const CredalSpec& spec, std::span<const double> grid, const QuadratureConfig& cfg,
                            Score score) {
  require_binary(spec);
  if (grid.empty()) throw std::invalid_argument("theta grid is empty");
  MinimaxSolution best;
  best.worst_value = kInf;
  for (int o : {1, -1}) {
    for (double t : grid) {
      const ThresholdClassifier h{t, o};
      const double v = score(world_risks(h, spec, cfg));
      if (v < best.worst_value) {
        best.worst_value = v;
        best.h = h;
      }
    }
  }
  return best;
}

}  // namespace

MinimaxSolution brute_force_minimax(const CredalSpec& spec, std::span<const double> grid,
                                    const QuadratureConfig& cfg) {
  return grid_search(spec, grid, cfg, [](const WorldRisk& r) { return r.worst_value; });
}

MinimaxSolution brute_force_average(const CredalSpec& spec, std::span<const double> grid,
                                    const QuadratureConfig& cfg) {
  return grid_search(spec, grid, cfg, [](const WorldRisk& r) {
    double s = 0.0;
    for (double v : r.risks) s += v;
    return s / static_cast<double>(r.risks.size());
  });
}

}  // namespace credal
