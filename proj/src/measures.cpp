#include "credal/measures.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include <boost/math/special_functions/erf.hpp>

namespace credal {
namespace {

constexpr double kSimplexTol = 1e-12;
constexpr double kInputSimplexTol = 1e-9;
constexpr double kInf = std::numeric_limits<double>::infinity();

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

void check_strictly_increasing(const std::vector<double>& v, const char* what) {
  require(!v.empty(), std::string(what) + " must be non-empty");
  for (std::size_t i = 0; i < v.size(); ++i) {
    require(std::isfinite(v[i]), std::string(what) + " must be finite");
    if (i > 0) require(v[i] > v[i - 1], std::string(what) + " must be strictly increasing");
  }
}

void check_simplex(std::span<const double> p, double tol, const char* what) {
  double sum = 0.0;
  for (double v : p) {
    require(std::isfinite(v) && v >= -tol, std::string(what) + ": negative or non-finite entry");
    sum += v;
  }
  require(std::abs(sum - 1.0) <= tol, std::string(what) + ": entries do not sum to 1");
}

// Index of x in a sorted grid, tolerant to representation noise.
std::optional<std::size_t> grid_index(std::span<const double> grid, double x) {
  auto it = std::lower_bound(grid.begin(), grid.end(), x);
  const auto close = [x](double g) { return std::abs(g - x) <= 1e-12 * std::max(1.0, std::abs(x)); };
  if (it != grid.end() && close(*it)) return static_cast<std::size_t>(it - grid.begin());
  if (it != grid.begin() && close(*(it - 1)))
    return static_cast<std::size_t>(it - grid.begin() - 1);
  return std::nullopt;
}

double gaussian_pdf(const Gaussian& g, double x) {
  const double z = (x - g.mean) / g.std;
  return std::exp(-0.5 * z * z) / (g.std * std::sqrt(2.0 * std::numbers::pi));
}

bool deterministic_base_value(const std::variant<Threshold, Interval>& base, double x) {
  return std::visit(overloaded{[x](const Threshold& t) { return x > t.theta; },
                               [x](const Interval& iv) { return iv.a < x && x <= iv.b; }},
                    base);
}

// Points where two Gaussian densities cross.
std::vector<double> density_crossings(const Gaussian& g1, const Gaussian& g2) {
  const double v1 = g1.std * g1.std;
  const double v2 = g2.std * g2.std;
  const double a = 0.5 / v2 - 0.5 / v1;
  const double b = g1.mean / v1 - g2.mean / v2;
  const double c = g2.mean * g2.mean / (2.0 * v2) - g1.mean * g1.mean / (2.0 * v1) +
                   std::log(g2.std / g1.std);
  if (std::abs(a) < 1e-14) {
    if (std::abs(b) < 1e-300) return {};
    return {-c / b};
  }
  const double disc = b * b - 4.0 * a * c;
  if (disc < 0.0) return {};
  const double s = std::sqrt(disc);
  return {(-b - s) / (2.0 * a), (-b + s) / (2.0 * a)};
}

void require_same_classes(const Labeler& l1, const Labeler& l2) {
  if (l1.class_count() != l2.class_count())
    throw std::invalid_argument("labelers have different class counts");
}

bool has_tabular(const Labeler& l) { return std::holds_alternative<Tabular>(l.variant()); }

std::vector<double> merged_breaks(const Labeler& l1, const Labeler& l2) {
  auto b = l1.breakpoints();
  auto b2 = l2.breakpoints();
  b.insert(b.end(), b2.begin(), b2.end());
  return b;
}

}  // namespace

// ---------------------------------------------------------------- scalars

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

double normal_quantile(double p) {
  require(p > 0.0 && p < 1.0, "normal_quantile: p must lie in (0,1)");
  return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * p);
}

double logistic(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double clamp_unit(double v) { return std::clamp(v, 0.0, 1.0); }

// ---------------------------------------------------------------- Environment

Environment Environment::gaussian(double mean, double std) {
  require(std::isfinite(mean), "Gaussian mean must be finite");
  require(std::isfinite(std) && std > 0.0, "Gaussian std must be positive and finite");
  return Environment(Gaussian{mean, std});
}

Environment Environment::discrete(std::vector<double> points, std::vector<double> weights) {
  check_strictly_increasing(points, "DiscreteGrid points");
  require(points.size() == weights.size(), "DiscreteGrid points/weights size mismatch");
  check_simplex(weights, kSimplexTol, "DiscreteGrid weights");
  for (double& w : weights) w = std::max(w, 0.0);
  return Environment(DiscreteGrid{std::move(points), std::move(weights)});
}

const Gaussian& Environment::as_gaussian() const {
  if (const auto* g = std::get_if<Gaussian>(&v_)) return *g;
  throw std::logic_error("environment is not Gaussian");
}

const DiscreteGrid& Environment::as_discrete() const {
  if (const auto* d = std::get_if<DiscreteGrid>(&v_)) return *d;
  throw std::logic_error("environment is not a discrete grid");
}

double Environment::cdf(double x) const {
  return std::visit(overloaded{[x](const Gaussian& g) {
                                 if (x == kInf) return 1.0;
                                 if (x == -kInf) return 0.0;
                                 return normal_cdf((x - g.mean) / g.std);
                               },
                               [x](const DiscreteGrid& d) {
                                 const auto end = std::upper_bound(d.points.begin(), d.points.end(), x);
                                 double acc = 0.0;
                                 for (auto it = d.points.begin(); it != end; ++it)
                                   acc += d.weights[static_cast<std::size_t>(it - d.points.begin())];
                                 return std::min(acc, 1.0);
                               }},
                    v_);
}

double Environment::mass(double a, double b) const {
  if (!(b > a)) return 0.0;
  if (const auto* g = std::get_if<Gaussian>(&v_)) {
    // Use the upper tail on the right half to avoid cancellation.
    if (a >= g->mean) {
      const auto upper = [g](double x) {
        return x == kInf ? 0.0 : 0.5 * std::erfc((x - g->mean) / (g->std * std::numbers::sqrt2));
      };
      return std::max(0.0, upper(a) - upper(b));
    }
  }
  return std::max(0.0, cdf(b) - cdf(a));
}

double Environment::quantile(double p) const {
  require(p >= 0.0 && p <= 1.0, "quantile level must lie in [0,1]");
  return std::visit(overloaded{[p](const Gaussian& g) {
                                 if (p == 0.0) return -kInf;
                                 if (p == 1.0) return kInf;
                                 return g.mean + g.std * normal_quantile(p);
                               },
                               [p](const DiscreteGrid& d) {
                                 double acc = 0.0;
                                 for (std::size_t i = 0; i < d.points.size(); ++i) {
                                   acc += d.weights[i];
                                   if (acc >= p - 1e-15) return d.points[i];
                                 }
                                 return d.points.back();
                               }},
                    v_);
}

double Environment::pdf(double x) const { return gaussian_pdf(as_gaussian(), x); }

std::pair<double, double> Environment::window(double halfwidth_sigmas) const {
  return std::visit(
      overloaded{[halfwidth_sigmas](const Gaussian& g) {
                   return std::pair{g.mean - halfwidth_sigmas * g.std, g.mean + halfwidth_sigmas * g.std};
                 },
                 [](const DiscreteGrid& d) { return std::pair{d.points.front(), d.points.back()}; }},
      v_);
}

std::string Environment::describe() const {
  std::ostringstream os;
  os.precision(6);
  std::visit(overloaded{[&os](const Gaussian& g) { os << "N(" << g.mean << "," << g.std << ")"; },
                        [&os](const DiscreteGrid& d) { os << "Grid[" << d.points.size() << "]"; }},
             v_);
  return os.str();
}

// ---------------------------------------------------------------- Labeler

Labeler Labeler::threshold(double theta) {
  require(!std::isnan(theta), "Threshold theta must not be NaN");
  return Labeler(Threshold{theta});
}

Labeler Labeler::interval(double a, double b) {
  require(!std::isnan(a) && !std::isnan(b), "Interval endpoints must not be NaN");
  require(a < b, "Interval requires a < b");
  return Labeler(Interval{a, b});
}

Labeler Labeler::sigmoid(double slope, double bias) {
  require(std::isfinite(slope) && std::isfinite(bias), "Sigmoid parameters must be finite");
  return Labeler(Sigmoid{slope, bias});
}

Labeler Labeler::probit(double kappa, double bias) {
  require(std::isfinite(kappa) && std::isfinite(bias), "Probit parameters must be finite");
  return Labeler(Probit{kappa, bias});
}

Labeler Labeler::noisy(const Labeler& base, double epsilon) {
  require(epsilon >= 0.0 && epsilon <= 0.5, "SymmetricNoise epsilon must lie in [0, 0.5]");
  if (const auto* t = std::get_if<Threshold>(&base.v_)) return Labeler(SymmetricNoise{*t, epsilon});
  if (const auto* iv = std::get_if<Interval>(&base.v_)) return Labeler(SymmetricNoise{*iv, epsilon});
  throw std::invalid_argument("SymmetricNoise base must be a Threshold or Interval labeler");
}

Labeler Labeler::tabular(std::vector<double> grid, std::vector<std::vector<double>> rows) {
  check_strictly_increasing(grid, "Tabular grid");
  require(rows.size() == grid.size(), "Tabular needs one probability row per grid point");
  const std::size_t classes = rows.front().size();
  require(classes >= 2, "Tabular labeler needs at least 2 classes");
  Tabular t;
  t.grid = std::move(grid);
  t.classes = static_cast<int>(classes);
  t.probs.reserve(rows.size() * classes);
  for (const auto& r : rows) {
    require(r.size() == classes, "Tabular rows must share the class count");
    check_simplex(r, kSimplexTol, "Tabular row");
    for (double v : r) t.probs.push_back(std::max(v, 0.0));
  }
  return Labeler(std::move(t));
}

int Labeler::class_count() const {
  if (const auto* t = std::get_if<Tabular>(&v_)) return t->classes;
  return 2;
}

bool Labeler::is_deterministic() const {
  return std::holds_alternative<Threshold>(v_) || std::holds_alternative<Interval>(v_);
}

double Labeler::prob_one(double x) const {
  return std::visit(
      overloaded{[x](const Threshold& t) { return x > t.theta ? 1.0 : 0.0; },
                 [x](const Interval& iv) { return (iv.a < x && x <= iv.b) ? 1.0 : 0.0; },
                 [x](const Sigmoid& s) { return logistic(s.slope * x + s.bias); },
                 [x](const Probit& p) { return normal_cdf(p.kappa * x + p.bias); },
                 [x](const SymmetricNoise& n) {
                   return deterministic_base_value(n.base, x) ? 1.0 - n.epsilon : n.epsilon;
                 },
                 [x](const Tabular& t) {
                   if (t.classes != 2) throw std::logic_error("prob_one on a non-binary labeler");
                   const auto idx = grid_index(t.grid, x);
                   if (!idx) throw std::domain_error("Tabular labeler evaluated off its grid");
                   return t.probs[*idx * 2 + 1];
                 }},
      v_);
}

void Labeler::conditional(double x, std::span<double> out) const {
  if (static_cast<int>(out.size()) != class_count())
    throw std::invalid_argument("conditional: output size does not match class count");
  if (const auto* t = std::get_if<Tabular>(&v_)) {
    const auto idx = grid_index(t->grid, x);
    if (!idx) throw std::domain_error("Tabular labeler evaluated off its grid");
    std::copy_n(t->probs.begin() + static_cast<std::ptrdiff_t>(*idx * t->classes), t->classes,
                out.begin());
    return;
  }
  const double p1 = prob_one(x);
  out[0] = 1.0 - p1;
  out[1] = p1;
}

std::vector<double> Labeler::conditional(double x) const {
  std::vector<double> out(static_cast<std::size_t>(class_count()));
  conditional(x, out);
  return out;
}

std::vector<double> Labeler::breakpoints() const {
  const auto finite = [](std::initializer_list<double> xs) {
    std::vector<double> out;
    for (double x : xs)
      if (std::isfinite(x)) out.push_back(x);
    return out;
  };
  return std::visit(
      overloaded{[&](const Threshold& t) { return finite({t.theta}); },
                 [&](const Interval& iv) { return finite({iv.a, iv.b}); },
                 [&](const SymmetricNoise& n) {
                   return std::visit(overloaded{[&](const Threshold& t) { return finite({t.theta}); },
                                                [&](const Interval& iv) { return finite({iv.a, iv.b}); }},
                                     n.base);
                 },
                 [](const auto&) { return std::vector<double>{}; }},
      v_);
}

std::span<const double> Labeler::support_grid() const {
  if (const auto* t = std::get_if<Tabular>(&v_)) return t->grid;
  return {};
}

std::string Labeler::describe() const {
  std::ostringstream os;
  os.precision(6);
  std::visit(overloaded{[&](const Threshold& t) { os << "Threshold(" << t.theta << ")"; },
                        [&](const Interval& iv) { os << "Interval(" << iv.a << "," << iv.b << ")"; },
                        [&](const Sigmoid& s) { os << "Sigmoid(" << s.slope << "," << s.bias << ")"; },
                        [&](const Probit& p) { os << "Probit(" << p.kappa << "," << p.bias << ")"; },
                        [&](const SymmetricNoise& n) { os << "Noisy(eps=" << n.epsilon << ")"; },
                        [&](const Tabular& t) { os << "Tabular[" << t.grid.size() << "x" << t.classes << "]"; }},
             v_);
  return os.str();
}

// ---------------------------------------------------------------- distances

double tv_discrete(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw std::invalid_argument("tv_discrete: dimension mismatch");
  require(!p.empty(), "tv_discrete: empty vectors");
  check_simplex(p, kInputSimplexTol, "tv_discrete p");
  check_simplex(q, kInputSimplexTol, "tv_discrete q");
  double acc = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) acc += std::abs(p[i] - q[i]);
  return clamp_unit(0.5 * acc);
}

double tv_gaussian_quadrature(const Gaussian& g1, const Gaussian& g2, const QuadratureConfig& cfg) {
  cfg.validate();
  const double w = cfg.domain_halfwidth_sigmas;
  const double lo = std::min(g1.mean - w * g1.std, g2.mean - w * g2.std);
  const double hi = std::max(g1.mean + w * g1.std, g2.mean + w * g2.std);
  const auto breaks = density_crossings(g1, g2);
  const auto f = [&](double x) { return std::abs(gaussian_pdf(g1, x) - gaussian_pdf(g2, x)); };
  return clamp_unit(0.5 * quad::integrate_piecewise(f, lo, hi, breaks, cfg));
}

double tv_env(const Environment& e1, const Environment& e2, const QuadratureConfig& cfg) {
  if (e1.is_gaussian() != e2.is_gaussian())
    throw std::invalid_argument("tv_env: Gaussian and discrete environments have incompatible supports");
  if (e1.is_gaussian()) {
    const auto& g1 = e1.as_gaussian();
    const auto& g2 = e2.as_gaussian();
    if (std::abs(g1.std - g2.std) <= 1e-12 * std::max(g1.std, g2.std)) {
      const double z = std::abs(g1.mean - g2.mean) / (2.0 * g1.std);
      return clamp_unit(std::erf(z / std::numbers::sqrt2));
    }
    return tv_gaussian_quadrature(g1, g2, cfg);
  }
  const auto& d1 = e1.as_discrete();
  const auto& d2 = e2.as_discrete();
  // Distinct atoms are disjoint, so merge the supports.
  double acc = 0.0;
  std::size_t i = 0, j = 0;
  while (i < d1.points.size() || j < d2.points.size()) {
    if (j == d2.points.size() || (i < d1.points.size() && d1.points[i] < d2.points[j])) {
      acc += d1.weights[i++];
    } else if (i == d1.points.size() || d2.points[j] < d1.points[i]) {
      acc += d2.weights[j++];
    } else {
      acc += std::abs(d1.weights[i++] - d2.weights[j++]);
    }
  }
  return clamp_unit(0.5 * acc);
}

double conditional_tv(const Labeler& l1, const Labeler& l2, double x) {
  require_same_classes(l1, l2);
  if (l1.is_binary() && !has_tabular(l1) && !has_tabular(l2))
    return std::abs(l1.prob_one(x) - l2.prob_one(x));
  const auto p = l1.conditional(x);
  const auto q = l2.conditional(x);
  return tv_discrete(p, q);
}

double expected_conditional_tv(const Environment& env, const Labeler& l1, const Labeler& l2,
                               const QuadratureConfig& cfg) {
  require_same_classes(l1, l2);
  cfg.validate();
  if (!env.is_gaussian()) {
    const auto& d = env.as_discrete();
    double acc = 0.0;
    for (std::size_t k = 0; k < d.points.size(); ++k)
      if (d.weights[k] > 0.0) acc += d.weights[k] * conditional_tv(l1, l2, d.points[k]);
    return clamp_unit(acc);
  }
  if (has_tabular(l1) || has_tabular(l2))
    throw std::invalid_argument(
        "Tabular labelers are only defined on their grid and cannot be integrated under a Gaussian");
  // Deterministic pairs disagree on a finite union of cells: exact via the CDF.
  if (l1.is_deterministic() && l2.is_deterministic()) return disagreement_mass(env, l1, l2);
  const auto& g = env.as_gaussian();
  const auto [lo, hi] = env.window(cfg.domain_halfwidth_sigmas);
  const auto breaks = merged_breaks(l1, l2);
  const auto tv = [&](double x) { return std::abs(l1.prob_one(x) - l2.prob_one(x)); };

  bool smooth = true;
  for (double b : breaks)
    if (b > lo && b < hi) smooth = false;
  if (smooth && cfg.method == QuadMethod::gauss_hermite) {
    const double full = quad::gauss_hermite_expectation(tv, g.mean, g.std, cfg.node_count);
    const double half = quad::gauss_hermite_expectation(tv, g.mean, g.std, cfg.node_count / 2);
    if (std::abs(full - half) <= cfg.abs_tol) return clamp_unit(full);
    // Kinks where the two conditionals cross slow Hermite down; fall through.
  }
  const auto f = [&](double x) { return gaussian_pdf(g, x) * tv(x); };
  return clamp_unit(quad::integrate_piecewise(f, lo, hi, breaks, cfg));
}

double disagreement_mass(const Environment& env, const Labeler& l1, const Labeler& l2) {
  if (!l1.is_deterministic() || !l2.is_deterministic())
    throw std::invalid_argument("disagreement_mass requires deterministic labelers");
  auto cuts = merged_breaks(l1, l2);
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  // Labels are constant on every right-closed cell (c_k, c_{k+1}].
  double acc = 0.0;
  double prev = -kInf;
  for (double c : cuts) {
    if (l1.prob_one(c) != l2.prob_one(c)) acc += env.mass(prev, c);
    prev = c;
  }
  const double probe = cuts.empty() ? 0.0 : cuts.back() + 1.0;
  if (l1.prob_one(probe) != l2.prob_one(probe)) acc += env.mass(prev, kInf);
  return clamp_unit(acc);
}

double sup_conditional_tv(const Labeler& l1, const Labeler& l2, Domain domain, int grid_n) {
  require_same_classes(l1, l2);
  require(grid_n >= 256, "sup_conditional_tv: grid_n must be >= 256");
  require(std::isfinite(domain.lo) && std::isfinite(domain.hi) && domain.hi > domain.lo,
          "sup_conditional_tv: domain must be a finite non-degenerate interval");

  if (has_tabular(l1) || has_tabular(l2)) {
    std::vector<double> pts;
    for (const Labeler* l : {&l1, &l2})
      for (double x : l->support_grid())
        if (x >= domain.lo && x <= domain.hi) pts.push_back(x);
    double best = 0.0;
    for (double x : pts) best = std::max(best, conditional_tv(l1, l2, x));
    return best;
  }

  const double h = (domain.hi - domain.lo) / (grid_n - 1);
  double best = -1.0;
  double arg = domain.lo;
  const auto probe = [&](double x) {
    const double v = conditional_tv(l1, l2, x);
    if (v > best) {
      best = v;
      arg = x;
    }
  };
  for (int k = 0; k < grid_n; ++k) probe(domain.lo + k * h);
  // Labels switch right after a boundary; probe both sides of every one.
  for (double b : merged_breaks(l1, l2)) {
    if (b >= domain.lo && b <= domain.hi) {
      probe(b);
      const double right = std::nextafter(b, kInf);
      if (right <= domain.hi) probe(right);
    }
  }
  const double lo = std::max(domain.lo, arg - h);
  const double hi = std::min(domain.hi, arg + h);
  const double hr = (hi - lo) / (grid_n - 1);
  for (int k = 0; k < grid_n; ++k) probe(lo + k * hr);
  return clamp_unit(best);
}

double joint_tv_exact(const Environment& e1, const Labeler& l1, const Environment& e2,
                      const Labeler& l2, const QuadratureConfig& cfg) {
  require_same_classes(l1, l2);
  cfg.validate();
  if (e1.is_gaussian() != e2.is_gaussian())
    throw std::invalid_argument("joint_tv_exact: Gaussian and discrete environments have incompatible supports");

  const std::size_t classes = static_cast<std::size_t>(l1.class_count());
  if (!e1.is_gaussian()) {
    const auto& d1 = e1.as_discrete();
    const auto& d2 = e2.as_discrete();
    std::vector<double> p(classes), q(classes);
    double acc = 0.0;
    std::size_t i = 0, j = 0;
    while (i < d1.points.size() || j < d2.points.size()) {
      double x, w1 = 0.0, w2 = 0.0;
      if (j == d2.points.size() || (i < d1.points.size() && d1.points[i] < d2.points[j])) {
        x = d1.points[i];
        w1 = d1.weights[i++];
      } else if (i == d1.points.size() || d2.points[j] < d1.points[i]) {
        x = d2.points[j];
        w2 = d2.weights[j++];
      } else {
        x = d1.points[i];
        w1 = d1.weights[i++];
        w2 = d2.weights[j++];
      }
      if (w1 > 0.0) l1.conditional(x, p); else std::fill(p.begin(), p.end(), 0.0);
      if (w2 > 0.0) l2.conditional(x, q); else std::fill(q.begin(), q.end(), 0.0);
      for (std::size_t c = 0; c < classes; ++c) acc += std::abs(w1 * p[c] - w2 * q[c]);
    }
    return clamp_unit(0.5 * acc);
  }

  if (has_tabular(l1) || has_tabular(l2))
    throw std::invalid_argument(
        "Tabular labelers are only defined on their grid and cannot be integrated under a Gaussian");
  const auto& g1 = e1.as_gaussian();
  const auto& g2 = e2.as_gaussian();
  const double w = cfg.domain_halfwidth_sigmas;
  const double lo = std::min(g1.mean - w * g1.std, g2.mean - w * g2.std);
  const double hi = std::max(g1.mean + w * g1.std, g2.mean + w * g2.std);
  auto breaks = merged_breaks(l1, l2);
  for (double c : density_crossings(g1, g2)) breaks.push_back(c);
  const auto f = [&](double x) {
    const double f1 = gaussian_pdf(g1, x);
    const double f2 = gaussian_pdf(g2, x);
    const double p = l1.prob_one(x);
    const double q = l2.prob_one(x);
    return 0.5 * (std::abs(f1 * p - f2 * q) + std::abs(f1 * (1.0 - p) - f2 * (1.0 - q)));
  };
  return clamp_unit(quad::integrate_piecewise(f, lo, hi, breaks, cfg));
}

}  // namespace credal
