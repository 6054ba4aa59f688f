#include "credal/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>

namespace credal {

std::string to_string(QuadMethod m) {
  switch (m) {
    case QuadMethod::gauss_hermite: return "gauss_hermite";
    case QuadMethod::adaptive_simpson: return "adaptive_simpson";
    case QuadMethod::grid: return "grid";
  }
  return "?";
}

QuadMethod quad_method_from_string(const std::string& s) {
  if (s == "gauss_hermite") return QuadMethod::gauss_hermite;
  if (s == "adaptive_simpson") return QuadMethod::adaptive_simpson;
  if (s == "grid") return QuadMethod::grid;
  throw std::invalid_argument("unknown quadrature method: " + s);
}

void QuadratureConfig::validate() const {
  if (node_count < 16) throw std::invalid_argument("quadrature node_count must be >= 16");
  if (!(abs_tol > 0.0) || abs_tol > 1e-4)
    throw std::invalid_argument("quadrature abs_tol must lie in (0, 1e-4]");
  if (!(domain_halfwidth_sigmas > 0.0) || !std::isfinite(domain_halfwidth_sigmas))
    throw std::invalid_argument("domain_halfwidth_sigmas must be positive and finite");
  if (max_evals < 1000) throw std::invalid_argument("max_evals must be >= 1000");
}

namespace quad {
namespace {

// Newton iteration on the orthonormal Hermite recurrence (Golub-Welsch would
// need an eigensolver; this converges in a handful of steps per root).
HermiteRule build_hermite(int n) {
  HermiteRule rule;
  rule.nodes.assign(n, 0.0);
  rule.weights.assign(n, 0.0);
  const double pim4 = std::pow(std::numbers::pi, -0.25);
  const int m = (n + 1) / 2;
  double z = 0.0;
  for (int i = 0; i < m; ++i) {
    if (i == 0) {
      z = std::sqrt(2.0 * n + 1.0) - 1.85575 * std::pow(2.0 * n + 1.0, -0.16667);
    } else if (i == 1) {
      z -= 1.14 * std::pow(static_cast<double>(n), 0.426) / z;
    } else if (i == 2) {
      z = 1.86 * z - 0.86 * rule.nodes[0];
    } else if (i == 3) {
      z = 1.91 * z - 0.91 * rule.nodes[1];
    } else {
      z = 2.0 * z - rule.nodes[i - 2];
    }
    double pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p1 = pim4;
      double p2 = 0.0;
      for (int j = 0; j < n; ++j) {
        const double p3 = p2;
        p2 = p1;
        p1 = z * std::sqrt(2.0 / (j + 1)) * p2 - std::sqrt(static_cast<double>(j) / (j + 1)) * p3;
      }
      pp = std::sqrt(2.0 * n) * p2;
      const double z1 = z;
      z = z1 - p1 / pp;
      if (std::abs(z - z1) <= 1e-15 * std::max(1.0, std::abs(z))) break;
    }
    rule.nodes[i] = z;
    rule.nodes[n - 1 - i] = -z;
    rule.weights[i] = 2.0 / (pp * pp);
    rule.weights[n - 1 - i] = rule.weights[i];
  }
  return rule;
}

struct SimpsonPanel {
  double a, b, fa, fm, fb, whole;
  int depth;
};

double simpson(double a, double b, double fa, double fm, double fb) {
  return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

std::vector<double> piece_edges(double lo, double hi, std::span<const double> breaks) {
  std::vector<double> edges{lo};
  for (double b : breaks)
    if (std::isfinite(b) && b > lo && b < hi) edges.push_back(b);
  edges.push_back(hi);
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  return edges;
}

}  // namespace

const HermiteRule& hermite_rule(int n) {
  static std::mutex mu;
  static std::map<int, std::unique_ptr<HermiteRule>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto& slot = cache[n];
  if (!slot) slot = std::make_unique<HermiteRule>(build_hermite(n));
  return *slot;
}

double gauss_hermite_expectation(const std::function<double(double)>& f, double mean, double sd,
                                 int n) {
  const HermiteRule& rule = hermite_rule(n);
  const double scale = std::numbers::sqrt2 * sd;
  double acc = 0.0;
  for (int i = 0; i < n; ++i) acc += rule.weights[i] * f(mean + scale * rule.nodes[i]);
  return acc / std::sqrt(std::numbers::pi);
}

double adaptive_simpson(const std::function<double(double)>& f, double lo, double hi,
                        std::span<const double> breaks, const QuadratureConfig& cfg) {
  if (!(hi > lo)) return 0.0;
  constexpr int kInitialPanels = 32;
  constexpr int kMaxDepth = 48;
  const double total_width = hi - lo;
  const auto edges = piece_edges(lo, hi, breaks);

  long evals = 0;
  double result = 0.0;
  double residual = 0.0;
  std::vector<SimpsonPanel> stack;

  for (std::size_t p = 0; p + 1 < edges.size(); ++p) {
    const double a0 = edges[p];
    const double b0 = edges[p + 1];
    const double h = (b0 - a0) / kInitialPanels;
    double fa = f(a0);
    ++evals;
    for (int k = 0; k < kInitialPanels; ++k) {
      const double a = a0 + k * h;
      const double b = (k + 1 == kInitialPanels) ? b0 : a0 + (k + 1) * h;
      const double m = 0.5 * (a + b);
      const double fm = f(m);
      const double fb = f(b);
      evals += 2;
      stack.push_back({a, b, fa, fm, fb, simpson(a, b, fa, fm, fb), 0});
      fa = fb;
    }
    // Depth-first refinement keeps the stack small.
    std::reverse(stack.begin(), stack.end());
    while (!stack.empty()) {
      SimpsonPanel s = stack.back();
      stack.pop_back();
      const double m = 0.5 * (s.a + s.b);
      const double lm = 0.5 * (s.a + m);
      const double rm = 0.5 * (m + s.b);
      const double flm = f(lm);
      const double frm = f(rm);
      evals += 2;
      const double left = simpson(s.a, m, s.fa, flm, s.fm);
      const double right = simpson(m, s.b, s.fm, frm, s.fb);
      const double diff = left + right - s.whole;
      const double local_tol = cfg.abs_tol * (s.b - s.a) / total_width;
      if (std::abs(diff) <= 15.0 * local_tol || s.depth >= kMaxDepth || evals > cfg.max_evals) {
        if (std::abs(diff) > 15.0 * local_tol) residual += std::abs(diff) / 15.0;
        result += left + right + diff / 15.0;
        continue;
      }
      stack.push_back({m, s.b, s.fm, frm, s.fb, right, s.depth + 1});
      stack.push_back({s.a, m, s.fa, flm, s.fm, left, s.depth + 1});
    }
  }
  if (residual > cfg.abs_tol)
    throw QuadratureError("adaptive Simpson did not converge within the evaluation budget",
                          residual);
  return result;
}

double grid_simpson(const std::function<double(double)>& f, double lo, double hi,
                    std::span<const double> breaks, const QuadratureConfig& cfg) {
  if (!(hi > lo)) return 0.0;
  const auto edges = piece_edges(lo, hi, breaks);
  const int n = (cfg.node_count + 3) / 4 * 4;
  double fine = 0.0;
  double coarse = 0.0;
  for (std::size_t p = 0; p + 1 < edges.size(); ++p) {
    const double a = edges[p];
    const double h = (edges[p + 1] - a) / n;
    double s_fine = 0.0;
    double s_coarse = 0.0;
    for (int k = 0; k <= n; ++k) {
      const double v = f(a + k * h);
      const double wf = (k == 0 || k == n) ? 1.0 : (k % 2 ? 4.0 : 2.0);
      s_fine += wf * v;
      if (k % 2 == 0) {
        const int kc = k / 2;
        const int nc = n / 2;
        const double wc = (kc == 0 || kc == nc) ? 1.0 : (kc % 2 ? 4.0 : 2.0);
        s_coarse += wc * v;
      }
    }
    fine += s_fine * h / 3.0;
    coarse += s_coarse * 2.0 * h / 3.0;
  }
  const double residual = std::abs(fine - coarse);
  if (residual > cfg.abs_tol)
    throw QuadratureError("grid quadrature did not reach abs_tol", residual);
  return fine;
}

double integrate_piecewise(const std::function<double(double)>& f, double lo, double hi,
                           std::span<const double> breaks, const QuadratureConfig& cfg) {
  if (cfg.method == QuadMethod::grid) return grid_simpson(f, lo, hi, breaks, cfg);
  return adaptive_simpson(f, lo, hi, breaks, cfg);
}

}  // namespace quad
}  // namespace credal
