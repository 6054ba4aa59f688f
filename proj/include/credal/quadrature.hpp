#pragma once

#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace credal {

enum class QuadMethod { gauss_hermite, adaptive_simpson, grid };

std::string to_string(QuadMethod m);
QuadMethod quad_method_from_string(const std::string& s);

/// Numerical integration settings shared by every TV computation.
///
/// `node_count` is the Gauss-Hermite order (and the per-piece point count for
/// the `grid` method). `max_evals` caps the work of adaptive Simpson; running
/// out of budget is reported as a QuadratureError, never silently truncated.
struct QuadratureConfig {
  QuadMethod method = QuadMethod::gauss_hermite;
  int node_count = 128;
  double abs_tol = 1e-8;
  double domain_halfwidth_sigmas = 8.0;
  long max_evals = 4'000'000;

  void validate() const;
};

class QuadratureError : public std::runtime_error {
 public:
  QuadratureError(const std::string& what, double residual)
      : std::runtime_error(what + " (residual estimate " + std::to_string(residual) + ")"),
        residual_(residual) {}
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

namespace quad {

struct HermiteRule {
  std::vector<double> nodes;
  std::vector<double> weights;  // for weight function exp(-t^2)
};

/// Physicists' Gauss-Hermite rule of order n. Cached per order; thread safe.
const HermiteRule& hermite_rule(int n);

/// E[f(X)] for X ~ N(mean, sd^2) using an n-point Gauss-Hermite rule.
double gauss_hermite_expectation(const std::function<double(double)>& f, double mean, double sd,
                                 int n);

/// Adaptive Simpson over [lo, hi] split at `breaks` (points outside are ignored).
/// Throws QuadratureError when the evaluation budget runs out before the
/// accumulated error estimate drops below cfg.abs_tol.
double adaptive_simpson(const std::function<double(double)>& f, double lo, double hi,
                        std::span<const double> breaks, const QuadratureConfig& cfg);

/// Composite Simpson on a uniform grid per piece; the residual is estimated
/// against the half-resolution grid.
double grid_simpson(const std::function<double(double)>& f, double lo, double hi,
                    std::span<const double> breaks, const QuadratureConfig& cfg);

/// Dispatches to adaptive_simpson or grid_simpson according to cfg.method
/// (gauss_hermite maps to adaptive Simpson here, since this entry point is
/// used for integrands with kinks or jumps).
double integrate_piecewise(const std::function<double(double)>& f, double lo, double hi,
                           std::span<const double> breaks, const QuadratureConfig& cfg);

}  // namespace quad
}  // namespace credal
