#include "credal/credal_set.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "credal/kernels.hpp"

namespace credal {

CredalSpec::CredalSpec(std::vector<Environment> environments, std::vector<Labeler> labelers)
    : envs_(std::move(environments)), labs_(std::move(labelers)) {
  if (envs_.empty()) throw std::invalid_argument("credal set needs at least one environment");
  if (labs_.empty()) throw std::invalid_argument("credal set needs at least one labeler");
  classes_ = labs_.front().class_count();
  for (const auto& l : labs_)
    if (l.class_count() != classes_)
      throw std::invalid_argument("all labelers of a credal set must share the class count");
}

std::size_t CredalSpec::flat(VertexIndex v) const {
  check(v);
  return v.env * labs_.size() + v.lab;
}

VertexIndex CredalSpec::vertex(std::size_t flat) const {
  if (flat >= vertex_count()) throw std::out_of_range("vertex index out of range");
  return {flat / labs_.size(), flat % labs_.size()};
}

void CredalSpec::check(VertexIndex v) const {
  if (v.env >= envs_.size() || v.lab >= labs_.size())
    throw std::out_of_range("vertex index out of range");
}

std::vector<VertexPair> CredalSpec::distinct_pairs() const {
  std::vector<VertexPair> out;
  const std::size_t v = vertex_count();
  out.reserve(v * (v - 1) / 2);
  for (std::size_t a = 0; a < v; ++a)
    for (std::size_t b = a + 1; b < v; ++b) out.push_back({vertex(a), vertex(b)});
  return out;
}

PairwiseBounds pairwise_bounds(const CredalSpec& spec, VertexIndex a, VertexIndex b,
                               const QuadratureConfig& cfg, bool with_exact) {
  spec.check(a);
  spec.check(b);
  PairwiseBounds pb;
  pb.pair = {a, b};
  const Environment& ea = spec.env(a.env);
  const Environment& eb = spec.env(b.env);
  const Labeler& la = spec.labeler(a.lab);
  const Labeler& lb = spec.labeler(b.lab);

  if (a.env == b.env) {
    const double d = expected_conditional_tv(ea, la, lb, cfg);
    pb.exp_dis_a = pb.exp_dis_b = d;
    pb.lower = pb.upper = d;
    pb.exact = d;
    return pb;
  }
  pb.cov_dist = tv_env(ea, eb, cfg);
  if (a.lab == b.lab) {
    pb.lower = pb.upper = pb.cov_dist;
    pb.exact = pb.cov_dist;
    return pb;
  }
  pb.exp_dis_a = expected_conditional_tv(ea, la, lb, cfg);
  pb.exp_dis_b = expected_conditional_tv(eb, la, lb, cfg);
  pb.lower = clamp_unit(std::max(std::abs(pb.exp_dis_a - pb.cov_dist),
                                 std::abs(pb.exp_dis_b - pb.cov_dist)));
  pb.upper = clamp_unit(pb.cov_dist + std::min(pb.exp_dis_a, pb.exp_dis_b));
  if (with_exact) pb.exact = joint_tv_exact(ea, la, eb, lb, cfg);
  return pb;
}

Domain default_sup_domain(const CredalSpec& spec, const QuadratureConfig& cfg) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const auto& e : spec.environments()) {
    const auto [l, h] = e.window(cfg.domain_halfwidth_sigmas);
    lo = std::min(lo, l);
    hi = std::max(hi, h);
  }
  if (!(hi > lo)) {  // single-point grid
    lo -= 1.0;
    hi += 1.0;
  }
  return {lo, hi};
}

ComponentDiameters component_diameters(const CredalSpec& spec, const QuadratureConfig& cfg,
                                       Domain sup_domain) {
  ComponentDiameters out;
  const std::size_t nx = spec.env_count();
  const std::size_t ny = spec.labeler_count();
  for (std::size_t i = 0; i < nx; ++i)
    for (std::size_t k = i + 1; k < nx; ++k)
      out.eta_x = std::max(out.eta_x, tv_env(spec.env(i), spec.env(k), cfg));
  for (std::size_t j = 0; j < ny; ++j) {
    for (std::size_t k = j + 1; k < ny; ++k) {
      for (std::size_t i = 0; i < nx; ++i)
        out.eta_star = std::max(
            out.eta_star, expected_conditional_tv(spec.env(i), spec.labeler(j), spec.labeler(k), cfg));
      out.eta_bar =
          std::max(out.eta_bar, sup_conditional_tv(spec.labeler(j), spec.labeler(k), sup_domain));
    }
  }
  return out;
}

DiameterReport diameter_bounds(const CredalSpec& spec, const QuadratureConfig& cfg,
                               Domain sup_domain, bool with_exact) {
  const auto comp = component_diameters(spec, cfg, sup_domain);
  DiameterReport r;
  r.eta_x = comp.eta_x;
  r.eta_star = comp.eta_star;
  r.eta_bar = comp.eta_bar;
  r.eta_eff = std::min(comp.eta_star, (1.0 - comp.eta_x) * comp.eta_bar);
  r.lower = clamp_unit(std::max(comp.eta_x, comp.eta_star));
  r.upper = clamp_unit(comp.eta_x + r.eta_eff);
  r.abs_tol = cfg.abs_tol;
  if (with_exact) {
    if (spec.vertex_count() == 1) {
      r.exact = 0.0;
      return r;
    }
    const auto pairs = spec.distinct_pairs();
    const auto tvs = kernels::joint_tv_pairs(spec, pairs, cfg, Exec::parallel);
    // First maximum in lexicographic pair order.
    std::size_t best = 0;
    for (std::size_t k = 1; k < tvs.size(); ++k)
      if (tvs[k] > tvs[best]) best = k;
    r.exact = tvs[best];
    r.argmax_pair = pairs[best];
  }
  return r;
}

double robust_penalty(const DiameterReport& report, double eps_star) {
  if (!(eps_star >= 0.0) || !std::isfinite(eps_star))
    throw std::invalid_argument("robust_penalty: eps_star must be a finite non-negative number");
  if (!std::isfinite(report.upper)) throw std::invalid_argument("robust_penalty: report not finite");
  return eps_star + report.upper;
}

}  // namespace credal
