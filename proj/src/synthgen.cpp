#include "credal/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <type_traits>

namespace credal {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

// Class index drawn from a conditional vector with one uniform.
int draw_class(std::span<const double> probs, std::mt19937_64& rng) {
  const double u = draw_unit(rng);
  double acc = 0.0;
  for (std::size_t c = 0; c + 1 < probs.size(); ++c) {
    acc += probs[c];
    if (u < acc) return static_cast<int>(c);
  }
  return static_cast<int>(probs.size()) - 1;
}

int draw_label(const Labeler& l, double x, std::vector<double>& buf, std::mt19937_64& rng) {
  if (l.is_deterministic()) return l.prob_one(x) > 0.5 ? 1 : 0;
  if (const auto* s = std::get_if<SymmetricNoise>(&l.variant())) {
    // Latent truth from the base mechanism, then an independent flip.
    const int clean = std::visit(
        [x](const auto& b) {
          if constexpr (std::is_same_v<std::decay_t<decltype(b)>, Threshold>)
            return x > b.theta ? 1 : 0;
          else
            return (x > b.a && x <= b.b) ? 1 : 0;
        },
        s->base);
    return draw_unit(rng) < s->epsilon ? 1 - clean : clean;
  }
  buf.resize(static_cast<std::size_t>(l.class_count()));
  l.conditional(x, buf);
  return draw_class(buf, rng);
}

void check_quantile_cells(const std::vector<double>& masses) {
  for (double m : masses)
    if (!(m >= 1e-6)) throw std::invalid_argument("mechanism block mass below 1e-6; infeasible configuration");
}

}  // namespace

std::uint64_t splitmix64(std::uint64_t x) {
  x += kGolden;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

GenSeed GenSeed::child(std::uint64_t index) const {
  return {master, splitmix64(substream ^ splitmix64(index + kGolden))};
}

std::mt19937_64 GenSeed::engine() const { return std::mt19937_64(splitmix64(master ^ splitmix64(substream))); }

double draw_unit(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

double draw_normal(std::mt19937_64& rng) {
  // Midpoint of a 53-bit cell keeps u strictly inside (0, 1).
  const double u = (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
  return normal_quantile(u);
}

double draw_x(const Environment& env, std::mt19937_64& rng) {
  if (env.is_gaussian()) {
    const auto& g = env.as_gaussian();
    return g.mean + g.std * draw_normal(rng);
  }
  const auto& d = env.as_discrete();
  const double u = draw_unit(rng);
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < d.points.size(); ++i) {
    acc += d.weights[i];
    if (u < acc) return d.points[i];
  }
  return d.points.back();
}

AnnotationTable sample_annotated(const Environment& env, std::span<const Labeler> labelers, std::size_t n,
                                 LabelKind kind, GenSeed seed) {
  if (n == 0) throw std::invalid_argument("sample_annotated: n must be at least 1");
  if (labelers.empty()) throw std::invalid_argument("sample_annotated: no labelers");
  const int classes = labelers.front().class_count();
  for (const auto& l : labelers) {
    if (l.class_count() != classes) throw std::invalid_argument("sample_annotated: labelers disagree on class count");
    if (kind == LabelKind::soft && std::holds_alternative<SymmetricNoise>(l.variant()))
      throw std::invalid_argument("soft labels are not observable for a symmetric-noise annotator");
  }
  const int k = static_cast<int>(labelers.size());
  AnnotationTable t(kind, classes, k);
  t.reserve(n);
  auto rng = seed.engine();
  std::vector<int> hard(static_cast<std::size_t>(k));
  std::vector<double> soft(static_cast<std::size_t>(k * classes));
  std::vector<double> buf;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = draw_x(env, rng);
    if (kind == LabelKind::hard) {
      for (int a = 0; a < k; ++a) hard[static_cast<std::size_t>(a)] = draw_label(labelers[static_cast<std::size_t>(a)], x, buf, rng);
      t.add_hard(x, hard);
    } else {
      for (int a = 0; a < k; ++a)
        labelers[static_cast<std::size_t>(a)].conditional(
            x, std::span<double>(soft).subspan(static_cast<std::size_t>(a * classes), static_cast<std::size_t>(classes)));
      t.add_soft(x, soft);
    }
  }
  return t;
}

std::vector<MixtureDraw> sample_mixture(const CredalSpec& spec, std::span<const double> pi, std::size_t n,
                                        GenSeed seed) {
  if (pi.size() != spec.vertex_count()) throw std::invalid_argument("sample_mixture: pi has the wrong length");
  double total = 0.0;
  for (double w : pi) {
    if (!(w >= 0.0)) throw std::invalid_argument("sample_mixture: pi has a negative entry");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-9) throw std::invalid_argument("sample_mixture: pi is not on the simplex");

  auto rng = seed.engine();
  std::vector<MixtureDraw> out;
  out.reserve(n);
  std::vector<double> buf;
  for (std::size_t s = 0; s < n; ++s) {
    const std::size_t v = static_cast<std::size_t>(draw_class(pi, rng));
    MixtureDraw d;
    d.vertex = spec.vertex(v);
    d.x = draw_x(spec.env(d.vertex.env), rng);
    d.y = draw_label(spec.labeler(d.vertex.lab), d.x, buf, rng);
    out.push_back(d);
  }
  return out;
}

MechanismFamily interval_mechanisms(int n_y, const Environment& env, double pinned_mass, double rest_ratio) {
  if (n_y < 2) throw std::invalid_argument("interval_mechanisms: need at least 2 labelers");
  if (!(pinned_mass > 0.0 && pinned_mass < 1.0))
    throw std::invalid_argument("interval_mechanisms: pinned_mass must lie in (0, 1)");
  if (!(rest_ratio > 0.0 && rest_ratio <= 1.0))
    throw std::invalid_argument("interval_mechanisms: rest_ratio must lie in (0, 1]");

  const double half = pinned_mass / 2.0;
  const double rest =
      n_y > 2 ? std::min(rest_ratio * half, (1.0 - pinned_mass) / static_cast<double>(n_y - 2)) : 0.0;
  std::vector<double> edges{0.0, half, pinned_mass};
  for (int m = 0; m < n_y - 2; ++m) edges.push_back(pinned_mass + rest * static_cast<double>(m + 1));
  if (edges.back() > 1.0 + 1e-12) throw std::invalid_argument("interval_mechanisms: blocks exceed unit mass");

  MechanismFamily f;
  double prev = env.quantile(0.0);
  for (std::size_t b = 1; b < edges.size(); ++b) {
    const double next = env.quantile(std::min(edges[b], 1.0));
    if (!(next > prev)) throw std::invalid_argument("interval_mechanisms: degenerate quantile block");
    f.labelers.push_back(Labeler::interval(prev, next));
    f.block_masses.push_back(env.mass(prev, next));
    prev = next;
  }
  check_quantile_cells(f.block_masses);
  auto sorted = f.block_masses;
  std::sort(sorted.rbegin(), sorted.rend());
  f.implied_eta_star = sorted[0] + sorted[1];
  return f;
}

MechanismFamily block_mechanisms(int n_y, const Environment& env, const BlockGrowth& growth) {
  if (n_y < 2) throw std::invalid_argument("block_mechanisms: need at least 2 labelers");
  if (!(growth.initial > 0.0) || !(growth.log_growth >= 0.0) || !(growth.max_mass < 1.0) ||
      growth.initial > growth.max_mass)
    throw std::invalid_argument("block_mechanisms: invalid growth configuration");
  const double spread =
      std::min(growth.max_mass, growth.initial + growth.log_growth * std::log(static_cast<double>(n_y) / 2.0));

  MechanismFamily f;
  f.labelers.push_back(Labeler::threshold(kInf));
  f.block_masses.push_back(0.0);
  for (int m = 1; m < n_y; ++m) {
    const double s = spread * static_cast<double>(m) / static_cast<double>(n_y - 1);
    const double a = env.quantile(0.5 - s / 2.0);
    const double b = env.quantile(0.5 + s / 2.0);
    if (!(b > a)) throw std::invalid_argument("block_mechanisms: degenerate block");
    f.labelers.push_back(Labeler::interval(a, b));
    f.block_masses.push_back(env.mass(a, b));
  }
  std::vector<double> inner(f.block_masses.begin() + 1, f.block_masses.end());
  check_quantile_cells(inner);
  // Nested sets: disagreement of m and m' is the mass of the larger minus the smaller.
  f.implied_eta_star = f.block_masses.back();
  return f;
}

CredalSpec minimax_instance(double eta, const Environment& env) {
  if (!(eta > 0.0 && eta < 1.0)) throw std::invalid_argument("minimax_instance: eta must lie in (0, 1)");
  double theta = 0.0;
  if (env.is_gaussian()) {
    const auto& g = env.as_gaussian();
    // Upper-tail quantile, computed on the tail side for accuracy at small eta.
    theta = g.mean - g.std * normal_quantile(eta);
  } else {
    const auto& d = env.as_discrete();
    bool found = false;
    for (double p : d.points) {
      if (std::abs(env.mass(p, kInf) - eta) <= 1e-12) {
        theta = p;
        found = true;
        break;
      }
    }
    if (!found) throw std::invalid_argument("minimax_instance: no upper-tail set of the grid has mass eta");
  }
  return CredalSpec({env}, {Labeler::threshold(kInf), Labeler::threshold(theta)});
}

}  // namespace credal
