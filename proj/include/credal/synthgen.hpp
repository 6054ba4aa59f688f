#pragma once

// Seeded generators for annotated datasets, credal-set mixtures, mechanism
// families for N_Y scaling and the two-labeler minimax instance.

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "credal/annotations.hpp"
#include "credal/credal_set.hpp"

namespace credal {

/// (master, substream) names one independent random stream. Streams are a
/// pure function of the pair, so replications can run in any order.
struct GenSeed {
  std::uint64_t master = 0;
  std::uint64_t substream = 0;

  GenSeed child(std::uint64_t index) const;
  std::mt19937_64 engine() const;
};

std::uint64_t splitmix64(std::uint64_t x);

/// One standard normal draw by inversion (portable across standard libraries).
double draw_normal(std::mt19937_64& rng);
/// Uniform in [0, 1) with 53 bits.
double draw_unit(std::mt19937_64& rng);
double draw_x(const Environment& env, std::mt19937_64& rng);

AnnotationTable sample_annotated(const Environment& env, std::span<const Labeler> labelers, std::size_t n,
                                 LabelKind kind, GenSeed seed);

struct MixtureDraw {
  double x = 0.0;
  int y = 0;
  VertexIndex vertex;
};
/// `pi` is indexed by CredalSpec::flat.
std::vector<MixtureDraw> sample_mixture(const CredalSpec& spec, std::span<const double> pi, std::size_t n,
                                        GenSeed seed);

struct MechanismFamily {
  std::vector<Labeler> labelers;
  double implied_eta_star = 0.0;  // max pairwise expected disagreement
  std::vector<double> block_masses;
};

/// Interval labelers on disjoint quantile blocks. Two anchor blocks of mass
/// pinned_mass/2 carry the maximum disagreement; the remaining n_y - 2
/// blocks are consecutive cells of mass min(rest_ratio * pinned_mass/2,
/// (1 - pinned_mass)/(n_y - 2)). Pairwise disagreement is the sum of the two
/// block masses, so the implied eta* equals pinned_mass for every n_y.
MechanismFamily interval_mechanisms(int n_y, const Environment& env, double pinned_mass,
                                    double rest_ratio = 0.5);

struct BlockGrowth {
  double initial = 0.2;     // eta* at n_y = 2
  double log_growth = 0.1;  // increase per unit of ln(n_y / 2)
  double max_mass = 0.95;
};
/// Nested intervals centred at the median; labeler m covers mass
/// s_m = spread * m / (n_y - 1), so the widest pair disagrees on `spread`
/// = min(max_mass, initial + log_growth * ln(n_y / 2)).
MechanismFamily block_mechanisms(int n_y, const Environment& env, const BlockGrowth& growth = {});

/// f1 = never 1, f2 = 1{x > q(1 - eta)}: two deterministic labelers that
/// disagree exactly on a set of mass eta.
CredalSpec minimax_instance(double eta, const Environment& env);

}  // namespace credal
