#include "credal/kernels.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <stdexcept>

#include <omp.h>

#include "credal/annotations.hpp"
#include "credal/parallel.hpp"

namespace credal::kernels {
namespace {

double pair_tv(const CredalSpec& spec, const VertexPair& p, const QuadratureConfig& cfg) {
  return joint_tv_exact(spec.env(p.a.env), spec.labeler(p.a.lab), spec.env(p.b.env),
                        spec.labeler(p.b.lab), cfg);
}

void require_kind(const AnnotationTable& t, LabelKind k) {
  if (t.kind() != k)
    throw std::invalid_argument("kernel expects " + to_string(k) + " labels, table holds " +
                                to_string(t.kind()));
}

std::size_t k_of(const AnnotationTable& t) { return static_cast<std::size_t>(t.annotators()); }

// Pairs (j, j') with j < j', so each parallel iteration owns one output cell.
std::vector<std::pair<int, int>> upper_pairs(int k) {
  std::vector<std::pair<int, int>> out;
  for (int j = 0; j < k; ++j)
    for (int l = j + 1; l < k; ++l) out.emplace_back(j, l);
  return out;
}

template <class T>
void mirror(std::vector<T>& m, std::size_t k) {
  for (std::size_t j = 0; j < k; ++j)
    for (std::size_t l = j + 1; l < k; ++l) m[l * k + j] = m[j * k + l];
}

}  // namespace

std::vector<double> joint_tv_pairs_serial(const CredalSpec& spec, std::span<const VertexPair> pairs,
                                          const QuadratureConfig& cfg) {
  std::vector<double> out(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) out[i] = pair_tv(spec, pairs[i], cfg);
  return out;
}

std::vector<double> joint_tv_pairs_omp(const CredalSpec& spec, std::span<const VertexPair> pairs,
                                       const QuadratureConfig& cfg) {
  std::vector<double> out(pairs.size());
  ExceptionSlot slot;
  const auto n = static_cast<std::ptrdiff_t>(pairs.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    slot.run([&] { out[static_cast<std::size_t>(i)] = pair_tv(spec, pairs[static_cast<std::size_t>(i)], cfg); });
  }
  slot.rethrow();
  return out;
}

std::vector<double> joint_tv_pairs(const CredalSpec& spec, std::span<const VertexPair> pairs,
                                   const QuadratureConfig& cfg, Exec exec) {
  return exec == Exec::serial ? joint_tv_pairs_serial(spec, pairs, cfg)
                              : joint_tv_pairs_omp(spec, pairs, cfg);
}

std::vector<std::int64_t> disagreement_counts_serial(const AnnotationTable& t) {
  require_kind(t, LabelKind::hard);
  const std::size_t k = k_of(t);
  std::vector<std::int64_t> m(k * k, 0);
  for (std::size_t i = 0; i < t.size(); ++i)
    for (std::size_t j = 0; j < k; ++j)
      for (std::size_t l = j + 1; l < k; ++l)
        if (t.hard(i, static_cast<int>(j)) != t.hard(i, static_cast<int>(l))) ++m[j * k + l];
  mirror(m, k);
  return m;
}

std::vector<std::int64_t> disagreement_counts_omp(const AnnotationTable& t) {
  require_kind(t, LabelKind::hard);
  const std::size_t k = k_of(t);
  const std::size_t n = t.size();
  std::vector<std::int64_t> m(k * k, 0);
  const auto pairs = upper_pairs(static_cast<int>(k));
  const auto np = static_cast<std::ptrdiff_t>(pairs.size());

  if (t.classes() == 2) {
    // One bit per sample per annotator; disagreements are popcount(a ^ b).
    const std::size_t words = (n + 63) / 64;
    std::vector<std::uint64_t> bits(k * words, 0);
    const auto kk = static_cast<std::ptrdiff_t>(k);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t j = 0; j < kk; ++j) {
      auto* row = bits.data() + static_cast<std::size_t>(j) * words;
      for (std::size_t i = 0; i < n; ++i)
        if (t.hard(i, static_cast<int>(j)) == 1) row[i / 64] |= std::uint64_t{1} << (i % 64);
    }
#pragma omp parallel for schedule(dynamic, 1)
    for (std::ptrdiff_t p = 0; p < np; ++p) {
      const auto [j, l] = pairs[static_cast<std::size_t>(p)];
      const auto* a = bits.data() + static_cast<std::size_t>(j) * words;
      const auto* b = bits.data() + static_cast<std::size_t>(l) * words;
      std::int64_t c = 0;
      for (std::size_t w = 0; w < words; ++w) c += std::popcount(a[w] ^ b[w]);
      m[static_cast<std::size_t>(j) * k + static_cast<std::size_t>(l)] = c;
    }
  } else {
#pragma omp parallel for schedule(dynamic, 1)
    for (std::ptrdiff_t p = 0; p < np; ++p) {
      const auto [j, l] = pairs[static_cast<std::size_t>(p)];
      std::int64_t c = 0;
      for (std::size_t i = 0; i < n; ++i) c += t.hard(i, j) != t.hard(i, l);
      m[static_cast<std::size_t>(j) * k + static_cast<std::size_t>(l)] = c;
    }
  }
  mirror(m, k);
  return m;
}

namespace {
double half_l1(std::span<const double> p, std::span<const double> q) {
  double s = 0.0;
  for (std::size_t c = 0; c < p.size(); ++c) s += std::abs(p[c] - q[c]);
  return 0.5 * s;
}
}  // namespace

std::vector<double> soft_l1_sums_serial(const AnnotationTable& t) {
  require_kind(t, LabelKind::soft);
  const std::size_t k = k_of(t);
  std::vector<double> m(k * k, 0.0);
  for (std::size_t i = 0; i < t.size(); ++i)
    for (std::size_t j = 0; j < k; ++j)
      for (std::size_t l = j + 1; l < k; ++l)
        m[j * k + l] += half_l1(t.soft(i, static_cast<int>(j)), t.soft(i, static_cast<int>(l)));
  mirror(m, k);
  return m;
}

std::vector<double> soft_l1_sums_omp(const AnnotationTable& t) {
  require_kind(t, LabelKind::soft);
  const std::size_t k = k_of(t);
  std::vector<double> m(k * k, 0.0);
  const auto pairs = upper_pairs(static_cast<int>(k));
  std::vector<double> acc(pairs.size(), 0.0);
  // Each thread owns a slice of pairs and walks the samples in cache-sized
  // blocks; per-pair accumulation stays in sample order, so the sums are
  // bitwise equal to the serial loop.
  constexpr std::size_t kBlock = 256;
#pragma omp parallel
  {
    const auto nt = static_cast<std::size_t>(omp_get_num_threads());
    const auto id = static_cast<std::size_t>(omp_get_thread_num());
    const std::size_t lo = pairs.size() * id / nt, hi = pairs.size() * (id + 1) / nt;
    for (std::size_t b = 0; b < t.size(); b += kBlock) {
      const std::size_t e = std::min(t.size(), b + kBlock);
      for (std::size_t p = lo; p < hi; ++p) {
        const auto [j, l] = pairs[p];
        double s = acc[p];
        for (std::size_t i = b; i < e; ++i) s += half_l1(t.soft(i, j), t.soft(i, l));
        acc[p] = s;
      }
    }
  }
  for (std::size_t p = 0; p < pairs.size(); ++p)
    m[static_cast<std::size_t>(pairs[p].first) * k + static_cast<std::size_t>(pairs[p].second)] = acc[p];
  mirror(m, k);
  return m;
}

}  // namespace credal::kernels
