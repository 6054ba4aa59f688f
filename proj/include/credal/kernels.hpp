#pragma once

// Data-parallel hot loops. Each kernel has a plain serial version that the
// tests treat as the reference and an OpenMP version used in production.

#include <cstdint>
#include <span>
#include <vector>

#include "credal/credal_set.hpp"

namespace credal {

class AnnotationTable;

enum class Exec { serial, parallel };

namespace kernels {

/// joint_tv_exact for every listed vertex pair.
std::vector<double> joint_tv_pairs_serial(const CredalSpec& spec, std::span<const VertexPair> pairs,
                                          const QuadratureConfig& cfg);
std::vector<double> joint_tv_pairs_omp(const CredalSpec& spec, std::span<const VertexPair> pairs,
                                       const QuadratureConfig& cfg);
std::vector<double> joint_tv_pairs(const CredalSpec& spec, std::span<const VertexPair> pairs,
                                   const QuadratureConfig& cfg, Exec exec);

/// k x k counts of samples on which annotators j and j' give different hard
/// labels (row-major, symmetric, zero diagonal).
std::vector<std::int64_t> disagreement_counts_serial(const AnnotationTable& table);
/// Bit-packed popcount version for binary labels, pair-parallel otherwise.
std::vector<std::int64_t> disagreement_counts_omp(const AnnotationTable& table);

/// k x k sums over samples of half-L1 distances between soft label vectors.
std::vector<double> soft_l1_sums_serial(const AnnotationTable& table);
std::vector<double> soft_l1_sums_omp(const AnnotationTable& table);

}  // namespace kernels
}  // namespace credal
