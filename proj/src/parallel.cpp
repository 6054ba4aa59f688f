#include "credal/parallel.hpp"

#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace credal {

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

void set_threads(int n) {
  if (n < 1) throw std::invalid_argument("thread count must be at least 1");
#ifdef _OPENMP
  omp_set_num_threads(n);
#endif
}

}  // namespace credal
