#include "klap/parallel.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace klap {

int thread_count() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

void set_thread_count(int n) {
  if (n < 1) return;
#ifdef _OPENMP
  omp_set_num_threads(n);
#endif
}

}  // namespace klap
