#include "ddim/parallel.hpp"

#ifdef DDIM_HAVE_OPENMP
#include <omp.h>
#endif

namespace ddim {

namespace {
int g_workers = 0;
}

int worker_count() {
#ifdef DDIM_HAVE_OPENMP
  return g_workers > 0 ? g_workers : omp_get_max_threads();
#else
  return 1;
#endif
}

void set_worker_count(int n) {
  g_workers = n > 0 ? n : 0;
#ifdef DDIM_HAVE_OPENMP
  if (n > 0) omp_set_num_threads(n);
#endif
}

}  // namespace ddim
