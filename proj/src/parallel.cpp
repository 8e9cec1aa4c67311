#include "roma/parallel.hpp"

#include <cstdlib>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace roma {

int sim_thread_count() {
#ifdef _OPENMP
  static const int n = [] {
    int max = omp_get_max_threads();
    if (const char* env = std::getenv("ROMA_SIM_THREADS")) {
      try {
        int cap = std::stoi(env);
        if (cap >= 1 && cap < max) max = cap;
      } catch (...) {
        // ignore malformed values, keep the OpenMP default
      }
    }
    return max;
  }();
  return n;
#else
  return 1;
#endif
}

}  // namespace roma
