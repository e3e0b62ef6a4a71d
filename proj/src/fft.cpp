#include "rainbow/fft.hpp"

#include <fftw3.h>

namespace rainbow::fft {

std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

void set_planner_threads(int threads) {
    static const bool initialized = fftw_init_threads() != 0;
    if (initialized) fftw_plan_with_nthreads(threads < 1 ? 1 : threads);
}

void PlanDeleter::operator()(fftw_plan_s* p) const {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(p);
}

}  // namespace rainbow::fft
