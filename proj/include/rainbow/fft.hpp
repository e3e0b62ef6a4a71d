#pragma once

#include <fftw3.h>

#include <complex>
#include <cstddef>
#include <memory>
#include <mutex>

namespace rainbow::fft {

/// FFTW planning is not thread-safe; every plan creation and destruction
/// goes through this lock. Execution on new arrays is thread-safe.
std::mutex& planner_mutex();

/// Sets the thread count used by subsequently created plans (1 = serial).
/// Caller must hold planner_mutex().
void set_planner_threads(int threads);

struct PlanDeleter {
    void operator()(fftw_plan_s* p) const;
};
using Plan = std::unique_ptr<fftw_plan_s, PlanDeleter>;

struct FreeDeleter {
    void operator()(void* p) const { fftw_free(p); }
};

/// SIMD-aligned buffer allocated by FFTW, so that any two buffers share the
/// alignment required by new-array execution.
template <class T>
class Buffer {
public:
    Buffer() = default;
    explicit Buffer(std::size_t n)
        : data_(static_cast<T*>(fftw_malloc(sizeof(T) * (n == 0 ? 1 : n)))), size_(n) {
        if (!data_) throw std::bad_alloc();
    }
    [[nodiscard]] T* data() const { return data_.get(); }
    [[nodiscard]] std::size_t size() const { return size_; }
    T& operator[](std::size_t k) const { return data_.get()[k]; }

private:
    std::unique_ptr<T, FreeDeleter> data_;
    std::size_t size_ = 0;
};

using RealBuffer = Buffer<double>;
using ComplexBuffer = Buffer<std::complex<double>>;

inline fftw_complex* as_fftw(std::complex<double>* p) { return reinterpret_cast<fftw_complex*>(p); }

}  // namespace rainbow::fft
