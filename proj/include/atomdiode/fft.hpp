#pragma once

#include <fftw3.h>

#include <complex>
#include <cstdlib>
#include <mutex>
#include <new>
#include <vector>

namespace atomdiode {

// 64-byte aligned allocator so FFTW SIMD kernels can run in place on
// std::vector storage.
template <class T>
struct AlignedAllocator {
    using value_type = T;
    AlignedAllocator() = default;
    template <class U>
    AlignedAllocator(const AlignedAllocator<U>&) {}
    T* allocate(std::size_t n) {
        return static_cast<T*>(::operator new(n * sizeof(T), std::align_val_t{64}));
    }
    void deallocate(T* p, std::size_t) { ::operator delete(p, std::align_val_t{64}); }
    template <class U>
    bool operator==(const AlignedAllocator<U>&) const { return true; }
};

using CplxVector = std::vector<std::complex<double>, AlignedAllocator<std::complex<double>>>;

inline std::mutex& fftw_planner_mutex() {
    static std::mutex m;
    return m;
}

// In-place complex transforms of a fixed length. Plans use FFTW_ESTIMATE so
// the chosen algorithm, and therefore the rounding, is reproducible across
// runs. fftw_execute_dft on distinct buffers is safe from multiple threads.
class Fft {
  public:
    explicit Fft(int n) : n_(n) {
        CplxVector scratch(n);
        auto* p = reinterpret_cast<fftw_complex*>(scratch.data());
        std::lock_guard<std::mutex> lock(fftw_planner_mutex());
        fwd_ = fftw_plan_dft_1d(n, p, p, FFTW_FORWARD, FFTW_ESTIMATE);
        bwd_ = fftw_plan_dft_1d(n, p, p, FFTW_BACKWARD, FFTW_ESTIMATE);
    }
    ~Fft() {
        std::lock_guard<std::mutex> lock(fftw_planner_mutex());
        fftw_destroy_plan(fwd_);
        fftw_destroy_plan(bwd_);
    }
    Fft(const Fft&) = delete;
    Fft& operator=(const Fft&) = delete;

    int size() const { return n_; }

    // Unnormalized; forward followed by backward scales by n.
    void forward(std::complex<double>* data) const {
        auto* p = reinterpret_cast<fftw_complex*>(data);
        fftw_execute_dft(fwd_, p, p);
    }
    void backward(std::complex<double>* data) const {
        auto* p = reinterpret_cast<fftw_complex*>(data);
        fftw_execute_dft(bwd_, p, p);
    }

  private:
    int n_;
    fftw_plan fwd_;
    fftw_plan bwd_;
};

}  // namespace atomdiode
