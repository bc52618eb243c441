#pragma once

#include <fftw3.h>

#include <mutex>
#include <stdexcept>

namespace ew2d::detail {

inline std::mutex& fftw_mutex() {
  static std::mutex m;
  return m;
}

// In-place-style r2c/c2r transform pair for an n x n real grid.
// One instance per worker; execute() calls are not synchronized.
class FftPair {
public:
  explicit FftPair(int n) : n_(n) {
    real_ = fftw_alloc_real(static_cast<size_t>(n) * n);
    spec_ = fftw_alloc_complex(static_cast<size_t>(n) * (n / 2 + 1));
    if (!real_ || !spec_) throw std::bad_alloc();
    std::lock_guard<std::mutex> lock(fftw_mutex());
    fwd_ = fftw_plan_dft_r2c_2d(n, n, real_, spec_, FFTW_MEASURE);
    inv_ = fftw_plan_dft_c2r_2d(n, n, spec_, real_, FFTW_MEASURE);
    if (!fwd_ || !inv_) throw std::runtime_error("FFTW plan creation failed");
  }

  FftPair(const FftPair&) = delete;
  FftPair& operator=(const FftPair&) = delete;

  ~FftPair() {
    std::lock_guard<std::mutex> lock(fftw_mutex());
    fftw_destroy_plan(fwd_);
    fftw_destroy_plan(inv_);
    fftw_free(real_);
    fftw_free(spec_);
  }

  int n() const { return n_; }
  int spec_cols() const { return n_ / 2 + 1; }
  double* real() { return real_; }
  fftw_complex* spec() { return spec_; }

  void forward() { fftw_execute(fwd_); }
  // Unnormalized; caller divides by n*n.
  void inverse() { fftw_execute(inv_); }

private:
  int n_;
  double* real_;
  fftw_complex* spec_;
  fftw_plan fwd_;
  fftw_plan inv_;
};

// splitmix64 finalizer, used to derive independent per-(replica, step) seeds.
inline uint64_t mix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline uint64_t counter_seed(uint64_t master, uint64_t replica, uint64_t step) {
  return mix64(mix64(mix64(master) ^ replica) ^ step);
}

}  // namespace ew2d::detail
