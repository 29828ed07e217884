#pragma once

// Thin FFTW wrapper.
//
// Plans are created once per (size, direction) under a mutex, with
// FFTW_ESTIMATE | FFTW_UNALIGNED so that the chosen algorithm (and therefore
// every output bit) does not depend on timing or buffer alignment. Executing
// a plan on new arrays is thread-safe in FFTW.

#include <fftw3.h>

#include <complex>
#include <cstddef>
#include <map>
#include <mutex>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

namespace sphcoint::fft {

using cplx = std::complex<double>;

enum class Direction : int { forward = FFTW_FORWARD, backward = FFTW_BACKWARD };

namespace detail {

class PlanCache {
 public:
  static PlanCache& instance() {
    static PlanCache cache;
    return cache;
  }

  fftw_plan get(std::size_t n, Direction dir) {
    std::lock_guard lock(mutex_);
    auto key = std::make_pair(n, static_cast<int>(dir));
    if (auto it = plans_.find(key); it != plans_.end()) return it->second;
    std::vector<cplx> in(n), out(n);
    fftw_plan plan = fftw_plan_dft_1d(static_cast<int>(n), reinterpret_cast<fftw_complex*>(in.data()),
                                      reinterpret_cast<fftw_complex*>(out.data()), static_cast<int>(dir),
                                      FFTW_ESTIMATE | FFTW_UNALIGNED);
    if (plan == nullptr) throw std::runtime_error("fft: plan creation failed");
    plans_.emplace(key, plan);
    return plan;
  }

  PlanCache(const PlanCache&) = delete;
  PlanCache& operator=(const PlanCache&) = delete;

 private:
  PlanCache() = default;
  ~PlanCache() {
    for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
  }

  std::mutex mutex_;
  std::map<std::pair<std::size_t, int>, fftw_plan> plans_;
};

}  // namespace detail

/// Unnormalized DFT: out[k] = sum_j in[j] exp(-+ 2 pi i j k / n).
inline std::vector<cplx> transform(std::span<const cplx> in, Direction dir = Direction::forward) {
  const std::size_t n = in.size();
  if (n == 0) return {};
  std::vector<cplx> src(in.begin(), in.end());
  std::vector<cplx> out(n);
  fftw_plan plan = detail::PlanCache::instance().get(n, dir);
  fftw_execute_dft(plan, reinterpret_cast<fftw_complex*>(src.data()), reinterpret_cast<fftw_complex*>(out.data()));
  return out;
}

/// Forward DFT of a real sequence (full complex spectrum of length n).
inline std::vector<cplx> transform_real(std::span<const double> in) {
  std::vector<cplx> src(in.begin(), in.end());
  return transform(src, Direction::forward);
}

}  // namespace sphcoint::fft
