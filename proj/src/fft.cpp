#include "fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <stdexcept>
#include <tuple>
#include <utility>
#include <vector>

namespace biharm::detail {

namespace {

// FFTW planning is not thread-safe; execution through the new-array interface
// is. Plans are created once per (size, dims, direction) and kept for the
// lifetime of the process.
class PlanCache {
 public:
  static PlanCache& instance() {
    static PlanCache cache;
    return cache;
  }

  fftw_plan get(int size, int dims, int sign) {
    std::lock_guard<std::mutex> lock(mutex_);
    auto key = std::make_tuple(size, dims, sign);
    auto it = plans_.find(key);
    if (it != plans_.end()) return it->second;
    std::size_t total = 1;
    for (int d = 0; d < dims; ++d) total *= static_cast<std::size_t>(size);
    std::vector<fftw_complex> a(total), b(total);
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    fftw_plan plan = nullptr;
    if (dims == 1) {
      plan = fftw_plan_dft_1d(size, a.data(), b.data(), sign, flags);
    } else if (dims == 2) {
      plan = fftw_plan_dft_2d(size, size, a.data(), b.data(), sign, flags);
    }
    if (plan == nullptr) throw std::runtime_error("fftw planning failed");
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
  std::map<std::tuple<int, int, int>, fftw_plan> plans_;
};

std::size_t total_size(int size, int dims) {
  std::size_t total = 1;
  for (int d = 0; d < dims; ++d) total *= static_cast<std::size_t>(size);
  return total;
}

}  // namespace

// FFTW's 2-D layout is row-major with the last index fastest; our flat layout
// has axis 0 fastest. The transform is symmetric in the two axes, so the
// layouts agree element by element.
void fft_forward(int size, int dims, std::span<const double> in, std::span<std::complex<double>> out) {
  const std::size_t n = total_size(size, dims);
  if (in.size() != n || out.size() != n) throw std::invalid_argument("fft_forward: size mismatch");
  std::vector<std::complex<double>> buf(n);
  for (std::size_t i = 0; i < n; ++i) buf[i] = {in[i], 0.0};
  fftw_plan plan = PlanCache::instance().get(size, dims, FFTW_FORWARD);
  fftw_execute_dft(plan, reinterpret_cast<fftw_complex*>(buf.data()),
                   reinterpret_cast<fftw_complex*>(out.data()));
  const double scale = 1.0 / static_cast<double>(n);
  for (auto& c : out) c *= scale;
}

void fft_inverse(int size, int dims, std::span<const std::complex<double>> in, std::span<double> out) {
  const std::size_t n = total_size(size, dims);
  if (in.size() != n || out.size() != n) throw std::invalid_argument("fft_inverse: size mismatch");
  std::vector<std::complex<double>> src(in.begin(), in.end());
  std::vector<std::complex<double>> dst(n);
  fftw_plan plan = PlanCache::instance().get(size, dims, FFTW_BACKWARD);
  fftw_execute_dft(plan, reinterpret_cast<fftw_complex*>(src.data()),
                   reinterpret_cast<fftw_complex*>(dst.data()));
  for (std::size_t i = 0; i < n; ++i) out[i] = dst[i].real();
}

}  // namespace biharm::detail
