#include "kamtorus/fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>

namespace kt::fft {

namespace {

struct PlanCache {
  std::mutex mu;
  std::map<std::pair<std::vector<int>, int>, fftw_plan> plans;

  fftw_plan get(const std::vector<int>& shape, int sign) {
    std::lock_guard<std::mutex> lock(mu);
    auto key = std::make_pair(shape, sign);
    auto it = plans.find(key);
    if (it != plans.end()) return it->second;
    size_t n = 1;
    for (int s : shape) n *= static_cast<size_t>(s);
    CVec scratch(n);
    // FFTW_ESTIMATE keeps plan selection (and hence rounding) reproducible.
    fftw_plan p = fftw_plan_dft(static_cast<int>(shape.size()), shape.data(),
                                reinterpret_cast<fftw_complex*>(scratch.data()),
                                reinterpret_cast<fftw_complex*>(scratch.data()),
                                sign > 0 ? FFTW_BACKWARD : FFTW_FORWARD, FFTW_ESTIMATE);
    plans.emplace(key, p);
    return p;
  }
};

PlanCache& cache() {
  static PlanCache c;
  return c;
}

}  // namespace

void transform(cplx* data, const std::vector<int>& shape, int sign) {
  fftw_plan p = cache().get(shape, sign);
  fftw_execute_dft(p, reinterpret_cast<fftw_complex*>(data), reinterpret_cast<fftw_complex*>(data));
}

}  // namespace kt::fft
