// OpenMP variants. Work items are independent and write to preallocated
// slots, so the output matches the serial reference element for element.

#include <exception>
#include <mutex>

#include "v2x/kernels.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace v2x::kernels {

bool openmp_available() {
#ifdef _OPENMP
  return true;
#else
  return false;
#endif
}

namespace detail {

namespace {

// Exceptions must not escape an OpenMP region; keep the first one and rethrow.
class FirstError {
public:
  template <typename F>
  void run(F&& f) {
    try {
      f();
    } catch (...) {
      std::lock_guard lock(mutex_);
      if (!error_) error_ = std::current_exception();
    }
  }
  void rethrow() const {
    if (error_) std::rethrow_exception(error_);
  }

private:
  std::mutex mutex_;
  std::exception_ptr error_;
};

}  // namespace

std::vector<LinkCell> link_sweep_omp(std::span<const LinkPoint> points,
                                     const LinkSweepParams& params) {
  std::vector<LinkCell> cells(points.size());
  FirstError errors;
  const auto n = static_cast<std::int64_t>(points.size());
#pragma omp parallel for schedule(dynamic)
  for (std::int64_t i = 0; i < n; ++i) {
    errors.run([&] {
      cells[static_cast<std::size_t>(i)] =
          simulate_point(points[static_cast<std::size_t>(i)], static_cast<std::size_t>(i), params);
    });
  }
  errors.rethrow();
  return cells;
}

std::vector<sim::MetricsLog> run_episodes_omp(std::span<const ExperimentConfig> configs,
                                              std::span<const std::uint64_t> seeds,
                                              const risk::BehaviorCatalog& catalog) {
  std::vector<sim::MetricsLog> logs(configs.size());
  FirstError errors;
  const auto n = static_cast<std::int64_t>(configs.size());
#pragma omp parallel for schedule(dynamic)
  for (std::int64_t i = 0; i < n; ++i) {
    errors.run([&] {
      const auto k = static_cast<std::size_t>(i);
      logs[k] = sim::run_episode(configs[k], seeds[k], catalog);
    });
  }
  errors.rethrow();
  return logs;
}

}  // namespace detail

}  // namespace v2x::kernels
