#include "fdm/kernels.hpp"

#include <atomic>
#include <cmath>

#include "fdm/error.hpp"

namespace fdm::kernels {
namespace {

bool detect_avx2() noexcept {
#if defined(__x86_64__) || defined(__i386__)
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2");
#else
  return false;
#endif
}

std::atomic<Backend>& backend_slot() {
  static std::atomic<Backend> slot{detect_avx2() ? Backend::Avx2 : Backend::Scalar};
  return slot;
}

}  // namespace

std::string_view to_string(Backend backend) noexcept {
  return backend == Backend::Avx2 ? "avx2" : "scalar";
}

bool backend_supported(Backend backend) noexcept {
  static const bool avx2 = detect_avx2();
  return backend == Backend::Scalar || avx2;
}

Backend active_backend() noexcept { return backend_slot().load(std::memory_order_relaxed); }

void set_backend(Backend backend) {
  if (!backend_supported(backend))
    throw Error(ErrorCode::InvalidArgument, std::string("kernel backend ") + std::string(to_string(backend)) +
                                                " is not supported on this CPU");
  backend_slot().store(backend, std::memory_order_relaxed);
}

AdamCoefficients AdamCoefficients::at_step(double learning_rate, double beta1, double beta2, double epsilon,
                                           int step) {
  return {learning_rate,
          beta1,
          beta2,
          epsilon,
          1.0 / (1.0 - std::pow(beta1, step)),
          1.0 / (1.0 - std::pow(beta2, step))};
}

void edge_geometry(std::span<const double> xyz, std::span<const Index> start, std::span<const Index> end,
                   std::span<double> vectors, std::span<double> lengths) {
  if (active_backend() == Backend::Avx2)
    avx2::edge_geometry(xyz, start, end, vectors, lengths);
  else
    scalar::edge_geometry(xyz, start, end, vectors, lengths);
}

void adam_update(std::span<double> params, std::span<const double> grads, std::span<double> first_moment,
                 std::span<double> second_moment, const AdamCoefficients& c) {
  if (active_backend() == Backend::Avx2)
    avx2::adam_update(params, grads, first_moment, second_moment, c);
  else
    scalar::adam_update(params, grads, first_moment, second_moment, c);
}

void sgd_update(std::span<double> params, std::span<const double> grads, double learning_rate) {
  if (active_backend() == Backend::Avx2)
    avx2::sgd_update(params, grads, learning_rate);
  else
    scalar::sgd_update(params, grads, learning_rate);
}

}  // namespace fdm::kernels
