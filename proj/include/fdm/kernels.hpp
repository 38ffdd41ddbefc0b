#pragma once

// Data-parallel inner loops with a scalar reference implementation and an AVX2
// variant. The active backend is chosen at startup from CPU features; both
// variants produce bit-identical results (no fused multiply-add, same
// operation order).

#include <span>
#include <string_view>

#include "fdm/matrix.hpp"

namespace fdm::kernels {

enum class Backend { Scalar, Avx2 };

std::string_view to_string(Backend backend) noexcept;
bool backend_supported(Backend backend) noexcept;
Backend active_backend() noexcept;
/// Throws Error(InvalidArgument) if the CPU cannot run `backend`.
void set_backend(Backend backend);

struct AdamCoefficients {
  double learning_rate;
  double beta1;
  double beta2;
  double epsilon;
  double bias_correction1;  // 1 / (1 - beta1^t)
  double bias_correction2;  // 1 / (1 - beta2^t)

  static AdamCoefficients at_step(double learning_rate, double beta1, double beta2, double epsilon, int step);
};

/// vectors (m x 3, row-major) = X[start] - X[end]; lengths = row norms.
/// xyz is n x 3 row-major.
void edge_geometry(std::span<const double> xyz, std::span<const Index> start, std::span<const Index> end,
                   std::span<double> vectors, std::span<double> lengths);

void adam_update(std::span<double> params, std::span<const double> grads, std::span<double> first_moment,
                 std::span<double> second_moment, const AdamCoefficients& c);

void sgd_update(std::span<double> params, std::span<const double> grads, double learning_rate);

namespace scalar {
void edge_geometry(std::span<const double> xyz, std::span<const Index> start, std::span<const Index> end,
                   std::span<double> vectors, std::span<double> lengths);
void adam_update(std::span<double> params, std::span<const double> grads, std::span<double> first_moment,
                 std::span<double> second_moment, const AdamCoefficients& c);
void sgd_update(std::span<double> params, std::span<const double> grads, double learning_rate);
}  // namespace scalar

// Only callable when backend_supported(Backend::Avx2).
namespace avx2 {
void edge_geometry(std::span<const double> xyz, std::span<const Index> start, std::span<const Index> end,
                   std::span<double> vectors, std::span<double> lengths);
void adam_update(std::span<double> params, std::span<const double> grads, std::span<double> first_moment,
                 std::span<double> second_moment, const AdamCoefficients& c);
void sgd_update(std::span<double> params, std::span<const double> grads, double learning_rate);
}  // namespace avx2

}  // namespace fdm::kernels
