#include <cmath>

#include "fdm/kernels.hpp"

namespace fdm::kernels::scalar {

void edge_geometry(std::span<const double> xyz, std::span<const Index> start, std::span<const Index> end,
                   std::span<double> vectors, std::span<double> lengths) {
  for (std::size_t i = 0; i < start.size(); ++i) {
    const double* a = xyz.data() + 3 * static_cast<std::size_t>(start[i]);
    const double* b = xyz.data() + 3 * static_cast<std::size_t>(end[i]);
    const double dx = a[0] - b[0];
    const double dy = a[1] - b[1];
    const double dz = a[2] - b[2];
    vectors[3 * i + 0] = dx;
    vectors[3 * i + 1] = dy;
    vectors[3 * i + 2] = dz;
    lengths[i] = std::sqrt(dx * dx + dy * dy + dz * dz);
  }
}

void adam_update(std::span<double> params, std::span<const double> grads, std::span<double> first_moment,
                 std::span<double> second_moment, const AdamCoefficients& c) {
  const double one_minus_beta1 = 1.0 - c.beta1;
  const double one_minus_beta2 = 1.0 - c.beta2;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    const double m = c.beta1 * first_moment[i] + one_minus_beta1 * g;
    const double v = c.beta2 * second_moment[i] + one_minus_beta2 * (g * g);
    first_moment[i] = m;
    second_moment[i] = v;
    const double m_hat = m * c.bias_correction1;
    const double v_hat = v * c.bias_correction2;
    params[i] -= (c.learning_rate * m_hat) / (std::sqrt(v_hat) + c.epsilon);
  }
}

void sgd_update(std::span<double> params, std::span<const double> grads, double learning_rate) {
  for (std::size_t i = 0; i < params.size(); ++i) params[i] -= learning_rate * grads[i];
}

}  // namespace fdm::kernels::scalar
