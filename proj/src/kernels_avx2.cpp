#include "fdm/kernels.hpp"

#if defined(__x86_64__) || defined(__i386__)

#include <immintrin.h>

#define FDM_AVX2 __attribute__((target("avx2")))

namespace fdm::kernels::avx2 {

FDM_AVX2 void edge_geometry(std::span<const double> xyz, std::span<const Index> start, std::span<const Index> end,
                            std::span<double> vectors, std::span<double> lengths) {
  const std::size_t m = start.size();
  const std::size_t blocked = m - m % 4;
  const double* base = xyz.data();
  alignas(32) double dx[4], dy[4], dz[4];

  for (std::size_t i = 0; i < blocked; i += 4) {
    __m128i s = _mm_loadu_si128(reinterpret_cast<const __m128i*>(start.data() + i));
    __m128i e = _mm_loadu_si128(reinterpret_cast<const __m128i*>(end.data() + i));
    s = _mm_add_epi32(s, _mm_add_epi32(s, s));
    e = _mm_add_epi32(e, _mm_add_epi32(e, e));

    const __m256d vx = _mm256_sub_pd(_mm256_i32gather_pd(base, s, 8), _mm256_i32gather_pd(base, e, 8));
    const __m256d vy = _mm256_sub_pd(_mm256_i32gather_pd(base + 1, s, 8), _mm256_i32gather_pd(base + 1, e, 8));
    const __m256d vz = _mm256_sub_pd(_mm256_i32gather_pd(base + 2, s, 8), _mm256_i32gather_pd(base + 2, e, 8));

    const __m256d sq = _mm256_add_pd(_mm256_add_pd(_mm256_mul_pd(vx, vx), _mm256_mul_pd(vy, vy)),
                                     _mm256_mul_pd(vz, vz));
    _mm256_storeu_pd(lengths.data() + i, _mm256_sqrt_pd(sq));

    _mm256_store_pd(dx, vx);
    _mm256_store_pd(dy, vy);
    _mm256_store_pd(dz, vz);
    double* out = vectors.data() + 3 * i;
    for (int k = 0; k < 4; ++k) {
      out[3 * k + 0] = dx[k];
      out[3 * k + 1] = dy[k];
      out[3 * k + 2] = dz[k];
    }
  }
  scalar::edge_geometry(xyz, start.subspan(blocked), end.subspan(blocked), vectors.subspan(3 * blocked),
                        lengths.subspan(blocked));
}

FDM_AVX2 void adam_update(std::span<double> params, std::span<const double> grads, std::span<double> first_moment,
                          std::span<double> second_moment, const AdamCoefficients& c) {
  const std::size_t n = params.size();
  const std::size_t blocked = n - n % 4;
  const __m256d beta1 = _mm256_set1_pd(c.beta1);
  const __m256d beta2 = _mm256_set1_pd(c.beta2);
  const __m256d one_minus_beta1 = _mm256_set1_pd(1.0 - c.beta1);
  const __m256d one_minus_beta2 = _mm256_set1_pd(1.0 - c.beta2);
  const __m256d bc1 = _mm256_set1_pd(c.bias_correction1);
  const __m256d bc2 = _mm256_set1_pd(c.bias_correction2);
  const __m256d lr = _mm256_set1_pd(c.learning_rate);
  const __m256d eps = _mm256_set1_pd(c.epsilon);

  for (std::size_t i = 0; i < blocked; i += 4) {
    const __m256d g = _mm256_loadu_pd(grads.data() + i);
    const __m256d m = _mm256_add_pd(_mm256_mul_pd(beta1, _mm256_loadu_pd(first_moment.data() + i)),
                                    _mm256_mul_pd(one_minus_beta1, g));
    const __m256d v = _mm256_add_pd(_mm256_mul_pd(beta2, _mm256_loadu_pd(second_moment.data() + i)),
                                    _mm256_mul_pd(one_minus_beta2, _mm256_mul_pd(g, g)));
    _mm256_storeu_pd(first_moment.data() + i, m);
    _mm256_storeu_pd(second_moment.data() + i, v);
    const __m256d m_hat = _mm256_mul_pd(m, bc1);
    const __m256d v_hat = _mm256_mul_pd(v, bc2);
    const __m256d step = _mm256_div_pd(_mm256_mul_pd(lr, m_hat), _mm256_add_pd(_mm256_sqrt_pd(v_hat), eps));
    _mm256_storeu_pd(params.data() + i, _mm256_sub_pd(_mm256_loadu_pd(params.data() + i), step));
  }
  scalar::adam_update(params.subspan(blocked), grads.subspan(blocked), first_moment.subspan(blocked),
                      second_moment.subspan(blocked), c);
}

FDM_AVX2 void sgd_update(std::span<double> params, std::span<const double> grads, double learning_rate) {
  const std::size_t n = params.size();
  const std::size_t blocked = n - n % 4;
  const __m256d lr = _mm256_set1_pd(learning_rate);
  for (std::size_t i = 0; i < blocked; i += 4) {
    const __m256d p = _mm256_loadu_pd(params.data() + i);
    _mm256_storeu_pd(params.data() + i, _mm256_sub_pd(p, _mm256_mul_pd(lr, _mm256_loadu_pd(grads.data() + i))));
  }
  scalar::sgd_update(params.subspan(blocked), grads.subspan(blocked), learning_rate);
}

}  // namespace fdm::kernels::avx2

#else

namespace fdm::kernels::avx2 {

void edge_geometry(std::span<const double> xyz, std::span<const Index> start, std::span<const Index> end,
                   std::span<double> vectors, std::span<double> lengths) {
  scalar::edge_geometry(xyz, start, end, vectors, lengths);
}

void adam_update(std::span<double> params, std::span<const double> grads, std::span<double> first_moment,
                 std::span<double> second_moment, const AdamCoefficients& c) {
  scalar::adam_update(params, grads, first_moment, second_moment, c);
}

void sgd_update(std::span<double> params, std::span<const double> grads, double learning_rate) {
  scalar::sgd_update(params, grads, learning_rate);
}

}  // namespace fdm::kernels::avx2

#endif
