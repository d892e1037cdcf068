// Compiled with -mavx2 -mfma; only reached after a runtime CPU check.

#include <immintrin.h>

#include <algorithm>
#include <cmath>

#include "iongate/kernels.hpp"

namespace iongate::kernels {
namespace {

constexpr std::size_t kLanes = 4;

void caxpy(std::size_t n, double cr, double ci, const double* xr, const double* xi, double* yr,
           double* yi) {
  const __m256d vcr = _mm256_set1_pd(cr);
  const __m256d vci = _mm256_set1_pd(ci);
  std::size_t k = 0;
  for (; k + kLanes <= n; k += kLanes) {
    const __m256d a = _mm256_loadu_pd(xr + k);
    const __m256d b = _mm256_loadu_pd(xi + k);
    __m256d r = _mm256_loadu_pd(yr + k);
    __m256d i = _mm256_loadu_pd(yi + k);
    r = _mm256_fmadd_pd(vcr, a, r);
    r = _mm256_fnmadd_pd(vci, b, r);
    i = _mm256_fmadd_pd(vcr, b, i);
    i = _mm256_fmadd_pd(vci, a, i);
    _mm256_storeu_pd(yr + k, r);
    _mm256_storeu_pd(yi + k, i);
  }
  for (; k < n; ++k) {
    const double a = xr[k];
    const double b = xi[k];
    yr[k] += cr * a - ci * b;
    yi[k] += cr * b + ci * a;
  }
}

void caxpy_w(std::size_t n, double cr, double ci, const double* w, const double* xr,
             const double* xi, double* yr, double* yi) {
  const __m256d vcr = _mm256_set1_pd(cr);
  const __m256d vci = _mm256_set1_pd(ci);
  std::size_t k = 0;
  for (; k + kLanes <= n; k += kLanes) {
    const __m256d vw = _mm256_loadu_pd(w + k);
    const __m256d tr = _mm256_mul_pd(vcr, vw);
    const __m256d ti = _mm256_mul_pd(vci, vw);
    const __m256d a = _mm256_loadu_pd(xr + k);
    const __m256d b = _mm256_loadu_pd(xi + k);
    __m256d r = _mm256_loadu_pd(yr + k);
    __m256d i = _mm256_loadu_pd(yi + k);
    r = _mm256_fmadd_pd(tr, a, r);
    r = _mm256_fnmadd_pd(ti, b, r);
    i = _mm256_fmadd_pd(tr, b, i);
    i = _mm256_fmadd_pd(ti, a, i);
    _mm256_storeu_pd(yr + k, r);
    _mm256_storeu_pd(yi + k, i);
  }
  for (; k < n; ++k) {
    const double tr = cr * w[k];
    const double ti = ci * w[k];
    yr[k] += tr * xr[k] - ti * xi[k];
    yi[k] += tr * xi[k] + ti * xr[k];
  }
}

void cmul_set(std::size_t n, const double* wr, const double* wi, const double* xr,
              const double* xi, double* yr, double* yi) {
  std::size_t k = 0;
  for (; k + kLanes <= n; k += kLanes) {
    const __m256d pr = _mm256_loadu_pd(wr + k);
    const __m256d pi = _mm256_loadu_pd(wi + k);
    const __m256d a = _mm256_loadu_pd(xr + k);
    const __m256d b = _mm256_loadu_pd(xi + k);
    _mm256_storeu_pd(yr + k, _mm256_fmsub_pd(pr, a, _mm256_mul_pd(pi, b)));
    _mm256_storeu_pd(yi + k, _mm256_fmadd_pd(pr, b, _mm256_mul_pd(pi, a)));
  }
  for (; k < n; ++k) {
    const double a = xr[k];
    const double b = xi[k];
    yr[k] = wr[k] * a - wi[k] * b;
    yi[k] = wr[k] * b + wi[k] * a;
  }
}

void cscale_set(std::size_t n, double cr, double ci, const double* xr, const double* xi,
                double* yr, double* yi) {
  const __m256d vcr = _mm256_set1_pd(cr);
  const __m256d vci = _mm256_set1_pd(ci);
  std::size_t k = 0;
  for (; k + kLanes <= n; k += kLanes) {
    const __m256d a = _mm256_loadu_pd(xr + k);
    const __m256d b = _mm256_loadu_pd(xi + k);
    _mm256_storeu_pd(yr + k, _mm256_fmsub_pd(vcr, a, _mm256_mul_pd(vci, b)));
    _mm256_storeu_pd(yi + k, _mm256_fmadd_pd(vcr, b, _mm256_mul_pd(vci, a)));
  }
  for (; k < n; ++k) {
    const double a = xr[k];
    const double b = xi[k];
    yr[k] = cr * a - ci * b;
    yi[k] = cr * b + ci * a;
  }
}

void axpy(std::size_t n, double a, const double* x, double* y) {
  const __m256d va = _mm256_set1_pd(a);
  std::size_t k = 0;
  for (; k + kLanes <= n; k += kLanes) {
    _mm256_storeu_pd(y + k, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + k), _mm256_loadu_pd(y + k)));
  }
  for (; k < n; ++k) y[k] += a * x[k];
}

void add_scaled(std::size_t n, const double* x, double a, const double* z, double* out) {
  const __m256d va = _mm256_set1_pd(a);
  std::size_t k = 0;
  for (; k + kLanes <= n; k += kLanes) {
    _mm256_storeu_pd(out + k,
                     _mm256_fmadd_pd(va, _mm256_loadu_pd(z + k), _mm256_loadu_pd(x + k)));
  }
  for (; k < n; ++k) out[k] = x[k] + a * z[k];
}

double scaled_sq_norm(std::size_t n, const double* e, const double* y0, const double* y1,
                      double atol, double rtol) {
  const __m256d vatol = _mm256_set1_pd(atol);
  const __m256d vrtol = _mm256_set1_pd(rtol);
  const __m256d sign = _mm256_set1_pd(-0.0);
  __m256d acc = _mm256_setzero_pd();
  std::size_t k = 0;
  for (; k + kLanes <= n; k += kLanes) {
    const __m256d a0 = _mm256_andnot_pd(sign, _mm256_loadu_pd(y0 + k));
    const __m256d a1 = _mm256_andnot_pd(sign, _mm256_loadu_pd(y1 + k));
    const __m256d sc = _mm256_fmadd_pd(vrtol, _mm256_max_pd(a0, a1), vatol);
    const __m256d r = _mm256_div_pd(_mm256_loadu_pd(e + k), sc);
    acc = _mm256_fmadd_pd(r, r, acc);
  }
  alignas(32) double lanes[kLanes];
  _mm256_store_pd(lanes, acc);
  double total = (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
  for (; k < n; ++k) {
    const double sc = atol + rtol * std::max(std::abs(y0[k]), std::abs(y1[k]));
    const double r = e[k] / sc;
    total += r * r;
  }
  return total;
}

}  // namespace

const KernelTable* avx2_table() {
  static const KernelTable table{"avx2",     caxpy, caxpy_w,    cmul_set,
                                 cscale_set, axpy,  add_scaled, scaled_sq_norm};
  return &table;
}

}  // namespace iongate::kernels
