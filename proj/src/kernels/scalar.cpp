#include <algorithm>
#include <cmath>

#include "iongate/kernels.hpp"

namespace iongate::kernels {
namespace {

void caxpy(std::size_t n, double cr, double ci, const double* xr, const double* xi, double* yr,
           double* yi) {
  for (std::size_t k = 0; k < n; ++k) {
    const double a = xr[k];
    const double b = xi[k];
    yr[k] += cr * a - ci * b;
    yi[k] += cr * b + ci * a;
  }
}

void caxpy_w(std::size_t n, double cr, double ci, const double* w, const double* xr,
             const double* xi, double* yr, double* yi) {
  for (std::size_t k = 0; k < n; ++k) {
    const double tr = cr * w[k];
    const double ti = ci * w[k];
    yr[k] += tr * xr[k] - ti * xi[k];
    yi[k] += tr * xi[k] + ti * xr[k];
  }
}

void cmul_set(std::size_t n, const double* wr, const double* wi, const double* xr,
              const double* xi, double* yr, double* yi) {
  for (std::size_t k = 0; k < n; ++k) {
    const double a = xr[k];
    const double b = xi[k];
    yr[k] = wr[k] * a - wi[k] * b;
    yi[k] = wr[k] * b + wi[k] * a;
  }
}

void cscale_set(std::size_t n, double cr, double ci, const double* xr, const double* xi,
                double* yr, double* yi) {
  for (std::size_t k = 0; k < n; ++k) {
    const double a = xr[k];
    const double b = xi[k];
    yr[k] = cr * a - ci * b;
    yi[k] = cr * b + ci * a;
  }
}

void axpy(std::size_t n, double a, const double* x, double* y) {
  for (std::size_t k = 0; k < n; ++k) y[k] += a * x[k];
}

void add_scaled(std::size_t n, const double* x, double a, const double* z, double* out) {
  for (std::size_t k = 0; k < n; ++k) out[k] = x[k] + a * z[k];
}

double scaled_sq_norm(std::size_t n, const double* e, const double* y0, const double* y1,
                      double atol, double rtol) {
  double acc = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double sc = atol + rtol * std::max(std::abs(y0[k]), std::abs(y1[k]));
    const double r = e[k] / sc;
    acc += r * r;
  }
  return acc;
}

}  // namespace

const KernelTable& scalar_table() {
  static const KernelTable table{"scalar", caxpy,      caxpy_w,       cmul_set,
                                 cscale_set, axpy, add_scaled, scaled_sq_norm};
  return table;
}

}  // namespace iongate::kernels
