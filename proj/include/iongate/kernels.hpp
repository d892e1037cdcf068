#pragma once

// Data-parallel inner loops of the master-equation right-hand side.
//
// All complex data is stored split (separate real and imaginary arrays) so
// that one SIMD lane holds one matrix element. Every kernel exists as a scalar
// reference implementation and, when the CPU supports it, an AVX2/FMA
// variant. The variant is chosen once at first use; `IONGATE_SIMD=scalar`
// in the environment forces the reference path.

#include <cstddef>
#include <string_view>

namespace iongate::kernels {

struct KernelTable {
  std::string_view name;

  // y += c * x
  void (*caxpy)(std::size_t n, double cr, double ci, const double* xr, const double* xi, double* yr,
                double* yi);
  // y += c * w[k] * x  (w real)
  void (*caxpy_w)(std::size_t n, double cr, double ci, const double* w, const double* xr,
                  const double* xi, double* yr, double* yi);
  // y = (wr + i wi) * x, element-wise complex weights
  void (*cmul_set)(std::size_t n, const double* wr, const double* wi, const double* xr,
                   const double* xi, double* yr, double* yi);
  // y = c * x
  void (*cscale_set)(std::size_t n, double cr, double ci, const double* xr, const double* xi,
                     double* yr, double* yi);
  // y += a * x  (real vectors)
  void (*axpy)(std::size_t n, double a, const double* x, double* y);
  // out = x + a * z
  void (*add_scaled)(std::size_t n, const double* x, double a, const double* z, double* out);
  // sum of squares of (e / (atol + rtol * max(|y0|, |y1|)))
  double (*scaled_sq_norm)(std::size_t n, const double* e, const double* y0, const double* y1,
                           double atol, double rtol);
};

const KernelTable& scalar_table();
// Returns nullptr when the variant was not compiled in.
const KernelTable* avx2_table();

bool cpu_has_avx2();

// Active table: AVX2 when compiled and supported unless overridden.
const KernelTable& active();

// Forces a specific table for the remainder of the process ("scalar" or
// "avx2"). Returns false if the requested variant is unavailable.
bool select(std::string_view which);

}  // namespace iongate::kernels
