#include "iongate/evolve.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <thread>

#include "iongate/errors.hpp"
#include "iongate/kernels.hpp"
#include "iongate/units.hpp"

namespace iongate {

double HeatingParams::rate_down() const {
  if (Nbar_large || gamma_Nbar == 0.0) return gamma_Nbar;
  return gamma_Nbar * (Nbar + 1.0) / Nbar;
}

double HeatingParams::rate_up() const { return gamma_Nbar; }

void HeatingParams::validate() const {
  if (!(gamma_Nbar >= 0.0)) throw ConfigError("heating: gamma_Nbar must be >= 0");
  if (!Nbar_large && gamma_Nbar > 0.0 && !(Nbar > 0.0)) {
    throw ConfigError("heating: Nbar must be > 0 when the large-Nbar form is disabled");
  }
}

void SolverOptions::validate() const {
  if (method == Method::rk4 && steps_per_period < 40) {
    throw ConfigError("solver: fixed step must resolve a Raman period (steps_per_period >= 40)");
  }
  if (!(rtol > 0.0) || !(atol > 0.0)) throw ConfigError("solver: tolerances must be positive");
  if (sample_every < 0.0) throw ConfigError("solver: sample_every must be >= 0");
  if (jobs < 1) throw ConfigError("solver: jobs must be >= 1");
}

RhsContext RhsContext::make(const ChainParams& chain, const HilbertLayout& layout,
                            const std::optional<DissipatorCoeffs>& coeffs,
                            const HeatingParams& heating) {
  heating.validate();
  if (chain.modes.size() != 2) throw ConfigError("chain must define the cm and wb modes");
  if (coeffs && coeffs->modes.size() != 2) {
    throw ConfigError("dissipator coefficient table must cover both modes");
  }
  RhsContext c;
  c.chain = chain;
  c.layout = layout;
  c.coeffs = coeffs;
  c.heating = heating;

  const double w = chain.cm().omega;
  c.omega_unit = w;
  c.omega_R = chain.omega_R / w;
  const double l_cm = chain.cm().mode_length;
  for (int mu = 0; mu < 2; ++mu) {
    const ModeSpec& m = chain.modes[mu];
    c.delta[mu] = m.detuning / w;
    for (int s = 0; s < 4; ++s) {
      const double proj = m.b[0] * spin_value(s, 1) + m.b[2] * spin_value(s, 3);
      c.g[s][mu] = -0.5 * (m.drive / w) * proj;
      c.P[s][mu] = m.drive == 0.0 ? 0.0 : m.drive / (2.0 * m.detuning) * proj;
    }
    c.X[mu] = m.b[1] * m.mode_length / l_cm;
    if (coeffs) {
      const ModeCoeffs& mc = coeffs->modes[mu];
      c.alpha[mu] = mc.alpha_prefactor;
      c.n_q[mu] = mc.n_q;
      c.h[mu] = mc.h;
      c.h_nq[mu] = mc.h_nq;
    }
  }
  c.G = coeffs ? coeffs->Gamma * l_cm / w : 0.0;
  c.gamma_down = heating.rate_down() / w;
  c.gamma_up = heating.rate_up() / w;

  c.nc = layout.fock_dims[0];
  c.nw = layout.fock_dims[1];
  c.D = c.nc * c.nw;
  const int D = c.D;
  c.sqrt_p.assign(D, 0.0);
  c.sqrt_p1.assign(D, 0.0);
  c.sqrt_q.assign(D, 0.0);
  c.sqrt_q1.assign(D, 0.0);
  for (int i = 0; i < D; ++i) {
    const int p = i / c.nw, q = i % c.nw;
    c.sqrt_p[i] = std::sqrt(double(p));
    c.sqrt_p1[i] = p < c.nc - 1 ? std::sqrt(double(p + 1)) : 0.0;
    c.sqrt_q[i] = std::sqrt(double(q));
    c.sqrt_q1[i] = q < c.nw - 1 ? std::sqrt(double(q + 1)) : 0.0;
  }
  // Truncated a a^dag on the cm mode: p + 1 below the top level, 0 at it.
  auto aad = [&](int p) { return p < c.nc - 1 ? double(p + 1) : 0.0; };
  c.wd_re.assign(std::size_t(D) * D, 0.0);
  c.wd_im.assign(std::size_t(D) * D, 0.0);
  for (int i = 0; i < D; ++i) {
    const int p = i / c.nw, q = i % c.nw;
    for (int j = 0; j < D; ++j) {
      const int pp = j / c.nw, qq = j % c.nw;
      const std::size_t k = std::size_t(i) * D + j;
      c.wd_im[k] = c.delta[0] * (p - pp) + c.delta[1] * (q - qq);
      c.wd_re[k] = -0.5 * c.gamma_down * (p + pp) - 0.5 * c.gamma_up * (aad(p) + aad(pp));
    }
  }
  return c;
}

namespace {

using Coef2 = std::array<cplx, 2>;

// The helpers below act on one output row i of a D x D block so that the
// row stays cache-resident while every term is accumulated into it.

// y_i += [(sum_mu ca_mu a_mu + cd_mu a_mu^dag) x]_i
inline void left_row(const RhsContext& c, int i, const Coef2& ca, const Coef2& cd,
                     const double* xr, const double* xi, double* yr, double* yi) {
  const kernels::KernelTable& k = kernels::active();
  const int D = c.D, nw = c.nw, nc = c.nc;
  const int p = i / nw, q = i % nw;
  auto add = [&](cplx coef, double w, int src) {
    if (coef == 0.0) return;
    const std::size_t off = std::size_t(src) * D;
    k.caxpy(D, coef.real() * w, coef.imag() * w, xr + off, xi + off, yr, yi);
  };
  if (p < nc - 1) add(ca[0], c.sqrt_p1[i], i + nw);
  if (p >= 1) add(cd[0], c.sqrt_p[i], i - nw);
  if (q < nw - 1) add(ca[1], c.sqrt_q1[i], i + 1);
  if (q >= 1) add(cd[1], c.sqrt_q[i], i - 1);
}

// y_i += [x (sum_mu ca_mu a_mu + cd_mu a_mu^dag)]_i for source row x_i.
inline void right_row(const RhsContext& c, const Coef2& ca, const Coef2& cd, const double* sr,
                      const double* si, double* r, double* m) {
  const kernels::KernelTable& k = kernels::active();
  const int D = c.D, nw = c.nw;
  const std::size_t n_cm = std::size_t(D - nw), n_wb = std::size_t(D - 1);
  // (x a)[j] = x[j - shift] w[j];  (x a^dag)[j] = x[j + shift] w'[j]
  if (ca[0] != 0.0) k.caxpy_w(n_cm, ca[0].real(), ca[0].imag(), c.sqrt_p.data() + nw, sr, si, r + nw, m + nw);
  if (cd[0] != 0.0) k.caxpy_w(n_cm, cd[0].real(), cd[0].imag(), c.sqrt_p1.data(), sr + nw, si + nw, r, m);
  if (ca[1] != 0.0) k.caxpy_w(n_wb, ca[1].real(), ca[1].imag(), c.sqrt_q.data() + 1, sr, si, r + 1, m + 1);
  if (cd[1] != 0.0) k.caxpy_w(n_wb, cd[1].real(), cd[1].imag(), c.sqrt_q1.data(), sr + 1, si + 1, r, m);
}

// y_i += [gd a x a^dag + gu a^dag x a]_i on the cm mode.
inline void sandwich_row(const RhsContext& c, int i, double gd, double gu, const double* xr,
                         const double* xi, double* yr, double* yi) {
  const kernels::KernelTable& k = kernels::active();
  const int D = c.D, nw = c.nw, nc = c.nc;
  const int p = i / nw;
  const std::size_t n = std::size_t(D - nw);
  if (gd != 0.0 && p < nc - 1) {
    const std::size_t src = std::size_t(i + nw) * D + nw;
    k.caxpy_w(n, gd * c.sqrt_p1[i], 0.0, c.sqrt_p1.data(), xr + src, xi + src, yr, yi);
  }
  if (gu != 0.0 && p >= 1) {
    const std::size_t src = std::size_t(i - nw) * D;
    k.caxpy_w(n, gu * c.sqrt_p[i], 0.0, c.sqrt_p.data() + nw, xr + src, xi + src, yr + nw, yi + nw);
  }
}

}  // namespace

void block_rhs(const RhsContext& c, int s, int sp, double tau, const double* in_re,
               const double* in_im, double* out_re, double* out_im, double* work_re,
               double* work_im) {
  const kernels::KernelTable& k = kernels::active();
  const int D = c.D;
  const cplx mi(0.0, -1.0), pi(0.0, 1.0);
  const Coef2 hl{mi * c.g[s][0], mi * c.g[s][1]};
  const Coef2 hr{pi * c.g[sp][0], pi * c.g[sp][1]};
  const bool heat = c.gamma_down != 0.0 || c.gamma_up != 0.0;
  const bool gas = c.gas();

  Coef2 xa{}, xd{}, ya{}, yd{};
  if (gas) {
    const double ph = c.omega_R * tau;
    const cplx e = std::exp(cplx(0.0, -ph));
    const cplx ec = std::conj(e);
    const double co = std::cos(ph);

    // Y = c_{s s'} B + K B - B K^dag with K = sum alpha ((1 + n) e a + n e* a^dag).
    cplx cs = 0.0;
    Coef2 ka, kd, ra, rd;
    for (int mu = 0; mu < 2; ++mu) {
      cs += 2.0 * c.h_nq[mu] * co * (c.P[s][mu] - c.P[sp][mu]) +
            c.h[mu] * (e * c.P[s][mu] - ec * c.P[sp][mu]);
      ka[mu] = c.alpha[mu] * (1.0 + c.n_q[mu]) * e;
      kd[mu] = c.alpha[mu] * c.n_q[mu] * ec;
      ra[mu] = -c.alpha[mu] * c.n_q[mu] * e;
      rd[mu] = -c.alpha[mu] * (1.0 + c.n_q[mu]) * ec;
      // -G [xi, Y] with xi = sum X (e a + e* a^dag).
      xa[mu] = -c.G * c.X[mu] * e;
      xd[mu] = -c.G * c.X[mu] * ec;
      ya[mu] = c.G * c.X[mu] * e;
      yd[mu] = c.G * c.X[mu] * ec;
    }
    for (int i = 0; i < D; ++i) {
      const std::size_t off = std::size_t(i) * D;
      double *wr = work_re + off, *wi = work_im + off;
      k.cscale_set(D, cs.real(), cs.imag(), in_re + off, in_im + off, wr, wi);
      left_row(c, i, ka, kd, in_re, in_im, wr, wi);
      right_row(c, ra, rd, in_re + off, in_im + off, wr, wi);
    }
  }

  for (int i = 0; i < D; ++i) {
    const std::size_t off = std::size_t(i) * D;
    double *r = out_re + off, *m = out_im + off;
    k.cmul_set(D, c.wd_re.data() + off, c.wd_im.data() + off, in_re + off, in_im + off, r, m);
    left_row(c, i, hl, hl, in_re, in_im, r, m);
    right_row(c, hr, hr, in_re + off, in_im + off, r, m);
    if (heat) sandwich_row(c, i, c.gamma_down, c.gamma_up, in_re, in_im, r, m);
    if (gas) {
      left_row(c, i, xa, xd, work_re, work_im, r, m);
      right_row(c, ya, yd, work_re + off, work_im + off, r, m);
    }
  }
}

// ---------------------------------------------------------------------------
// BlockState

BlockState BlockState::product(const Mat& spin, const Mat& rho_m, const HilbertLayout& layout) {
  const int D = layout.motional_dim();
  if (spin.rows() != 4 || spin.cols() != 4) throw std::invalid_argument("spin part must be 4x4");
  if (rho_m.rows() != D || rho_m.cols() != D) {
    throw std::invalid_argument("motional part does not match layout");
  }
  if (relative_frobenius(spin, spin.adjoint()) > 1e-12 ||
      relative_frobenius(rho_m, rho_m.adjoint()) > 1e-12) {
    throw std::invalid_argument("BlockState::product: factors must be Hermitian");
  }
  BlockState st;
  st.layout = layout;
  for (int s = 0; s < 4; ++s)
    for (int sp = s; sp < 4; ++sp)
      if (spin(s, sp) != 0.0) st.blocks.push_back({s, sp});
  st.data.assign(st.blocks.size() * st.block_size(), 0.0);
  for (std::size_t k = 0; k < st.blocks.size(); ++k) {
    const cplx f = spin(st.blocks[k].s, st.blocks[k].sp);
    double *r = st.re(k), *m = st.im(k);
    for (int i = 0; i < D; ++i)
      for (int j = 0; j < D; ++j) {
        const cplx v = f * rho_m(i, j);
        r[std::size_t(i) * D + j] = v.real();
        m[std::size_t(i) * D + j] = v.imag();
      }
  }
  return st;
}

BlockState BlockState::from_dense(const Mat& rho, const HilbertLayout& layout) {
  const int D = layout.motional_dim();
  if (rho.rows() != layout.total_dim() || rho.cols() != layout.total_dim()) {
    throw std::invalid_argument("BlockState::from_dense: matrix does not match layout");
  }
  if (relative_frobenius(rho, rho.adjoint()) > 1e-12) {
    throw std::invalid_argument("BlockState::from_dense: density matrix must be Hermitian");
  }
  BlockState st;
  st.layout = layout;
  for (int s = 0; s < 4; ++s)
    for (int sp = s; sp < 4; ++sp)
      if (rho.block(s * D, sp * D, D, D).norm() > 0.0) st.blocks.push_back({s, sp});
  st.data.assign(st.blocks.size() * st.block_size(), 0.0);
  for (std::size_t k = 0; k < st.blocks.size(); ++k) {
    const int s = st.blocks[k].s, sp = st.blocks[k].sp;
    double *r = st.re(k), *m = st.im(k);
    for (int i = 0; i < D; ++i)
      for (int j = 0; j < D; ++j) {
        const cplx v = rho(s * D + i, sp * D + j);
        r[std::size_t(i) * D + j] = v.real();
        m[std::size_t(i) * D + j] = v.imag();
      }
  }
  return st;
}

Mat BlockState::block(int s, int sp) const {
  const int D = this->D();
  const bool lower = s > sp;
  const int a = lower ? sp : s, b = lower ? s : sp;
  for (std::size_t k = 0; k < blocks.size(); ++k) {
    if (blocks[k].s != a || blocks[k].sp != b) continue;
    Mat m(D, D);
    const double *r = re(k), *im_ = im(k);
    for (int i = 0; i < D; ++i)
      for (int j = 0; j < D; ++j)
        m(i, j) = cplx(r[std::size_t(i) * D + j], im_[std::size_t(i) * D + j]);
    return lower ? Mat(m.adjoint()) : m;
  }
  return Mat::Zero(D, D);
}

Mat BlockState::to_dense() const {
  const int D = this->D();
  Mat rho = Mat::Zero(4 * D, 4 * D);
  for (const SpinBlock& b : blocks) {
    const Mat m = block(b.s, b.sp);
    rho.block(b.s * D, b.sp * D, D, D) = m;
    if (b.s != b.sp) rho.block(b.sp * D, b.s * D, D, D) = m.adjoint();
  }
  return rho;
}

Mat BlockState::motional() const {
  const int D = this->D();
  Mat m = Mat::Zero(D, D);
  for (const SpinBlock& b : blocks)
    if (b.s == b.sp) m += block(b.s, b.s);
  return m;
}

Mat BlockState::spin_reduced() const {
  const int D = this->D();
  Mat out = Mat::Zero(4, 4);
  for (std::size_t k = 0; k < blocks.size(); ++k) {
    cplx tr = 0.0;
    for (int i = 0; i < D; ++i) {
      const std::size_t d = std::size_t(i) * D + i;
      tr += cplx(re(k)[d], im(k)[d]);
    }
    out(blocks[k].s, blocks[k].sp) = tr;
    if (blocks[k].s != blocks[k].sp) out(blocks[k].sp, blocks[k].s) = std::conj(tr);
  }
  return out;
}

cplx BlockState::trace() const { return spin_reduced().trace(); }

double BlockState::purity() const {
  const std::size_t n = std::size_t(D()) * D();
  double acc = 0.0;
  for (std::size_t k = 0; k < blocks.size(); ++k) {
    double sq = 0.0;
    for (std::size_t i = 0; i < n; ++i) sq += re(k)[i] * re(k)[i] + im(k)[i] * im(k)[i];
    acc += (blocks[k].s == blocks[k].sp ? 1.0 : 2.0) * sq;
  }
  return acc;
}

double BlockState::hermiticity_defect() const {
  const int D = this->D();
  double acc = 0.0;
  for (std::size_t k = 0; k < blocks.size(); ++k) {
    if (blocks[k].s != blocks[k].sp) continue;
    for (int i = 0; i < D; ++i)
      for (int j = 0; j < D; ++j) {
        const std::size_t a = std::size_t(i) * D + j, b = std::size_t(j) * D + i;
        const double dr = re(k)[a] - re(k)[b];
        const double di = im(k)[a] + im(k)[b];
        acc += dr * dr + di * di;
      }
  }
  return std::sqrt(acc);
}

// ---------------------------------------------------------------------------
// Dense literal equation

namespace {

struct DenseOps {
  std::array<Mat, 2> a, ad;
  std::array<Mat, 2> sz;  // ions 1 and 3
};

DenseOps dense_ops(const HilbertLayout& layout) {
  DenseOps o;
  for (int mu = 0; mu < 2; ++mu) {
    const Ladder lad = fock_ladder(layout.fock_dims[mu]);
    o.a[mu] = embed(lad.annihilator, mu == 0 ? kCm : kWb, layout).matrix;
    o.ad[mu] = embed(lad.creator, mu == 0 ? kCm : kWb, layout).matrix;
  }
  o.sz[0] = embed(sigma_z(), kSpin1, layout).matrix;
  o.sz[1] = embed(sigma_z(), kSpin3, layout).matrix;
  return o;
}

Mat comm(const Mat& a, const Mat& b) { return a * b - b * a; }

}  // namespace

Mat heating_rhs(const Mat& rho, double t, const HeatingParams& heating,
                const HilbertLayout& layout) {
  (void)t;
  heating.validate();
  const Ladder lad = fock_ladder(layout.fock_dims[0]);
  const Mat a = embed(lad.annihilator, kCm, layout).matrix;
  const Mat ad = embed(lad.creator, kCm, layout).matrix;
  const Mat ada = ad * a, aad = a * ad;
  const double gd = heating.rate_down(), gu = heating.rate_up();
  return 0.5 * gd * (2.0 * a * rho * ad - ada * rho - rho * ada) +
         0.5 * gu * (2.0 * ad * rho * a - aad * rho - rho * aad);
}

Mat bec_rhs(const Mat& rho, double t, const RhsContext& ctx) {
  const int n = ctx.layout.total_dim();
  if (!ctx.coeffs) return Mat::Zero(n, n);
  const DissipatorCoeffs& dc = *ctx.coeffs;
  if (dc.modes.size() != 2) throw ConfigError("bec_rhs: coefficient table must cover both modes");
  const DenseOps o = dense_ops(ctx.layout);
  const ChainParams& ch = ctx.chain;
  const Mat x = x_R_operator(t, ch, ctx.layout).matrix;
  const cplx e = std::exp(cplx(0.0, -ch.omega_R * t));
  const double co = std::cos(ch.omega_R * t);

  Mat acc = Mat::Zero(n, n);
  for (int mu = 0; mu < 2; ++mu) {
    const ModeCoeffs& mc = dc.modes[mu];
    const ModeSpec& m = ch.modes[mu];
    const Mat al = mc.alpha_prefactor * e * o.a[mu];
    const Mat ald = al.adjoint();
    const Mat sum = al + ald;
    acc += mc.n_q * comm(x, sum * rho - rho * sum) + comm(x, al * rho - rho * ald);
    if (m.drive == 0.0) continue;
    const double pref = m.drive / (2.0 * m.detuning);
    for (int jj = 0; jj < 2; ++jj) {
      const double bj = m.b[jj == 0 ? 0 : 2];
      const Mat& sz = o.sz[jj];
      acc += pref * bj *
             (co * comm(x, sz * rho - rho * sz) * (2.0 * mc.h_nq) +
              e * comm(x, sz * rho) * mc.h - std::conj(e) * comm(x, rho * sz) * mc.h);
    }
  }
  return -dc.Gamma * acc;
}

Mat master_rhs(const Mat& rho, double t, const RhsContext& ctx) {
  const Mat h = build_H_chain(ctx.chain, ctx.layout).matrix;
  Mat out = cplx(0.0, -1.0) * comm(h, rho);
  out += heating_rhs(rho, t, ctx.heating, ctx.layout);
  out += bec_rhs(rho, t, ctx);
  return out;
}

// ---------------------------------------------------------------------------
// Propagation

namespace {

struct Rk4Work {
  std::vector<double> k1, k2, k3, k4, tmp, work;
  explicit Rk4Work(std::size_t n) : k1(n), k2(n), k3(n), k4(n), tmp(n), work(n) {}
};

void eval_block(const RhsContext& c, const SpinBlock& b, double tau, const double* y, double* dy,
                double* work) {
  const std::size_t half = std::size_t(c.D) * c.D;
  block_rhs(c, b.s, b.sp, tau, y, y + half, dy, dy + half, work, work + half);
}

// Advances one block over steps [n0, n1) of size h (dimensionless).
void rk4_block(const RhsContext& c, const SpinBlock& b, double* y, long n0, long n1, double h,
               Rk4Work& w) {
  const kernels::KernelTable& k = kernels::active();
  const std::size_t n = w.k1.size();
  for (long step = n0; step < n1; ++step) {
    const double tau = step * h;
    eval_block(c, b, tau, y, w.k1.data(), w.work.data());
    k.add_scaled(n, y, 0.5 * h, w.k1.data(), w.tmp.data());
    eval_block(c, b, tau + 0.5 * h, w.tmp.data(), w.k2.data(), w.work.data());
    k.add_scaled(n, y, 0.5 * h, w.k2.data(), w.tmp.data());
    eval_block(c, b, tau + 0.5 * h, w.tmp.data(), w.k3.data(), w.work.data());
    k.add_scaled(n, y, h, w.k3.data(), w.tmp.data());
    eval_block(c, b, tau + h, w.tmp.data(), w.k4.data(), w.work.data());
    k.axpy(n, h / 6.0, w.k1.data(), y);
    k.axpy(n, h / 3.0, w.k2.data(), y);
    k.axpy(n, h / 3.0, w.k3.data(), y);
    k.axpy(n, h / 6.0, w.k4.data(), y);
  }
}

class Sampler {
 public:
  Sampler(const RhsContext& c, const SolverOptions& o, const Observer& obs, cplx trace0)
      : ctx_(c), opts_(o), obs_(obs), trace0_(trace0) {
    for (const auto& [name, unit] : kColumns) res.series.add_column(name, unit);
    res.min_eigenvalue = std::numeric_limits<double>::quiet_NaN();
  }

  void sample(double t, const BlockState& st) {
    const cplx tr = st.trace();
    if (!std::isfinite(tr.real()) || !std::isfinite(tr.imag())) {
      throw IntegrationError("propagate: non-finite state at t = " + std::to_string(t) + " s");
    }
    const Mat rm = st.motional();
    const HilbertLayout& l = ctx_.layout;
    const double tc = motional_temperature(rm, ctx_.chain, l, 0);
    const double tw = motional_temperature(rm, ctx_.chain, l, 1);
    const cplx a = motional_phase_space_point(rm, l, 0);
    const double drift = std::abs(tr - trace0_);
    const double herm = st.hermiticity_defect();
    double me = std::numeric_limits<double>::quiet_NaN();
    if (opts_.min_eig_stride > 0 && count_ % opts_.min_eig_stride == 0) {
      QuantumState q{st.to_dense(), l, t};
      me = q.min_eigenvalue();
      res.min_eigenvalue = std::isnan(res.min_eigenvalue) ? me : std::min(res.min_eigenvalue, me);
    }
    ++count_;
    res.series.times.push_back(t);
    const double vals[] = {tc + tw,         tc,
                           tw,              a.real(),
                           a.imag(),        mode_occupation(rm, l, 0),
                           mode_occupation(rm, l, 1), st.purity(),
                           drift,           herm,
                           me};
    for (std::size_t i = 0; i < res.series.columns.size(); ++i) {
      res.series.columns[i].second.push_back(vals[i]);
    }
    res.max_trace_drift = std::max(res.max_trace_drift, drift);
    res.max_hermiticity_defect = std::max(res.max_hermiticity_defect, herm);
    if (obs_) obs_(t, st);
  }

  PropagationResult res;

 private:
  static constexpr std::pair<const char*, const char*> kColumns[] = {
      {"temperature_K", "K"}, {"T_cm_K", "K"},      {"T_wb_K", "K"},     {"phase_re", "1"},
      {"phase_im", "1"},      {"n_cm", "1"},        {"n_wb", "1"},       {"purity", "1"},
      {"trace_err", "1"},     {"herm_defect", "1"}, {"min_eig", "1"}};
  const RhsContext& ctx_;
  const SolverOptions& opts_;
  const Observer& obs_;
  cplx trace0_;
  long count_ = 0;
};

double raman_period(const RhsContext& c) { return 2.0 * units::pi / c.chain.omega_R; }

PropagationResult propagate_rk4(const BlockState& init, double t_final, const RhsContext& c,
                                const SolverOptions& opts, const Observer& obs) {
  const double period = raman_period(c);
  const double dt_nominal = period / opts.steps_per_period;
  const long n_steps = std::max(1L, long(std::ceil(t_final / dt_nominal - 1e-9)));
  if (n_steps > opts.max_steps) {
    throw IntegrationError("propagate: " + std::to_string(n_steps) + " steps exceed max_steps");
  }
  const double dt = t_final / n_steps;
  const double h = dt * c.omega_unit;
  const double every = opts.sample_every > 0.0 ? opts.sample_every : period;
  const long stride = std::max(1L, std::lround(every / dt));

  BlockState st = init;
  Sampler smp(c, opts, obs, init.trace());
  smp.sample(0.0, st);

  std::vector<Rk4Work> work;
  work.reserve(st.blocks.size());
  for (std::size_t k = 0; k < st.blocks.size(); ++k) work.emplace_back(st.block_size());

  const int jobs = std::max(1, std::min<int>(opts.jobs, int(st.blocks.size())));
  long n = 0;
  while (n < n_steps) {
    const long n1 = std::min(n_steps, n + stride);
    auto run = [&](int job) {
      for (std::size_t k = job; k < st.blocks.size(); k += jobs) {
        rk4_block(c, st.blocks[k], st.re(k), n, n1, h, work[k]);
      }
    };
    if (jobs == 1) {
      run(0);
    } else {
      std::vector<std::thread> pool;
      for (int j = 1; j < jobs; ++j) pool.emplace_back(run, j);
      run(0);
      for (auto& t : pool) t.join();
    }
    n = n1;
    smp.sample(n == n_steps ? t_final : n * dt, st);
  }
  smp.res.final_state = std::move(st);
  smp.res.steps = n_steps;
  smp.res.dt = dt;
  return std::move(smp.res);
}

// Dormand-Prince 5(4) with FSAL on the concatenated block vector.
PropagationResult propagate_dopri5(const BlockState& init, double t_final, const RhsContext& c,
                                   const SolverOptions& opts, const Observer& obs) {
  static constexpr double a21 = 1.0 / 5;
  static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                          a54 = -212.0 / 729;
  static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                          a64 = 49.0 / 176, a65 = -5103.0 / 18656;
  static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                          b5 = -2187.0 / 6784, b6 = 11.0 / 84;
  static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                          e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
  static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;

  const kernels::KernelTable& K = kernels::active();
  BlockState st = init;
  const std::size_t bs = st.block_size();
  const std::size_t N = st.data.size();
  std::vector<double> k1(N), k2(N), k3(N), k4(N), k5(N), k6(N), k7(N), ytmp(N), ynew(N), err(N),
      work(bs);

  auto f = [&](double tau, const std::vector<double>& y, std::vector<double>& dy) {
    for (std::size_t k = 0; k < st.blocks.size(); ++k) {
      eval_block(c, st.blocks[k], tau, y.data() + k * bs, dy.data() + k * bs, work.data());
    }
  };
  auto combo = [&](const std::vector<double>& y, double h,
                   std::initializer_list<std::pair<double, const std::vector<double>*>> terms,
                   std::vector<double>& out) {
    std::copy(y.begin(), y.end(), out.begin());
    for (const auto& [w, v] : terms)
      if (w != 0.0) K.axpy(N, h * w, v->data(), out.data());
  };

  const double period = raman_period(c);
  const double every = opts.sample_every > 0.0 ? opts.sample_every : period;
  const double tau_final = t_final * c.omega_unit;
  const double tau_every = every * c.omega_unit;
  const double h_min = 1e-12 * tau_final;

  Sampler smp(c, opts, obs, init.trace());
  smp.sample(0.0, st);
  std::vector<double>& y = st.data;
  double tau = 0.0;
  double h = std::min(tau_every, 0.1 * period * c.omega_unit);
  f(tau, y, k1);
  long steps = 0, rejected = 0;
  long next_sample = 1;
  double err_prev = 1e-4;

  while (tau < tau_final * (1.0 - 1e-15)) {
    const double tau_sample = std::min(tau_final, next_sample * tau_every);
    bool hit = false;
    double hs = h;
    if (tau + hs >= tau_sample * (1.0 - 1e-13)) {
      hs = tau_sample - tau;
      hit = true;
    }
    if (steps + rejected > opts.max_steps) {
      throw IntegrationError("propagate: adaptive step budget exhausted at t = " +
                             std::to_string(tau / c.omega_unit) + " s");
    }
    combo(y, hs, {{a21, &k1}}, ytmp);
    f(tau + c2 * hs, ytmp, k2);
    combo(y, hs, {{a31, &k1}, {a32, &k2}}, ytmp);
    f(tau + c3 * hs, ytmp, k3);
    combo(y, hs, {{a41, &k1}, {a42, &k2}, {a43, &k3}}, ytmp);
    f(tau + c4 * hs, ytmp, k4);
    combo(y, hs, {{a51, &k1}, {a52, &k2}, {a53, &k3}, {a54, &k4}}, ytmp);
    f(tau + c5 * hs, ytmp, k5);
    combo(y, hs, {{a61, &k1}, {a62, &k2}, {a63, &k3}, {a64, &k4}, {a65, &k5}}, ytmp);
    f(tau + hs, ytmp, k6);
    combo(y, hs, {{b1, &k1}, {b3, &k3}, {b4, &k4}, {b5, &k5}, {b6, &k6}}, ynew);
    f(tau + hs, ynew, k7);
    std::fill(err.begin(), err.end(), 0.0);
    combo(err, hs, {{e1, &k1}, {e3, &k3}, {e4, &k4}, {e5, &k5}, {e6, &k6}, {e7, &k7}}, err);
    const double en =
        std::sqrt(K.scaled_sq_norm(N, err.data(), y.data(), ynew.data(), opts.atol, opts.rtol) / N);

    if (en <= 1.0 || hs <= h_min) {
      if (hs <= h_min && en > 1.0) {
        throw IntegrationError("propagate: step size underflow at t = " +
                               std::to_string(tau / c.omega_unit) + " s");
      }
      tau = hit ? tau_sample : tau + hs;
      y.swap(ynew);
      k1.swap(k7);
      ++steps;
      // PI controller (Hairer & Wanner's defaults for order 5).
      const double fac = en == 0.0 ? 5.0
                                   : std::clamp(0.9 * std::pow(en, -0.7 / 5.0) *
                                                    std::pow(err_prev, 0.4 / 5.0),
                                                0.2, 5.0);
      err_prev = std::max(en, 1e-4);
      if (!hit) h = hs * fac;
      else h = std::max(h, hs) * std::min(fac, 1.0) + 0.0;
      if (hit) {
        smp.sample(tau >= tau_final * (1.0 - 1e-15) ? t_final : tau / c.omega_unit, st);
        ++next_sample;
      }
    } else {
      ++rejected;
      h = hs * std::max(0.2, 0.9 * std::pow(en, -0.2));
    }
  }
  smp.res.final_state = std::move(st);
  smp.res.steps = steps;
  smp.res.rejected_steps = rejected;
  smp.res.dt = h / c.omega_unit;
  return std::move(smp.res);
}

}  // namespace

PropagationResult propagate(const BlockState& init, double t_final, const RhsContext& ctx,
                            const SolverOptions& opts, const Observer& observer) {
  opts.validate();
  if (!(t_final > 0.0)) throw ConfigError("propagate: t_final must be > 0");
  if (!(init.layout == ctx.layout)) throw ConfigError("propagate: state/context layout mismatch");
  if (init.blocks.empty()) throw ConfigError("propagate: empty initial state");
  return opts.method == SolverOptions::Method::rk4
             ? propagate_rk4(init, t_final, ctx, opts, observer)
             : propagate_dopri5(init, t_final, ctx, opts, observer);
}

PropagationResult propagate(const QuantumState& rho0, double t_final, const RhsContext& ctx,
                            const SolverOptions& opts, const Observer& observer) {
  if (rho0.trace_error() > 1e-9 || rho0.hermiticity_defect() > 1e-9) {
    throw ConfigError("propagate: initial state must be Hermitian with unit trace");
  }
  return propagate(BlockState::from_dense(rho0.rho, rho0.layout), t_final, ctx, opts, observer);
}

BlockChannel propagate_channel_blocks(const Mat& rho_m, double t_final, const RhsContext& ctx,
                                      const SolverOptions& opts) {
  const Mat ones = Mat::Constant(4, 4, cplx(1.0, 0.0));
  BlockChannel out;
  out.run = propagate(BlockState::product(ones, rho_m, ctx.layout), t_final, ctx, opts);
  out.lambda = out.run.final_state.spin_reduced();
  for (int i = 0; i < 16; ++i) {
    out.table.outputs[i] = pauli_basis()[i].cwiseProduct(out.lambda);
  }
  return out;
}

ChannelTable propagate_channel(const std::array<Mat, 16>& basis_ops, const Mat& rho_m,
                               double t_final, const RhsContext& ctx, const SolverOptions& opts) {
  ChannelTable table;
  // Non-Hermitian inputs split as H1 + i H2; the equation is linear.
  for (int i = 0; i < 16; ++i) {
    const Mat& x = basis_ops[i];
    const Mat h1 = 0.5 * (x + x.adjoint());
    const Mat h2 = cplx(0.0, -0.5) * (x - x.adjoint());
    Mat outp = Mat::Zero(4, 4);
    for (int part = 0; part < 2; ++part) {
      const Mat& hp = part == 0 ? h1 : h2;
      if (hp.norm() == 0.0) continue;
      const PropagationResult r =
          propagate(BlockState::product(hp, rho_m, ctx.layout), t_final, ctx, opts);
      outp += (part == 0 ? cplx(1.0, 0.0) : cplx(0.0, 1.0)) * r.final_state.spin_reduced();
    }
    table.outputs[i] = outp;
  }
  return table;
}

}  // namespace iongate
