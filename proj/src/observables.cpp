#include "iongate/observables.hpp"

#include <unsupported/Eigen/NonLinearOptimization>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "iongate/errors.hpp"
#include "iongate/units.hpp"

namespace iongate {

void TimeSeries::add_column(const std::string& name, const std::string& unit) {
  if (has_column(name)) throw std::invalid_argument("duplicate column " + name);
  columns.emplace_back(name, std::vector<double>{});
  units.push_back(unit);
}

std::vector<double>& TimeSeries::column(const std::string& name) {
  for (auto& c : columns)
    if (c.first == name) return c.second;
  throw std::invalid_argument("no column " + name);
}

const std::vector<double>& TimeSeries::column(const std::string& name) const {
  for (const auto& c : columns)
    if (c.first == name) return c.second;
  throw std::invalid_argument("no column " + name);
}

bool TimeSeries::has_column(const std::string& name) const {
  return std::any_of(columns.begin(), columns.end(),
                     [&](const auto& c) { return c.first == name; });
}

bool TimeSeries::valid() const {
  for (const auto& c : columns)
    if (c.second.size() != times.size()) return false;
  for (std::size_t i = 1; i < times.size(); ++i)
    if (!(times[i] > times[i - 1])) return false;
  return units.size() == columns.size();
}

namespace {

// Single-mode reduced matrix from the cm (x) wb motional matrix.
Mat reduce_mode(const Mat& rho_m, const HilbertLayout& layout, int mode) {
  const int nc = layout.fock_dims[0], nw = layout.fock_dims[1];
  if (mode == 0) {
    Mat r = Mat::Zero(nc, nc);
    for (int p = 0; p < nc; ++p)
      for (int pp = 0; pp < nc; ++pp)
        for (int q = 0; q < nw; ++q) r(p, pp) += rho_m(p * nw + q, pp * nw + q);
    return r;
  }
  Mat r = Mat::Zero(nw, nw);
  for (int q = 0; q < nw; ++q)
    for (int qq = 0; qq < nw; ++qq)
      for (int p = 0; p < nc; ++p) r(q, qq) += rho_m(p * nw + q, p * nw + qq);
  return r;
}

Mat motional_of(const Mat& rho, const HilbertLayout& layout) {
  return partial_trace(rho, layout, {kCm, kWb});
}

}  // namespace

double motional_temperature(const Mat& rho_m, const ChainParams& params,
                            const HilbertLayout& layout, int mode) {
  double T = 0.0;
  for (int mu = 0; mu < 2; ++mu) {
    if (mode >= 0 && mode != mu) continue;
    const Ladder lad = fock_ladder(layout.fock_dims[mu]);
    const Mat d = lad.creator - lad.annihilator;
    const Mat p2 = -(d * d);  // <p^2> = (hbar M omega / 2) <-(a^dag - a)^2>
    const double expect = (p2 * reduce_mode(rho_m, layout, mu)).trace().real();
    T += units::hbar * params.modes.at(mu).omega / (4.0 * units::k_B) * expect;
  }
  return T;
}

double chain_temperature(const Mat& rho, const ChainParams& params, const HilbertLayout& layout) {
  return motional_temperature(motional_of(rho, layout), params, layout);
}

double mode_occupation(const Mat& rho_m, const HilbertLayout& layout, int mode) {
  const Mat r = reduce_mode(rho_m, layout, mode);
  double n = 0.0;
  for (int k = 0; k < r.rows(); ++k) n += k * r(k, k).real();
  return n;
}

cplx motional_phase_space_point(const Mat& rho_m, const HilbertLayout& layout, int mode) {
  const Ladder lad = fock_ladder(layout.fock_dims[mode]);
  return (lad.annihilator * reduce_mode(rho_m, layout, mode)).trace();
}

cplx phase_space_point(const Mat& rho, const HilbertLayout& layout, int mode) {
  return motional_phase_space_point(motional_of(rho, layout), layout, mode);
}

std::string to_string(GateBranch b) { return b == GateBranch::formula ? "formula" : "printed"; }

Mat ideal_gate_unitary(GateBranch branch) {
  // U = diag(1, -i, -i, 1); the formula channel conjugates with U^dag.
  const cplx s = branch == GateBranch::formula ? cplx(0.0, 1.0) : cplx(0.0, -1.0);
  Mat v = Mat::Zero(4, 4);
  v(0, 0) = 1.0;
  v(1, 1) = s;
  v(2, 2) = s;
  v(3, 3) = 1.0;
  return v;
}

Mat ideal_gate_apply(const Mat& rho_spin, GateBranch branch) {
  if (rho_spin.rows() != 4 || rho_spin.cols() != 4) {
    throw std::invalid_argument("ideal_gate_apply: expected a 4x4 matrix");
  }
  const Mat v = ideal_gate_unitary(branch);
  return v * rho_spin * v.adjoint();
}

GateBranch realized_gate_branch(const ChainParams& params, double* distance) {
  const double t = params.t_gate;
  const double j11 = spin_phase_J(1, 1, t, params);
  const double j13 = spin_phase_J(1, 3, t, params);
  const double j33 = spin_phase_J(3, 3, t, params);
  Mat u = Mat::Zero(4, 4);
  for (int s = 0; s < 4; ++s) {
    const int s1 = spin_value(s, 1), s3 = spin_value(s, 3);
    u(s, s) = std::exp(cplx(0.0, -(j11 + 2.0 * j13 * s1 * s3 + j33)));
  }
  auto dist = [&](GateBranch b) {
    const Mat v = ideal_gate_unitary(b);
    const cplx ov = (v.adjoint() * u).trace();
    const cplx ph = std::abs(ov) > 0 ? ov / std::abs(ov) : cplx(1.0, 0.0);
    return (u - ph * v).norm();
  };
  const double df = dist(GateBranch::formula), dp = dist(GateBranch::printed);
  if (distance) *distance = std::min(df, dp);
  return df <= dp ? GateBranch::formula : GateBranch::printed;
}

const std::array<Mat, 16>& pauli_basis() {
  static const std::array<Mat, 16> basis = [] {
    std::array<Mat, 16> b;
    for (int a = 0; a < 4; ++a)
      for (int c = 0; c < 4; ++c) b[4 * a + c] = 0.5 * kron(pauli(a), pauli(c));
    return b;
  }();
  return basis;
}

ChannelTable ideal_channel(GateBranch branch) {
  ChannelTable t;
  for (int i = 0; i < 16; ++i) t.outputs[i] = ideal_gate_apply(pauli_basis()[i], branch);
  return t;
}

ChannelTable identity_channel() {
  ChannelTable t;
  t.outputs = pauli_basis();
  return t;
}

ChannelTable depolarizing_channel() {
  ChannelTable t;
  for (int i = 0; i < 16; ++i) {
    t.outputs[i] = pauli_basis()[i].trace() / 4.0 * Mat::Identity(4, 4);
  }
  return t;
}

double process_fidelity(const ChannelTable& sim, const ChannelTable& ideal) {
  if (sim.basis != ideal.basis) {
    throw std::invalid_argument("process_fidelity: basis mismatch (" + sim.basis + " vs " +
                                ideal.basis + ")");
  }
  cplx acc = 0.0;
  for (int i = 0; i < 16; ++i) {
    const Mat& a = ideal.outputs[i];
    const Mat& g = sim.outputs[i];
    if (a.rows() != 4 || a.cols() != 4 || g.rows() != 4 || g.cols() != 4) {
      throw std::invalid_argument("process_fidelity: channel outputs must be 4x4");
    }
    // The basis is Hermitian, so Lambda(rho_i^dag) = Lambda(rho_i).
    acc += (a * g).trace();
  }
  return acc.real() / 16.0;
}

namespace {

struct ExpDecay {
  using Scalar = double;
  using InputType = Eigen::VectorXd;
  using ValueType = Eigen::VectorXd;
  using JacobianType = Eigen::MatrixXd;
  enum { InputsAtCompileTime = Eigen::Dynamic, ValuesAtCompileTime = Eigen::Dynamic };

  // Scaled data: s = (t - t0) / span, y in units of `yscale`.
  Eigen::VectorXd s, y;

  int inputs() const { return 3; }
  int values() const { return static_cast<int>(s.size()); }

  int operator()(const Eigen::VectorXd& x, Eigen::VectorXd& f) const {
    for (Eigen::Index i = 0; i < s.size(); ++i) f(i) = x(0) * std::exp(-x(1) * s(i)) + x(2) - y(i);
    return 0;
  }
  int df(const Eigen::VectorXd& x, Eigen::MatrixXd& j) const {
    for (Eigen::Index i = 0; i < s.size(); ++i) {
      const double e = std::exp(-x(1) * s(i));
      j(i, 0) = e;
      j(i, 1) = -x(0) * s(i) * e;
      j(i, 2) = 1.0;
    }
    return 0;
  }
};

}  // namespace

FitResult fit_cooling_rate(const TimeSeries& series, const std::string& column,
                           std::pair<double, double> window) {
  const std::vector<double>& ycol = series.column(column);
  std::vector<double> ts, ys;
  for (std::size_t i = 0; i < series.size(); ++i) {
    if (series.times[i] >= window.first && series.times[i] <= window.second) {
      ts.push_back(series.times[i]);
      ys.push_back(ycol[i]);
    }
  }
  const int n = static_cast<int>(ts.size());
  if (n < 50) {
    throw FitError("fit_cooling_rate: need >= 50 samples in window, got " + std::to_string(n));
  }
  const auto [ymin_it, ymax_it] = std::minmax_element(ys.begin(), ys.end());
  const double yscale = std::max(std::abs(*ymax_it), std::abs(*ymin_it));
  if (!(yscale > 0.0) || (*ymax_it - *ymin_it) <= 1e-9 * yscale) {
    throw FitError("fit_cooling_rate: degenerate series (no variation, A = 0)");
  }

  const double t0 = ts.front();
  const double span = ts.back() - t0;
  ExpDecay f;
  f.s.resize(n);
  f.y.resize(n);
  for (int i = 0; i < n; ++i) {
    f.s(i) = (ts[i] - t0) / span;
    f.y(i) = ys[i] / yscale;
  }

  // Initial guess: B from the tail mean, kappa from a two-point log slope.
  const int tail = std::max(5, n / 10);
  double B0 = 0.0;
  for (int i = n - tail; i < n; ++i) B0 += f.y(i);
  B0 /= tail;
  const double e0 = f.y(0) - B0;
  const int mid = n / 4;
  const double em = f.y(mid) - B0;
  double k0 = 3.0;
  if (e0 != 0.0 && em / e0 > 0.0 && em / e0 < 1.0) k0 = std::log(e0 / em) / f.s(mid);
  // The tail mean sits slightly above B for a slow decay; pull it back.
  const double corr = e0 * std::exp(-k0);
  Eigen::VectorXd x(3);
  x << e0 + corr, k0, B0 - corr;

  Eigen::LevenbergMarquardt<ExpDecay> lm(f);
  lm.parameters.xtol = 1e-14;
  lm.parameters.ftol = 1e-14;
  lm.parameters.maxfev = 2000;
  const auto status = lm.minimize(x);
  if (status == Eigen::LevenbergMarquardtSpace::ImproperInputParameters || !x.allFinite()) {
    throw FitError("fit_cooling_rate: solver failed from guess A=" + std::to_string(e0 * yscale) +
                   " kappa=" + std::to_string(k0 / span) + " B=" + std::to_string(B0 * yscale));
  }

  Eigen::VectorXd r(n);
  f(x, r);
  Eigen::MatrixXd jac(n, 3);
  f.df(x, jac);
  const double ssr = r.squaredNorm();
  const double s2 = ssr / std::max(1, n - 3);
  const Eigen::MatrixXd cov = s2 * (jac.transpose() * jac).inverse();

  if (std::abs(x(0)) <= 1e-9 * std::abs(x(2)) + 1e-300) {
    throw FitError("fit_cooling_rate: degenerate amplitude A = 0");
  }
  if (!(x(1) > 0.0)) {
    throw FitError("fit_cooling_rate: non-decaying fit (kappa = " + std::to_string(x(1) / span) +
                   " 1/s) from guess kappa=" + std::to_string(k0 / span));
  }

  FitResult out;
  out.kappa = x(1) / span;
  out.A = x(0) * yscale * std::exp(out.kappa * t0);
  out.B = x(2) * yscale;
  out.sigma_kappa = std::sqrt(std::max(0.0, cov(1, 1))) / span;
  out.sigma_A = std::sqrt(std::max(0.0, cov(0, 0))) * yscale * std::exp(out.kappa * t0);
  out.sigma_B = std::sqrt(std::max(0.0, cov(2, 2))) * yscale;
  out.residual_rms = std::sqrt(ssr / n) * yscale;
  out.window = window;
  out.samples = n;
  return out;
}

double log_slope_rate(const TimeSeries& series, const std::string& column,
                      std::pair<double, double> window, double B, double floor_fraction) {
  const std::vector<double>& ycol = series.column(column);
  double excess0 = 0.0;
  bool first = true;
  std::vector<double> ts, ls;
  for (std::size_t i = 0; i < series.size(); ++i) {
    const double t = series.times[i];
    if (t < window.first || t > window.second) continue;
    const double ex = ycol[i] - B;
    if (first) {
      excess0 = ex;
      first = false;
    }
    if (!(ex > floor_fraction * excess0) || !(ex > 0.0)) continue;
    ts.push_back(t);
    ls.push_back(std::log(ex));
  }
  if (ts.size() < 3) throw FitError("log_slope_rate: fewer than 3 usable samples");
  const double n = static_cast<double>(ts.size());
  const double mt = std::accumulate(ts.begin(), ts.end(), 0.0) / n;
  const double ml = std::accumulate(ls.begin(), ls.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    sxy += (ts[i] - mt) * (ls[i] - ml);
    sxx += (ts[i] - mt) * (ts[i] - mt);
  }
  return -sxy / sxx;
}

}  // namespace iongate
