#include "dhs/odeflow.hpp"

#include "dhs/quadrature.hpp"
#include "dop853_tableau.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <sstream>

namespace dhs {

// --------------------------------- DOP853 ----------------------------------

namespace {

double rms_scaled(const VectorXcd& v, const Eigen::VectorXd& scale) {
  return std::sqrt((v.cwiseAbs2().array() / scale.array().square()).sum() / double(v.size()));
}

double initial_step(const OdeRhs& f, double x0, const VectorXcd& y0, const VectorXcd& f0, double dir,
                    const OdeOptions& opt, OdeStats& st) {
  const Eigen::VectorXd scale = (opt.atol + y0.cwiseAbs().array() * opt.rtol).matrix();
  const double d0 = rms_scaled(y0, scale), d1 = rms_scaled(f0, scale);
  const double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
  VectorXcd y1 = y0 + h0 * dir * f0, f1(y0.size());
  f(x0 + h0 * dir, y1, f1);
  ++st.evaluations;
  const double d2 = rms_scaled(f1 - f0, scale) / h0;
  const double h1 = (d1 <= 1e-15 && d2 <= 1e-15) ? std::max(1e-6, h0 * 1e-3)
                                                  : std::pow(0.01 / std::max(d1, d2), 1.0 / 8.0);
  return std::min(100.0 * h0, h1);
}

}  // namespace

VectorXcd dop853(const OdeRhs& f, double x0, double x1, VectorXcd y, const OdeOptions& opt, OdeStats* stats) {
  OdeStats local;
  OdeStats& st = stats ? *stats : local;
  if (x0 == x1) return y;
  const Eigen::Index n = y.size();
  const double dir = x1 > x0 ? 1.0 : -1.0;
  std::array<VectorXcd, 13> K;
  for (auto& k : K) k.resize(n);
  VectorXcd f0(n), ytmp(n), ynew(n);
  f(x0, y, f0);
  ++st.evaluations;
  double h_abs = std::min({initial_step(f, x0, y, f0, dir, opt, st), opt.max_step, std::fabs(x1 - x0)});
  double x = x0;
  bool rejected = false;
  constexpr double kSafety = 0.9, kMinFactor = 0.2, kMaxFactor = 10.0, kExp = -1.0 / 8.0;
  while (dir * (x1 - x) > 0.0) {
    if (st.steps + st.rejected > opt.max_steps) {
      std::ostringstream os;
      os << "integrator exceeded " << opt.max_steps << " steps at x=" << x;
      throw StepCollapse(os.str());
    }
    const double min_step = 10.0 * std::numeric_limits<double>::epsilon() * std::max(std::fabs(x), 1e-300);
    if (h_abs < min_step) {
      std::ostringstream os;
      os << "step-size collapse at x=" << x << " (h=" << h_abs << ")";
      throw StepCollapse(os.str());
    }
    h_abs = std::min(h_abs, opt.max_step);
    bool last = false;
    if (h_abs >= std::fabs(x1 - x)) {
      h_abs = std::fabs(x1 - x);
      last = true;
    }
    const double h = dir * h_abs;
    K[0] = f0;
    for (int s = 1; s < dop853_tab::kStages; ++s) {
      ytmp = y;
      for (int j = 0; j < s; ++j)
        if (dop853_tab::A[s][j] != 0.0) ytmp.noalias() += (h * dop853_tab::A[s][j]) * K[j];
      f(x + dop853_tab::C[s] * h, ytmp, K[s]);
    }
    ynew = y;
    for (int j = 0; j < dop853_tab::kStages; ++j)
      if (dop853_tab::B[j] != 0.0) ynew.noalias() += (h * dop853_tab::B[j]) * K[j];
    const double xnew = last ? x1 : x + h;
    f(xnew, ynew, K[12]);
    st.evaluations += dop853_tab::kStages;

    Eigen::VectorXd scale(n);
    for (Eigen::Index i = 0; i < n; ++i) scale(i) = opt.atol + std::max(std::abs(y(i)), std::abs(ynew(i))) * opt.rtol;
    VectorXcd e5 = VectorXcd::Zero(n), e3 = VectorXcd::Zero(n);
    for (int j = 0; j < 13; ++j) {
      if (dop853_tab::E5[j] != 0.0) e5.noalias() += dop853_tab::E5[j] * K[j];
      if (dop853_tab::E3[j] != 0.0) e3.noalias() += dop853_tab::E3[j] * K[j];
    }
    const double e5n2 = (e5.cwiseAbs2().array() / scale.array().square()).sum();
    const double e3n2 = (e3.cwiseAbs2().array() / scale.array().square()).sum();
    double err = 0.0;
    if (e5n2 > 0.0 || e3n2 > 0.0) err = h_abs * e5n2 / std::sqrt((e5n2 + 0.01 * e3n2) * double(n));
    if (!std::isfinite(err)) err = 1e10;

    if (err < 1.0) {
      double factor = err == 0.0 ? kMaxFactor : std::min(kMaxFactor, kSafety * std::pow(err, kExp));
      if (rejected) factor = std::min(1.0, factor);
      x = xnew;
      y.swap(ynew);
      f0 = K[12];
      ++st.steps;
      rejected = false;
      h_abs *= factor;
    } else {
      h_abs *= std::max(kMinFactor, kSafety * std::pow(err, kExp));
      ++st.rejected;
      rejected = true;
    }
  }
  return y;
}

// --------------------------------- evolve ----------------------------------

namespace {

VectorXcd evolve_plain(const EvolutionProblem& p, double z0, double z1, const VectorXcd& U0, const OdeOptions& opt,
                       bool log_variable) {
  if (z0 == z1) return U0;
  if (log_variable) {
    OdeRhs rhs = [&](double s, const VectorXcd& y, VectorXcd& dy) {
      const double z = std::exp(s);
      dy.noalias() = z * (p.coefficient(z) * y);
      if (p.forcing) dy += z * p.forcing(z);
    };
    return dop853(rhs, std::log(z0), std::log(z1), U0, opt);
  }
  OdeRhs rhs = [&](double z, const VectorXcd& y, VectorXcd& dy) {
    dy.noalias() = p.coefficient(z) * y;
    if (p.forcing) dy += p.forcing(z);
  };
  return dop853(rhs, z0, z1, U0, opt);
}

VectorXcd evolve_segment(const EvolutionProblem& p, double z0, double z1, const VectorXcd& U0, double tol) {
  OdeOptions opt;
  opt.rtol = tol;
  opt.atol = std::max(1e-300, tol * 1e-4 * U0.norm());
  VectorXcd U = U0;
  // Split at log_below so the Fuchsian part runs in log z.
  std::vector<double> cuts{z0};
  if (p.log_below > 0.0 && (p.log_below - z0) * (p.log_below - z1) < 0.0) cuts.push_back(p.log_below);
  cuts.push_back(z1);
  for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
    const double a = cuts[k], b = cuts[k + 1];
    const bool use_log = std::max(a, b) <= p.log_below * (1.0 + 1e-12);
    if (p.step_cap && !use_log) {
      // Geometric chunks (ratio 2) so the oscillation cap follows the local frequency.
      double x = a;
      while (x != b) {
        double y = b > a ? std::min(b, 2.0 * x) : std::max(b, 0.5 * x);
        if (std::fabs(b - y) < 1e-14 * std::fabs(b)) y = b;
        opt.max_step = p.step_cap(x, y);
        U = evolve_plain(p, x, y, U, opt, false);
        x = y;
      }
      opt.max_step = std::numeric_limits<double>::infinity();
    } else {
      U = evolve_plain(p, a, b, U, opt, use_log);
    }
  }
  return U;
}

}  // namespace

VectorXcd evolve(const EvolutionProblem& p, double z0, double z1, const VectorXcd& U0, double tol,
                 const std::vector<double>& outputs, std::vector<TracePoint>* trace) {
  if (!(z0 > 0.0) || !(z1 > 0.0)) throw std::invalid_argument("evolve: z must be positive");
  std::vector<double> stops;
  for (double z : outputs)
    if ((z - z0) * (z - z1) <= 0.0) stops.push_back(z);
  const bool fwd = z1 > z0;
  std::sort(stops.begin(), stops.end(), [&](double a, double b) { return fwd ? a < b : a > b; });
  VectorXcd U = U0;
  double z = z0;
  for (double s : stops) {
    U = evolve_segment(p, z, s, U, tol);
    z = s;
    if (trace) trace->push_back({s, U});
  }
  return evolve_segment(p, z, z1, U, tol);
}

// ----------------------------- limit / scatter -----------------------------

namespace {

struct TailPlan {
  double C;
  double z_min;
};

TailPlan plan_tail(const IntegrableKernel& k, double z_start, double tol) {
  if (!(k.eps > 0.0)) throw NonCauchyTail("kernel integrability exponent must be positive");
  std::vector<double> c;
  for (int j = 0; j <= 12; ++j) {
    const double z = z_start * std::pow(10.0, -j);
    c.push_back(k.S(z).operatorNorm() * std::pow(z, 1.0 - k.eps));
  }
  const double shallow = *std::max_element(c.begin(), c.begin() + 4);
  const double deep = *std::max_element(c.begin() + 8, c.end());
  if (deep > 1e3 * std::max(shallow, 1e-300)) {
    std::ostringstream os;
    os << "kernel bound C z^(eps-1) with eps=" << k.eps << " grows toward z=0 (" << shallow << " -> " << deep
       << "); integrability violated";
    throw NonCauchyTail(os.str());
  }
  const double C = 2.0 * std::max(*std::max_element(c.begin(), c.end()), 1e-300);
  double z_min = std::pow(0.1 * tol * k.eps / C, 1.0 / k.eps);
  z_min = std::clamp(z_min, 1e-300, z_start * 1e-3);
  return {C, z_min};
}

/// Integral of S over (0, z_min], in log z.
MatrixXcd tail_integral(const IntegrableKernel& k, double z_min) {
  const double s1 = std::log(z_min);
  const double s0 = std::max(s1 - 60.0 / k.eps, std::log(1e-300));
  auto g = [&](double s) -> MatrixXcd {
    const double z = std::exp(s);
    return z * k.S(z);
  };
  return integrate_gk(g, s0, s1, 1e-8, 1e-300);
}

}  // namespace

LimitResult limit_at_zero(const IntegrableKernel& k, double z_start, const VectorXcd& W_start, double tol,
                          const std::vector<double>& outputs, std::vector<TracePoint>* trace) {
  LimitResult r;
  if (W_start.norm() == 0.0) {
    r.u = W_start;
    return r;
  }
  const TailPlan tp = plan_tail(k, z_start, tol);
  EvolutionProblem p;
  p.coefficient = k.S;
  p.log_below = std::numeric_limits<double>::infinity();
  const VectorXcd W = evolve(p, z_start, tp.z_min, W_start, tol, outputs, trace);
  // First-order Picard correction for the unresolved piece (0, z_min].
  r.u = W - tail_integral(k, tp.z_min) * W;
  r.z_min = tp.z_min;
  r.kernel_constant = tp.C;
  r.error = (tp.C * std::pow(tp.z_min, k.eps) / k.eps) * (tp.C * std::pow(tp.z_min, k.eps) / k.eps) * W.norm() +
            tol * W.norm();
  return r;
}

VectorXcd scatter_from_zero(const IntegrableKernel& k, const VectorXcd& u_A, double z_target, double tol,
                            const std::vector<double>& outputs, std::vector<TracePoint>* trace) {
  if (u_A.norm() == 0.0) {
    if (trace)
      for (double z : outputs) trace->push_back({z, u_A});
    return u_A;
  }
  const TailPlan tp = plan_tail(k, z_target, tol);
  // The kernel's L1 norm on (0, z_min] is below 0.1 tol < 1/2, so the Picard map contracts there.
  const MatrixXcd J = tail_integral(k, tp.z_min);
  const VectorXcd W0 = u_A + J * u_A;
  EvolutionProblem p;
  p.coefficient = k.S;
  p.log_below = std::numeric_limits<double>::infinity();
  return evolve(p, tp.z_min, z_target, W0, tol, outputs, trace);
}

// ------------------------------ full pipeline ------------------------------

FrequencyContext prepare_frequency(const SystemBundle& b, const VectorXd& xi, const PipelineOptions& opt) {
  FrequencyContext ctx;
  ctx.bundle = &b;
  ctx.model = b.at(xi);
  ctx.pzone = ctx.model.pzone();
  const auto& pz = ctx.pzone;
  int mP = 0;
  if (opt.m_P) mP = *opt.m_P;
  else if (b.m_P) mP = *b.m_P;
  else if (pz.m_override) mP = *pz.m_override;
  else mP = select_m_p(pz.a_P, pz.jordan);
  ctx.pplan = build_p_renorm(pz, mP);
  ctx.kernel.S = [&ctx](double z) { return p_renormalized_coefficient(ctx.pplan, ctx.pzone, z); };
  bool jordan_logs = false;
  for (const auto& blk : pz.jordan.blocks) jordan_logs = jordan_logs || blk.size > 1;
  ctx.kernel.eps = ctx.pplan.remainder_order() - pz.jordan.spread() + 1.0 - (jordan_logs ? 0.05 : 0.0);

  const double T = b.scale.T, rho0 = b.zones.rho0, zf = ctx.model.zfac;
  const double tH = 1.0 / (rho0 * zf);
  if (tH < T && ctx.model.h.jets) {
    std::vector<double> ts;
    for (int k = 0; k <= 16; ++k) ts.push_back(tH * std::pow(T / tH, k / 16.0));
    if (b.partition_hint) {
      ctx.partition.groups = *b.partition_hint;
      std::vector<VectorXd> D;
      for (double t : ts) D.push_back(ctx.model.h.D_H(t));
      ctx.partition.d0 = speed_partition(D, 1e-6).d0;
    } else {
      std::vector<VectorXd> D;
      for (double t : ts) D.push_back(ctx.model.h.D_H(t));
      ctx.partition = speed_partition(D, 1e-6);
    }
    int mH = 1;
    if (opt.m_H) mH = *opt.m_H;
    else if (b.m_H) mH = *b.m_H;
    else mH = select_m_h(b.scale.ell_star(), eh_growth_constant(ctx.model.h, ts));
    ctx.hplan = build_h_renorm(ctx.model.h, ctx.partition, mH, zf);
  }
  return ctx;
}

namespace {

EHVariant default_variant(const FrequencyContext& ctx) {
  return ctx.partition.semi_strict() ? EHVariant::two_sided : EHVariant::plus;
}

VectorXcd p_physical_from_W(const FrequencyContext& ctx, double z, const VectorXcd& W) {
  return ctx.pzone.M_P_inv * renormalized_p_inverse(ctx.pplan, W, z);
}

EvolutionProblem physical_problem(const FrequencyContext& ctx, bool h_system) {
  EvolutionProblem p;
  const auto& A = (h_system && ctx.model.A_H) ? ctx.model.A_H : ctx.model.A;
  p.coefficient = A;
  if (h_system && ctx.model.h.D_H) {
    const SystemBundle* b = ctx.bundle;
    const VectorXd xi = ctx.model.xi;
    const auto D_H = ctx.model.h.D_H;
    p.step_cap = [b, xi, D_H](double t0, double t1) {
      double w = 0.0;
      for (double t : {t0, t1, 0.5 * (t0 + t1)}) {
        const double H = rescaled(b->scale, t, xi).H;
        w = std::max(w, H * D_H(t).cwiseAbs().maxCoeff());
      }
      return w > 0.0 ? (2.0 * std::numbers::pi / 10.0) / w : std::numeric_limits<double>::infinity();
    };
  }
  return p;
}

}  // namespace

VectorXcd renormalized_unknown(const FrequencyContext& ctx, double t, const VectorXcd& U) {
  const double zf = ctx.model.zfac;
  const double z = zf * t;
  const Zone zn = zone_of(z, ctx.bundle->zones);
  if (zn == Zone::P) return renormalized_p(ctx.pplan, ctx.pzone.M_P * U, z);
  if (zn == Zone::I || !ctx.hplan) return U;
  const auto& h = ctx.model.h;
  const HStageValues st = ctx.hplan->at(t);
  const EHFactor f = eh_factor(h, ctx.partition, default_variant(ctx), t, zf, ctx.bundle->zones.rho0);
  return renormalized_h(st, f, h.M_H(t) * U);
}

FrequencySolve full_pipeline(const SystemBundle& b, const PipelineData& data, const VectorXd& xi,
                             const PipelineOptions& opt) {
  const FrequencyContext ctx = prepare_frequency(b, xi, opt);
  return full_pipeline(ctx, data, opt);
}

FrequencySolve full_pipeline(const FrequencyContext& ctx, const PipelineData& data, const PipelineOptions& opt) {
  const SystemBundle& b = *ctx.bundle;
  FrequencySolve fs;
  fs.xi = ctx.model.xi;
  fs.zfac = ctx.model.zfac;
  const double zf = fs.zfac, rho0 = b.zones.rho0;
  fs.t_P = rho0 / zf;
  fs.t_H = 1.0 / (rho0 * zf);
  fs.m_P = ctx.pplan.m;
  fs.m_H = ctx.hplan ? ctx.hplan->m : 0;
  const double T = data.t_end.value_or(b.scale.T);
  fs.zone_T = zone_of(zf * T, b.zones);
  const double tol = opt.tol;
  const bool has_H = ctx.hplan.has_value() && T > fs.t_H;
  const double tP_end = std::min(T, fs.t_P);

  auto record = [&](double t, const VectorXcd& U, bool h_system) {
    const Zone zn = zone_of(zf * t, b.zones);
    VectorXcd UA = (zn == Zone::H && !h_system && ctx.model.into_h) ? renormalized_unknown(ctx, t, ctx.model.into_h(t, U))
                                                                   : renormalized_unknown(ctx, t, U);
    fs.traces.push_back({t, zn, U, UA});
  };
  auto outputs_in = [&](double lo, double hi) {
    std::vector<double> v;
    for (double t : opt.outputs)
      if (t > lo * (1 + 1e-14) && t <= hi * (1 + 1e-14)) v.push_back(t);
    return v;
  };

  if (data.at_T) {
    VectorXcd U = *data.at_T;
    fs.U_T = U;
    double t = T;
    if (has_H) {
      std::vector<TracePoint> tr;
      U = evolve(physical_problem(ctx, true), t, fs.t_H, U, tol, outputs_in(fs.t_H, t), &tr);
      for (const auto& p : tr) record(p.z, p.U, true);
      if (ctx.model.from_h) U = ctx.model.from_h(fs.t_H, U);
      t = fs.t_H;
    }
    if (t > fs.t_P) {
      std::vector<TracePoint> tr;
      U = evolve(physical_problem(ctx, false), t, fs.t_P, U, tol, outputs_in(fs.t_P, t), &tr);
      for (const auto& p : tr) record(p.z, p.U, false);
      t = fs.t_P;
    }
    const double z0 = zf * t;
    const VectorXcd W0 = renormalized_p(ctx.pplan, ctx.pzone.M_P * U, z0);
    std::vector<double> zouts;
    for (double to : outputs_in(0.0, t)) zouts.push_back(zf * to);
    std::vector<TracePoint> tr;
    const LimitResult lr = limit_at_zero(ctx.kernel, z0, W0, tol, zouts, &tr);
    for (const auto& p : tr) fs.traces.push_back({p.z / zf, Zone::P, p_physical_from_W(ctx, p.z, p.U), p.U});
    fs.u_A = lr.u;
    fs.u_A_error = lr.error;
    fs.U_A_T = (fs.zone_T == Zone::H && has_H) ? renormalized_unknown(ctx, T, *data.at_T)
                                               : (fs.zone_T == Zone::P ? W0 : *data.at_T);
  } else if (data.asymptotic) {
    fs.u_A = *data.asymptotic;
    std::vector<double> zouts;
    for (double to : outputs_in(0.0, tP_end)) zouts.push_back(zf * to);
    std::vector<TracePoint> tr;
    const double z0 = zf * tP_end;
    const VectorXcd W = scatter_from_zero(ctx.kernel, fs.u_A, z0, tol, zouts, &tr);
    for (const auto& p : tr) fs.traces.push_back({p.z / zf, Zone::P, p_physical_from_W(ctx, p.z, p.U), p.U});
    VectorXcd U = p_physical_from_W(ctx, z0, W);
    double t = tP_end;
    if (T > t) {
      const double tI_end = std::min(T, fs.t_H);
      std::vector<TracePoint> tri;
      U = evolve(physical_problem(ctx, false), t, tI_end, U, tol, outputs_in(t, tI_end), &tri);
      for (const auto& p : tri) record(p.z, p.U, false);
      t = tI_end;
    }
    if (has_H && T > t) {
      if (ctx.model.into_h) U = ctx.model.into_h(t, U);
      std::vector<TracePoint> trh;
      U = evolve(physical_problem(ctx, true), t, T, U, tol, outputs_in(t, T), &trh);
      for (const auto& p : trh) record(p.z, p.U, true);
    }
    fs.U_T = U;
    fs.U_A_T = fs.zone_T == Zone::P ? W : renormalized_unknown(ctx, T, U);
  } else {
    throw std::invalid_argument("full_pipeline: no data");
  }
  std::sort(fs.traces.begin(), fs.traces.end(), [](const SolveTrace& a, const SolveTrace& c) { return a.t < c.t; });
  return fs;
}

std::vector<SolveTrace> evolve_h_zone(const SystemBundle& b, const VectorXd& xi, double t0, double t1,
                                      const VectorXcd& U0, const std::vector<double>& outputs, double tol) {
  FrequencyContext ctx;
  ctx.bundle = &b;
  ctx.model = b.at(xi);
  const double tH = 1.0 / (b.zones.rho0 * ctx.model.zfac);
  if (std::min(t0, t1) < tH * (1.0 - 1e-12)) throw std::invalid_argument("evolve_h_zone: interval leaves Z_H");
  std::vector<TracePoint> tr;
  evolve(physical_problem(ctx, true), t0, t1, U0, tol, outputs, &tr);
  std::vector<SolveTrace> out;
  for (const auto& p : tr) out.push_back({p.z, Zone::H, p.U, p.U});
  return out;
}

SobolevTable sobolev_convergence(const std::vector<double>& xi_mag, const std::vector<double>& weights,
                                 const std::vector<VectorXcd>& u_A,
                                 const std::vector<std::vector<VectorXcd>>& U_A_by_time,
                                 const std::vector<double>& times, double s, double delta) {
  SobolevTable tab;
  tab.times = times;
  for (const auto& row : U_A_by_time) {
    double acc = 0.0;
    for (std::size_t k = 0; k < xi_mag.size(); ++k)
      acc += weights[k] * std::pow(japanese(xi_mag[k]), 2.0 * (s - delta)) * (row[k] - u_A[k]).squaredNorm();
    tab.distance.push_back(acc);
  }
  tab.monotone = true;
  for (std::size_t k = 1; k < tab.distance.size(); ++k)
    if (!(tab.distance[k] < tab.distance[k - 1])) tab.monotone = false;
  if (!tab.distance.empty() && tab.distance.front() > 0.0)
    tab.final_ratio = tab.distance.back() / tab.distance.front();
  return tab;
}

}  // namespace dhs
