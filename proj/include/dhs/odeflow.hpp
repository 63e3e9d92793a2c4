#pragma once
// Per-frequency integration across the zones, limit extraction at z -> 0,
// scattering from asymptotic data and the discretized Sobolev check.

#include "dhs/renorm_h.hpp"
#include "dhs/renorm_p.hpp"
#include "dhs/sysmodel.hpp"

#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace dhs {

struct StepCollapse : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NonCauchyTail : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct OdeOptions {
  double rtol = 1e-10;
  double atol = 1e-14;
  double max_step = std::numeric_limits<double>::infinity();
  long max_steps = 200'000'000;
};

struct OdeStats {
  long steps = 0;
  long rejected = 0;
  long evaluations = 0;
};

using OdeRhs = std::function<void(double x, const VectorXcd& y, VectorXcd& dydx)>;

/// Adaptive Dormand-Prince 8(5,3) integration from x0 to x1 (either direction).
VectorXcd dop853(const OdeRhs& f, double x0, double x1, VectorXcd y, const OdeOptions& opt = {},
                 OdeStats* stats = nullptr);

/// Linear system dU/dz = coefficient(z) U + forcing(z).
struct EvolutionProblem {
  std::function<MatrixXcd(double z)> coefficient;
  std::function<VectorXcd(double z)> forcing;
  /// Below this z the integrator runs in s = log z.
  double log_below = 0.0;
  /// Optional step cap in z, e.g. a fraction of the oscillation period.
  std::function<double(double z0, double z1)> step_cap;
};

struct TracePoint {
  double z;
  VectorXcd U;
};

/// Evolves from z0 to z1; when `outputs` is given, states at those z are recorded in `trace`.
VectorXcd evolve(const EvolutionProblem& p, double z0, double z1, const VectorXcd& U0, double tol = 1e-10,
                 const std::vector<double>& outputs = {}, std::vector<TracePoint>* trace = nullptr);

struct LimitResult {
  VectorXcd u;
  double error = 0.0;   // a-priori tail bound plus the integration tolerance
  double z_min = 0.0;
  double kernel_constant = 0.0;
};

/// Integrable coefficient dW/dz = S(z) W with ||S(z)|| <= C z^{-1+eps} near 0.
struct IntegrableKernel {
  std::function<MatrixXcd(double z)> S;
  double eps = 0.5;
};

/// Estimates C and chooses z_min so that the tail C z^eps / eps stays below 0.1 tol.
LimitResult limit_at_zero(const IntegrableKernel& k, double z_start, const VectorXcd& W_start, double tol = 1e-10,
                          const std::vector<double>& outputs = {}, std::vector<TracePoint>* trace = nullptr);
/// Solves forward from W(0) = u_A to z_target; a first-order Picard correction covers [0, z_min].
VectorXcd scatter_from_zero(const IntegrableKernel& k, const VectorXcd& u_A, double z_target, double tol = 1e-10,
                            const std::vector<double>& outputs = {}, std::vector<TracePoint>* trace = nullptr);

// ------------------------------ full pipeline ------------------------------

struct PipelineOptions {
  double tol = 1e-11;
  std::optional<int> m_P;
  std::optional<int> m_H;
  /// Times (in t) at which the renormalized unknown U_A and physical U are recorded.
  std::vector<double> outputs;
};

struct PipelineData {
  std::optional<VectorXcd> at_T;         // physical U(T)
  std::optional<VectorXcd> asymptotic;   // u_A
  /// End time for scattering runs (defaults to T).
  std::optional<double> t_end;
};

struct SolveTrace {
  double t;
  Zone zone;
  VectorXcd U;     // physical state
  VectorXcd U_A;   // renormalized unknown for the zone of t
};

struct FrequencySolve {
  VectorXd xi;
  double zfac = 1.0;
  double t_P = 0.0;  // rho0 / zfac
  double t_H = 0.0;  // 1 / (rho0 zfac)
  int m_P = 0;
  int m_H = 0;
  VectorXcd u_A;
  double u_A_error = 0.0;
  VectorXcd U_T;     // physical state at T (or t_end)
  VectorXcd U_A_T;   // renormalized unknown at T (or t_end)
  Zone zone_T = Zone::I;
  std::vector<SolveTrace> traces;
  std::string status = "ok";
};

/// Everything the pipeline needs at one frequency.
struct FrequencyContext {
  const SystemBundle* bundle = nullptr;
  FrequencyModel model;
  PZoneData pzone;
  PRenormPlan pplan;
  std::optional<HRenormPlan> hplan;
  SpeedPartition partition;
  IntegrableKernel kernel;
};

FrequencyContext prepare_frequency(const SystemBundle& b, const VectorXd& xi, const PipelineOptions& opt = {});

/// U_A at time t given the physical state (zone-dependent renormalization).
VectorXcd renormalized_unknown(const FrequencyContext& ctx, double t, const VectorXcd& U);

FrequencySolve full_pipeline(const SystemBundle& b, const PipelineData& data, const VectorXd& xi,
                             const PipelineOptions& opt = {});
FrequencySolve full_pipeline(const FrequencyContext& ctx, const PipelineData& data, const PipelineOptions& opt = {});

/// Physical evolution between two times of Z_H in the Z_H system, with states recorded at `outputs`.
/// Needs no zone plans, so it is usable where the Z_P renormalization is expensive.
std::vector<SolveTrace> evolve_h_zone(const SystemBundle& b, const VectorXd& xi, double t0, double t1,
                                      const VectorXcd& U0, const std::vector<double>& outputs, double tol = 1e-11);

struct SobolevTable {
  std::vector<double> times;
  std::vector<double> distance;
  bool monotone = false;
  double final_ratio = 0.0;
};

/// sum_k w_k <xi_k>^{2(s - delta)} |U_A(t, xi_k) - u_A(xi_k)|^2 for each t.
SobolevTable sobolev_convergence(const std::vector<double>& xi_mag, const std::vector<double>& weights,
                                 const std::vector<VectorXcd>& u_A,
                                 const std::vector<std::vector<VectorXcd>>& U_A_by_time,
                                 const std::vector<double>& times, double s, double delta);

}  // namespace dhs
