#pragma once
// Application presets: each one reduces an equation to a SystemBundle.
// Also home to the closed-form oracles used to check the numerics.

#include "dhs/odeflow.hpp"
#include "dhs/sysmodel.hpp"

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace dhs {

/// Polynomial in t with coefficients c[k] t^k. Works on doubles, complex numbers and jets.
template <class C>
struct Poly {
  std::vector<C> c;

  template <class S>
  S operator()(const S& t) const {
    S acc(0.0);
    for (auto it = c.rbegin(); it != c.rend(); ++it) acc = acc * t + S(*it);
    return acc;
  }
  [[nodiscard]] C at0() const { return c.empty() ? C(0.0) : c[0]; }
  [[nodiscard]] int degree() const { return int(c.size()) - 1; }
};

// ---------------------------------- wave -----------------------------------

/// phi'' + t^{2l}|xi|^2 a phi + 2i t^l|xi| b phi' + i t^{l-1}|xi| c phi + t^{-1} g phi' + t^{-2} h phi = 0,
/// with a_ij, b_i, c_i, g, h polynomial in t.
struct WaveSpec {
  int d = 1;
  double ell = 1.0;
  double T = 1.0;
  double rho0 = 0.1;
  std::vector<MatrixXd> a;   // a[k]: coefficient of t^k, symmetric d x d
  std::vector<VectorXd> b;   // b[k]
  std::vector<VectorXcd> c;  // c[k]
  Poly<cplx> g;
  Poly<cplx> h;
  std::optional<int> m_P;
  std::optional<int> m_H;
};

/// Singular wave preset used by the renormalization checks:
/// d = 1, l = 1, a = 1 + t, b = 0, c = 1/2, g = 0.3 + 0.2 t, h = 0.1 + 0.1 t, rho0 = 0.3.
WaveSpec wave_default();
/// Model equation phi'' + t^{2l} xi^2 phi + i c t^{l-1} xi phi = 0.
WaveSpec model_wave_spec(double ell, double c);

struct DirectionCoeffs {
  Poly<double> a;   // a(t, w) = w^T a(t) w
  Poly<double> b;   // b(t, w) = b(t) . w
  Poly<cplx> c;     // c(t, w) = c(t) . w
};
DirectionCoeffs wave_direction(const WaveSpec& s, const VectorXd& omega);

struct WaveAux {
  cplx gamma;          // principal sqrt((g(0)-1)^2 - 4 h(0))
  double gamma_plus;
  double gamma_minus;
  double delta0;
  double delta_plus;   // sup over the direction grid
  VectorXd delta_plus_argmax;
  double alpha_min;    // min of alpha(t, w) on the validation grid
  /// alpha(t, w) = sqrt(a + b^2)
  [[nodiscard]] static double alpha(const DirectionCoeffs& dc, double t);
};

/// Throws std::domain_error when alpha^2 = a + b^2 fails to stay positive on the grid.
WaveAux wave_aux(const WaveSpec& s);
SystemBundle build_wave(const WaveSpec& s);

/// M_P and the Jordan data for the given g(0), h(0).
struct WavePBasis {
  MatrixXcd M_P;
  MatrixXcd M_P_inv;
  JordanSpec jordan;
};
WavePBasis wave_p_basis(cplx g0, cplx h0);

// --------------------------------- Kasner ----------------------------------

/// phi'' + (H^2 + i C) phi + g t^{-1} phi' = 0 with H^2 = sum t^{2 l_i} xi_i^2, C = sum c_i t^{l_i - 1} xi_i.
struct KasnerSpec {
  int d = 3;
  VectorXd ell;
  VectorXcd c;
  cplx g = 1.0;
  double T = 1.0;
  double rho0 = 0.1;
};

SystemBundle build_kasner(const KasnerSpec& s);
/// (phi, phi_t) from the Kasner unknown U at time t.
std::pair<cplx, cplx> kasner_phi(const KasnerSpec& s, const VectorXd& xi, double t, const VectorXcd& U);

// ------------------------------- higher order ------------------------------

/// d_t^n phi - sum_j sum_{|alpha| <= n-j} t^{j-n+(l+1)|alpha|} a_{j,alpha}(t) d_x^alpha d_t^j phi = 0.
struct HigherSpec {
  int n = 3;
  int d = 1;
  double ell = 1.0;
  double T = 1.0;
  double rho0 = 0.1;
  /// Key (j, alpha) -> polynomial a_{j,alpha}(t). Missing keys are zero.
  std::map<std::pair<int, std::vector<int>>, Poly<cplx>> a;
};

/// a_{j,k}(t, w) = sum_{|alpha| = k} a_{j,alpha}(t) w^alpha as a polynomial in t.
Poly<cplx> higher_direction(const HigherSpec& s, int j, int k, const VectorXd& omega);
/// Roots of p_{t,w}; throws std::domain_error naming (t, w) when they are not real and distinct.
VectorXd higher_roots(const HigherSpec& s, double t, const VectorXd& omega);
SystemBundle build_higher(const HigherSpec& s);

// --------------------------- Einstein-scalar -------------------------------

enum class EinsteinGauge { zero_shift, harmonic };

struct EinsteinSpec {
  int d = 3;
  VectorXd ell;
  double ell_phi = 0.0;
  double T = 1.0;
  double rho0 = 0.1;
  /// Number of geometric-series terms kept when expanding the lapse denominator in z.
  int taylor_depth = 8;
  std::optional<int> m_P;
};

/// State vector ordering: (eta_11, kappa_11, eta_12, kappa_12, ..., eta_dd, kappa_dd, phi, psi),
/// with the barred (orthonormal-frame) eta and kappa.
inline int einstein_eta(int d, int i, int j) { return 2 * (i * d + j); }
inline int einstein_kappa(int d, int i, int j) { return 2 * (i * d + j) + 1; }

/// t d/dt X = L(t) X for the barred state X in the given gauge.
MatrixXcd einstein_operator(const EinsteinSpec& s, const VectorXd& xi, double t, EinsteinGauge gauge);
/// Linear constraint rows: Hamiltonian, momentum, symmetry, trace of kappa; in the harmonic
/// gauge also the second momentum form and the gauge condition.
MatrixXcd einstein_constraint_matrix(const EinsteinSpec& s, const VectorXd& xi, double t, EinsteinGauge gauge);
/// Residuals relative to |X|.
VectorXcd constraint_residuals(const VectorXcd& X, double t, const VectorXd& xi, const EinsteinSpec& s,
                               EinsteinGauge gauge);
/// Least-squares projection onto the kernel of the constraint map.
VectorXcd project_constraints(const VectorXcd& X, double t, const VectorXd& xi, const EinsteinSpec& s,
                              EinsteinGauge gauge);
/// Gauge transformation to the spatial harmonic gauge (raw formula with beta solved in least squares).
VectorXcd einstein_to_harmonic(const VectorXcd& X, double t, const VectorXd& xi, const EinsteinSpec& s);
/// Conversion between the barred state X and the zone-interpolated unknown U.
VectorXcd einstein_state(const EinsteinSpec& s, const VectorXd& xi, double t, const VectorXcd& U);
VectorXcd einstein_unknown(const EinsteinSpec& s, const VectorXd& xi, double t, const VectorXcd& X);
/// sum (tH)^{1/2}|eta| + (tH)^{-1/2}|kappa| + (tH)^{1/2}|phi| + (tH)^{-1/2}|psi| of the barred state.
double einstein_weighted(const EinsteinSpec& s, const VectorXd& xi, double t, const VectorXcd& X);
/// Scalar multiple of the identity on each speed group: (1 + t H'/H) / 2.
double einstein_bg(const EinsteinSpec& s, const VectorXd& xi, double t);
SystemBundle build_einstein(const EinsteinSpec& s);

struct Subcriticality {
  bool applicable = false;
  bool subcritical = false;
  double margin = 0.0;   // 1 - max_{i, j != k} (l_i - l_j - l_k)
};
Subcriticality subcriticality(const VectorXd& ell);

// --------------------------------- oracles ---------------------------------

struct KummerOptions {
  double x_cap = 20000.0;
  double rtol = 1e-14;
};

/// Confluent hypergeometric 1F1(a; b; x). Taylor series near 0, analytic continuation of
/// Kummer's equation along the ray from 0 beyond |x| = 1.
cplx kummer_1f1(cplx a, cplx b, cplx x, const KummerOptions& opt = {});

/// Exact solution of the model equation for natural l; returns (phi, d_t phi).
std::pair<cplx, cplx> model_wave_exact(int ell, double c, cplx phi0, cplx phi1, double t, double xi);
/// Direct integration of the model equation in (phi, phi_t) from t = 0.
std::pair<cplx, cplx> model_wave_numeric(double ell, double c, cplx phi0, cplx phi1, double t, double xi,
                                         double rtol = 1e-12);

/// Fit of phi / phi0 = (c0 + c1 i xi t^2) e^{-i xi t^2 / 2} for l = 1, c = 5, phi1 = 0 from the oracle.
struct LossSolutionFit {
  cplx c0;
  cplx c1;
  double max_residual;
};
LossSolutionFit loss_solution_fit(const std::vector<double>& xis, double t = 1.0);

}  // namespace dhs
