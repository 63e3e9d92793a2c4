#pragma once
// System description, anisotropic rescaling, zone classification and structural checks.

#include "dhs/jet.hpp"
#include "dhs/phsym.hpp"

#include <Eigen/Dense>

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace dhs {

using Eigen::MatrixXcd;
using Eigen::MatrixXd;
using Eigen::VectorXcd;
using Eigen::VectorXd;

/// Japanese bracket sqrt(1 + x^2).
inline double japanese(double x) { return std::sqrt(1.0 + x * x); }

struct ScaleProfile {
  int d = 1;
  VectorXd ell;                                // each > -1
  std::function<MatrixXd(double)> lambda;      // d x d, real
  double T = 1.0;

  [[nodiscard]] double ell_star() const { return ell.minCoeff(); }
};

struct ZoneParams {
  double rho0 = 0.1;
};

enum class Zone { P, I, H };
const char* zone_name(Zone z);

struct Rescaled {
  double z;
  double H;
  double Zc;
};

double zfac(const ScaleProfile& s, const VectorXd& xi);
/// Throws std::domain_error on a negative radicand (ellipticity violation).
Rescaled rescaled(const ScaleProfile& s, double t, const VectorXd& xi);
Zone zone_of(double z, const ZoneParams& zones);
inline Zone zone_of(const ScaleProfile& s, double t, const VectorXd& xi, const ZoneParams& zones) {
  return zone_of(zfac(s, xi) * t, zones);
}

/// Smooth ramp: 0 for z <= 1/(2 rho0), 1 for z >= 1/rho0.
double cutoff_chi(double z, double rho0);
/// d chi / dz.
double cutoff_chi_dz(double z, double rho0);

// --------------------------- zone data (fixed xi) ---------------------------

struct JordanBlock {
  cplx eigenvalue;
  int size = 1;
  /// Exact real eigenvalue, when known, for resonance detection.
  std::optional<Exponent> exact;
};

struct JordanSpec {
  std::vector<JordanBlock> blocks;

  [[nodiscard]] int n() const;
  [[nodiscard]] MatrixXcd matrix() const;
  [[nodiscard]] cplx diag(int i) const;
  [[nodiscard]] std::optional<Exponent> exact_diag(int i) const;
  /// True when i and i+1 lie in the same block (unit superdiagonal).
  [[nodiscard]] bool coupled(int i) const;
  /// max_{i,j} Re(B_ii - B_jj)
  [[nodiscard]] double spread() const;
};

/// Pseudodifferential-zone data: U_P = M_P U satisfies dU_P/dz = (z^{-1} B_P + R_P(z)) U_P.
struct PZoneData {
  JordanSpec jordan;
  MatrixXcd M_P;
  MatrixXcd M_P_inv;
  PHMatrix R_P;                                   // expansion in z (possibly truncated)
  std::function<MatrixXcd(double z)> R_P_numeric; // same remainder, evaluated directly
  double a_P = 0.0;
  std::optional<int> m_override;
};

/// t-jets of the hyperbolic-zone coefficients in z-units at one time.
struct HJets {
  JetVector zcd;  // Zc * diag(D_H)
  JetMatrix r0;   // z^{-1} B_H + R_H
};

/// Hyperbolic-zone data: U_H = M_H U satisfies dU_H/dz = (i Zc D_H + z^{-1} B_H + R_H) U_H.
struct HZoneData {
  std::function<MatrixXcd(double t)> M_H;
  std::function<VectorXd(double t)> D_H;
  std::function<MatrixXcd(double t)> B_H;
  std::function<HJets(double t)> jets;
  double a_H = -2.0;
};

struct FrequencyModel {
  VectorXd xi;
  double zfac = 1.0;
  int n = 0;
  /// Physical coefficient: dU/dt = A(t) U, valid on all of (0, T].
  std::function<MatrixXcd(double t)> A;
  /// Built on demand: expansion assembly can be costly for large systems.
  std::function<PZoneData()> pzone;
  HZoneData h;
  /// Optional separate physical system used on Z_H (e.g. a different gauge).
  std::function<MatrixXcd(double t)> A_H;
  /// State maps between the two systems at the I/H boundary.
  std::function<VectorXcd(double t, const VectorXcd& U)> into_h;
  std::function<VectorXcd(double t, const VectorXcd& U)> from_h;
};

struct SystemBundle {
  std::string name;
  int n = 0;
  ScaleProfile scale;
  ZoneParams zones;
  double izone_bound = 0.0;
  std::function<FrequencyModel(const VectorXd& xi)> at;
  std::optional<int> m_P;
  std::optional<int> m_H;
  /// Index groups of equal speeds, if known analytically.
  std::optional<std::vector<std::vector<int>>> partition_hint;
};

// ------------------------------- validation --------------------------------

struct ValidationGrid {
  int t_per_decade = 32;
  int xi_per_decade = 8;
  double xi_min = 1.0;
  double xi_max = 1e4;
  double t_min = 1e-4;
  /// Direction samples on the sphere: 2 d^2 points.
  [[nodiscard]] std::vector<VectorXd> directions(int d) const;
  [[nodiscard]] std::vector<double> times(double T) const;
  [[nodiscard]] std::vector<double> magnitudes() const;
};

struct ValidationReport {
  bool ok = true;
  double ellipticity_margin = 0.0;       // min of H^2 / sum t^{2 l_i} xi_i^2
  double C_tH_upper = 0.0;               // tH <= C z^{l*+1} on P u I
  double C_tH_lower = 0.0;               // tH >= C^{-1} z^{l*+1} on H u I
  double C_Zc_upper = 0.0;               // Zc <= C z^{l*} on P u I
  double C_Zc_lower = 0.0;               // Zc >= C^{-1} z^{l*} on H u I
  double izone_constant = 0.0;           // max zfac^{-1} |A| on Z_I
  bool zones_contained = true;
  std::vector<std::string> violations;
};

ValidationReport validate_bundle(const SystemBundle& b, const ValidationGrid& grid = {});

}  // namespace dhs
