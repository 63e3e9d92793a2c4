#pragma once
// Hyperbolic-zone renormalization: speed gaps and partitions, algebraic diagonalization
// to block-diagonal form, and the quadrature integrating factors.

#include "dhs/sysmodel.hpp"

#include <optional>
#include <string>
#include <vector>

namespace dhs {

struct SpeedPartition {
  std::vector<std::vector<int>> groups;
  double d0 = 0.0;
  [[nodiscard]] std::vector<int> group_index(int n) const;
  [[nodiscard]] bool semi_strict() const;
};

/// Minimum pairwise gap of the sampled diagonals times 0.9; nullopt when a pair nearly collides.
std::optional<double> check_semi_strict(const std::vector<VectorXd>& D_samples);
/// Groups = connected components of i ~ j whenever the sampled gap drops below `threshold`.
SpeedPartition speed_partition(const std::vector<VectorXd>& D_samples, double threshold);
/// Samples D_H over Z_H times for the given frequencies and builds the partition.
SpeedPartition speed_partition(const SystemBundle& b, const std::vector<VectorXd>& xis, double threshold = 1e-6);

/// Values of the renormalization stack at one time.
struct HStageValues {
  std::vector<MatrixXcd> D;            // D^(1..m)
  std::vector<MatrixXcd> N;            // N^(1..m)
  MatrixXcd Q;                         // I + sum N
  MatrixXcd R_m;                       // remainder after m stages
  std::vector<double> stage_residual;  // relative residual of each stage identity
};

struct HRenormPlan {
  int m = 1;
  SpeedPartition partition;
  HZoneData h;
  double zfac = 1.0;
  double gap_tol = 1e-8;
  [[nodiscard]] HStageValues at(double t) const;
  [[nodiscard]] std::string dump(double t) const;
};

HRenormPlan build_h_renorm(const HZoneData& h, const SpeedPartition& part, int m, double zfac);

/// Restriction of W to the diagonal blocks of the partition.
MatrixXcd block_part(const MatrixXcd& W, const SpeedPartition& part);

struct HermitianExtremes {
  VectorXd plus;
  VectorXd minus;
};
/// Per block: largest/smallest eigenvalue of the Hermitian part, broadcast over the block.
/// Throws std::invalid_argument when W has entries outside the blocks.
HermitianExtremes hermitian_extremes(const MatrixXcd& W, const SpeedPartition& part, double tol = 1e-10);

enum class EHVariant { two_sided, plus, minus, simplified };

struct EHFactor {
  VectorXcd b;       // quadrature values b_i
  EHVariant variant;
  [[nodiscard]] VectorXcd diagonal() const { return (-b.array()).exp().matrix(); }
};

/// b_i = int_{anchor}^{t} tau^{-1} W_ii(tau) dtau in log tau, anchor = 1 / (zfac rho0).
EHFactor eh_factor(const HZoneData& h, const SpeedPartition& part, EHVariant variant, double t, double zfac,
                   double rho0, const std::optional<VectorXcd>& B_H0 = std::nullopt);

/// True when B_G+ and B_G- agree within tol on all sampled times.
bool reversible_regime(const HZoneData& h, const SpeedPartition& part, const std::vector<double>& ts,
                       double tol = 1e-10);

/// Smallest m >= 1 with m (l* + 1) > 2c + margin.
int select_m_h(double ell_star, double c, double margin = 0.05);
/// max |Re B_H,ii| over the sampled times: the growth exponent of the factor.
double eh_growth_constant(const HZoneData& h, const std::vector<double>& ts);

VectorXcd renormalized_h(const HStageValues& st, const EHFactor& f, const VectorXcd& U_H);

}  // namespace dhs
