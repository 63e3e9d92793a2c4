#include "dhs/renorm_h.hpp"

#include "dhs/quadrature.hpp"

#include <Eigen/Eigenvalues>

#include <numeric>
#include <sstream>

namespace dhs {

std::vector<int> SpeedPartition::group_index(int n) const {
  std::vector<int> g(n, -1);
  for (std::size_t k = 0; k < groups.size(); ++k)
    for (int i : groups[k]) g[i] = int(k);
  return g;
}

bool SpeedPartition::semi_strict() const {
  for (const auto& g : groups)
    if (g.size() != 1) return false;
  return true;
}

namespace {
double min_gap(const std::vector<VectorXd>& D, int i, int j) {
  double g = std::numeric_limits<double>::infinity();
  for (const auto& d : D) g = std::min(g, std::fabs(d(i) - d(j)));
  return g;
}
}  // namespace

std::optional<double> check_semi_strict(const std::vector<VectorXd>& D) {
  if (D.empty()) return std::nullopt;
  const int n = int(D.front().size());
  double g = std::numeric_limits<double>::infinity();
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) g = std::min(g, min_gap(D, i, j));
  if (n == 1) g = 1.0;
  if (g < 1e-6) return std::nullopt;
  return 0.9 * g;
}

SpeedPartition speed_partition(const std::vector<VectorXd>& D, double threshold) {
  SpeedPartition p;
  if (D.empty()) return p;
  const int n = int(D.front().size());
  std::vector<int> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (min_gap(D, i, j) < threshold) parent[find(i)] = find(j);
  std::vector<int> root_to_group(n, -1);
  for (int i = 0; i < n; ++i) {
    const int r = find(i);
    if (root_to_group[r] < 0) {
      root_to_group[r] = int(p.groups.size());
      p.groups.emplace_back();
    }
    p.groups[root_to_group[r]].push_back(i);
  }
  const auto gi = p.group_index(n);
  p.d0 = std::numeric_limits<double>::infinity();
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (gi[i] != gi[j]) p.d0 = std::min(p.d0, min_gap(D, i, j));
  return p;
}

SpeedPartition speed_partition(const SystemBundle& b, const std::vector<VectorXd>& xis, double threshold) {
  std::vector<VectorXd> samples;
  for (const auto& xi : xis) {
    const FrequencyModel fm = b.at(xi);
    const double tH = 1.0 / (b.zones.rho0 * fm.zfac);
    if (tH >= b.scale.T) continue;
    for (int k = 0; k <= 16; ++k) samples.push_back(fm.h.D_H(tH * std::pow(b.scale.T / tH, k / 16.0)));
  }
  return speed_partition(samples, threshold);
}

MatrixXcd block_part(const MatrixXcd& W, const SpeedPartition& part) {
  const int n = int(W.rows());
  const auto gi = part.group_index(n);
  MatrixXcd r = MatrixXcd::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (gi[i] == gi[j]) r(i, j) = W(i, j);
  return r;
}

HRenormPlan build_h_renorm(const HZoneData& h, const SpeedPartition& part, int m, double zfac) {
  if (m < 1) throw std::invalid_argument("build_h_renorm: m must be >= 1");
  if (m + 2 > kJetSize) throw std::invalid_argument("build_h_renorm: order exceeds jet depth");
  HRenormPlan plan;
  plan.m = m;
  plan.partition = part;
  plan.h = h;
  plan.zfac = zfac;
  return plan;
}

HStageValues HRenormPlan::at(double t) const {
  const HJets jt = h.jets(t);
  const int n = int(jt.r0.rows());
  const auto gi = partition.group_index(n);
  JetMatrix r0 = jt.r0.unaryExpr([&](const JetC& j) { return jet_to_z(j, zfac); });
  JetVector zcd = jt.zcd.unaryExpr([&](const JetC& j) { return jet_to_z(j, zfac); });
  const JetC I(cplx(0.0, 1.0));

  HStageValues out;
  JetMatrix R = r0;
  JetMatrix Dsum = jet_zeros(n, n);
  JetMatrix Nsum = jet_zeros(n, n);
  for (int k = 1; k <= m; ++k) {
    JetMatrix Dk = jet_zeros(n, n);
    JetMatrix Nk = jet_zeros(n, n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        if (gi[i] == gi[j]) {
          Dk(i, j) = R(i, j);
        } else {
          const JetC gap = zcd(i) - zcd(j);
          if (std::abs(gap.value()) < gap_tol) {
            std::ostringstream os;
            os << "cross-group speed gap below tolerance for pair (" << i << "," << j << ") at t=" << t;
            throw std::runtime_error(os.str());
          }
          Nk(i, j) = R(i, j) / (I * gap);
        }
      }
    }
    // Stage identity R^(k-1) - D^(k) + [N^(k), i Zc D_H] = 0 on values.
    MatrixXcd comm(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) comm(i, j) = Nk(i, j).value() * cplx(0, 1) * (zcd(j).value() - zcd(i).value());
    const MatrixXcd Rv = jet_values(R), Dv = jet_values(Dk);
    const double scale = Rv.norm() + Dv.norm() + comm.norm();
    out.stage_residual.push_back(scale > 0 ? (Rv - Dv + comm).norm() / scale : 0.0);

    Nsum += Nk;
    JetMatrix Rn = jet_dt(Nk) + Nk * r0 - Dk * Nsum - Dsum * Nk;
    Dsum += Dk;
    out.D.push_back(Dv);
    out.N.push_back(jet_values(Nk));
    R = std::move(Rn);
  }
  out.Q = MatrixXcd::Identity(n, n) + jet_values(Nsum);
  out.R_m = jet_values(R);
  return out;
}

std::string HRenormPlan::dump(double t) const {
  const HStageValues v = at(t);
  std::ostringstream os;
  os.precision(12);
  os << "h-plan m=" << m << " groups=" << partition.groups.size() << " at t=" << t << "\n";
  for (int k = 0; k < m; ++k) {
    os << "  D" << k + 1 << " =\n" << v.D[k] << "\n";
    os << "  N" << k + 1 << " =\n" << v.N[k] << "\n";
    os << "  stage residual " << v.stage_residual[k] << "\n";
  }
  os << "  R" << m << " =\n" << v.R_m << "\n";
  return os.str();
}

HermitianExtremes hermitian_extremes(const MatrixXcd& W, const SpeedPartition& part, double tol) {
  const int n = int(W.rows());
  const auto gi = part.group_index(n);
  const double scale = std::max(1.0, W.norm());
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      if (gi[i] != gi[j] && std::abs(W(i, j)) > tol * scale)
        throw std::invalid_argument("hermitian_extremes: matrix is not block diagonal for the partition");
  HermitianExtremes ex{VectorXd(n), VectorXd(n)};
  for (const auto& g : part.groups) {
    const int k = int(g.size());
    MatrixXcd S(k, k);
    for (int a = 0; a < k; ++a)
      for (int b = 0; b < k; ++b) S(a, b) = 0.5 * (W(g[a], g[b]) + std::conj(W(g[b], g[a])));
    Eigen::SelfAdjointEigenSolver<MatrixXcd> es(S, Eigen::EigenvaluesOnly);
    const double lo = es.eigenvalues().minCoeff(), hi = es.eigenvalues().maxCoeff();
    for (int i : g) {
      ex.plus(i) = hi;
      ex.minus(i) = lo;
    }
  }
  return ex;
}

namespace {
VectorXcd factor_integrand(const HZoneData& h, const SpeedPartition& part, EHVariant variant, double tau) {
  const MatrixXcd B = h.B_H(tau);
  if (variant == EHVariant::two_sided) return B.diagonal();
  const HermitianExtremes ex = hermitian_extremes(block_part(B, part), part);
  return (variant == EHVariant::plus ? ex.plus : ex.minus).cast<cplx>();
}
}  // namespace

EHFactor eh_factor(const HZoneData& h, const SpeedPartition& part, EHVariant variant, double t, double zfac,
                   double rho0, const std::optional<VectorXcd>& B_H0) {
  const double anchor = 1.0 / (zfac * rho0);
  EHFactor f{VectorXcd::Zero(h.B_H(t).rows()), variant};
  if (variant == EHVariant::simplified) {
    if (!B_H0) throw std::invalid_argument("eh_factor: simplified variant needs the limit diagonal");
    f.b = *B_H0 * std::log(t / anchor);
    return f;
  }
  const double u0 = std::log(anchor), u1 = std::log(t);
  auto g = [&](double u) -> VectorXcd { return factor_integrand(h, part, variant, std::exp(u)); };
  f.b = integrate_gk(g, u0, u1, 1e-10, 1e-14);
  return f;
}

bool reversible_regime(const HZoneData& h, const SpeedPartition& part, const std::vector<double>& ts, double tol) {
  for (double t : ts) {
    const HermitianExtremes ex = hermitian_extremes(block_part(h.B_H(t), part), part);
    if ((ex.plus - ex.minus).cwiseAbs().maxCoeff() > tol) return false;
  }
  return true;
}

int select_m_h(double ell_star, double c, double margin) {
  for (int m = 1; m < 100000; ++m)
    if (m * (ell_star + 1.0) > 2.0 * c + margin) return m;
  throw std::runtime_error("select_m_h: no admissible order");
}

double eh_growth_constant(const HZoneData& h, const std::vector<double>& ts) {
  double c = 0.0;
  for (double t : ts) {
    const MatrixXcd B = h.B_H(t);
    for (Eigen::Index i = 0; i < B.rows(); ++i) c = std::max(c, std::fabs(B(i, i).real()));
  }
  return c;
}

VectorXcd renormalized_h(const HStageValues& st, const EHFactor& f, const VectorXcd& U_H) {
  return f.diagonal().cwiseProduct(st.Q * U_H);
}

}  // namespace dhs
