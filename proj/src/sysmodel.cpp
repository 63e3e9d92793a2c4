#include "dhs/sysmodel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace dhs {

const char* zone_name(Zone z) {
  switch (z) {
    case Zone::P: return "P";
    case Zone::I: return "I";
    case Zone::H: return "H";
  }
  return "?";
}

double zfac(const ScaleProfile& s, const VectorXd& xi) {
  double m = 1.0;
  for (int i = 0; i < s.d; ++i) m = std::max(m, std::pow(japanese(xi(i)), 1.0 / (s.ell(i) + 1.0)));
  return m;
}

Rescaled rescaled(const ScaleProfile& s, double t, const VectorXd& xi) {
  const double zf = zfac(s, xi);
  const MatrixXd lam = s.lambda(t);
  double h2 = 0.0;
  for (int i = 0; i < s.d; ++i)
    for (int j = 0; j < s.d; ++j) h2 += std::pow(t, s.ell(i) + s.ell(j)) * lam(i, j) * xi(i) * xi(j);
  if (h2 < -1e-14 * (1.0 + std::fabs(h2))) {
    std::ostringstream os;
    os << "ellipticity violation: H^2 = " << h2 << " at t = " << t;
    throw std::domain_error(os.str());
  }
  const double H = std::sqrt(std::max(h2, 0.0));
  return {zf * t, H, H / zf};
}

Zone zone_of(double z, const ZoneParams& zones) {
  if (z < zones.rho0) return Zone::P;
  if (z > 1.0 / zones.rho0) return Zone::H;
  return Zone::I;
}

namespace {
double smooth_step(double u) {
  if (u <= 0.0) return 0.0;
  if (u >= 1.0) return 1.0;
  const double a = std::exp(-1.0 / u);
  const double b = std::exp(-1.0 / (1.0 - u));
  return a / (a + b);
}
double smooth_step_du(double u) {
  if (u <= 0.0 || u >= 1.0) return 0.0;
  const double a = std::exp(-1.0 / u);
  const double b = std::exp(-1.0 / (1.0 - u));
  const double da = a / (u * u);
  const double db = -b / ((1.0 - u) * (1.0 - u));
  return (da * (a + b) - a * (da + db)) / ((a + b) * (a + b));
}
}  // namespace

double cutoff_chi(double z, double rho0) {
  const double lo = 0.5 / rho0, hi = 1.0 / rho0;
  return smooth_step((z - lo) / (hi - lo));
}

double cutoff_chi_dz(double z, double rho0) {
  const double lo = 0.5 / rho0, hi = 1.0 / rho0;
  return smooth_step_du((z - lo) / (hi - lo)) / (hi - lo);
}

// ------------------------------- JordanSpec --------------------------------

int JordanSpec::n() const {
  int s = 0;
  for (const auto& b : blocks) s += b.size;
  return s;
}

MatrixXcd JordanSpec::matrix() const {
  const int N = n();
  MatrixXcd B = MatrixXcd::Zero(N, N);
  int off = 0;
  for (const auto& b : blocks) {
    for (int k = 0; k < b.size; ++k) {
      B(off + k, off + k) = b.eigenvalue;
      if (k + 1 < b.size) B(off + k, off + k + 1) = 1.0;
    }
    off += b.size;
  }
  return B;
}

cplx JordanSpec::diag(int i) const {
  int off = 0;
  for (const auto& b : blocks) {
    if (i < off + b.size) return b.eigenvalue;
    off += b.size;
  }
  throw std::out_of_range("JordanSpec::diag");
}

std::optional<Exponent> JordanSpec::exact_diag(int i) const {
  int off = 0;
  for (const auto& b : blocks) {
    if (i < off + b.size) {
      if (b.exact) return b.exact;
      if (std::fabs(b.eigenvalue.imag()) > 0.0) return std::nullopt;
      const Exponent e = Exponent::from_double(b.eigenvalue.real());
      return e;
    }
    off += b.size;
  }
  throw std::out_of_range("JordanSpec::exact_diag");
}

bool JordanSpec::coupled(int i) const {
  int off = 0;
  for (const auto& b : blocks) {
    if (i < off + b.size) return i + 1 < off + b.size;
    off += b.size;
  }
  return false;
}

double JordanSpec::spread() const {
  double lo = 0.0, hi = 0.0;
  bool first = true;
  for (const auto& b : blocks) {
    const double r = b.eigenvalue.real();
    if (first) {
      lo = hi = r;
      first = false;
    }
    lo = std::min(lo, r);
    hi = std::max(hi, r);
  }
  return hi - lo;
}

// ------------------------------- validation --------------------------------

std::vector<VectorXd> ValidationGrid::directions(int d) const {
  std::vector<VectorXd> out;
  const int count = 2 * d * d;
  if (d == 1) {
    out.push_back(VectorXd::Constant(1, 1.0));
    out.push_back(VectorXd::Constant(1, -1.0));
    return out;
  }
  if (d == 2) {
    for (int k = 0; k < count; ++k) {
      const double th = 2.0 * std::numbers::pi * (k + 0.5) / count;
      VectorXd v(2);
      v << std::cos(th), std::sin(th);
      out.push_back(v);
    }
    return out;
  }
  // Halton points in [-1,1]^d, normalized; deterministic.
  static const int primes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37};
  for (int k = 1; static_cast<int>(out.size()) < count; ++k) {
    VectorXd v(d);
    for (int i = 0; i < d; ++i) {
      const int b = primes[i % 12];
      double f = 1.0, r = 0.0;
      for (int m = k; m > 0; m /= b) {
        f /= b;
        r += f * (m % b);
      }
      v(i) = 2.0 * r - 1.0;
    }
    if (v.norm() > 0.2) out.push_back(v.normalized());
  }
  return out;
}

std::vector<double> ValidationGrid::times(double T) const {
  std::vector<double> ts;
  const double decades = std::log10(T / t_min);
  const int N = std::max(2, int(std::ceil(decades * t_per_decade)) + 1);
  for (int k = 0; k < N; ++k) ts.push_back(t_min * std::pow(T / t_min, double(k) / (N - 1)));
  return ts;
}

std::vector<double> ValidationGrid::magnitudes() const {
  std::vector<double> xs;
  const double decades = std::log10(xi_max / xi_min);
  const int N = std::max(2, int(std::ceil(decades * xi_per_decade)) + 1);
  for (int k = 0; k < N; ++k) xs.push_back(xi_min * std::pow(xi_max / xi_min, double(k) / (N - 1)));
  return xs;
}

ValidationReport validate_bundle(const SystemBundle& b, const ValidationGrid& grid) {
  ValidationReport rep;
  const auto& s = b.scale;
  auto fail = [&](const std::string& msg) {
    rep.ok = false;
    rep.violations.push_back(msg);
  };
  for (int i = 0; i < s.d; ++i)
    if (!(s.ell(i) > -1.0)) fail("exponent l_" + std::to_string(i) + " <= -1");
  const double ls = s.ell_star();
  const double rho0 = b.zones.rho0;
  rep.ellipticity_margin = std::numeric_limits<double>::infinity();
  const auto dirs = grid.directions(s.d);
  const auto ts = grid.times(s.T);
  for (double mag : grid.magnitudes()) {
    for (const auto& w : dirs) {
      const VectorXd xi = mag * w;
      const double zf = zfac(s, xi);
      std::optional<FrequencyModel> model;
      // Izone checks sample the coefficient only every few grid times.
      int counter = 0;
      for (double t : ts) {
        Rescaled r{};
        try {
          r = rescaled(s, t, xi);
        } catch (const std::domain_error& e) {
          fail(e.what());
          continue;
        }
        double weight = 0.0;
        for (int i = 0; i < s.d; ++i) weight += std::pow(t, 2.0 * s.ell(i)) * xi(i) * xi(i);
        if (weight > 0.0) rep.ellipticity_margin = std::min(rep.ellipticity_margin, r.H * r.H / weight);
        const Zone zn = zone_of(r.z, b.zones);
        const double zl = std::pow(r.z, ls + 1.0);
        if (zn != Zone::H) {
          rep.C_tH_upper = std::max(rep.C_tH_upper, t * r.H / zl);
          rep.C_Zc_upper = std::max(rep.C_Zc_upper, r.Zc / std::pow(r.z, ls));
        }
        if (zn != Zone::P && r.H > 0.0) {
          rep.C_tH_lower = std::max(rep.C_tH_lower, zl / (t * r.H));
          rep.C_Zc_lower = std::max(rep.C_Zc_lower, std::pow(r.z, ls) / r.Zc);
        }
        if (zn == Zone::P && t > rho0 * (1.0 + 1e-12)) rep.zones_contained = false;
        if (zn == Zone::H && xi.norm() < 0.5 * std::pow(rho0 / s.T, ls + 1.0)) rep.zones_contained = false;
        if (zn == Zone::I && b.at && (counter++ % 8 == 0)) {
          if (!model) model = b.at(xi);
          const double a = model->A(t).operatorNorm() / zf;
          rep.izone_constant = std::max(rep.izone_constant, a);
        }
      }
    }
  }
  if (!(rep.ellipticity_margin > 0.0)) fail("ellipticity margin is not positive");
  if (!rep.zones_contained) fail("zone containment failed; decrease rho0");
  if (b.izone_bound > 0.0 && rep.izone_constant > b.izone_bound)
    fail("intermediate-zone coefficient bound exceeded: " + std::to_string(rep.izone_constant));
  return rep;
}

}  // namespace dhs
