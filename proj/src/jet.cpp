#include "dhs/jet.hpp"

#include <stdexcept>
#include <utility>

namespace dhs {

JetMatrix jet_inverse(const JetMatrix& m) {
  const Eigen::Index n = m.rows();
  if (m.cols() != n) throw std::invalid_argument("jet_inverse: matrix must be square");
  JetMatrix a = m;
  JetMatrix inv = jet_zeros(n, n);
  for (Eigen::Index i = 0; i < n; ++i) inv(i, i) = JetC(1.0);
  for (Eigen::Index col = 0; col < n; ++col) {
    Eigen::Index piv = col;
    for (Eigen::Index r = col + 1; r < n; ++r)
      if (std::abs(a(r, col).value()) > std::abs(a(piv, col).value())) piv = r;
    if (std::abs(a(piv, col).value()) == 0.0) throw std::domain_error("jet_inverse: singular value matrix");
    if (piv != col) {
      a.row(piv).swap(a.row(col));
      inv.row(piv).swap(inv.row(col));
    }
    const JetC p = a(col, col);
    for (Eigen::Index c = 0; c < n; ++c) {
      a(col, c) = a(col, c) / p;
      inv(col, c) = inv(col, c) / p;
    }
    for (Eigen::Index r = 0; r < n; ++r) {
      if (r == col) continue;
      const JetC f = a(r, col);
      for (Eigen::Index c = 0; c < n; ++c) {
        a(r, c) = a(r, c) - f * a(col, c);
        inv(r, c) = inv(r, c) - f * inv(col, c);
      }
    }
  }
  return inv;
}

}  // namespace dhs
