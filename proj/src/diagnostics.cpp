#include "phasekit/diagnostics.hpp"

#include "phasekit/forward.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

namespace phasekit {

namespace {

std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

template <typename Mat>
double coherence_impl(const Mat& a) {
  if (a.cols() < 2) throw std::invalid_argument("coherence_mu: need at least two columns");
  RVector norms(a.cols());
  for (Index j = 0; j < a.cols(); ++j) {
    norms(j) = a.col(j).norm();
    if (norms(j) == 0.0) throw std::invalid_argument("coherence_mu: zero column");
  }
  double mu = 0.0;
  for (Index i = 0; i < a.cols(); ++i)
    for (Index j = i + 1; j < a.cols(); ++j)
      mu = std::max(mu, std::abs(a.col(i).dot(a.col(j))) / (norms(i) * norms(j)));
  return mu;
}

bool next_combination(std::vector<Index>& c, Index n) {
  const Index k = static_cast<Index>(c.size());
  for (Index i = k - 1; i >= 0; --i) {
    if (c[static_cast<size_t>(i)] < n - k + i) {
      ++c[static_cast<size_t>(i)];
      for (Index j = i + 1; j < k; ++j) c[static_cast<size_t>(j)] = c[static_cast<size_t>(j - 1)] + 1;
      return true;
    }
  }
  return false;
}

double binomial(Index n, Index k) {
  double v = 1.0;
  for (Index i = 0; i < k; ++i) v *= static_cast<double>(n - i) / static_cast<double>(i + 1);
  return v;
}

}  // namespace

std::string MetricReport::to_json() const {
  std::string s = "{";
  s += "\"E\": " + fmt_double(E);
  s += ", \"R_F\": " + fmt_double(R_F);
  s += ", \"zeta\": " + fmt_double(zeta);
  s += ", \"alignedResidual\": " + fmt_double(alignedResidual);
  s += "}";
  return s;
}

void write_prtf_csv(const std::string& path, const RVector& values) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  os << "k,prtf\n";
  for (Index k = 0; k < values.size(); ++k) os << k << ',' << fmt_double(values(k)) << '\n';
}

double recovery_error_E(const Signal& reconstruction, const Signal& model) {
  if (reconstruction.shape() != model.shape())
    throw std::invalid_argument("recovery_error_E: shape mismatch");
  double den = 0.0, num = 0.0;
  for (Index i = 0; i < model.size(); ++i) {
    den += std::abs(model[i]);
    num += std::abs(reconstruction[i] - model[i]);
  }
  if (den == 0.0) throw std::invalid_argument("recovery_error_E: zero-norm model");
  return num / den;
}

std::pair<double, double> r_factor(const RVector& measuredMag, const RVector& reconMag) {
  if (measuredMag.size() != reconMag.size())
    throw std::invalid_argument("r_factor: length mismatch");
  if ((measuredMag.array() < 0).any() || (reconMag.array() < 0).any())
    throw std::invalid_argument("r_factor: magnitudes must be nonnegative");
  const double den = measuredMag.sum();
  if (den == 0.0) throw std::invalid_argument("r_factor: zero measured magnitude sum");

  // zeta minimizing sum_k |m_k - zeta r_k| = weighted median of m_k / r_k
  // with weights r_k over r_k > 0.
  std::vector<std::pair<double, double>> ratios;  // (ratio, weight)
  double totalW = 0.0;
  for (Index k = 0; k < reconMag.size(); ++k) {
    if (reconMag(k) > 0.0) {
      ratios.emplace_back(measuredMag(k) / reconMag(k), reconMag(k));
      totalW += reconMag(k);
    }
  }
  double zeta = 1.0;
  if (!ratios.empty()) {
    std::sort(ratios.begin(), ratios.end());
    double acc = 0.0;
    for (const auto& [ratio, w] : ratios) {
      acc += w;
      if (acc >= 0.5 * totalW) {
        zeta = ratio;
        break;
      }
    }
  }
  double num = 0.0;
  for (Index k = 0; k < measuredMag.size(); ++k) num += std::abs(measuredMag(k) - zeta * reconMag(k));
  return {num / den, zeta};
}

RVector prtf(const std::vector<Signal>& reconstructions, const Signal& measuredMag) {
  if (reconstructions.size() < 2)
    throw std::invalid_argument("prtf: need at least two reconstructions");
  const Shape grid = measuredMag.shape();
  for (const auto& r : reconstructions) {
    if (r.ndim() != grid.ndim) throw std::invalid_argument("prtf: dimensionality mismatch");
    for (int a = 0; a < grid.ndim; ++a)
      if (r.dim(a) > grid.dim(a))
        throw std::invalid_argument("prtf: reconstruction larger than measurement grid");
  }
  // refuse ensembles that are not members of one ambiguity class
  for (size_t i = 1; i < reconstructions.size(); ++i) {
    double res = align_to_reference(reconstructions[i], reconstructions[0]).residual;
    if (res > 0.5)
      throw std::invalid_argument("prtf: ensemble members do not align (residual > 0.5); "
                                  "averaging unrelated reconstructions is meaningless");
  }

  CVector mean = CVector::Zero(grid.count());
  for (const auto& r : reconstructions) mean += oversampled_dft(r, grid).flat();
  mean /= static_cast<double>(reconstructions.size());

  RVector out(grid.count());
  for (Index k = 0; k < out.size(); ++k) {
    double m = measuredMag[k].real();
    out(k) = m > 0.0 ? std::min(1.0, std::abs(mean(k)) / m) : 0.0;
  }
  return out;
}

double coherence_mu(const CMatrix& a) { return coherence_impl(a); }
double coherence_mu(const RMatrix& a) { return coherence_impl(a); }

double rip_delta(const RMatrix& a, Index k) {
  const Index d = a.cols();
  if (k < 1 || k > d) throw std::invalid_argument("rip_delta: k out of range");
  if (k > 12 || binomial(d, k) > 1e6)
    throw std::invalid_argument("rip_delta: combinatorial guard exceeded (k <= 12, C(cols,k) <= 1e6)");
  RMatrix unit = a;
  for (Index j = 0; j < d; ++j) {
    double n = unit.col(j).norm();
    if (n == 0.0) throw std::invalid_argument("rip_delta: zero column");
    unit.col(j) /= n;
  }
  std::vector<Index> comb(static_cast<size_t>(k));
  std::iota(comb.begin(), comb.end(), Index{0});
  double delta = 0.0;
  do {
    RMatrix gram(k, k);
    for (Index i = 0; i < k; ++i)
      for (Index j = 0; j < k; ++j)
        gram(i, j) = unit.col(comb[static_cast<size_t>(i)]).dot(unit.col(comb[static_cast<size_t>(j)]));
    Eigen::SelfAdjointEigenSolver<RMatrix> es(gram);
    delta = std::max({delta, 1.0 - es.eigenvalues().minCoeff(), es.eigenvalues().maxCoeff() - 1.0});
  } while (next_combination(comb, d));
  return delta;
}

ComplementCheck complement_property_check(const RMatrix& vectors) {
  const Index m = vectors.rows();
  const Index n = vectors.cols();
  if (m < 1) throw std::invalid_argument("complement_property_check: no vectors");
  if (m > 20) throw std::invalid_argument("complement_property_check: guard exceeded (M <= 20)");

  auto spans = [&](std::uint32_t mask) {
    Index cnt = 0;
    for (Index i = 0; i < m; ++i) cnt += (mask >> i) & 1u;
    if (cnt < n) return false;
    RMatrix sub(cnt, n);
    Index r = 0;
    for (Index i = 0; i < m; ++i)
      if ((mask >> i) & 1u) sub.row(r++) = vectors.row(i);
    return Eigen::ColPivHouseholderQR<RMatrix>(sub).rank() == n;
  };

  const std::uint32_t full = m == 32 ? 0xFFFFFFFFu : ((1u << m) - 1u);
  // pair each subset containing index 0 with its complement
  for (std::uint32_t half = 0; half < (1u << (m - 1)); ++half) {
    std::uint32_t s = (half << 1) | 1u;
    std::uint32_t sc = full & ~s;
    if (!spans(s) && !spans(sc)) {
      ComplementCheck res;
      res.holds = false;
      for (Index i = 0; i < m; ++i)
        if ((s >> i) & 1u) res.witness.push_back(i);
      return res;
    }
  }
  return ComplementCheck{true, {}};
}

CollisionCheck collision_free_check(const Signal& x) {
  if (x.ndim() != 1) throw std::invalid_argument("collision_free_check: 1D signals only");
  if (!x.is_real()) throw std::invalid_argument("collision_free_check: real signals only");
  std::vector<Index> locs;
  for (Index i = 0; i < x.size(); ++i)
    if (x[i] != Complex(0.0, 0.0)) locs.push_back(i);
  const double k = static_cast<double>(locs.size());
  if (k * k * k * k > 1e8)
    throw std::invalid_argument("collision_free_check: guard exceeded (k^4 <= 1e8)");

  CollisionCheck res;
  res.collisionFree = true;
  const size_t nk = locs.size();
  for (size_t i = 0; i < nk; ++i)
    for (size_t j = 0; j < nk; ++j) {
      if (i == j) continue;
      for (size_t a = 0; a < nk; ++a)
        for (size_t b = 0; b < nk; ++b) {
          if (a == b) continue;
          if (a == i && b == j) continue;  // same ordered pair
          if (locs[i] - locs[j] == locs[a] - locs[b]) {
            res.collisionFree = false;
            res.witness = {locs[i], locs[j], locs[a], locs[b]};
            return res;
          }
        }
    }
  return res;
}

Signal counterexample_u() {
  RVector u(5);
  u << 1, 0, -2, 0, -2;
  return Signal::from1d_real(u);
}

Signal counterexample_v() {
  RVector v(5);
  v << 1.0 - std::sqrt(3.0), 0, 1, 0, 1.0 + std::sqrt(3.0);
  return Signal::from1d_real(v);
}

}  // namespace phasekit
