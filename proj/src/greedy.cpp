#include "phasekit/greedy.hpp"

#include "phasekit/fft.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>
#include <stdexcept>

namespace phasekit {

namespace {

constexpr double kPi = std::numbers::pi;

std::vector<Index> sorted_ranks(const RVector& values, bool ascending) {
  std::vector<Index> idx(static_cast<size_t>(values.size()));
  std::iota(idx.begin(), idx.end(), Index{0});
  std::stable_sort(idx.begin(), idx.end(), [&](Index a, Index b) {
    return ascending ? values(a) < values(b) : values(a) > values(b);
  });
  return idx;
}

}  // namespace

QuadraticSystem::QuadraticSystem(std::vector<RMatrix> matrices, RVector y)
    : y_(std::move(y)), mats_(std::move(matrices)) {
  if (mats_.empty()) throw std::invalid_argument("QuadraticSystem: need at least one matrix");
  if (static_cast<Index>(mats_.size()) != y_.size())
    throw std::invalid_argument("QuadraticSystem: measurement count mismatch");
  n_ = mats_[0].rows();
  for (const auto& a : mats_) {
    if (a.rows() != n_ || a.cols() != n_)
      throw std::invalid_argument("QuadraticSystem: matrices must be square of equal size");
    if ((a - a.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, a.cwiseAbs().maxCoeff()))
      throw std::invalid_argument("QuadraticSystem: matrices must be symmetric");
  }
}

QuadraticSystem QuadraticSystem::fourier(Index n, Index m, RVector y, std::vector<Index> bins) {
  if (m < n) throw std::invalid_argument("QuadraticSystem::fourier: M < N");
  if (bins.empty()) throw std::invalid_argument("QuadraticSystem::fourier: no measurement bins");
  if (static_cast<Index>(bins.size()) != y.size())
    throw std::invalid_argument("QuadraticSystem::fourier: bin/measurement mismatch");
  for (Index b : bins)
    if (b < 0 || b >= m) throw std::invalid_argument("QuadraticSystem::fourier: bin out of range");
  QuadraticSystem sys;
  sys.n_ = n;
  sys.fourierM_ = m;
  sys.y_ = std::move(y);
  sys.bins_ = std::move(bins);
  return sys;
}

CVector QuadraticSystem::dft_bins(const RVector& x) const {
  CVector padded = CVector::Zero(fourierM_);
  padded.head(n_) = x.cast<Complex>();
  CVector spec = fft_forward(padded);
  CVector out(static_cast<Index>(bins_.size()));
  for (size_t i = 0; i < bins_.size(); ++i) out(static_cast<Index>(i)) = spec(bins_[i]);
  return out;
}

RVector QuadraticSystem::quad_forms(const RVector& x) const {
  if (x.size() != n_) throw std::invalid_argument("QuadraticSystem: dimension mismatch");
  if (is_fourier()) return dft_bins(x).cwiseAbs2();
  RVector q(y_.size());
  for (Index i = 0; i < y_.size(); ++i) q(i) = x.dot(mats_[static_cast<size_t>(i)] * x);
  return q;
}

double QuadraticSystem::objective(const RVector& x) const {
  return (quad_forms(x) - y_).squaredNorm();
}

RVector QuadraticSystem::gradient(const RVector& x) const {
  if (x.size() != n_) throw std::invalid_argument("QuadraticSystem: dimension mismatch");
  if (is_fourier()) {
    // grad_n = 4 sum_k r_k Re(conj(X_k) e^{-j2pi k n / M}); one forward DFT
    // of the residual-weighted spectrum gives every n at once.
    CVector spec = dft_bins(x);
    RVector r = spec.cwiseAbs2() - y_;
    CVector c = CVector::Zero(fourierM_);
    for (size_t i = 0; i < bins_.size(); ++i)
      c(bins_[i]) += r(static_cast<Index>(i)) * std::conj(spec(static_cast<Index>(i)));
    CVector g = fft_forward(c);
    return 4.0 * g.head(n_).real();
  }
  RVector q = quad_forms(x);
  RVector g = RVector::Zero(n_);
  for (Index i = 0; i < y_.size(); ++i) g += 4.0 * (q(i) - y_(i)) * (mats_[static_cast<size_t>(i)] * x);
  return g;
}

void QuadraticSystem::restricted(const std::vector<Index>& support, const RVector& z, RVector& r,
                                 RMatrix& J) const {
  const Index s = static_cast<Index>(support.size());
  if (z.size() != s) throw std::invalid_argument("QuadraticSystem::restricted: size mismatch");
  const Index m = y_.size();
  r.resize(m);
  J.resize(m, s);
  if (is_fourier()) {
    RVector x = RVector::Zero(n_);
    for (Index j = 0; j < s; ++j) x(support[static_cast<size_t>(j)]) = z(j);
    CVector spec = dft_bins(x);
    r = spec.cwiseAbs2() - y_;
    for (Index i = 0; i < m; ++i) {
      const double w = -2.0 * kPi * static_cast<double>(bins_[static_cast<size_t>(i)]) /
                       static_cast<double>(fourierM_);
      const Complex xc = std::conj(spec(i));
      for (Index j = 0; j < s; ++j) {
        const double ang = w * static_cast<double>(support[static_cast<size_t>(j)]);
        J(i, j) = 2.0 * std::real(xc * std::polar(1.0, ang));
      }
    }
    return;
  }
  RVector x = RVector::Zero(n_);
  for (Index j = 0; j < s; ++j) x(support[static_cast<size_t>(j)]) = z(j);
  for (Index i = 0; i < m; ++i) {
    const RVector ax = mats_[static_cast<size_t>(i)] * x;
    r(i) = x.dot(ax) - y_(i);
    for (Index j = 0; j < s; ++j) J(i, j) = 2.0 * ax(support[static_cast<size_t>(j)]);
  }
}

std::pair<double, RVector> objective_and_gradient(const RVector& x, const QuadraticSystem& sys) {
  return {sys.objective(x), sys.gradient(x)};
}

void GesparConfig::validate(Index n) const {
  if (sparsity < 1 || sparsity > n) throw std::invalid_argument("GesparConfig: sparsity out of range");
  if (tau < 0) throw std::invalid_argument("GesparConfig: tau must be >= 0");
  if (maxSwaps < 1) throw std::invalid_argument("GesparConfig: maxSwaps must be >= 1");
  if (gnMaxIters < 1) throw std::invalid_argument("GesparConfig: gnMaxIters must be >= 1");
  if (static_cast<Index>(pinnedIndices.size()) > sparsity)
    throw std::invalid_argument("GesparConfig: more pinned indices than the sparsity level");
  for (Index p : pinnedIndices)
    if (p < 0 || p >= n) throw std::invalid_argument("GesparConfig: pinned index out of range");
  for (Index c : candidatePool)
    if (c < 0 || c >= n) throw std::invalid_argument("GesparConfig: pool index out of range");
}

FourierSupportHints fourier_support_hints(const RVector& intensityFullGrid, Index m, Index n,
                                          double relTol) {
  if (intensityFullGrid.size() != m)
    throw std::invalid_argument("fourier_support_hints: need the full m-bin intensity vector");
  if (n < 1 || n > m) throw std::invalid_argument("fourier_support_hints: bad signal length");
  CVector y(m);
  for (Index b = 0; b < m; ++b) y(b) = Complex(intensityFullGrid(b), 0.0);
  CVector g = fft_inverse(y);  // circular autocorrelation of the padded signal
  const double gmax = g.cwiseAbs().maxCoeff();
  FourierSupportHints hints;
  std::vector<char> lag(static_cast<size_t>(m), 0);
  for (Index d = 0; d < m; ++d) lag[static_cast<size_t>(d)] = std::abs(g(d)) > relTol * gmax;
  for (Index d = 1; d < n; ++d)
    if (lag[static_cast<size_t>(d)]) hints.extent = d;
  for (Index i = 0; i <= hints.extent; ++i)
    if (i == 0 || lag[static_cast<size_t>(i)]) hints.candidatePool.push_back(i);
  hints.pinnedIndices = {0};
  if (hints.extent > 0) hints.pinnedIndices.push_back(hints.extent);
  return hints;
}

namespace {

/// Support-restricted residual map built once per support. The Fourier
/// backend precomputes the K x s twiddle block so residual and Jacobian
/// evaluations are dense mat-vecs.
struct RestrictedProblem {
  const RVector* y = nullptr;
  CMatrix w;                    // fourier twiddles
  std::vector<RMatrix> b;      // dense restricted matrices
  bool fourier = false;

  RVector residuals(const RVector& z) const {
    if (fourier) {
      CVector spec = w * z.cast<Complex>();
      return spec.cwiseAbs2() - *y;
    }
    RVector r(y->size());
    for (Index i = 0; i < r.size(); ++i) r(i) = z.dot(b[static_cast<size_t>(i)] * z) - (*y)(i);
    return r;
  }

  void residuals_and_jacobian(const RVector& z, RVector& r, RMatrix& J) const {
    const Index s = z.size();
    if (fourier) {
      CVector spec = w * z.cast<Complex>();
      r = spec.cwiseAbs2() - *y;
      J.resize(spec.size(), s);
      for (Index i = 0; i < spec.size(); ++i) {
        const Complex xc = std::conj(spec(i));
        for (Index j = 0; j < s; ++j) J(i, j) = 2.0 * std::real(xc * w(i, j));
      }
      return;
    }
    r.resize(y->size());
    J.resize(y->size(), s);
    for (Index i = 0; i < r.size(); ++i) {
      const RVector bz = b[static_cast<size_t>(i)] * z;
      r(i) = z.dot(bz) - (*y)(i);
      J.row(i) = 2.0 * bz.transpose();
    }
  }
};

RestrictedProblem make_restricted(const QuadraticSystem& sys, const std::vector<Index>& support) {
  RestrictedProblem prob;
  prob.y = &sys.y();
  const Index s = static_cast<Index>(support.size());
  for (Index idx : support)
    if (idx < 0 || idx >= sys.dim())
      throw std::invalid_argument("QuadraticSystem: support index out of range");
  if (sys.is_fourier()) {
    prob.fourier = true;
    const auto& bins = sys.fourier_bins();
    prob.w.resize(sys.measurements(), s);
    for (Index i = 0; i < sys.measurements(); ++i) {
      const double wk = -2.0 * kPi * static_cast<double>(bins[static_cast<size_t>(i)]) /
                        static_cast<double>(sys.fourier_m());
      for (Index j = 0; j < s; ++j)
        prob.w(i, j) = std::polar(1.0, wk * static_cast<double>(support[static_cast<size_t>(j)]));
    }
    return prob;
  }
  prob.b.reserve(static_cast<size_t>(sys.measurements()));
  for (const auto& a : sys.matrices()) {
    RMatrix sub(s, s);
    for (Index i = 0; i < s; ++i)
      for (Index j = 0; j < s; ++j)
        sub(i, j) = a(support[static_cast<size_t>(i)], support[static_cast<size_t>(j)]);
    prob.b.push_back(std::move(sub));
  }
  return prob;
}

GaussNewtonResult gauss_newton_restricted(const RestrictedProblem& prob, const GesparConfig& cfg,
                                          RVector z) {
  RVector r;
  RMatrix J;
  prob.residuals_and_jacobian(z, r, J);
  double f = r.squaredNorm();
  GaussNewtonResult best{z, f, 0};

  for (Index it = 0; it < cfg.gnMaxIters; ++it) {
    if (f <= cfg.gnTolerance) break;
    RMatrix h = J.transpose() * J;
    h.diagonal().array() += 1e-12 * std::max(1.0, h.diagonal().maxCoeff());
    RVector d = h.ldlt().solve(-(J.transpose() * r));
    if (!d.allFinite()) break;
    double step = cfg.gnDampingInit;
    bool accepted = false;
    while (step * d.norm() >= cfg.gnTolerance) {
      RVector zTry = z + step * d;
      double fTry = prob.residuals(zTry).squaredNorm();
      if (fTry < f) {
        z = std::move(zTry);
        f = fTry;
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    best.iterations = it + 1;
    if (!accepted) break;
    prob.residuals_and_jacobian(z, r, J);
    if (f < best.objective) {
      best.z = z;
      best.objective = f;
    }
  }
  return best;
}

}  // namespace

GaussNewtonResult damped_gauss_newton(const QuadraticSystem& sys, const std::vector<Index>& support,
                                      const GesparConfig& cfg, const std::optional<RVector>& init) {
  const Index s = static_cast<Index>(support.size());
  if (s < 1 || s > sys.dim()) throw std::invalid_argument("damped_gauss_newton: bad support size");
  RVector z = init ? *init : RVector::Zero(s);
  if (z.size() != s) throw std::invalid_argument("damped_gauss_newton: init size mismatch");
  return gauss_newton_restricted(make_restricted(sys, support), cfg, std::move(z));
}

std::pair<Signal, GesparReport> gespar_solve(const QuadraticSystem& sys, const GesparConfig& cfg) {
  const Index n = sys.dim();
  cfg.validate(n);
  const Index s = cfg.sparsity;
  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double initScale = std::sqrt(std::max(1e-12, sys.y().cwiseAbs().mean() / static_cast<double>(s)));

  // candidate pool and pinned indices
  std::vector<Index> pool = cfg.candidatePool;
  if (pool.empty()) {
    pool.resize(static_cast<size_t>(n));
    std::iota(pool.begin(), pool.end(), Index{0});
  }
  std::sort(pool.begin(), pool.end());
  pool.erase(std::unique(pool.begin(), pool.end()), pool.end());
  std::vector<Index> pinned = cfg.pinnedIndices;
  std::sort(pinned.begin(), pinned.end());
  pinned.erase(std::unique(pinned.begin(), pinned.end()), pinned.end());
  if (static_cast<Index>(pinned.size()) > s) pinned.resize(static_cast<size_t>(s));
  for (Index p : pinned)
    if (!std::binary_search(pool.begin(), pool.end(), p)) pool.insert(std::lower_bound(pool.begin(), pool.end(), p), p);
  std::vector<Index> interior;
  for (Index i : pool)
    if (!std::binary_search(pinned.begin(), pinned.end(), i)) interior.push_back(i);
  if (static_cast<Index>(pinned.size() + interior.size()) < s)
    throw std::invalid_argument("gespar_solve: candidate pool smaller than the sparsity level");

  auto expand = [&](const std::vector<Index>& support, const RVector& z) {
    RVector x = RVector::Zero(n);
    for (size_t j = 0; j < support.size(); ++j) x(support[j]) = z(static_cast<Index>(j));
    return x;
  };

  GesparReport report;
  RVector bestX = RVector::Zero(n);
  double bestF = sys.objective(bestX);
  bool done = false;

  while (!done && report.restarts < cfg.maxRestarts && report.swaps < cfg.maxSwaps) {
    ++report.restarts;
    // step 1: pinned indices plus a random draw from the pool
    const Index draw = s - static_cast<Index>(pinned.size());
    for (Index j = 0; j < draw; ++j) {
      std::uniform_int_distribution<Index> pick(j, static_cast<Index>(interior.size()) - 1);
      std::swap(interior[static_cast<size_t>(j)], interior[static_cast<size_t>(pick(rng))]);
    }
    std::vector<Index> support(interior.begin(), interior.begin() + draw);
    support.insert(support.end(), pinned.begin(), pinned.end());
    std::sort(support.begin(), support.end());

    RVector z0(s);
    for (Index j = 0; j < s; ++j) z0(j) = initScale * gauss(rng);
    GaussNewtonResult gn = gauss_newton_restricted(make_restricted(sys, support), cfg, z0);
    RVector x = expand(support, gn.z);
    double f = gn.objective;
    if (f < bestF) {
      bestF = f;
      bestX = x;
    }
    if (f < cfg.tau) break;

    // step 3/4: 2-opt swaps with ranked fallback candidates
    bool improved = true;
    while (improved && report.swaps < cfg.maxSwaps) {
      improved = false;
      RVector absX(s);
      for (Index j = 0; j < s; ++j) absX(j) = std::abs(x(support[static_cast<size_t>(j)]));
      const RVector grad = sys.gradient(x);
      std::vector<Index> off;
      off.reserve(pool.size());
      for (Index i : pool)
        if (!std::binary_search(support.begin(), support.end(), i)) off.push_back(i);
      if (off.empty()) break;
      RVector absG(static_cast<Index>(off.size()));
      for (size_t j = 0; j < off.size(); ++j) absG(static_cast<Index>(j)) = std::abs(grad(off[j]));

      const auto pRanks = sorted_ranks(absX, true);    // smallest |x| first
      const auto qRanks = sorted_ranks(absG, false);   // largest |grad| first
      const Index qCap = std::min<Index>(10, static_cast<Index>(off.size()));

      for (size_t pi = 0; pi < pRanks.size() && !improved; ++pi) {
        const size_t pSlot = static_cast<size_t>(pRanks[pi]);
        if (std::binary_search(pinned.begin(), pinned.end(), support[pSlot])) continue;
        for (Index qi = 0; qi < qCap && !improved; ++qi) {
          if (report.swaps >= cfg.maxSwaps) break;
          ++report.swaps;
          const Index q = off[static_cast<size_t>(qRanks[static_cast<size_t>(qi)])];
          std::vector<Index> trial = support;
          trial[pSlot] = q;
          std::sort(trial.begin(), trial.end());
          // warm start: carried values, fresh draw on the incoming index
          RVector zTry(s);
          for (Index j = 0; j < s; ++j) {
            Index idx = trial[static_cast<size_t>(j)];
            zTry(j) = idx == q ? initScale * gauss(rng) : x(idx);
          }
          GaussNewtonResult gnTry =
              gauss_newton_restricted(make_restricted(sys, trial), cfg, zTry);
          if (gnTry.objective < f) {
            support = std::move(trial);
            x = expand(support, gnTry.z);
            f = gnTry.objective;
            improved = true;
            report.acceptedObjectives.push_back(f);
            if (f < bestF) {
              bestF = f;
              bestX = x;
            }
          }
        }
      }
      if (f < cfg.tau) {
        done = true;
        break;
      }
    }
  }

  report.objective = bestF;
  report.reachedTau = bestF < cfg.tau;
  return {Signal::from1d_real(bestX), report};
}

Dictionary Dictionary::identity(Index n) {
  Dictionary d;
  d.atoms = CMatrix::Identity(n, n);
  d.signalShape = Shape::of1d(n);
  return d;
}

void Dictionary::validate() const {
  if (atoms.cols() < 1) throw std::invalid_argument("Dictionary: need at least one atom");
  if (atoms.rows() != signalShape.count())
    throw std::invalid_argument("Dictionary: atom length does not match signal shape");
  for (Index d = 0; d < atoms.cols(); ++d)
    if (atoms.col(d).norm() == 0.0) throw std::invalid_argument("Dictionary: zero atom");
}

namespace {

Shape obs_grid_of(const Observation& obs) {
  if (obs.dims.size() == 1) return Shape::of1d(obs.dims[0]);
  if (obs.dims.size() == 2) return Shape::of2d(obs.dims[0], obs.dims[1]);
  throw std::invalid_argument("sparse_fienup: observation must lie on a 1D or 2D Fourier grid");
}

}  // namespace

std::pair<Signal, SparseFienupReport> sparse_fienup_solve(const Observation& obs, const Dictionary& dict,
                                                          Index k, const AltProjConfig& cfg, bool useOmp) {
  cfg.validate();
  dict.validate();
  const Index d = dict.atoms.cols();
  if (k < 1 || k > d) throw std::invalid_argument("sparse_fienup: k out of range");
  const Shape grid = obs_grid_of(obs);
  const Shape objShape = dict.signalShape;
  for (int a = 0; a < grid.ndim; ++a)
    if (objShape.ndim != grid.ndim || objShape.dim(a) > grid.dim(a))
      throw std::invalid_argument("sparse_fienup: dictionary signals larger than measurement grid");

  RVector sqrtY(obs.y.size());
  for (Index i = 0; i < sqrtY.size(); ++i) sqrtY(i) = std::sqrt(std::max(0.0, obs.y(i)));

  const bool square = dict.atoms.rows() == d;
  Eigen::PartialPivLU<CMatrix> lu;
  Eigen::ColPivHouseholderQR<CMatrix> qr;
  if (!useOmp) {
    if (square) {
      lu.compute(dict.atoms);
      if (std::abs(lu.determinant()) < 1e-300)
        throw std::invalid_argument("sparse_fienup: rank-deficient square dictionary");
    } else {
      qr.compute(dict.atoms);
      if (qr.rank() < std::min(dict.atoms.rows(), d))
        throw std::invalid_argument("sparse_fienup: rank-deficient dictionary");
    }
  }

  auto fwd = [&](const CVector& v) { return grid.ndim == 1 ? fft_forward(v) : fft2_forward(v, grid); };
  auto inv = [&](const CVector& v) { return grid.ndim == 1 ? fft_inverse(v) : fft2_inverse(v, grid); };

  // project onto the k-sparse dictionary model: analysis, threshold, synthesis
  auto sparse_project = [&](const CVector& full) {
    Signal est = crop(Signal(grid, full), objShape);
    CVector alpha;
    if (useOmp) {
      alpha = omp_solve(est, dict, k).code;
    } else {
      alpha = square ? lu.solve(est.flat()).eval() : qr.solve(est.flat()).eval();
      std::vector<Index> idx(static_cast<size_t>(d));
      std::iota(idx.begin(), idx.end(), Index{0});
      std::stable_sort(idx.begin(), idx.end(),
                       [&](Index a, Index b) { return std::abs(alpha(a)) > std::abs(alpha(b)); });
      for (Index j = k; j < d; ++j) alpha(idx[static_cast<size_t>(j)]) = Complex(0, 0);
    }
    return embed(Signal(objShape, dict.atoms * alpha), grid).flat();
  };

  // random Fourier-phase start, as in the other Fienup solvers; the iterate
  // is kept inside the sparse model so the recorded error is meaningful
  CVector z;
  if (cfg.initialGuess) {
    z = embed(*cfg.initialGuess, grid).flat();
  } else {
    std::mt19937_64 rng(cfg.seed);
    std::uniform_real_distribution<double> uni(0.0, 2.0 * kPi);
    CVector spec(sqrtY.size());
    for (Index i = 0; i < spec.size(); ++i)
      spec(i) = std::polar(obs.valid(i) ? sqrtY(i) : 0.0, uni(rng));
    z = inv(spec);
  }
  z = sparse_project(z);

  SparseFienupReport report;
  for (Index it = 0; it < cfg.maxIters; ++it) {
    CVector spec = fwd(z);
    double e = 0.0;
    for (Index i = 0; i < spec.size(); ++i) {
      if (!obs.valid(i)) continue;
      double diff = std::abs(spec(i)) - sqrtY(i);
      e += diff * diff;
    }
    report.errors.push_back(e);
    report.iterations = it + 1;
    if (e <= cfg.epsilon) {
      report.converged = true;
      break;
    }
    if (it == cfg.maxIters - 1) break;

    for (Index i = 0; i < spec.size(); ++i) {
      if (!obs.valid(i)) continue;
      double mag = std::abs(spec(i));
      spec(i) = mag > 0 ? Complex(sqrtY(i) / mag) * spec(i) : Complex(sqrtY(i), 0.0);
    }
    z = sparse_project(inv(spec));
  }

  Signal recon = crop(Signal(grid, z), objShape);
  {
    CVector spec = fwd(embed(recon, grid).flat());
    double obj = 0.0;
    for (Index i = 0; i < spec.size(); ++i) {
      if (!obs.valid(i)) continue;
      double diff = std::norm(spec(i)) - obs.y(i);
      obj += diff * diff;
    }
    report.finalObjective = obj;
  }
  return {recon, report};
}

OmpResult omp_solve(const Signal& target, const Dictionary& dict, Index k) {
  dict.validate();
  if (target.size() != dict.atoms.rows())
    throw std::invalid_argument("omp_solve: target length does not match atoms");
  if (k < 1 || k > dict.atoms.cols()) throw std::invalid_argument("omp_solve: k exceeds atom count");

  const Index d = dict.atoms.cols();
  RVector atomNorm(d);
  for (Index j = 0; j < d; ++j) atomNorm(j) = dict.atoms.col(j).norm();

  OmpResult res;
  CVector residual = target.flat();
  std::vector<bool> used(static_cast<size_t>(d), false);
  CMatrix sub(target.size(), 0);
  CVector coeffs;
  for (Index step = 0; step < k; ++step) {
    Index bestAtom = -1;
    double bestCorr = -1.0;
    for (Index j = 0; j < d; ++j) {
      if (used[static_cast<size_t>(j)]) continue;
      double corr = std::abs(dict.atoms.col(j).dot(residual)) / atomNorm(j);
      if (corr > bestCorr) {
        bestCorr = corr;
        bestAtom = j;
      }
    }
    if (bestAtom < 0) break;
    used[static_cast<size_t>(bestAtom)] = true;
    res.support.push_back(bestAtom);
    sub.conservativeResize(Eigen::NoChange, sub.cols() + 1);
    sub.col(sub.cols() - 1) = dict.atoms.col(bestAtom);
    coeffs = sub.colPivHouseholderQr().solve(target.flat());
    residual = target.flat() - sub * coeffs;
  }
  res.code = CVector::Zero(d);
  for (size_t j = 0; j < res.support.size(); ++j)
    res.code(res.support[j]) = coeffs(static_cast<Index>(j));
  res.residualNorm = residual.norm();
  return res;
}

QuadraticSystem quadratic_system_from(const MeasurementModel& model, const Observation& obs,
                                      bool realSignal) {
  if (const auto* f = std::get_if<OversampledFourier>(&model)) {
    if (f->grid.ndim != 1)
      throw std::invalid_argument("quadratic_system_from: 1D Fourier systems only");
    if (!realSignal)
      throw std::invalid_argument("quadratic_system_from: complex Fourier systems need explicit vectors");
    const Index m = f->grid.dim(0);
    if (obs.y.size() != m) throw std::invalid_argument("quadratic_system_from: observation size mismatch");
    // real x: bins above M/2 duplicate magnitudes by conjugate symmetry
    std::vector<Index> bins;
    RVector y(m / 2 + 1);
    for (Index b = 0; b <= m / 2; ++b) {
      if (!obs.valid(b)) continue;
      bins.push_back(b);
      y(static_cast<Index>(bins.size()) - 1) = obs.y(b);
    }
    y.conservativeResize(static_cast<Index>(bins.size()));
    // signal length: callers measure length-N signals on the M grid; the
    // unknown dimension must be supplied by convention N = (M+1)/2 when not
    // stated. Use the full grid if the caller wants otherwise they build the
    // system directly.
    return QuadraticSystem::fourier((m + 1) / 2, m, std::move(y), std::move(bins));
  }
  if (const auto* g = std::get_if<GeneralLinear>(&model)) {
    const Index mCount = g->vectors.rows();
    if (obs.y.size() != mCount)
      throw std::invalid_argument("quadratic_system_from: observation size mismatch");
    const Index n = g->vectors.cols();
    std::vector<RMatrix> mats;
    RVector y(mCount);
    Index kept = 0;
    for (Index kIdx = 0; kIdx < mCount; ++kIdx) {
      if (!obs.valid(kIdx)) continue;
      CMatrix ak = g->vectors.row(kIdx).transpose() * g->vectors.row(kIdx).conjugate();
      if (realSignal) {
        mats.push_back(ak.real());
      } else {
        // [Re x; Im x] embedding of the Hermitian form
        RMatrix big(2 * n, 2 * n);
        big.topLeftCorner(n, n) = ak.real();
        big.bottomRightCorner(n, n) = ak.real();
        big.topRightCorner(n, n) = -ak.imag();
        big.bottomLeftCorner(n, n) = ak.imag();
        mats.push_back(0.5 * (big + big.transpose()));
      }
      y(kept++) = obs.y(kIdx);
    }
    y.conservativeResize(kept);
    return QuadraticSystem(std::move(mats), std::move(y));
  }
  throw std::invalid_argument("quadratic_system_from: unsupported measurement model");
}

}  // namespace phasekit
