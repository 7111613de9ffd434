#include "phasekit/lifted.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

namespace phasekit {

namespace {

template <typename Mat>
Mat hermitize(const Mat& x) {
  return ((x + Mat(x.adjoint())) * typename Mat::Scalar(0.5)).eval();
}

template <typename Mat>
RVector measure(const Mat& vectors, const Mat& X) {
  // row k of vectors holds a_k; Tr(a_k a_k* X) = a_k* X a_k
  Mat t = vectors.conjugate() * X;
  RVector out(vectors.rows());
  for (Index k = 0; k < vectors.rows(); ++k)
    out(k) = std::real(t.row(k).cwiseProduct(vectors.row(k)).sum());
  return out;
}

/// adjoint of the measurement map applied to a residual: sum_k r_k a_k a_k*
template <typename Mat>
Mat adjoint_apply(const Mat& vectors, const RVector& r) {
  Mat d = r.template cast<typename Mat::Scalar>().asDiagonal();
  return (vectors.transpose() * d * vectors.conjugate()).eval();
}

template <typename Mat>
Mat psd_clip(const Mat& X) {
  Eigen::SelfAdjointEigenSolver<Mat> es(hermitize(X));
  RVector ev = es.eigenvalues().cwiseMax(0.0);
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().adjoint();
}

template <typename Mat>
void soft_threshold(Mat& X, double thr) {
  if (thr <= 0) return;
  for (Index j = 0; j < X.cols(); ++j)
    for (Index i = 0; i < X.rows(); ++i) {
      double a = std::abs(X(i, j));
      X(i, j) = a <= thr ? typename Mat::Scalar(0) : X(i, j) * typename Mat::Scalar((a - thr) / a);
    }
}

/// Euclidean projection of the row-norm vector onto the l1 ball of radius
/// eta, realized as row-wise scaling.
template <typename Mat>
void row_ball_project(Mat& X, double eta) {
  if (eta <= 0) return;
  const Index n = X.rows();
  RVector p(n);
  for (Index j = 0; j < n; ++j) p(j) = X.row(j).norm();
  if (p.sum() <= eta) return;
  std::vector<double> s(p.data(), p.data() + n);
  std::sort(s.begin(), s.end(), std::greater<double>());
  double cum = 0.0, theta = 0.0;
  for (Index j = 0; j < n; ++j) {
    cum += s[static_cast<size_t>(j)];
    double t = (cum - eta) / static_cast<double>(j + 1);
    if (j + 1 == n || s[static_cast<size_t>(j + 1)] <= t) {
      theta = t;
      break;
    }
  }
  for (Index j = 0; j < n; ++j) {
    double scale = p(j) > 0 ? std::max(0.0, p(j) - theta) / p(j) : 0.0;
    X.row(j) *= typename Mat::Scalar(scale);
  }
}

double hinge(double r, double eps) { return r > eps ? r - eps : (r < -eps ? r + eps : 0.0); }

template <typename Mat>
double lipschitz_estimate(const Mat& vectors, std::uint64_t seed) {
  const Index n = vectors.cols();
  std::mt19937_64 rng(seed_mix(seed, 0x11f7ed));
  std::normal_distribution<double> gauss(0.0, 1.0);
  Mat h(n, n);
  for (Index j = 0; j < n; ++j)
    for (Index i = 0; i < n; ++i) {
      if constexpr (std::is_same_v<typename Mat::Scalar, double>)
        h(i, j) = gauss(rng);
      else
        h(i, j) = Complex(gauss(rng), gauss(rng));
    }
  h = hermitize(h);
  double lam = 1.0;
  for (int it = 0; it < 30; ++it) {
    Mat th = adjoint_apply(vectors, measure(vectors, h));
    double norm = th.norm();
    if (norm == 0) break;
    lam = norm / h.norm();
    h = th / norm;
  }
  return lam * 1.05 + 1e-12;
}

struct EngineSpec {
  double epsilon = 0.0;
  double traceWeight = 0.0;
  double l1Weight = 0.0;
  double eta = 0.0;  // 0 = no row-norm ball
  int iters = 1000;
  double stopTol = 1e-12;
};

/// Monotone accelerated proximal gradient (MFISTA) over the PSD cone for
///   0.5 sum_k hinge(Tr(A_k X)-y_k; eps)^2 + tw Tr(W X) + l1 ||X||_1
/// subject to the optional row-norm ball.
template <typename Mat>
Mat lifted_engine(const Mat& vectors, const RVector& y, const Mat& W, const EngineSpec& spec,
                  double lipschitz, Mat X0) {
  const double step = 1.0 / lipschitz;

  auto smooth_grad = [&](const Mat& X) {
    RVector r = measure(vectors, X) - y;
    for (Index k = 0; k < r.size(); ++k) r(k) = hinge(r(k), spec.epsilon);
    Mat g = adjoint_apply(vectors, r);
    if (spec.traceWeight != 0) g += typename Mat::Scalar(spec.traceWeight) * W;
    return g;
  };
  auto objective = [&](const Mat& X) {
    RVector r = measure(vectors, X) - y;
    double f = 0.0;
    for (Index k = 0; k < r.size(); ++k) {
      double h = hinge(r(k), spec.epsilon);
      f += 0.5 * h * h;
    }
    if (spec.traceWeight != 0) f += spec.traceWeight * std::real((W.cwiseProduct(X.transpose())).sum());
    if (spec.l1Weight != 0) f += spec.l1Weight * X.template lpNorm<1>();
    return f;
  };
  auto prox = [&](Mat X) {
    soft_threshold(X, spec.l1Weight * step);
    if (spec.eta > 0) {
      row_ball_project(X, spec.eta);
      X = hermitize(X);
    }
    return psd_clip(X);
  };

  Mat X = psd_clip(std::move(X0));
  Mat Y = X;
  double t = 1.0;
  double fX = objective(X);
  int flat = 0;
  for (int it = 0; it < spec.iters; ++it) {
    Mat Z = prox(Y - step * smooth_grad(Y));
    double fZ = objective(Z);
    Mat Xnew = fZ <= fX ? Z : X;
    double fNew = std::min(fZ, fX);
    double tNew = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    Y = Xnew + (t / tNew) * (Z - Xnew) + ((t - 1.0) / tNew) * (Xnew - X);
    X = std::move(Xnew);
    flat = fX - fNew <= spec.stopTol * (1.0 + std::abs(fNew)) ? flat + 1 : 0;
    fX = fNew;
    t = tNew;
    if (flat >= 25) break;
  }
  return X;
}

template <typename Mat>
void check_inputs(const Observation& obs, const Mat& vectors) {
  if (vectors.rows() != obs.y.size())
    throw std::invalid_argument("lifted: measurement count does not match observation");
  if (vectors.rows() < 1) throw std::invalid_argument("lifted: need at least one measurement");
}

template <typename Mat>
double auto_trace_weight(const Mat& vectors, const RVector& y, const LiftedConfig& cfg) {
  if (cfg.traceWeight > 0) return cfg.traceWeight;
  double meanRowSq = vectors.rowwise().squaredNorm().mean();
  double meanY = y.cwiseAbs().mean();
  if (meanRowSq <= 0 || meanY <= 0) return 1e-8;
  // Small against the penalty curvature so the trace bias stays well below
  // the accuracy targets; configurable when a stronger pull is wanted.
  return 1e-5 * meanY / meanRowSq * static_cast<double>(vectors.rows());
}

template <typename Mat>
LiftedResultT<Mat> run_trace_l1(const Observation& obs, const Mat& vectors, const LiftedConfig& cfg) {
  cfg.validate();
  check_inputs(obs, vectors);
  const Index n = vectors.cols();
  const double lip = lipschitz_estimate(vectors, cfg.seed);
  const double tw = auto_trace_weight(vectors, obs.y, cfg);

  EngineSpec spec;
  spec.epsilon = cfg.epsilonNoise;
  spec.traceWeight = tw;
  spec.l1Weight = tw * cfg.lambda;
  spec.iters = cfg.innerIters;
  Mat W = Mat::Identity(n, n);
  Mat X = lifted_engine(vectors, obs.y, W, spec, lip, Mat(Mat::Zero(n, n)));

  LiftedResultT<Mat> res;
  RVector r = measure(vectors, X) - obs.y;
  double viol = 0.0;
  for (Index k = 0; k < r.size(); ++k) viol = std::max(viol, std::abs(hinge(r(k), cfg.epsilonNoise)));
  res.penalty = viol;
  double scale = std::max(1.0, obs.y.cwiseAbs().maxCoeff());
  res.feasible = viol <= 1e-5 * scale;
  res.iterations = cfg.innerIters;
  res.X = std::move(X);
  return res;
}

template <typename Mat>
LiftedResultT<Mat> run_qcs(const Observation& obs, const Mat& vectors, const LiftedConfig& cfg) {
  cfg.validate();
  check_inputs(obs, vectors);
  if (!(cfg.eta > 0)) throw std::invalid_argument("qcs_solve: eta must be positive");
  const Index n = vectors.cols();
  const double lip = lipschitz_estimate(vectors, cfg.seed);
  const double tw = auto_trace_weight(vectors, obs.y, cfg);

  Mat X = Mat::Zero(n, n);
  double delta = cfg.logDetDelta;
  double prevObj = std::numeric_limits<double>::infinity();
  for (int t = 0; t < cfg.outerIters; ++t) {
    Mat W;
    if (t == 0) {
      W = Mat::Identity(n, n);
    } else {
      if (delta <= 0) delta = std::max(1e-12, 1e-6 * std::real(X.trace()) / static_cast<double>(n));
      Mat reg = hermitize(X) + delta * Mat::Identity(n, n);
      W = reg.ldlt().solve(Mat::Identity(n, n));
      W = hermitize(W);
    }
    EngineSpec spec;
    spec.epsilon = cfg.epsilonNoise;
    spec.traceWeight = tw;
    spec.iters = cfg.innerIters;
    spec.eta = cfg.eta;
    X = lifted_engine(vectors, obs.y, W, spec, lip, std::move(X));

    // row/column hard threshold against the largest row norm
    if (cfg.threshold > 0) {
      RVector rn(n);
      for (Index j = 0; j < n; ++j) rn(j) = X.row(j).norm();
      double cut = cfg.threshold * rn.maxCoeff();
      for (Index j = 0; j < n; ++j)
        if (rn(j) < cut) {
          X.row(j).setZero();
          X.col(j).setZero();
        }
    }

    double obj;
    {
      Mat reg = hermitize(X) + std::max(delta, 1e-12) * Mat::Identity(n, n);
      Eigen::SelfAdjointEigenSolver<Mat> es(reg);
      obj = es.eigenvalues().array().max(1e-300).log().sum();
    }
    if (std::abs(prevObj - obj) <= cfg.objectiveTol * (1.0 + std::abs(obj))) break;
    prevObj = obj;
  }

  LiftedResultT<Mat> res;
  RVector r = measure(vectors, X) - obs.y;
  double viol = 0.0;
  for (Index k = 0; k < r.size(); ++k) viol = std::max(viol, std::abs(hinge(r(k), cfg.epsilonNoise)));
  res.penalty = viol;
  double scale = std::max(1.0, obs.y.cwiseAbs().maxCoeff());
  res.feasible = viol <= 1e-3 * scale;
  res.iterations = cfg.outerIters;
  res.X = std::move(X);
  return res;
}

template <typename Mat>
Signal extract_impl(const Mat& X) {
  if (X.rows() != X.cols()) throw std::invalid_argument("extract_rank1: square matrices only");
  if (X.norm() == 0.0) return Signal::zeros(Shape::of1d(X.rows()));
  Eigen::SelfAdjointEigenSolver<Mat> es(hermitize(X));
  const Index last = X.rows() - 1;
  double lam = es.eigenvalues()(last);
  if (lam <= 0) return Signal::zeros(Shape::of1d(X.rows()));
  CVector u = es.eigenvectors().col(last).template cast<Complex>();
  return Signal::from1d(std::sqrt(lam) * u);
}

}  // namespace

void LiftedConfig::validate() const {
  if (epsilonNoise < 0) throw std::invalid_argument("LiftedConfig: epsilonNoise must be >= 0");
  if (lambda < 0) throw std::invalid_argument("LiftedConfig: lambda must be >= 0");
  if (logDetDelta < 0) throw std::invalid_argument("LiftedConfig: logDetDelta must be >= 0");
  if (outerIters < 1 || innerIters < 1) throw std::invalid_argument("LiftedConfig: iteration counts must be >= 1");
  if (threshold < 0) throw std::invalid_argument("LiftedConfig: threshold must be >= 0");
}

CMatrix lift(const Signal& x) {
  if (x.ndim() != 1) throw std::invalid_argument("lift: 1D signals only");
  return x.flat() * x.flat().adjoint();
}

RVector trace_measurements(const CMatrix& vectors, const CMatrix& X) { return measure(vectors, X); }
RVector trace_measurements(const RMatrix& vectors, const RMatrix& X) { return measure(vectors, X); }

LiftedResult phaselift_solve(const Observation& obs, const CMatrix& vectors, const LiftedConfig& cfg) {
  LiftedConfig c = cfg;
  c.lambda = 0.0;
  return run_trace_l1(obs, vectors, c);
}

LiftedResultReal phaselift_solve_real(const Observation& obs, const RMatrix& vectors, const LiftedConfig& cfg) {
  LiftedConfig c = cfg;
  c.lambda = 0.0;
  return run_trace_l1(obs, vectors, c);
}

LiftedResult cprl_solve(const Observation& obs, const CMatrix& vectors, const LiftedConfig& cfg) {
  return run_trace_l1(obs, vectors, cfg);
}

LiftedResultReal cprl_solve_real(const Observation& obs, const RMatrix& vectors, const LiftedConfig& cfg) {
  return run_trace_l1(obs, vectors, cfg);
}

LiftedResult qcs_solve(const Observation& obs, const CMatrix& vectors, const LiftedConfig& cfg) {
  return run_qcs(obs, vectors, cfg);
}

LiftedResultReal qcs_solve_real(const Observation& obs, const RMatrix& vectors, const LiftedConfig& cfg) {
  return run_qcs(obs, vectors, cfg);
}

Signal extract_rank1(const CMatrix& X) { return extract_impl(X); }
Signal extract_rank1(const RMatrix& X) { return extract_impl(X); }

}  // namespace phasekit
