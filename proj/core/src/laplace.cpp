#include <cmath>
#include <limits>

#include <Eigen/Cholesky>

#include "ilhte/glmm.hpp"

namespace ilhte {
namespace {

constexpr double kSeparationEta = 30.0;

// Newton system for the half penalized deviance
//   F(beta, v, w) = sum_r [softplus(eta_r) - y_r eta_r] + (|v|^2 + |w|^2) / 2,
// with the person block eliminated: S = K - C D^{-1} C' over (w, beta).
struct NewtonSystem {
  int n_persons = 0;
  int q_item = 0;   // n_items * item_dim
  int p = 0;        // profiled fixed effects (0 when beta is held fixed)
  double F = 0.0;
  double residual_deviance = 0.0;
  bool separated = false;
  Eigen::VectorXd g_person;    // gradient wrt v
  Eigen::VectorXd d_person;    // diagonal of the person block
  Eigen::VectorXd g_rest;      // gradient wrt (w, beta)
  Eigen::MatrixXd K;           // (w, beta) block, lower triangle; then Schur
  Eigen::MatrixXd C;           // (w, beta) x persons cross block, scaled by D^{-1/2}
  Eigen::LLT<Eigen::MatrixXd> llt;
  // Row workspaces.
  Eigen::VectorXd eta;
  Eigen::VectorXd ex;
  Eigen::VectorXd omega;
  Eigen::VectorXd resid;
  Eigen::MatrixXd k_fixed;
  Eigen::VectorXd g_fixed;
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> cross;  // items x fixed

  void resize(int np, int q, int pp) {
    n_persons = np;
    q_item = q;
    p = pp;
    g_person.resize(np);
    d_person.resize(np);
    g_rest.resize(q + pp);
    K.resize(q + pp, q + pp);
    C.resize(q + pp, np);
    cross.resize(q, pp);
    k_fixed.resize(pp, pp);
    g_fixed.resize(pp);
  }

  void resize_rows(Eigen::Index n) {
    eta.resize(n);
    omega.resize(n);
    resid.resize(n);
  }
};

// Row contributions grouped by person. P is the number of profiled fixed
// effects when known at compile time; local accumulators keep the per-person
// sums out of memory that the compiler would otherwise treat as aliased.
template <int P>
void person_pass(const DesignMatrices& dm, const VarianceStructure& vs, const Eigen::VectorXd& u,
                 NewtonSystem& sys) {
  const int np = sys.n_persons;
  const int d = dm.item_dim;
  const int q = sys.q_item;
  const int p = P == Eigen::Dynamic ? sys.p : P;
  const double s = vs.person_sd;
  const double l11 = vs.item_factor(0, 0);
  const double l21 = d == 2 ? vs.item_factor(1, 0) : 0.0;
  const double l22 = d == 2 ? vs.item_factor(1, 1) : 0.0;

  constexpr int kSize = P == 0 ? Eigen::Dynamic : P;
  using Vec = Eigen::Matrix<double, kSize, 1>;
  using Mat = Eigen::Matrix<double, kSize, kSize>;
  Vec cf = Vec::Zero(p);
  Vec gf = Vec::Zero(p);
  Mat kf = Mat::Zero(p, p);
  double* K = sys.K.data();
  const Eigen::Index ld = sys.K.rows();
  const double* X = dm.X.data();  // row major
  double* cross = sys.cross.data();
  for (int j = 0; j < np; ++j) {
    double gv = 0.0;
    double dv = 0.0;
    double* Cj = sys.C.col(j).data();
    if constexpr (P != 0) cf.setZero();
    for (std::size_t r = dm.person_start[static_cast<std::size_t>(j)];
         r < dm.person_start[static_cast<std::size_t>(j) + 1]; ++r) {
      const auto ri = static_cast<Eigen::Index>(r);
      const int base = d * dm.item[r];
      const double t = dm.slope(ri);
      const double a0 = l11 + l21 * t;
      const double a1 = l22 * t;
      const double om = sys.omega(ri);
      const double res = sys.resid(ri);
      gv += res;
      dv += om;
      K[base * ld + base] += om * a0 * a0;
      sys.g_rest(base) += res * a0;
      Cj[base] += om * a0;
      if (d == 2) {
        K[base * ld + base + 1] += om * a1 * a0;
        K[(base + 1) * ld + base + 1] += om * a1 * a1;
        sys.g_rest(base + 1) += res * a1;
        Cj[base + 1] += om * a1;
      }
      if constexpr (P != 0) {
        const Eigen::Map<const Vec> xr(X + r * static_cast<std::size_t>(p), p);
        double* c0 = cross + static_cast<std::size_t>(base) * static_cast<std::size_t>(p);
        Eigen::Map<Vec>(c0, p) += (om * a0) * xr;
        if (d == 2) Eigen::Map<Vec>(c0 + p, p) += (om * a1) * xr;
        cf += om * xr;
        gf += res * xr;
        if constexpr (P == Eigen::Dynamic) {
          for (int c = 0; c < p; ++c) {
            if (xr(c) == 0.0) continue;
            const double ox = om * xr(c);
            for (int c2 = c; c2 < p; ++c2) kf(c2, c) += ox * xr(c2);
          }
        } else {
          kf.noalias() += (om * xr) * xr.transpose();
        }
      }
    }
    if constexpr (P != 0) Eigen::Map<Vec>(Cj + q, p) = cf;
    for (int k = 0; k < q + p; ++k) Cj[k] *= s;
    sys.g_person(j) = s * gv + u(j);
    sys.d_person(j) = s * s * dv + 1.0;
  }
  if constexpr (P != 0) {
    sys.k_fixed = kf;
    sys.g_fixed = gf;
  }
}

void accumulate(const DesignMatrices& dm, const VarianceStructure& vs,
                const Eigen::VectorXd& beta, const Eigen::VectorXd& u, NewtonSystem& sys) {
  const int np = sys.n_persons;
  const int d = dm.item_dim;
  const int q = sys.q_item;
  const int p = sys.p;
  const double s = vs.person_sd;
  const double l11 = vs.item_factor(0, 0);
  const double l21 = d == 2 ? vs.item_factor(1, 0) : 0.0;
  const double l22 = d == 2 ? vs.item_factor(1, 1) : 0.0;
  const Eigen::Index n = dm.n_rows();

  // Linear predictor and the Bernoulli terms. The softplus sum is taken as
  // the log of running products of (1 + e^{-|eta|}) in (1, 2], which avoids a
  // log per row; blocks of 512 cannot overflow.
  sys.eta.noalias() = dm.X * beta;
  for (Eigen::Index r = 0; r < n; ++r) {
    const auto ru = static_cast<std::size_t>(r);
    const int base = np + d * dm.item[ru];
    const double t = dm.slope(r);
    double e = s * u(dm.person[ru]) + (l11 + l21 * t) * u(base);
    if (d == 2) e += l22 * t * u(base + 1);
    sys.eta(r) += e;
  }
  sys.ex = (-sys.eta.array().abs()).exp();
  double dev = 0.0;
  double prod = 1.0;
  bool separated = false;
  for (Eigen::Index r = 0; r < n; ++r) {
    const double eta = sys.eta(r);
    const double ex = sys.ex(r);
    const double inv = 1.0 / (1.0 + ex);
    // Branch-free choice between the two stable forms of the logistic.
    const double mu_neg = ex * inv;
    const double mu = mu_neg + static_cast<double>(eta >= 0.0) * (inv - mu_neg);
    const double y = dm.y(r);
    sys.omega(r) = mu_neg * inv;
    sys.resid(r) = mu - y;
    dev += std::max(eta, 0.0) - y * eta;
    prod *= 1.0 + ex;
    if ((r & 511) == 511) {
      dev += std::log(prod);
      prod = 1.0;
    }
    separated = separated || std::abs(eta) > kSeparationEta;
  }
  dev += std::log(prod);
  sys.separated = separated;

  sys.K.setZero();
  sys.C.setZero();
  sys.g_rest.setZero();
  if (p > 0) sys.cross.setZero();

  if (p == 0) {
    person_pass<0>(dm, vs, u, sys);
  } else if (p == 4) {
    person_pass<4>(dm, vs, u, sys);
  } else if (p == 5) {
    person_pass<5>(dm, vs, u, sys);
  } else if (p == 6) {
    person_pass<6>(dm, vs, u, sys);
  } else if (p == 7) {
    person_pass<7>(dm, vs, u, sys);
  } else {
    person_pass<Eigen::Dynamic>(dm, vs, u, sys);
  }
  if (p > 0) {
    for (int c = 0; c < p; ++c) {
      for (int c2 = c; c2 < p; ++c2) sys.K(q + c2, q + c) = sys.k_fixed(c2, c);
    }
    sys.g_rest.tail(p) = sys.g_fixed;
    sys.K.bottomLeftCorner(p, q) = sys.cross.transpose();
  }

  for (int k = 0; k < q; ++k) {
    sys.K(k, k) += 1.0;
    sys.g_rest(k) += u(np + k);
  }

  const Eigen::VectorXd inv_sqrt_d = sys.d_person.cwiseSqrt().cwiseInverse();
  sys.C = sys.C * inv_sqrt_d.asDiagonal();
  sys.K.selfadjointView<Eigen::Lower>().rankUpdate(sys.C, -1.0);
  sys.g_rest.noalias() -= sys.C * sys.g_person.cwiseProduct(inv_sqrt_d);

  sys.residual_deviance = 2.0 * dev;
  sys.F = dev + 0.5 * u.squaredNorm();
  sys.llt.compute(sys.K);
}

}  // namespace

double ConditionalFactor::log_determinant() const {
  double ld = person_diag.array().log().sum();
  for (int k = 0; k < item_block_size; ++k) ld += 2.0 * std::log(schur_lower(k, k));
  return ld;
}

LaplaceEngine::LaplaceEngine(const DesignMatrices& dm, PirlsOptions options)
    : dm_(dm), options_(options) {
  reset();
}

void LaplaceEngine::reset() {
  beta_ = Eigen::VectorXd::Zero(dm_.n_fixed());
  u_ = Eigen::VectorXd::Zero(dm_.n_persons() + dm_.item_dim * dm_.n_items());
}

PirlsResult LaplaceEngine::solve(const VarianceStructure& vs) {
  PirlsResult res = run(vs, true);
  if (!res.converged) {
    reset();
    res = run(vs, true);
  }
  return res;
}

PirlsResult LaplaceEngine::solve_fixed_beta(const VarianceStructure& vs,
                                            const Eigen::VectorXd& beta) {
  if (beta.size() != dm_.n_fixed()) {
    throw ValidationError("pirls: beta has the wrong length");
  }
  beta_ = beta;
  PirlsResult res = run(vs, false);
  if (!res.converged) {
    u_.setZero();
    res = run(vs, false);
  }
  return res;
}

PirlsResult LaplaceEngine::run(const VarianceStructure& vs, bool profile_beta) {
  if (vs.item_dim != dm_.item_dim) {
    throw ValidationError("pirls: variance structure does not match the design");
  }
  const int np = dm_.n_persons();
  const int q = dm_.item_dim * dm_.n_items();
  const int p = profile_beta ? dm_.n_fixed() : 0;

  NewtonSystem sys;
  sys.resize(np, q, p);
  sys.resize_rows(dm_.n_rows());
  accumulate(dm_, vs, beta_, u_, sys);
  if (sys.llt.info() != Eigen::Success || !std::isfinite(sys.F)) {
    throw std::runtime_error("pirls: conditional information is not positive definite");
  }

  PirlsResult res;
  Eigen::VectorXd beta = beta_;
  Eigen::VectorXd u = u_;
  for (int it = 1; it <= options_.max_iterations; ++it) {
    res.iterations = it;
    const Eigen::VectorXd delta_rest = sys.llt.solve(-sys.g_rest);
    // Person step: -(g_v + D^{1/2} C_scaled' delta) / D.
    const Eigen::VectorXd cross = sys.C.transpose() * delta_rest;
    const Eigen::VectorXd delta_v =
        -(sys.g_person + sys.d_person.cwiseSqrt().cwiseProduct(cross)).cwiseQuotient(sys.d_person);
    // Predicted decrease of F from the full Newton step.
    const double decrement = -0.5 * (sys.g_rest.dot(delta_rest) + sys.g_person.dot(delta_v));
    if (decrement <= options_.tolerance * std::abs(sys.F)) {
      // Take the remaining full step: near the mode Newton is quadratic, so
      // this makes the modes accurate well beyond the stopping tolerance.
      res.converged = true;
      const double f_old = sys.F;
      Eigen::VectorXd trial_beta = beta;
      Eigen::VectorXd trial_u = u;
      trial_u.head(np) += delta_v;
      trial_u.tail(q) += delta_rest.head(q);
      if (p > 0) trial_beta += delta_rest.tail(p);
      accumulate(dm_, vs, trial_beta, trial_u, sys);
      if (std::isfinite(sys.F) && sys.llt.info() == Eigen::Success &&
          sys.F <= f_old + 1e-12 * std::abs(f_old)) {
        beta = trial_beta;
        u = trial_u;
      } else {
        accumulate(dm_, vs, beta, u, sys);
      }
      break;
    }

    const double f_old = sys.F;
    double step = 1.0;
    bool accepted = false;
    Eigen::VectorXd trial_beta = beta;
    Eigen::VectorXd trial_u = u;
    for (int h = 0; h <= options_.max_step_halvings; ++h) {
      trial_u.head(np) = u.head(np) + step * delta_v;
      trial_u.tail(q) = u.tail(q) + step * delta_rest.head(q);
      if (p > 0) trial_beta = beta + step * delta_rest.tail(p);
      accumulate(dm_, vs, trial_beta, trial_u, sys);
      if (std::isfinite(sys.F) && sys.llt.info() == Eigen::Success &&
          sys.F <= f_old + 1e-12 * std::abs(f_old)) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      // No descent along the Newton direction: we are at the numerical optimum
      // if the previous point was already flat.
      accumulate(dm_, vs, beta, u, sys);
      res.converged = std::abs(sys.g_rest.lpNorm<Eigen::Infinity>()) < 1e-6;
      break;
    }
    beta = trial_beta;
    u = trial_u;
  }
  total_iterations_ += res.iterations;
  beta_ = beta;
  u_ = u;

  res.beta = beta;
  res.u = u;
  res.residual_deviance = sys.residual_deviance;
  res.penalty = u.squaredNorm();
  res.separation = sys.separated;
  res.factor.person_diag = sys.d_person;
  res.factor.schur_lower = sys.llt.matrixL();
  res.factor.item_block_size = q;
  res.log_det = res.factor.log_determinant();

  res.b.resize(u.size());
  res.b.head(np) = vs.person_sd * u.head(np);
  const int d = dm_.item_dim;
  for (int i = 0; i < dm_.n_items(); ++i) {
    if (d == 1) {
      res.b(np + i) = vs.item_factor(0, 0) * u(np + i);
    } else {
      res.b.segment(np + 2 * i, 2) = vs.item_factor.triangularView<Eigen::Lower>() *
                                     u.segment(np + 2 * i, 2);
    }
  }

  if (p > 0) {
    const Eigen::MatrixXd lbb = res.factor.schur_lower.bottomRightCorner(p, p);
    const Eigen::MatrixXd linv = lbb.triangularView<Eigen::Lower>().solve(
        Eigen::MatrixXd::Identity(p, p));
    res.fixed_cov = linv.transpose() * linv;
  }
  return res;
}

PirlsResult pirls_modes(const DesignMatrices& dm, const VarianceStructure& vs,
                        const Eigen::VectorXd& beta, PirlsOptions options) {
  LaplaceEngine engine(dm, options);
  return engine.solve_fixed_beta(vs, beta);
}

double laplace_deviance(const DesignMatrices& dm, const VarianceStructure& vs,
                        PirlsOptions options) {
  LaplaceEngine engine(dm, options);
  return engine.solve(vs).laplace_deviance();
}

}  // namespace ilhte
