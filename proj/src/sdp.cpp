#include "qsdp/sdp.hpp"

#include <algorithm>
#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <chrono>
#include <cmath>
#include <string>

#include "qsdp/errors.hpp"
#include "qsdp/linalg.hpp"

namespace qsdp {

SdpVariant parse_variant(std::string_view name) {
  if (name == "bilinear") return SdpVariant::bilinear;
  if (name == "quadratic") return SdpVariant::quadratic;
  if (name == "vector" || name == "vector_output") return SdpVariant::vector_output;
  throw InvalidInput("unknown SDP variant '" + std::string(name) + "'");
}

std::string_view to_string(SdpVariant v) {
  switch (v) {
    case SdpVariant::bilinear: return "bilinear";
    case SdpVariant::quadratic: return "quadratic";
    case SdpVariant::vector_output: return "vector";
  }
  return "?";
}

void validate(const SdpProblem& p) {
  if (p.x.rows() < 1 || p.x.cols() < 1)
    throw InvalidInput("SDP data needs n >= 1 and d >= 1");
  if (!p.x.allFinite()) throw InvalidInput("SDP data contains NaN or Inf");
  if (!std::isfinite(p.beta) || p.beta < 0.0)
    throw InvalidInput("beta must be a finite nonnegative number");
  if (p.y.rows() != p.x.rows())
    throw InvalidInput("target rows do not match data rows");
  if (p.variant != SdpVariant::vector_output && p.y.cols() != 1)
    throw InvalidInput("scalar SDP variants need a single target column");
  if (p.y.cols() < 1) throw InvalidInput("targets need at least one column");
  check_targets(p.loss, p.y);
  const auto& c = p.config;
  if (!(c.eps_abs >= 0.0) || !(c.eps_rel >= 0.0) || c.eps_abs + c.eps_rel <= 0.0)
    throw InvalidInput("solver tolerances must be nonnegative and not both zero");
  if (c.max_iterations < 1) throw InvalidInput("max_iterations must be >= 1");
  if (!(c.penalty > 0.0)) throw InvalidInput("penalty must be positive");
  if (!(c.relaxation > 0.0 && c.relaxation < 2.0))
    throw InvalidInput("relaxation must lie in (0, 2)");
  if (c.adapt_penalty && (!(c.adapt_factor > 1.0) || !(c.adapt_ratio > 1.0) || c.adapt_interval < 1))
    throw InvalidInput("penalty adaptation needs factor > 1, ratio > 1 and interval >= 1");
}

namespace {

// One symmetric matrix variable restricted to the constant-diagonal
// subspace, contributing sign * <X, M_i> to prediction i and cost * tr(X) to
// the objective. With S_i = x_i x_i':
//   full:     X is d x d, M_i = S_i
//   coupled:  X is 2d x 2d, M_i = [0 S_i; S_i 0], so <X, M_i> = 2 x_i' Z x_i
struct Block {
  enum class Shape { full, coupled };
  Shape shape = Shape::full;
  double cost = 0.0;
  double sign = 1.0;
  const Matrix* x = nullptr;  // n x d, owned by the caller

  Eigen::Index size() const {
    return shape == Shape::coupled ? 2 * x->cols() : x->cols();
  }
};

Matrix project_constant_diagonal(const Matrix& m) {
  Matrix out = m;
  const double mean = m.diagonal().mean();
  out.diagonal().setConstant(mean);
  return out;
}

Vector apply_op(const std::vector<Block>& blocks, const std::vector<Matrix>& xs) {
  Vector out = Vector::Zero(blocks.front().x->rows());
  for (std::size_t k = 0; k < blocks.size(); ++k) {
    const Block& blk = blocks[k];
    const Matrix& x = *blk.x;
    const Eigen::Index d = x.cols();
    if (blk.shape == Block::Shape::coupled) {
      const Matrix xz = x * xs[k].topRightCorner(d, d);
      out += (2.0 * blk.sign) * xz.cwiseProduct(x).rowwise().sum();
    } else {
      const Matrix xz = x * xs[k];
      out += blk.sign * xz.cwiseProduct(x).rowwise().sum();
    }
  }
  return out;
}

// Adjoint restricted to the constant-diagonal subspace.
std::vector<Matrix> apply_adjoint(const std::vector<Block>& blocks, const Vector& w) {
  std::vector<Matrix> out;
  out.reserve(blocks.size());
  for (const Block& blk : blocks) {
    const Matrix& x = *blk.x;
    const Eigen::Index d = x.cols();
    Matrix s = blk.sign * (x.transpose() * (w.asDiagonal() * x));
    if (blk.shape == Block::Shape::coupled) {
      Matrix m = Matrix::Zero(2 * d, 2 * d);
      m.topRightCorner(d, d) = s;
      m.bottomLeftCorner(d, d) = s;
      out.push_back(std::move(m));
    } else {
      out.push_back(project_constant_diagonal(s));
    }
  }
  return out;
}

// G_ik = <P(M_i), M_k> summed over blocks, P the projector onto the
// constant-diagonal subspace.
Matrix gram(const std::vector<Block>& blocks) {
  const Matrix& x0 = *blocks.front().x;
  const Eigen::Index n = x0.rows();
  Matrix g = Matrix::Zero(n, n);
  for (const Block& blk : blocks) {
    const Matrix& x = *blk.x;
    const Matrix inner = x * x.transpose();
    const Matrix sq = inner.cwiseAbs2();
    if (blk.shape == Block::Shape::coupled) {
      g += 2.0 * sq;
    } else {
      const Matrix x2 = x.cwiseAbs2();
      const Vector norms = x2.rowwise().sum();
      g += sq - x2 * x2.transpose() +
           norms * norms.transpose() / static_cast<double>(x.cols());
    }
  }
  return g;
}

double squared_norm(const std::vector<Matrix>& ms) {
  double s = 0.0;
  for (const auto& m : ms) s += m.squaredNorm();
  return s;
}

struct EngineResult {
  std::vector<Matrix> psd;  // final PSD copies
  double primal = 0.0;      // normalised residuals
  double dual = 0.0;
  long iterations = 0;
  bool converged = false;
};

EngineResult run_admm(const std::vector<Block>& blocks, const Matrix& target,
                      LossKind loss, const SolverConfig& cfg) {
  const Eigen::Index n = target.rows();
  const std::size_t nb = blocks.size();

  Matrix kmat = gram(blocks);
  kmat.diagonal().array() += 1.0;
  const Eigen::LLT<Matrix> chol(kmat);
  if (chol.info() != Eigen::Success)
    throw Error("SDP linear system factorization failed");

  std::vector<Matrix> xs(nb), ss(nb), lam(nb);
  for (std::size_t k = 0; k < nb; ++k) {
    xs[k] = Matrix::Zero(blocks[k].size(), blocks[k].size());
    ss[k] = xs[k];
    lam[k] = xs[k];
  }
  Vector pred = Vector::Zero(n);  // auxiliary prediction copy p
  Vector mu = Vector::Zero(n);
  double sigma = cfg.penalty;
  const double relax = cfg.relaxation;

  EngineResult res;
  long next_adapt = cfg.adapt_interval;
  for (long it = 1; it <= cfg.max_iterations; ++it) {
    // first block: constant-diagonal matrices via the Woodbury-reduced solve
    const Vector r = pred - mu;
    std::vector<Matrix> h = apply_adjoint(blocks, r);
    for (std::size_t k = 0; k < nb; ++k) {
      h[k] += project_constant_diagonal(ss[k] - lam[k]);
      h[k].diagonal().array() -= blocks[k].cost / sigma;
    }
    const Vector coef = chol.solve(apply_op(blocks, h));
    const std::vector<Matrix> corr = apply_adjoint(blocks, coef);
    for (std::size_t k = 0; k < nb; ++k) xs[k] = h[k] - corr[k];
    const Vector ax = apply_op(blocks, xs);

    // second block: PSD projection and loss prox on the relaxed point
    const std::vector<Matrix> ss_old = ss;
    const Vector pred_old = pred;
    std::vector<Matrix> hx(nb);
    for (std::size_t k = 0; k < nb; ++k) {
      hx[k] = relax * xs[k] + (1.0 - relax) * ss[k];
      ss[k] = project_psd(hx[k] + lam[k]);
    }
    const Vector hp = relax * ax + (1.0 - relax) * pred;
    pred = loss_prox(loss, Matrix(hp + mu), target, 1.0 / sigma, n).col(0);

    for (std::size_t k = 0; k < nb; ++k) lam[k] += hx[k] - ss[k];
    mu += hp - pred;

    // residuals
    double primal_sq = (ax - pred).squaredNorm();
    for (std::size_t k = 0; k < nb; ++k) primal_sq += (xs[k] - ss[k]).squaredNorm();
    std::vector<Matrix> dz = apply_adjoint(blocks, pred - pred_old);
    std::vector<Matrix> ydual = apply_adjoint(blocks, mu);
    for (std::size_t k = 0; k < nb; ++k) {
      dz[k] += project_constant_diagonal(ss[k] - ss_old[k]);
      ydual[k] += project_constant_diagonal(lam[k]);
    }
    const double primal = std::sqrt(primal_sq);
    const double dual = sigma * std::sqrt(squared_norm(dz));
    const double primal_scale = std::sqrt(std::max(
        squared_norm(xs) + ax.squaredNorm(), squared_norm(ss) + pred.squaredNorm()));
    const double dual_scale = sigma * std::sqrt(squared_norm(ydual));

    res.primal = primal / (1.0 + primal_scale);
    res.dual = dual / (1.0 + dual_scale);
    res.iterations = it;
    if (primal <= cfg.eps_abs + cfg.eps_rel * primal_scale &&
        dual <= cfg.eps_abs + cfg.eps_rel * dual_scale) {
      res.converged = true;
      break;
    }

    if (cfg.adapt_penalty && it >= next_adapt && res.dual > 0.0) {
      next_adapt = it + std::max(cfg.adapt_interval, it / 5);
      const double ratio = res.primal / res.dual;
      if (ratio > cfg.adapt_ratio || ratio * cfg.adapt_ratio < 1.0) {
        const double scale = std::clamp(std::sqrt(ratio), 1.0 / cfg.adapt_factor, cfg.adapt_factor);
        sigma *= scale;
        for (auto& l : lam) l /= scale;
        mu /= scale;
      }
    }
  }
  res.psd = std::move(ss);
  return res;
}

// Rescale a PSD matrix by diagonal congruence so its diagonal equals rho.
Matrix fix_diagonal(const Matrix& s, double rho) {
  const Eigen::Index k = s.rows();
  if (rho <= 1e-14) return Matrix::Zero(k, k);
  Vector scale(k);
  for (Eigen::Index j = 0; j < k; ++j) {
    const double djj = s(j, j);
    scale(j) = djj > 1e-300 ? std::sqrt(rho / djj) : 0.0;
  }
  Matrix out = scale.asDiagonal() * s * scale.asDiagonal();
  out = symmetrized(out);
  out.diagonal().setConstant(rho);
  return out;
}

std::vector<Block> bilinear_blocks(const Matrix& x, double beta) {
  // beta d rho = (beta / 2) tr(Q)
  return {Block{Block::Shape::coupled, 0.5 * beta, 1.0, &x}};
}

std::vector<Block> quadratic_blocks(const Matrix& x, double beta) {
  // beta d rho_k = beta tr(Z_k)
  return {Block{Block::Shape::full, beta, 1.0, &x},
          Block{Block::Shape::full, beta, -1.0, &x}};
}

}  // namespace

Matrix SdpSolution::z(std::size_t k) const {
  if (variant == SdpVariant::quadratic)
    throw InvalidInput("quadratic solutions have no Z block; use blocks[0/1]");
  return blocks.at(k).topRightCorner(d, d);
}

Matrix SdpSolution::v(std::size_t k) const {
  if (variant == SdpVariant::quadratic)
    throw InvalidInput("quadratic solutions have no V block");
  return blocks.at(k).topLeftCorner(d, d);
}

Matrix SdpSolution::w(std::size_t k) const {
  if (variant == SdpVariant::quadratic)
    throw InvalidInput("quadratic solutions have no W block");
  return blocks.at(k).bottomRightCorner(d, d);
}

Matrix sdp_predictions(const SdpSolution& sol, const Matrix& x) {
  if (x.cols() != sol.d) throw InvalidInput("data dimension does not match solution");
  const Eigen::Index n = x.rows();
  if (sol.variant == SdpVariant::quadratic) {
    const Matrix diff = sol.blocks.at(0) - sol.blocks.at(1);
    Matrix out(n, 1);
    out.col(0) = (x * diff).cwiseProduct(x).rowwise().sum();
    return out;
  }
  Matrix out(n, sol.outputs());
  for (Eigen::Index k = 0; k < sol.outputs(); ++k)
    out.col(k) = 2.0 * (x * sol.z(k)).cwiseProduct(x).rowwise().sum();
  return out;
}

double sdp_objective(const SdpSolution& sol, const Matrix& x, const Matrix& y) {
  double rho_sum = 0.0;
  for (double r : sol.rho) rho_sum += r;
  return loss_value(sol.loss, sdp_predictions(sol, x), y) +
         sol.beta * static_cast<double>(sol.d) * rho_sum;
}

SdpSolution solve_sdp(const SdpProblem& problem) {
  validate(problem);
  const auto start = std::chrono::steady_clock::now();
  const auto& cfg = problem.config;

  SdpSolution sol;
  sol.variant = problem.variant;
  sol.loss = problem.loss;
  sol.beta = problem.beta;
  sol.n = problem.x.rows();
  sol.d = problem.x.cols();
  sol.config = cfg;
  sol.converged = true;

  auto absorb = [&sol](const EngineResult& r) {
    sol.primal_residual = std::max(sol.primal_residual, r.primal);
    sol.dual_residual = std::max(sol.dual_residual, r.dual);
    sol.iterations = std::max(sol.iterations, r.iterations);
    sol.converged = sol.converged && r.converged;
  };

  switch (problem.variant) {
    case SdpVariant::bilinear: {
      const auto r = run_admm(bilinear_blocks(problem.x, problem.beta),
                              problem.y, problem.loss, cfg);
      absorb(r);
      const double rho = std::max(0.0, r.psd[0].diagonal().mean());
      sol.blocks.push_back(fix_diagonal(r.psd[0], rho));
      sol.rho.push_back(sol.blocks.back()(0, 0));
      break;
    }
    case SdpVariant::quadratic: {
      const auto r = run_admm(quadratic_blocks(problem.x, problem.beta),
                              problem.y, problem.loss, cfg);
      absorb(r);
      for (const Matrix& s : r.psd) {
        const double rho = std::max(0.0, s.diagonal().mean());
        sol.blocks.push_back(fix_diagonal(s, rho));
        sol.rho.push_back(sol.blocks.back()(0, 0));
      }
      break;
    }
    case SdpVariant::vector_output: {
      // The loss is separable over output columns, so the classes decouple.
      const auto blocks = bilinear_blocks(problem.x, problem.beta);
      for (Eigen::Index k = 0; k < problem.y.cols(); ++k) {
        const auto r = run_admm(blocks, problem.y.col(k), problem.loss, cfg);
        absorb(r);
        const double rho = std::max(0.0, r.psd[0].diagonal().mean());
        sol.blocks.push_back(fix_diagonal(r.psd[0], rho));
        sol.rho.push_back(sol.blocks.back()(0, 0));
      }
      break;
    }
  }

  sol.predictions = sdp_predictions(sol, problem.x);
  sol.objective = sdp_objective(sol, problem.x, problem.y);
  sol.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  if (!sol.converged && !cfg.allow_unconverged)
    throw ConvergenceError("SDP solver did not converge within " +
                               std::to_string(cfg.max_iterations) + " iterations",
                           sol.primal_residual, sol.dual_residual, sol.iterations);
  return sol;
}

double lower_bound(const SdpSolution& solution) {
  if (!solution.converged)
    throw InvalidInput("lower bound requested from an unconverged SDP solution");
  return solution.objective;
}

InvariantReport check_invariants(const SdpSolution& sol) {
  InvariantReport rep;
  rep.min_eigenvalue = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < sol.blocks.size(); ++k) {
    const Matrix& b = sol.blocks[k];
    rep.min_eigenvalue = std::min(rep.min_eigenvalue, min_eigenvalue(b));
    for (Eigen::Index j = 0; j < b.rows(); ++j)
      rep.max_diag_error =
          std::max(rep.max_diag_error, std::abs(b(j, j) - sol.rho.at(k)));
  }
  rep.ok = rep.min_eigenvalue >= -sol.config.psd_tol &&
           rep.max_diag_error <= sol.config.diag_tol;
  return rep;
}

}  // namespace qsdp
