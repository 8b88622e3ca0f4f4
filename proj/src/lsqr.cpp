#include "anisova/lsqr.hpp"

#include <cmath>

namespace anisova {
namespace {

double Norm(std::span<const Complex> v) {
  double s = 0.0;
  for (const auto& z : v) s += std::norm(z);
  return std::sqrt(s);
}

void Scale(std::vector<Complex>& v, double a) {
  for (auto& z : v) z *= a;
}

}  // namespace

LsqrResult Lsqr(const FourierOperator& op, std::span<const Complex> b,
                int max_iter, double tol) {
  LsqrResult res;
  res.x.assign(op.cols(), Complex(0.0));

  std::vector<Complex> u(b.begin(), b.end());
  double beta = Norm(u);
  const double bnorm = beta;
  res.residual_norm = beta;
  if (beta == 0.0) {
    res.converged = true;
    return res;
  }
  Scale(u, 1.0 / beta);

  std::vector<Complex> v = op.adjoint(u);
  double alpha = Norm(v);
  if (alpha == 0.0) {
    // b is orthogonal to the range; x = 0 is optimal.
    res.converged = true;
    return res;
  }
  Scale(v, 1.0 / alpha);

  std::vector<Complex> w = v;
  double phibar = beta;
  double rhobar = alpha;
  double anorm2 = 0.0;

  for (int it = 1; it <= max_iter; ++it) {
    // u = A v - alpha u
    std::vector<Complex> av = op.forward(v);
    for (std::size_t i = 0; i < u.size(); ++i) u[i] = av[i] - alpha * u[i];
    beta = Norm(u);
    anorm2 += alpha * alpha + beta * beta;
    if (beta > 0.0) {
      Scale(u, 1.0 / beta);
      // v = A^* u - beta v
      std::vector<Complex> atu = op.adjoint(u);
      for (std::size_t k = 0; k < v.size(); ++k) v[k] = atu[k] - beta * v[k];
      alpha = Norm(v);
      if (alpha > 0.0) Scale(v, 1.0 / alpha);
    } else {
      alpha = 0.0;
    }

    const double rho = std::hypot(rhobar, beta);
    const double c = rhobar / rho;
    const double s = beta / rho;
    const double theta = s * alpha;
    rhobar = -c * alpha;
    const double phi = c * phibar;
    phibar = s * phibar;

    const double t1 = phi / rho;
    const double t2 = -theta / rho;
    for (std::size_t k = 0; k < w.size(); ++k) {
      res.x[k] += t1 * w[k];
      w[k] = v[k] + t2 * w[k];
    }

    res.iterations = it;
    res.residual_norm = phibar;
    res.normal_residual_norm = phibar * alpha * std::abs(c);
    res.operator_norm = std::sqrt(anorm2);

    const bool consistent = phibar <= tol * bnorm;
    const bool normal = res.normal_residual_norm <=
                        tol * res.operator_norm * phibar;
    if (consistent || normal || alpha == 0.0) {
      res.converged = true;
      break;
    }
  }
  return res;
}

}  // namespace anisova
