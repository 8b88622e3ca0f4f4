#ifndef ANISOVA_LSQR_HPP_
#define ANISOVA_LSQR_HPP_

#include <span>
#include <vector>

#include "anisova/fourier_operator.hpp"

namespace anisova {

struct LsqrResult {
  CoefficientVector x;
  int iterations = 0;
  // Estimates from the bidiagonalisation recurrences.
  double residual_norm = 0.0;
  double normal_residual_norm = 0.0;
  double operator_norm = 0.0;
  bool converged = false;
};

// Paige-Saunders LSQR for min ||A x - b||. Stops when ||r|| <= tol ||b||
// (consistent systems) or ||A^* r|| <= tol ||A|| ||r||, or after max_iter.
LsqrResult Lsqr(const FourierOperator& op, std::span<const Complex> b,
                int max_iter, double tol);

}  // namespace anisova

#endif  // ANISOVA_LSQR_HPP_
