#pragma once

#include <cmath>
#include <cstdlib>
#include <random>
#include <string>
#include <vector>

#include <doctest.h>

#include "evactrack/errors.hpp"

#define CHECK_ERROR(expr, code_)                          \
  do {                                                    \
    bool caught_ = false;                                 \
    try {                                                 \
      expr;                                               \
    } catch (const evactrack::Error& e_) {                \
      caught_ = true;                                     \
      CHECK(e_.code() == evactrack::ErrorCode::code_);    \
    }                                                     \
    CHECK_MESSAGE(caught_, "expected error " #code_ " from: " #expr); \
  } while (0)

namespace testsupport {

// Reference polynomial fit: normal equations solved by Gaussian elimination
// with partial pivoting. Deliberately has nothing in common with the library
// implementation.
inline std::vector<double> polyfit_normal(const std::vector<std::pair<double, double>>& pts,
                                          int degree) {
  const int n = degree + 1;
  std::vector<std::vector<double>> a(n, std::vector<double>(n + 1, 0.0));
  for (const auto& [x, y] : pts) {
    std::vector<double> powers(2 * degree + 1, 1.0);
    for (int k = 1; k <= 2 * degree; ++k) powers[k] = powers[k - 1] * x;
    for (int r = 0; r < n; ++r) {
      for (int c = 0; c < n; ++c) a[r][c] += powers[r + c];
      a[r][n] += y * powers[r];
    }
  }
  for (int col = 0; col < n; ++col) {
    int pivot = col;
    for (int r = col + 1; r < n; ++r)
      if (std::abs(a[r][col]) > std::abs(a[pivot][col])) pivot = r;
    std::swap(a[col], a[pivot]);
    for (int r = 0; r < n; ++r) {
      if (r == col) continue;
      const double f = a[r][col] / a[col][col];
      for (int c = col; c <= n; ++c) a[r][c] -= f * a[col][c];
    }
  }
  std::vector<double> coeffs(n);
  for (int r = 0; r < n; ++r) coeffs[r] = a[r][n] / a[r][r];
  return coeffs;
}

inline double eval_poly(const std::vector<double>& coeffs, double x) {
  double acc = 0.0;
  for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it) acc = acc * x + *it;
  return acc;
}

}  // namespace testsupport
