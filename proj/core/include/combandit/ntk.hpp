#pragma once

#include <string>
#include <vector>

#include "combandit/score_net.hpp"

namespace combandit {

/// 2 E[relu(y) relu(z)] for (y, z) ~ N(0, [[a, c], [c, b]]).
double relu_kernel(double a, double b, double c);
/// 2 E[relu'(y) relu'(z)] for the same law.
double relu_derivative_kernel(double a, double b, double c);

/// Layer-by-layer values for one pair of contexts.
struct NtkTrace {
  std::vector<double> sigma;       // Sigma^(l)_{ij}, l = 1..L
  std::vector<double> sigma_ii;    // Sigma^(l)_{ii}
  std::vector<double> sigma_jj;    // Sigma^(l)_{jj}
  std::vector<double> h_tilde;     // H~^(l)_{ij}
  double h = 0.0;
};

NtkTrace ntk_pair(std::span<const double> xi, std::span<const double> xj, int depth);

/// NTK matrix over the columns of `contexts` (unit-norm). Symmetric by
/// construction.
Matrix ntk_matrix(const Matrix& contexts, int depth);

struct EffDimReport {
  double effective_dim = 0.0;
  double log_det = 0.0;  // log det(I + H / lambda)
  double lambda = 0.0;
  long long horizon = 0;
  int num_arms = 0;
  double min_eigenvalue = 0.0;  // lambda_0 estimate
  int n = 0;
};

EffDimReport effective_dimension(const Matrix& h, double lambda, long long horizon, int num_arms);

struct WidthClause {
  std::string name;
  double log_required = 0.0;  // log of the right-hand side
  double log_actual = 0.0;    // log of the left-hand side
  bool passed = false;
};

/// Advisory over-parameterization check with unit constant C.
struct WidthReport {
  double constant = 1.0;
  std::vector<WidthClause> clauses;
  std::string binding;  // clause with the largest shortfall (or smallest margin)
  [[nodiscard]] bool passed() const;
};

WidthReport width_report(long long horizon, int num_arms, int k, int depth, double lambda,
                         double lambda0, double delta, double width);

enum class EnvelopeKind { cnucb, cnts };

/// c sqrt(d t max(d, K)) or c d sqrt(t K) for t = 0..T.
std::vector<double> regret_envelope(EnvelopeKind kind, double eff_dim, int horizon, int k,
                                    double c = 1.0);

}  // namespace combandit
