#include "combandit/ntk.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "combandit/errors.hpp"

namespace combandit {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kUnitTol = 1e-6;
constexpr double kPsdTol = 1e-8;

double correlation(double a, double b, double c) {
  const double scale = std::sqrt(a * b);
  if (!(scale > 0.0)) return 0.0;
  return std::clamp(c / scale, -1.0, 1.0);
}

void check_unit(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  if (std::abs(std::sqrt(s) - 1.0) > kUnitTol) {
    throw ContractError("NTK contexts must be unit norm, got norm " + std::to_string(std::sqrt(s)));
  }
}

}  // namespace

double relu_kernel(double a, double b, double c) {
  const double rho = correlation(a, b, c);
  return std::sqrt(a * b) / kPi * (std::sqrt(1.0 - rho * rho) + (kPi - std::acos(rho)) * rho);
}

double relu_derivative_kernel(double a, double b, double c) {
  const double rho = correlation(a, b, c);
  return (kPi - std::acos(rho)) / kPi;
}

NtkTrace ntk_pair(std::span<const double> xi, std::span<const double> xj, int depth) {
  if (depth < 2) throw ConfigError("NTK depth must be at least 2");
  if (xi.size() != xj.size()) throw ContractError("NTK contexts differ in dimension");
  check_unit(xi);
  check_unit(xj);
  double sij = 0.0;
  double sii = 0.0;
  double sjj = 0.0;
  for (std::size_t k = 0; k < xi.size(); ++k) {
    sij += xi[k] * xj[k];
    sii += xi[k] * xi[k];
    sjj += xj[k] * xj[k];
  }
  NtkTrace out;
  double ht = sij;
  out.sigma.push_back(sij);
  out.sigma_ii.push_back(sii);
  out.sigma_jj.push_back(sjj);
  out.h_tilde.push_back(ht);
  for (int l = 1; l < depth; ++l) {
    const double dot = relu_derivative_kernel(sii, sjj, sij);
    const double next_ij = relu_kernel(sii, sjj, sij);
    const double next_ii = relu_kernel(sii, sii, sii);
    const double next_jj = relu_kernel(sjj, sjj, sjj);
    sij = next_ij;
    sii = next_ii;
    sjj = next_jj;
    ht = ht * dot + sij;
    out.sigma.push_back(sij);
    out.sigma_ii.push_back(sii);
    out.sigma_jj.push_back(sjj);
    out.h_tilde.push_back(ht);
  }
  out.h = 0.5 * (ht + sij);
  return out;
}

Matrix ntk_matrix(const Matrix& contexts, int depth) {
  const Eigen::Index n = contexts.cols();
  Matrix h(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Vector xi = contexts.col(i);
    for (Eigen::Index j = 0; j <= i; ++j) {
      const Vector xj = contexts.col(j);
      const double v = ntk_pair(as_span(xi), as_span(xj), depth).h;
      h(i, j) = v;
      h(j, i) = v;
    }
  }
  return h;
}

EffDimReport effective_dimension(const Matrix& h, double lambda, long long horizon,
                                 int num_arms) {
  if (!(lambda > 0.0)) throw ConfigError("effective dimension needs lambda > 0");
  if (horizon < 1 || num_arms < 1) throw ConfigError("effective dimension needs T * N >= 1");
  if (h.rows() != h.cols() || h.rows() == 0) throw ContractError("NTK matrix must be square");
  Eigen::SelfAdjointEigenSolver<Matrix> eig(h, Eigen::EigenvaluesOnly);
  if (eig.info() != Eigen::Success) throw DataError("NTK eigen-decomposition failed");
  const Vector& ev = eig.eigenvalues();
  EffDimReport r;
  r.lambda = lambda;
  r.horizon = horizon;
  r.num_arms = num_arms;
  r.n = static_cast<int>(h.rows());
  r.min_eigenvalue = ev.minCoeff();
  if (r.min_eigenvalue < -kPsdTol) {
    throw DataError("NTK matrix is not PSD: smallest eigenvalue " +
                    std::to_string(r.min_eigenvalue));
  }
  for (Eigen::Index i = 0; i < ev.size(); ++i) r.log_det += std::log1p(std::max(ev[i], 0.0) / lambda);
  const double tn = static_cast<double>(horizon) * num_arms;
  r.effective_dim = r.log_det / std::log1p(tn / lambda);
  return r;
}

bool WidthReport::passed() const {
  return std::all_of(clauses.begin(), clauses.end(), [](const WidthClause& c) { return c.passed; });
}

WidthReport width_report(long long horizon, int num_arms, int k, int depth, double lambda,
                         double lambda0, double delta, double width) {
  if (horizon < 1 || num_arms < 1 || k < 1 || depth < 1 || !(lambda > 0.0) ||
      !(lambda0 > 0.0) || !(delta > 0.0) || !(width > 0.0)) {
    throw ConfigError("width report needs positive inputs");
  }
  const double t = static_cast<double>(horizon);
  const double n = num_arms;
  const double kk = k;
  const double l = depth;
  const double log_c = std::log(1.0);  // C = 1
  WidthReport rep;

  const auto clause = [&](std::string name, double log_required, double log_actual) {
    WidthClause c{std::move(name), log_required, log_actual, log_actual >= log_required};
    rep.clauses.push_back(std::move(c));
  };

  // Work in logs; the polynomial terms overflow doubles at realistic T.
  const double log_m = std::log(width);
  const double inner1 = std::log(t * n * l * l / delta);
  const double log_c1 = -1.5 * std::log(l) - 0.5 * std::log(kk) + 0.5 * std::log(lambda) +
                        1.5 * std::log(std::max(inner1, 1e-300));
  clause("m >= L^-3/2 K^-1/2 lambda^1/2 log(TNL^2/delta)^3/2", log_c + log_c1, log_m);

  const double inner2 = std::log(t * t * n * n * l / delta);
  const double log_c2 = 6.0 * (std::log(t) + std::log(n) + std::log(l)) +
                        std::log(std::max(inner2, 1e-300)) +
                        std::max(-4.0 * std::log(lambda0), 0.0);
  clause("m >= T^6 N^6 L^6 log(T^2 N^2 L/delta) max(lambda0^-4, 1)", log_c + log_c2, log_m);

  const auto log_sum = [](double a, double b) {
    const double hi = std::max(a, b);
    return hi + std::log1p(std::exp(std::min(a, b) - hi));
  };
  const double la = 4.0 * std::log(t * kk) + 21.0 * std::log(l) - 4.0 * std::log(lambda) +
                    6.0 * std::log1p(std::sqrt(t / lambda));
  const double lb = std::log(t * kk) + 12.0 * std::log(l) - std::log(lambda);
  const double lc = 4.0 * std::log(t * kk) + 18.0 * std::log(l) - 10.0 * std::log(lambda) +
                    6.0 * std::log(lambda + t * l);
  // m / log(m)^3 is not monotone below m = e^3; use its lower envelope
  // inf_{m' >= m} m' / log(m')^3 so the check stays monotone in m.
  double log_lhs = 0.0;
  if (width > std::exp(3.0)) {
    log_lhs = log_m - 3.0 * std::log(log_m);
  } else {
    log_lhs = 3.0 - 3.0 * std::log(3.0);
  }
  clause("m / log(m)^3 >= T^4 K^4 L^21 lambda^-4 (1 + sqrt(T/lambda))^6 + T K L^12 / lambda + "
         "T^4 K^4 L^18 lambda^-10 (lambda + T L)^6",
         log_c + log_sum(log_sum(la, lb), lc), log_lhs);

  double worst = -std::numeric_limits<double>::infinity();
  for (const auto& c : rep.clauses) {
    const double deficit = c.log_required - c.log_actual;
    if (deficit > worst) {
      worst = deficit;
      rep.binding = c.name;
    }
  }
  return rep;
}

std::vector<double> regret_envelope(EnvelopeKind kind, double eff_dim, int horizon, int k,
                                    double c) {
  if (!(eff_dim > 0.0)) throw ConfigError("regret envelope needs a positive effective dimension");
  if (horizon < 0 || k < 1) throw ConfigError("regret envelope needs T >= 0 and K >= 1");
  std::vector<double> out(static_cast<std::size_t>(horizon) + 1);
  for (int t = 0; t <= horizon; ++t) {
    const double tt = t;
    out[static_cast<std::size_t>(t)] =
        kind == EnvelopeKind::cnucb ? c * std::sqrt(eff_dim * tt * std::max(eff_dim, double(k)))
                                    : c * eff_dim * std::sqrt(tt * k);
  }
  return out;
}

}  // namespace combandit
