#pragma once

// Randomized checks of the perturbation, tensor and concentration
// inequalities that the rate analysis rests on.

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "rfkpca/linalg.hpp"
#include "rfkpca/rng.hpp"

namespace rfkpca {

struct PerturbationCase {
  SymMatrix A;  // PSD, simple eigenvalues
  SymMatrix B;  // symmetric, A + B PSD
  std::size_t D = 1;
  double delta_D = 0.0;
};

struct BoundReport {
  double lhs_i = 0, rhs_i = 0, lhs_ii = 0, rhs_ii = 0, trivial_rhs = 0;
  bool holds_i = false, holds_ii = false;
};

/// lhs <= rhs + 1e-9 (1 + rhs)
bool within_slack(double lhs, double rhs) noexcept;

/// Builds a case from A, B and D, filling delta_D and validating the
/// hypotheses (precondition error otherwise).
PerturbationCase make_case(SymMatrix A, SymMatrix B, std::size_t D);

/// Samples A = Q diag(lambda) Q^T with a gapped spectrum and a random
/// symmetric B rescaled to ||B||_HS = rho delta_D / 2, rho in (0, 1].
PerturbationCase generate_case(Rng& rng, std::size_t dim, std::size_t D);

BoundReport perturb_check(const PerturbationCase& c);

struct TensorCheck {
  double lhs = 0, rhs = 0;
  bool holds = false;
};

TensorCheck tensor_lemma_check(const std::vector<double>& f, const std::vector<double>& g);

/// Operator, Hilbert-Schmidt and trace norms of f f^T all equal |f|^2.
bool rank_one_norms_check(const std::vector<double>& f);

enum class BernsteinKind { cov_centered_mean, cov_zero_mean, feature_op };

double bernstein_bound(BernsteinKind kind, double eps_or_kappa, double tau, std::size_t s_or_m);

/// Generic Hilbert-space Bernstein threshold 2 B tau / n + sqrt(2 theta^2 tau / n).
double bernstein_threshold(double B, double theta, double tau, std::size_t n);

enum class TailExperiment { cov_deviation, feature_op_deviation };

struct McTailConfig {
  double tau = 2.0;
  std::size_t sample_size = 256;
  std::size_t replications = 200;
  std::uint64_t seed = 1;
  std::size_t atoms = 128;
  std::size_t rank = 20;
  double alpha = 2.0;  // lambda_t = t^-alpha
  unsigned threads = 1;
};

struct McTailResult {
  double exceed_fraction = 0;
  double bound = 0;
  double prob_bound = 0;
  double max_deviation = 0;
  double median_deviation = 0;
  std::vector<double> deviations;
};

McTailResult mc_tail(TailExperiment experiment, const McTailConfig& config);

struct SuiteReport {
  std::string name;
  std::size_t cases = 0;
  std::size_t violations = 0;
  double min_margin = 0;  // min over checks of rhs - lhs
  nlohmann::json extra = nlohmann::json::object();
};

nlohmann::json to_json(const SuiteReport& r);

/// Perturbation cases with dim in [min_dim, max_dim] and D in [1, dim/2].
SuiteReport perturbation_suite(std::size_t cases, std::uint64_t seed, std::size_t min_dim = 4,
                               std::size_t max_dim = 20);
/// Eigenvalue, operator-monotone power and Lipschitz power inequalities.
SuiteReport operator_inequality_suite(std::size_t trials, std::uint64_t seed);
SuiteReport tensor_lemma_suite(std::size_t trials, std::uint64_t seed, std::size_t dim = 10);
SuiteReport rank_one_suite(std::size_t trials, std::uint64_t seed, std::size_t dim = 50);

/// Random orthogonal matrix (QR of a Gaussian matrix).
Matrix random_orthogonal(Rng& rng, std::size_t n);
/// Random positive semidefinite matrix G G^T / n.
SymMatrix random_psd(Rng& rng, std::size_t n);
/// Random symmetric matrix with standard normal entries on and above the diagonal.
SymMatrix random_symmetric(Rng& rng, std::size_t n);

}  // namespace rfkpca
