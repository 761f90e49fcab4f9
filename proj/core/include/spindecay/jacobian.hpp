#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <json.hpp>
#include <string>
#include <utility>
#include <vector>

#include "spindecay/tree.hpp"

namespace spindecay {

// φ with Φ(x) = 1 / (√x (1 − θx)); θ = 1 for colorings, 1 − β for Potts.
struct Potential {
  double theta = 1.0;
  bool potts = false;

  static Potential coloring() { return {1.0, false}; }
  static Potential potts_model(double beta) { return {1.0 - beta, true}; }

  double phi(double x) const;
  double inverse(double y) const;
  double deriv(double x) const;
};

struct JacobianBlocks {
  std::vector<Eigen::MatrixXd> blocks;  // one q_r x q_r block per free child
  std::vector<int> colors;              // root-list colors indexing rows and columns
  std::vector<int> kept;                // input index of each block's child
  int d_r = 0;
  int Delta_r = 0;
  int q_r = 0;
};

bool is_point_mass(const Dist& p, double tol = 1e-15);

// (J_i g) = θ (g gᵀ − diag g) diag(1 − θ p_i)⁻¹
JacobianBlocks jacobian_plain(const std::vector<Dist>& children, const std::vector<int>& root_list,
                              double theta = 1.0);
// (J_i g^φ) = −θ diag(1 − θg)⁻¹ (I − √g√gᵀ) diag(√(g ⊙ p_i))
JacobianBlocks jacobian_phi(const Potential& pot, const std::vector<Dist>& children,
                            const std::vector<int>& root_list);

struct NormInterval {
  double lower = 0;
  double upper = 0;
};

NormInterval norm_star_star(const std::vector<Eigen::MatrixXd>& blocks, std::uint64_t seed = 0,
                            int restarts = 20);
NormInterval norm_weighted(const std::vector<Eigen::MatrixXd>& blocks, double w_root,
                           const std::vector<double>& w_children, std::uint64_t seed = 0,
                           int restarts = 20);
// ‖[J_1 … J_d]‖₂
double spectral_norm_concat(const std::vector<Eigen::MatrixXd>& blocks);
double lambda_max_symmetric(const Eigen::MatrixXd& m);
// Rayleigh quotient estimate; approaches λ_max from below
double power_iteration_lambda_max(const Eigen::MatrixXd& m, double tol = 1e-10,
                                  int max_iter = 10000);

struct WeightEntry {
  int q_v = 0;
  int d_v = 0;
  int Delta_v = 0;
  double xi = 1;
  double zeta = 0;
  double w = 1;
  double cap = 1;
};

struct WeightScheme {
  std::vector<WeightEntry> entries;
};

// f(x) = (1/x + 1) ln(1 + x) − 1, so ζ = f(ξ/(q−1))
double entropy_f(double x);
// s(x) = (1/x) ln(1/(1−x)) − 1
double s_func(double x);

WeightEntry weight_coloring(int q_v, int d_v, double gamma);
WeightEntry weight_potts(int q, double beta, int Delta_v);
WeightScheme weight_scheme_coloring(const std::vector<int>& q_map, const std::vector<int>& d_map,
                                    double gamma);
WeightScheme weight_scheme_potts(int q, double beta, const std::vector<int>& Delta_map);

double capped_product_bound(int q, double gamma);
double amortized_bound(const std::vector<std::pair<int, int>>& children_params, int q,
                       double gamma);
double l2_bound_formula(int q_r, double gamma, double xi_root,
                        const std::vector<double>& children_zetas);

// closed-form bounds on the squared norm
double unweighted_bound_sq(int q_v, double gamma);
double weighted_bound_sq(int q_v, int d_v, double gamma);
double potts_bound_sq(int q, double beta, int Delta_r);
double eps_delta_rate(double eps);

enum class Family { coloring, coloring_unweighted, potts };
enum class Mode { strong, weak };

struct FamilySpec {
  Family family = Family::coloring;
  int q = 6;
  int Delta = 3;
  double beta = 0.0;
};

struct ContractionReport {
  FamilySpec spec;
  Mode mode = Mode::strong;
  double gamma = 0;
  long long samples = 0;
  double sampled_max_norm = 0;
  double worst_lower = 0;
  double analytic_bound = 0;
  double analytic_bound_sq = 0;
  double delta_hat = 0;
  long long bound_violations = 0;
  double max_bound_ratio = 0;  // max over samples of upper² / per-configuration bound
  int configurations = 0;
  nlohmann::json worst_input;
  std::vector<std::string> warnings;

  nlohmann::json to_json() const;
};

std::string family_name(Family f);
Family parse_family(const std::string& s);
std::string mode_name(Mode m);
Mode parse_mode(const std::string& s);

ContractionReport certify_contraction(const FamilySpec& spec, Mode mode, long long samples,
                                      std::uint64_t seed, int threads = 1);

}  // namespace spindecay
