#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <random>
#include <utility>
#include <vector>

#include "foagp/data.hpp"
#include "foagp/effects.hpp"

namespace foagp {

/// Portable random stream: std::mt19937_64 (output fixed by the standard) with 53-bit
/// uniforms and Box-Muller normals, so samples are identical across platforms per seed.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform();  // [0, 1)
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal();
  std::uint64_t next() { return engine_(); }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

enum class Example { Example1, Example2, SyntheticGrid };

struct SimSpec {
  Example example = Example::Example1;
  Eigen::Index n_samples = 2000;
  Eigen::Index m = 50;  // grid inputs
  Eigen::Index n = 100; // grid positions
  Eigen::Index dims = 2;  // grid input dimension
  std::optional<double> noise_sd;  // unset: the example's default
  std::uint64_t seed = 0;

  double effective_noise() const;
  void validate() const;
};

/// f = 1 + 2t + x1 t + 2 x2 t + x1 x2 t.
double example1_function(double x1, double x2, double t);
/// f = (t + 1) exp(-x1 t) sin(2 pi t / x2).
double example2_function(double x1, double x2, double t);
/// Smooth grid test function on [0,1]^d x [0,1].
double grid_test_function(const Eigen::VectorXd& x, double t);

/// Example 1: (x1, x2, t) iid N(0, 1), noise sd 0.1 by default.
Dataset gen_example1(const SimSpec& spec);
/// Example 2: uniform on [1,2] x [0.9,1.1] x [0.2,2.0], noise sd 0.01 by default.
Dataset gen_example2(const SimSpec& spec);
/// Example 1 or 2 by spec.example.
Dataset gen_example(const SimSpec& spec);
/// m Latin-hypercube inputs in [0,1]^d, n equispaced positions on [0,1].
GridDataset gen_grid(const SimSpec& spec);

/// First 4/5 of the samples for training, the rest for testing.
std::pair<Dataset, Dataset> split_train_test(const Dataset& data);

/// Ground truth of a simulation example.
struct TruthBundle {
  Example example = Example::Example1;
  std::vector<EffectIndex> subsets;       // {1}, {2}, {1,2}
  Eigen::VectorXd ecv_reported;           // values published for the example
  Eigen::VectorXd ecv_computed;           // closed form (Example 1) or quadrature (Example 2)
  Eigen::VectorXd t_grid;                 // 50 positions over the support of t
  Eigen::MatrixXd local_variance;         // t_grid x subsets
  Eigen::MatrixXd mean_effect;            // t_grid x 1, f0(t)
};

/// Throws Unsupported for SyntheticGrid.
TruthBundle theoretical_truth(Example example);

/// True effect f_u(x_u, t) (u may be empty for f0), and true local variance V_u(t).
double truth_effect(Example example, const EffectIndex& u, const Eigen::VectorXd& x, double t);
double truth_local_variance(Example example, const EffectIndex& u, double t);

/// Support of t used for ECV averages: Example 2 is [0.2, 2]; Example 1 is unbounded.
std::pair<double, double> example_t_support(Example example);

}  // namespace foagp
