#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "biortho/replica.hpp"
#include "biortho/rng.hpp"

namespace biortho::randmat {

enum class DictionaryKind { bi_orthogonal, iid_gaussian };

/// Sparse source split into the two length-M blocks, with the support
/// indices recorded per block.  Off-support entries are exactly zero.
struct SignalVector {
  Eigen::VectorXd block1;
  Eigen::VectorXd block2;
  std::vector<int> support1;
  std::vector<int> support2;

  Eigen::VectorXd concatenated() const;
};

struct ProblemInstance {
  DictionaryKind kind;
  Eigen::MatrixXd dictionary;   // M x 2M
  SignalVector signal;
  Eigen::VectorXd observation;  // y = D x
  std::uint64_t seed;
};

/// Haar-distributed orthogonal M x M matrix: QR of a Gaussian matrix with
/// each Q column flipped to the sign of the matching R diagonal entry.
Eigen::MatrixXd sample_haar_orthogonal(int m, RandomStream& rng);

/// M x N matrix of IID normals with variance 1/M (unit-norm columns in
/// expectation, matching the orthogonal blocks).
Eigen::MatrixXd sample_gaussian_dictionary(int m, int n, RandomStream& rng);

/// Bernoulli-Gaussian source: each block-i component is zero with
/// probability 1-rho_i, standard normal otherwise.  The support size is
/// Binomial(M, rho_i), not fixed.
SignalVector sample_signal(int m, double rho1, double rho2, RandomStream& rng);

/// Assemble dictionary, planted signal and observation from a seed.  The
/// dictionary blocks and the signal use sub-streams derived from the seed,
/// so instances are reproducible bit for bit.
ProblemInstance build_instance(int m, const replica::SparsityProfile& profile,
                               DictionaryKind kind, std::uint64_t seed);

/// max |O'O - I|, for orthogonality checks.
double orthogonality_defect(const Eigen::MatrixXd& o);

}  // namespace biortho::randmat
