#include "biortho/randmat.hpp"

#include <stdexcept>

namespace biortho::randmat {

Eigen::VectorXd SignalVector::concatenated() const {
  Eigen::VectorXd x(block1.size() + block2.size());
  x << block1, block2;
  return x;
}

Eigen::MatrixXd sample_haar_orthogonal(int m, RandomStream& rng) {
  if (m < 1) throw std::domain_error("sample_haar_orthogonal: need M >= 1");
  Eigen::MatrixXd gaussian(m, m);
  for (int j = 0; j < m; ++j)
    for (int i = 0; i < m; ++i) gaussian(i, j) = rng.gaussian();
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(gaussian);
  Eigen::MatrixXd q = qr.householderQ();
  const Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
  // uncorrected QR is not Haar: fix the sign ambiguity column by column
  for (int j = 0; j < m; ++j)
    if (r(j, j) < 0.0) q.col(j) = -q.col(j);
  return q;
}

Eigen::MatrixXd sample_gaussian_dictionary(int m, int n, RandomStream& rng) {
  if (m < 1 || n < 1)
    throw std::domain_error("sample_gaussian_dictionary: need positive dimensions");
  const double scale = 1.0 / std::sqrt(static_cast<double>(m));
  Eigen::MatrixXd d(m, n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < m; ++i) d(i, j) = scale * rng.gaussian();
  return d;
}

SignalVector sample_signal(int m, double rho1, double rho2, RandomStream& rng) {
  if (m < 1) throw std::domain_error("sample_signal: need M >= 1");
  if (!(rho1 >= 0.0 && rho1 <= 1.0) || !(rho2 >= 0.0 && rho2 <= 1.0))
    throw std::domain_error("sample_signal: densities must lie in [0,1]");
  SignalVector s;
  s.block1 = Eigen::VectorXd::Zero(m);
  s.block2 = Eigen::VectorXd::Zero(m);
  for (int i = 0; i < m; ++i) {
    if (rng.uniform() < rho1) {
      s.block1(i) = rng.gaussian();
      s.support1.push_back(i);
    }
  }
  for (int i = 0; i < m; ++i) {
    if (rng.uniform() < rho2) {
      s.block2(i) = rng.gaussian();
      s.support2.push_back(i);
    }
  }
  return s;
}

ProblemInstance build_instance(int m, const replica::SparsityProfile& profile,
                               DictionaryKind kind, std::uint64_t seed) {
  if (m < 1) throw std::domain_error("build_instance: need M >= 1");
  ProblemInstance inst;
  inst.kind = kind;
  inst.seed = seed;

  RandomStream signal_stream = RandomStream::derive(seed, {2});
  inst.signal = sample_signal(m, profile.rho1, profile.rho2, signal_stream);

  if (kind == DictionaryKind::bi_orthogonal) {
    RandomStream s1 = RandomStream::derive(seed, {0});
    RandomStream s2 = RandomStream::derive(seed, {1});
    inst.dictionary.resize(m, 2 * m);
    inst.dictionary.leftCols(m) = sample_haar_orthogonal(m, s1);
    inst.dictionary.rightCols(m) = sample_haar_orthogonal(m, s2);
  } else {
    RandomStream s = RandomStream::derive(seed, {0});
    inst.dictionary = sample_gaussian_dictionary(m, 2 * m, s);
  }

  inst.observation = inst.dictionary.leftCols(m) * inst.signal.block1 +
                     inst.dictionary.rightCols(m) * inst.signal.block2;
  return inst;
}

double orthogonality_defect(const Eigen::MatrixXd& o) {
  const Eigen::MatrixXd gram = o.transpose() * o;
  return (gram - Eigen::MatrixXd::Identity(o.cols(), o.cols()))
      .cwiseAbs()
      .maxCoeff();
}

}  // namespace biortho::randmat
