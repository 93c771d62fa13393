#pragma once

namespace biortho::haarint {

/// Replica-symmetric overlap summary for one signal block: s11 is the
/// self-overlap of the difference vectors, s12 the cross-replica overlap.
struct OverlapPair {
  double s11 = 0.0;
  double s12 = 0.0;
};

/// Large-M limit of M^{-1} log E exp(c x1' O1' O2 x2) over independent
/// Haar orthogonal O1, O2 with |x_i|^2 = M r_i:
///   F(r1,r2;c) = sqrt(1+4c^2 r1 r2)/2 - log((1+sqrt(1+4c^2 r1 r2))/2)/2 - 1/2.
/// Requires r1, r2 > 0.
double f_haar(double r1, double r2, double c);

/// Asymptotic form sqrt(c^2 r1 r2) - log(c^2 r1 r2)/4, valid for
/// c^2 r1 r2 >> 1.  Requires c^2 r1 r2 > 0.
double f_haar_asymptotic(double r1, double r2, double c);

/// Finite-M oracle: evaluates M^{-1} log E exp(c u1'u2) for u_i uniform on
/// spheres of radius sqrt(M r_i), reduced to the 1-D integral over the
/// inner-product cosine with density (1-t^2)^{(M-3)/2}.  Adaptive
/// quadrature with a log-sum-exp shift at the integrand maximum.
/// Requires M >= 3, r1, r2 > 0.
double i_m_quadrature(int m, double r1, double r2, double c);

/// RS decomposition of the replicated Haar expectation (u replicas):
///   F(s11-s12+u*s12 per block; c) + (u-1) F(s11-s12 per block; c).
/// Requires s11 >= s12 >= 0 and s11 - s12 + u*s12 >= 0 for both blocks.
double lemma2_value(const OverlapPair& block1, const OverlapPair& block2,
                    double c, int u);

}  // namespace biortho::haarint
