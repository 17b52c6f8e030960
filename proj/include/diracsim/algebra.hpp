#pragma once
#include <vector>

#include "diracsim/types.hpp"

namespace diracsim {

// Standard Dirac matrices: alpha_j = [[0, sigma_j], [sigma_j, 0]], beta = diag(I, -I)
// in 3D; alpha = sigma_1, beta = sigma_3 in 1D.
struct DiracAlgebra {
    int dim = 0;
    int spin = 0;
    std::vector<CMat> alpha;
    CMat beta;

    // alpha.k + beta*m
    CMat symbol(const double* k, double m) const;
};

DiracAlgebra build_algebra(int dim);

// Largest entry of |A_j A_k + A_k A_j - 2 delta_jk I|, |A_j B + B A_j|, |B^2 - I|.
double anticommutation_defect(const DiracAlgebra& a);

}  // namespace diracsim
