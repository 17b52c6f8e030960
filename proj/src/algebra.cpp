#include "diracsim/algebra.hpp"

namespace diracsim {

namespace {

CMat pauli(int j)
{
    CMat s = CMat::Zero(2, 2);
    const cd i(0.0, 1.0);
    switch (j) {
    case 1: s(0, 1) = 1.0; s(1, 0) = 1.0; break;
    case 2: s(0, 1) = -i; s(1, 0) = i; break;
    case 3: s(0, 0) = 1.0; s(1, 1) = -1.0; break;
    default: throw DomainError("pauli index out of range");
    }
    return s;
}

}  // namespace

DiracAlgebra build_algebra(int dim)
{
    DiracAlgebra a;
    a.dim = dim;
    if (dim == 1) {
        a.spin = 2;
        a.alpha.push_back(pauli(1));
        a.beta = pauli(3);
    } else if (dim == 3) {
        a.spin = 4;
        for (int j = 1; j <= 3; ++j) {
            CMat m = CMat::Zero(4, 4);
            m.block(0, 2, 2, 2) = pauli(j);
            m.block(2, 0, 2, 2) = pauli(j);
            a.alpha.push_back(m);
        }
        a.beta = CMat::Zero(4, 4);
        a.beta.diagonal() << 1.0, 1.0, -1.0, -1.0;
    } else {
        throw DomainError("unsupported dimension " + std::to_string(dim) + " (expected 1 or 3)");
    }
    return a;
}

CMat DiracAlgebra::symbol(const double* k, double m) const
{
    CMat s = beta * m;
    for (int j = 0; j < dim; ++j) s += alpha[j] * k[j];
    return s;
}

double anticommutation_defect(const DiracAlgebra& a)
{
    const CMat I = CMat::Identity(a.spin, a.spin);
    double worst = 0.0;
    for (int j = 0; j < a.dim; ++j) {
        for (int k = 0; k < a.dim; ++k) {
            CMat r = a.alpha[j] * a.alpha[k] + a.alpha[k] * a.alpha[j];
            if (j == k) r -= 2.0 * I;
            worst = std::max(worst, r.cwiseAbs().maxCoeff());
        }
        worst = std::max(worst, (a.alpha[j] * a.beta + a.beta * a.alpha[j]).cwiseAbs().maxCoeff());
    }
    worst = std::max(worst, (a.beta * a.beta - I).cwiseAbs().maxCoeff());
    return worst;
}

}  // namespace diracsim
