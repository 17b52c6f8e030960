#pragma once
#include <array>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <vector>

#include "diracsim/types.hpp"

namespace diracsim {

// Periodic box [-L/2, L/2)^d with M points per axis. Index 0 of each axis is the
// origin; axis index i maps to the signed offset i (i < M/2) or i - M.
class Grid {
public:
    Grid(int dim, double L, int M);

    int dim() const { return dim_; }
    int M() const { return M_; }
    double L() const { return L_; }
    double h() const { return L_ / M_; }
    std::size_t size() const { return size_; }
    double cell_volume() const;
    double volume() const;

    int signed_index(int i) const { return i < M_ / 2 ? i : i - M_; }
    std::array<int, 3> unravel(std::size_t idx) const;
    std::size_t ravel(const std::array<int, 3>& ijk) const;
    std::array<double, 3> position(std::size_t idx) const;
    double radius(std::size_t idx) const;
    // Index of the reflected point -x.
    std::size_t negate(std::size_t idx) const;

private:
    int dim_;
    double L_;
    int M_;
    std::size_t size_;
};

// Dual lattice with spacing 2*pi/L. Wave vectors used in every Fourier multiplier
// have their Nyquist components set to zero, so the symbol set is invariant under
// k -> -k. Points are grouped in shells of equal |k|^2.
class FourierGrid {
public:
    explicit FourierGrid(const Grid& g);

    const Grid& grid() const { return grid_; }
    double dk() const { return 2.0 * pi / grid_.L(); }
    std::array<double, 3> wavevector(std::size_t idx) const;
    double k2(std::size_t idx) const { return shell_k2_[shell_[idx]]; }
    std::uint32_t shell(std::size_t idx) const { return shell_[idx]; }
    std::size_t shell_count() const { return shell_k2_.size(); }
    double shell_k2(std::size_t s) const { return shell_k2_[s]; }
    const std::vector<double>& shell_k2s() const { return shell_k2_; }
    // omega(k) = sqrt(|k|^2 + m^2) per shell.
    std::vector<double> shell_omega(double m) const;
    // Points whose axis indices are all 0 or M/2 map to themselves under k -> -k.
    bool self_conjugate(std::size_t idx) const;

private:
    int effective_index(int i) const;

    Grid grid_;
    std::vector<std::uint32_t> shell_;
    std::vector<double> shell_k2_;
};

// In-place multidimensional DFT with continuum normalisation:
// forward  f^(k) = h^d sum_x exp(-i k.x) f(x)
// inverse  f(x)  = (1/L^d) sum_k exp(i k.x) f^(k)
class Fft {
public:
    explicit Fft(const Grid& g);
    ~Fft();
    Fft(const Fft&) = delete;
    Fft& operator=(const Fft&) = delete;

    void forward(cd* data) const;
    void inverse(cd* data) const;
    // Unscaled transforms.
    void forward_raw(cd* data) const;
    void inverse_raw(cd* data) const;

private:
    struct Plans;
    std::unique_ptr<Plans> plans_;
    std::size_t size_;
    double fwd_scale_;
    double inv_scale_;
};

}  // namespace diracsim
