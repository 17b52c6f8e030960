#pragma once
#include <memory>
#include <vector>

#include "diracsim/algebra.hpp"
#include "diracsim/config.hpp"
#include "diracsim/fields.hpp"
#include "diracsim/grid.hpp"

namespace diracsim {

// A validated configuration together with everything derived from it: grids,
// FFT plans, sampled coupling functions and their transforms. Cheap to copy;
// the derived data are shared and never mutated.
class Model {
public:
    explicit Model(ModelConfig cfg);

    const ModelConfig& config() const { return impl_->cfg; }
    const DiracAlgebra& algebra() const { return impl_->algebra; }
    const Grid& grid() const { return impl_->fourier.grid(); }
    const FourierGrid& fourier() const { return impl_->fourier; }
    const Fft& fft() const { return *impl_->fft; }

    int dim() const { return impl_->cfg.dimension; }
    int spin() const { return impl_->algebra.spin; }
    int n_fields() const { return impl_->cfg.n_fields; }
    double mass(int n) const { return impl_->cfg.masses[static_cast<std::size_t>(n)]; }
    double min_mass() const;
    double max_mass() const;
    const RMat& V() const { return impl_->cfg.V; }

    const SpinorFieldSet& rho() const { return impl_->rho; }
    const SpinorFieldSet& rho_hat() const { return impl_->rho_hat; }
    // Transform of d rho / d x_l, i.e. i k_l rho^(k).
    SpinorFieldSet grad_rho_hat(int l) const;
    SpinorFieldSet grad_rho_hat(int n, int l) const;
    bool decoupled() const { return impl_->decoupled; }
    // Radius outside which rho vanishes (compact) or the declared decay radius.
    double coupling_radius() const { return impl_->cfg.coupling.radius; }
    // omega_n per shell.
    const std::vector<double>& shell_omega(int n) const { return impl_->omega[static_cast<std::size_t>(n)]; }

    void to_fourier(SpinorFieldSet& f) const;
    void to_position(SpinorFieldSet& f) const;

    SpinorFieldSet zero_fields() const;
    SpinorFieldSet zero_field() const;
    SystemState zero_state() const;
    Observable zero_observable() const;

    Model with_V(const RMat& V) const;
    Model with_coupling_scale(double c) const;

private:
    struct Impl {
        ModelConfig cfg;
        DiracAlgebra algebra;
        FourierGrid fourier;
        std::shared_ptr<Fft> fft;
        SpinorFieldSet rho;
        SpinorFieldSet rho_hat;
        std::vector<std::vector<double>> omega;
        bool decoupled = false;
        Impl(const ModelConfig& c);
    };
    std::shared_ptr<const Impl> impl_;
};

}  // namespace diracsim
