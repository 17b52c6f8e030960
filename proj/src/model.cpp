#include "diracsim/model.hpp"

#include <algorithm>
#include <cmath>

#include "diracsim/kernel.hpp"

namespace diracsim {

namespace {

double profile(const CouplingSpec& c, double r)
{
    const double R = c.radius;
    if (c.kind == CouplingKind::CompactSupport) {
        if (r >= R) return 0.0;
        double u = 1.0 - (r / R) * (r / R);
        return u * u * u * u;
    }
    return std::exp(-0.5 * (r / R) * (r / R));
}

ModelConfig checked(ModelConfig c)
{
    if (c.V_auto) c.V = RMat::Identity(c.dimension, c.dimension);
    c.validate();
    return c;
}

}  // namespace

Model::Impl::Impl(const ModelConfig& c)
    : cfg(checked(c)), algebra(build_algebra(c.dimension)), fourier(Grid(c.dimension, c.L, c.M)),
      fft(std::make_shared<Fft>(fourier.grid()))
{
    const Grid& g = fourier.grid();
    const int s = algebra.spin;
    rho = SpinorFieldSet(cfg.n_fields, s, g.size());
    bool any = false;
    for (int n = 0; n < cfg.n_fields; ++n)
        for (int comp = 0; comp < s; ++comp) {
            double a = cfg.coupling.amplitudes[static_cast<std::size_t>(n)][static_cast<std::size_t>(comp)];
            if (a == 0.0) continue;
            any = true;
            auto dst = rho.component(n, comp);
            for (std::size_t idx = 0; idx < g.size(); ++idx) dst[idx] = a * profile(cfg.coupling, g.radius(idx));
        }
    decoupled = !any;
    rho_hat = rho;
    for (int n = 0; n < cfg.n_fields; ++n)
        for (int comp = 0; comp < s; ++comp) fft->forward(rho_hat.component(n, comp).data());
    for (int n = 0; n < cfg.n_fields; ++n) omega.push_back(fourier.shell_omega(cfg.masses[static_cast<std::size_t>(n)]));
}

Model::Model(ModelConfig cfg)
{
    const bool auto_v = cfg.V_auto;
    auto impl = std::make_shared<Impl>(cfg);
    impl_ = impl;
    if (auto_v) {
        RMat V = suggest_V(*this, impl->cfg.V_margin);
        impl->cfg.V = V;
        impl->cfg.V_auto = false;
    }
}

double Model::min_mass() const
{
    return *std::min_element(impl_->cfg.masses.begin(), impl_->cfg.masses.end());
}

double Model::max_mass() const
{
    return *std::max_element(impl_->cfg.masses.begin(), impl_->cfg.masses.end());
}

SpinorFieldSet Model::grad_rho_hat(int n, int l) const
{
    const auto& fg = fourier();
    SpinorFieldSet out = impl_->rho_hat.field(n);
    for (int c = 0; c < spin(); ++c) {
        auto comp = out.component(0, c);
        for (std::size_t idx = 0; idx < comp.size(); ++idx) comp[idx] *= cd(0.0, fg.wavevector(idx)[l]);
    }
    return out;
}

SpinorFieldSet Model::grad_rho_hat(int l) const
{
    SpinorFieldSet out = impl_->rho_hat;
    for (int n = 0; n < n_fields(); ++n) out.set_field(n, grad_rho_hat(n, l));
    return out;
}

void Model::to_fourier(SpinorFieldSet& f) const
{
    for (int n = 0; n < f.fields(); ++n)
        for (int c = 0; c < f.spin(); ++c) fft().forward(f.component(n, c).data());
}

void Model::to_position(SpinorFieldSet& f) const
{
    for (int n = 0; n < f.fields(); ++n)
        for (int c = 0; c < f.spin(); ++c) fft().inverse(f.component(n, c).data());
}

SpinorFieldSet Model::zero_fields() const { return SpinorFieldSet(n_fields(), spin(), grid().size()); }

SpinorFieldSet Model::zero_field() const { return SpinorFieldSet(1, spin(), grid().size()); }

SystemState Model::zero_state() const
{
    return SystemState{zero_fields(), RVec::Zero(dim()), RVec::Zero(dim())};
}

Observable Model::zero_observable() const
{
    return Observable{zero_fields(), RVec::Zero(dim()), RVec::Zero(dim())};
}

Model Model::with_V(const RMat& V) const
{
    ModelConfig c = impl_->cfg;
    c.V = V;
    c.V_auto = false;
    return Model(c);
}

Model Model::with_coupling_scale(double s) const
{
    ModelConfig c = impl_->cfg;
    for (auto& row : c.coupling.amplitudes)
        for (auto& a : row) a *= s;
    return Model(c);
}

}  // namespace diracsim
