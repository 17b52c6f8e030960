#include "diracsim/grid.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <unordered_map>

#include <fftw3.h>

namespace diracsim {

namespace {

std::mutex& planner_mutex()
{
    static std::mutex m;
    return m;
}

bool is_power_of_two(int m) { return m > 0 && (m & (m - 1)) == 0; }

}  // namespace

Grid::Grid(int dim, double L, int M) : dim_(dim), L_(L), M_(M)
{
    if (dim != 1 && dim != 3) throw DomainError("grid dimension must be 1 or 3");
    if (!(L > 0.0)) throw ConfigError("box length must be positive");
    if (!is_power_of_two(M) || M < 2) throw ConfigError("points per axis must be a power of two");
    size_ = 1;
    for (int j = 0; j < dim; ++j) size_ *= static_cast<std::size_t>(M);
}

double Grid::cell_volume() const { return std::pow(h(), dim_); }

double Grid::volume() const { return std::pow(L_, dim_); }

std::array<int, 3> Grid::unravel(std::size_t idx) const
{
    std::array<int, 3> ijk{0, 0, 0};
    for (int j = dim_ - 1; j >= 0; --j) {
        ijk[j] = static_cast<int>(idx % M_);
        idx /= M_;
    }
    return ijk;
}

std::size_t Grid::ravel(const std::array<int, 3>& ijk) const
{
    std::size_t idx = 0;
    for (int j = 0; j < dim_; ++j) {
        int i = ((ijk[j] % M_) + M_) % M_;
        idx = idx * M_ + static_cast<std::size_t>(i);
    }
    return idx;
}

std::array<double, 3> Grid::position(std::size_t idx) const
{
    auto ijk = unravel(idx);
    std::array<double, 3> x{0.0, 0.0, 0.0};
    for (int j = 0; j < dim_; ++j) x[j] = signed_index(ijk[j]) * h();
    return x;
}

double Grid::radius(std::size_t idx) const
{
    auto x = position(idx);
    return std::sqrt(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]);
}

std::size_t Grid::negate(std::size_t idx) const
{
    auto ijk = unravel(idx);
    for (int j = 0; j < dim_; ++j) ijk[j] = -ijk[j];
    return ravel(ijk);
}

FourierGrid::FourierGrid(const Grid& g) : grid_(g)
{
    const std::size_t n = g.size();
    shell_.resize(n);
    std::vector<long> key(n);
    for (std::size_t idx = 0; idx < n; ++idx) {
        auto ijk = g.unravel(idx);
        long s = 0;
        for (int j = 0; j < g.dim(); ++j) {
            long e = effective_index(ijk[j]);
            s += e * e;
        }
        key[idx] = s;
    }
    std::vector<long> uniq(key);
    std::sort(uniq.begin(), uniq.end());
    uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
    std::unordered_map<long, std::uint32_t> id;
    id.reserve(uniq.size());
    shell_k2_.resize(uniq.size());
    const double dk2 = dk() * dk();
    for (std::size_t s = 0; s < uniq.size(); ++s) {
        id[uniq[s]] = static_cast<std::uint32_t>(s);
        shell_k2_[s] = dk2 * static_cast<double>(uniq[s]);
    }
    for (std::size_t idx = 0; idx < n; ++idx) shell_[idx] = id[key[idx]];
}

int FourierGrid::effective_index(int i) const
{
    const int M = grid_.M();
    if (i == M / 2) return 0;
    return grid_.signed_index(i);
}

std::array<double, 3> FourierGrid::wavevector(std::size_t idx) const
{
    auto ijk = grid_.unravel(idx);
    std::array<double, 3> k{0.0, 0.0, 0.0};
    for (int j = 0; j < grid_.dim(); ++j) k[j] = effective_index(ijk[j]) * dk();
    return k;
}

std::vector<double> FourierGrid::shell_omega(double m) const
{
    std::vector<double> w(shell_k2_.size());
    for (std::size_t s = 0; s < w.size(); ++s) w[s] = std::sqrt(shell_k2_[s] + m * m);
    return w;
}

bool FourierGrid::self_conjugate(std::size_t idx) const
{
    auto ijk = grid_.unravel(idx);
    for (int j = 0; j < grid_.dim(); ++j)
        if (ijk[j] != 0 && ijk[j] != grid_.M() / 2) return false;
    return true;
}

struct Fft::Plans {
    fftw_plan fwd = nullptr;
    fftw_plan inv = nullptr;
};

Fft::Fft(const Grid& g) : plans_(std::make_unique<Plans>()), size_(g.size())
{
    fwd_scale_ = g.cell_volume();
    inv_scale_ = 1.0 / g.volume();
    int n[3] = {g.M(), g.M(), g.M()};
    std::lock_guard<std::mutex> lock(planner_mutex());
    auto* buf = fftw_alloc_complex(size_);
    unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    plans_->fwd = fftw_plan_dft(g.dim(), n, buf, buf, FFTW_FORWARD, flags);
    plans_->inv = fftw_plan_dft(g.dim(), n, buf, buf, FFTW_BACKWARD, flags);
    fftw_free(buf);
    if (!plans_->fwd || !plans_->inv) throw Error("FFTW planning failed");
}

Fft::~Fft()
{
    std::lock_guard<std::mutex> lock(planner_mutex());
    if (plans_->fwd) fftw_destroy_plan(plans_->fwd);
    if (plans_->inv) fftw_destroy_plan(plans_->inv);
}

void Fft::forward_raw(cd* data) const
{
    auto* p = reinterpret_cast<fftw_complex*>(data);
    fftw_execute_dft(plans_->fwd, p, p);
}

void Fft::inverse_raw(cd* data) const
{
    auto* p = reinterpret_cast<fftw_complex*>(data);
    fftw_execute_dft(plans_->inv, p, p);
}

void Fft::forward(cd* data) const
{
    forward_raw(data);
    for (std::size_t i = 0; i < size_; ++i) data[i] *= fwd_scale_;
}

void Fft::inverse(cd* data) const
{
    inverse_raw(data);
    for (std::size_t i = 0; i < size_; ++i) data[i] *= inv_scale_;
}

}  // namespace diracsim
