#pragma once
#include <cstddef>
#include <span>
#include <vector>

#include "diracsim/types.hpp"

namespace diracsim {

// N complex spinor fields with s components each, stored component-major:
// data[(n * s + c) * points + idx].
class SpinorFieldSet {
public:
    SpinorFieldSet() = default;
    SpinorFieldSet(int fields, int spin, std::size_t points);

    int fields() const { return fields_; }
    int spin() const { return spin_; }
    std::size_t points() const { return points_; }
    bool empty() const { return data_.empty(); }

    std::span<cd> component(int n, int c);
    std::span<const cd> component(int n, int c) const;
    cd* field_data(int n) { return data_.data() + static_cast<std::size_t>(n) * spin_ * points_; }
    const cd* field_data(int n) const { return data_.data() + static_cast<std::size_t>(n) * spin_ * points_; }
    std::span<cd> data() { return data_; }
    std::span<const cd> data() const { return data_; }

    // Copy of field n as a one-field set.
    SpinorFieldSet field(int n) const;
    void set_field(int n, const SpinorFieldSet& single);

    bool same_shape(const SpinorFieldSet& o) const;
    void require_same_shape(const SpinorFieldSet& o, const char* what) const;

    void set_zero();
    SpinorFieldSet& operator+=(const SpinorFieldSet& o);
    SpinorFieldSet& operator-=(const SpinorFieldSet& o);
    SpinorFieldSet& operator*=(cd a);
    // this += a * o
    void axpy(cd a, const SpinorFieldSet& o);
    // Sum of |value|^2 over all entries (no cell volume).
    double squared_sum() const;

private:
    int fields_ = 0;
    int spin_ = 0;
    std::size_t points_ = 0;
    std::vector<cd> data_;
};

SpinorFieldSet operator+(SpinorFieldSet a, const SpinorFieldSet& b);
SpinorFieldSet operator-(SpinorFieldSet a, const SpinorFieldSet& b);
SpinorFieldSet operator*(cd a, SpinorFieldSet b);

struct SystemState {
    SpinorFieldSet psi;
    RVec q;
    RVec p;
};

struct Observable {
    SpinorFieldSet chi;
    RVec u;
    RVec v;
};

}  // namespace diracsim
