#include "diracsim/fields.hpp"

#include <algorithm>

namespace diracsim {

SpinorFieldSet::SpinorFieldSet(int fields, int spin, std::size_t points)
    : fields_(fields), spin_(spin), points_(points),
      data_(static_cast<std::size_t>(fields) * spin * points, cd(0.0, 0.0))
{
    if (fields < 1 || spin < 1) throw ShapeError("field set needs at least one field and one component");
}

std::span<cd> SpinorFieldSet::component(int n, int c)
{
    return {data_.data() + (static_cast<std::size_t>(n) * spin_ + c) * points_, points_};
}

std::span<const cd> SpinorFieldSet::component(int n, int c) const
{
    return {data_.data() + (static_cast<std::size_t>(n) * spin_ + c) * points_, points_};
}

SpinorFieldSet SpinorFieldSet::field(int n) const
{
    if (n < 0 || n >= fields_) throw ShapeError("field index out of range");
    SpinorFieldSet out(1, spin_, points_);
    std::copy_n(field_data(n), static_cast<std::size_t>(spin_) * points_, out.field_data(0));
    return out;
}

void SpinorFieldSet::set_field(int n, const SpinorFieldSet& single)
{
    if (single.fields_ != 1 || single.spin_ != spin_ || single.points_ != points_ || n < 0 || n >= fields_)
        throw ShapeError("set_field: shape mismatch");
    std::copy_n(single.field_data(0), static_cast<std::size_t>(spin_) * points_, field_data(n));
}

bool SpinorFieldSet::same_shape(const SpinorFieldSet& o) const
{
    return fields_ == o.fields_ && spin_ == o.spin_ && points_ == o.points_;
}

void SpinorFieldSet::require_same_shape(const SpinorFieldSet& o, const char* what) const
{
    if (!same_shape(o)) throw ShapeError(std::string(what) + ": spinor field shapes differ");
}

void SpinorFieldSet::set_zero() { std::fill(data_.begin(), data_.end(), cd(0.0, 0.0)); }

SpinorFieldSet& SpinorFieldSet::operator+=(const SpinorFieldSet& o)
{
    require_same_shape(o, "operator+=");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
    return *this;
}

SpinorFieldSet& SpinorFieldSet::operator-=(const SpinorFieldSet& o)
{
    require_same_shape(o, "operator-=");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
    return *this;
}

SpinorFieldSet& SpinorFieldSet::operator*=(cd a)
{
    for (auto& v : data_) v *= a;
    return *this;
}

void SpinorFieldSet::axpy(cd a, const SpinorFieldSet& o)
{
    require_same_shape(o, "axpy");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += a * o.data_[i];
}

double SpinorFieldSet::squared_sum() const
{
    double s = 0.0;
    for (const auto& v : data_) s += std::norm(v);
    return s;
}

SpinorFieldSet operator+(SpinorFieldSet a, const SpinorFieldSet& b) { return a += b; }
SpinorFieldSet operator-(SpinorFieldSet a, const SpinorFieldSet& b) { return a -= b; }
SpinorFieldSet operator*(cd a, SpinorFieldSet b) { return b *= a; }

}  // namespace diracsim
