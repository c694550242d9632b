#pragma once

// Periodic torus [0,L)^3 discretization, complex vector fields with a
// physical/spectral dual representation, unitary FFTs, L^2 inner products
// and L^p norms, and the binary checkpoint format.

#include <fftw3.h>

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "mks/error.hpp"

namespace mks {

using cplx = std::complex<double>;

class GridSpec {
public:
  GridSpec() = default;

  int points() const { return d_->n; }
  double length() const { return d_->length; }
  std::size_t size() const { return d_->size; }
  // Quadrature weight (L/n)^3 of one grid cell.
  double cell_volume() const { return d_->cell; }
  double volume() const { return d_->length * d_->length * d_->length; }
  // Largest resolved wavenumber pi*n/L (carried by the Nyquist index n/2).
  double nyquist() const { return std::numbers::pi * d_->n / d_->length; }
  std::span<const double> wavenumbers() const { return d_->k; }
  double wavenumber(int m) const { return d_->k[static_cast<std::size_t>(m)]; }
  int signed_frequency(int m) const { return m < d_->n / 2 ? m : m - d_->n; }
  bool is_nyquist(int m) const { return m == d_->n / 2; }
  double coordinate(int m) const { return d_->length * m / d_->n; }

  std::size_t index(int a, int b, int c) const {
    const auto n = static_cast<std::size_t>(d_->n);
    return (static_cast<std::size_t>(a) * n + static_cast<std::size_t>(b)) * n +
           static_cast<std::size_t>(c);
  }
  // Index of the mode -k for the mode at (a,b,c).
  std::size_t conjugate_index(int a, int b, int c) const {
    const int n = d_->n;
    return index((n - a) % n, (n - b) % n, (n - c) % n);
  }

  bool valid() const { return d_ != nullptr; }

  friend bool operator==(const GridSpec& x, const GridSpec& y) {
    if (x.d_ == y.d_) return true;
    if (!x.d_ || !y.d_) return false;
    return x.d_->n == y.d_->n && x.d_->length == y.d_->length;
  }

private:
  struct Data {
    int n = 0;
    double length = 0.0;
    std::size_t size = 0;
    double cell = 0.0;
    std::vector<double> k;
  };
  std::shared_ptr<const Data> d_;

  friend GridSpec make_grid(int points_per_axis, double box_length);
};

inline GridSpec make_grid(int points_per_axis, double box_length) {
  if (points_per_axis < 4 || !std::has_single_bit(static_cast<unsigned>(points_per_axis)))
    throw ConfigError("points_per_axis must be a power of two >= 4, got " +
                      std::to_string(points_per_axis));
  if (!(box_length > 0.0) || !std::isfinite(box_length))
    throw ConfigError("box_length must be positive and finite");
  auto d = std::make_shared<GridSpec::Data>();
  d->n = points_per_axis;
  d->length = box_length;
  d->size = static_cast<std::size_t>(points_per_axis) * points_per_axis * points_per_axis;
  d->cell = std::pow(box_length / points_per_axis, 3);
  d->k.resize(static_cast<std::size_t>(points_per_axis));
  const double scale = 2.0 * std::numbers::pi / box_length;
  for (int m = 0; m < points_per_axis; ++m) {
    // Nyquist index n/2 is assigned the negative frequency -n/2.
    const int f = m < points_per_axis / 2 ? m : m - points_per_axis;
    d->k[static_cast<std::size_t>(m)] = scale * f;
  }
  GridSpec g;
  g.d_ = std::move(d);
  return g;
}

enum class Representation : std::uint8_t { physical = 0, spectral = 1 };

inline const char* to_string(Representation r) {
  return r == Representation::physical ? "physical" : "spectral";
}

// C-component complex field on a grid. Storage is component-major, then
// (x1, x2, x3) with x3 fastest.
template <int C>
class Field {
public:
  static constexpr int components = C;

  Field() = default;
  Field(GridSpec grid, Representation rep)
      : grid_(std::move(grid)), rep_(rep), data_(static_cast<std::size_t>(C) * grid_.size()) {}

  const GridSpec& grid() const { return grid_; }
  Representation representation() const { return rep_; }
  bool is_spectral() const { return rep_ == Representation::spectral; }
  bool is_physical() const { return rep_ == Representation::physical; }

  // Set when the field represents a real-valued physical state.
  bool real_state() const { return real_state_; }
  void set_real_state(bool v) { real_state_ = v; }

  std::span<cplx> data() { return data_; }
  std::span<const cplx> data() const { return data_; }
  std::span<cplx> component(int c) {
    return std::span<cplx>(data_).subspan(static_cast<std::size_t>(c) * grid_.size(), grid_.size());
  }
  std::span<const cplx> component(int c) const {
    return std::span<const cplx>(data_).subspan(static_cast<std::size_t>(c) * grid_.size(),
                                                grid_.size());
  }
  cplx& at(int c, std::size_t i) { return data_[static_cast<std::size_t>(c) * grid_.size() + i]; }
  const cplx& at(int c, std::size_t i) const {
    return data_[static_cast<std::size_t>(c) * grid_.size() + i];
  }

  Field& operator+=(const Field& o) {
    check_compatible(o, "operator+=");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
    real_state_ = real_state_ && o.real_state_;
    return *this;
  }
  Field& operator-=(const Field& o) {
    check_compatible(o, "operator-=");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
    real_state_ = real_state_ && o.real_state_;
    return *this;
  }
  Field& operator*=(cplx a) {
    for (auto& v : data_) v *= a;
    if (a.imag() != 0.0) real_state_ = false;
    return *this;
  }
  // this += a * x
  Field& axpy(cplx a, const Field& x) {
    check_compatible(x, "axpy");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += a * x.data_[i];
    real_state_ = real_state_ && x.real_state_ && a.imag() == 0.0;
    return *this;
  }

  friend Field operator+(Field a, const Field& b) { return a += b; }
  friend Field operator-(Field a, const Field& b) { return a -= b; }
  friend Field operator*(cplx s, Field a) { return a *= s; }

  void set_zero() { std::fill(data_.begin(), data_.end(), cplx{}); }

  void check_compatible(const Field& o, const char* what) const {
    if (!(grid_ == o.grid_)) throw UsageError(std::string(what) + ": grid mismatch");
    if (rep_ != o.rep_) throw UsageError(std::string(what) + ": representation mismatch");
  }

  void require(Representation r, const char* what) const {
    if (rep_ != r)
      throw UsageError(std::string(what) + ": expected " + to_string(r) + " representation, got " +
                       to_string(rep_));
  }

  // Relabels the data. Used by transforms and deserialization only.
  void retag(Representation r) { rep_ = r; }

private:
  GridSpec grid_;
  Representation rep_ = Representation::physical;
  std::vector<cplx> data_;
  bool real_state_ = false;
};

using Field6 = Field<6>;
using VectorField = Field<3>;
using ScalarField = Field<1>;

inline VectorField block1(const Field6& u) {
  VectorField out(u.grid(), u.representation());
  for (int c = 0; c < 3; ++c) std::ranges::copy(u.component(c), out.component(c).begin());
  out.set_real_state(u.real_state());
  return out;
}

inline VectorField block2(const Field6& u) {
  VectorField out(u.grid(), u.representation());
  for (int c = 0; c < 3; ++c) std::ranges::copy(u.component(c + 3), out.component(c).begin());
  out.set_real_state(u.real_state());
  return out;
}

inline Field6 join_blocks(const VectorField& u1, const VectorField& u2) {
  if (!(u1.grid() == u2.grid()) || u1.representation() != u2.representation())
    throw UsageError("join_blocks: incompatible blocks");
  Field6 out(u1.grid(), u1.representation());
  for (int c = 0; c < 3; ++c) {
    std::ranges::copy(u1.component(c), out.component(c).begin());
    std::ranges::copy(u2.component(c), out.component(c + 3).begin());
  }
  out.set_real_state(u1.real_state() && u2.real_state());
  return out;
}

namespace detail {

// FFTW plans are created once per grid size. Planning is serialized; the
// new-array execute functions are thread-safe. FFTW_UNALIGNED keeps the
// result independent of buffer alignment.
class FftPlans {
public:
  static FftPlans& instance() {
    static FftPlans p;
    return p;
  }

  std::pair<fftw_plan, fftw_plan> get(int n) {
    std::lock_guard lock(mu_);
    auto it = plans_.find(n);
    if (it != plans_.end()) return it->second;
    const std::size_t size = static_cast<std::size_t>(n) * n * n;
    std::vector<cplx> buf(size);
    auto* p = reinterpret_cast<fftw_complex*>(buf.data());
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    fftw_plan fwd = fftw_plan_dft_3d(n, n, n, p, p, FFTW_FORWARD, flags);
    fftw_plan bwd = fftw_plan_dft_3d(n, n, n, p, p, FFTW_BACKWARD, flags);
    if (!fwd || !bwd) throw NumericalError("FFTW planning failed for n=" + std::to_string(n));
    plans_.emplace(n, std::make_pair(fwd, bwd));
    return {fwd, bwd};
  }

  FftPlans(const FftPlans&) = delete;
  FftPlans& operator=(const FftPlans&) = delete;

private:
  FftPlans() = default;
  ~FftPlans() {
    for (auto& [n, p] : plans_) {
      fftw_destroy_plan(p.first);
      fftw_destroy_plan(p.second);
    }
  }
  std::mutex mu_;
  std::map<int, std::pair<fftw_plan, fftw_plan>> plans_;
};

template <int C>
void transform_in_place(Field<C>& f, bool forward) {
  const auto [fwd, bwd] = FftPlans::instance().get(f.grid().points());
  const double scale = 1.0 / std::sqrt(static_cast<double>(f.grid().size()));
  for (int c = 0; c < C; ++c) {
    auto comp = f.component(c);
    auto* p = reinterpret_cast<fftw_complex*>(comp.data());
    fftw_execute_dft(forward ? fwd : bwd, p, p);
    for (auto& v : comp) v *= scale;
  }
}

}  // namespace detail

template <int C>
Field<C> to_spectral(Field<C> f) {
  f.require(Representation::physical, "to_spectral");
  detail::transform_in_place(f, true);
  f.retag(Representation::spectral);
  return f;
}

template <int C>
Field<C> to_physical(Field<C> f) {
  f.require(Representation::spectral, "to_physical");
  detail::transform_in_place(f, false);
  f.retag(Representation::physical);
  return f;
}

// <u, v> = (L/n)^3 sum_x u(x) . conj(v(x)); in spectral representation the
// Parseval-equivalent mode sum with the same weight.
template <int C>
cplx inner_product(const Field<C>& u, const Field<C>& v) {
  u.check_compatible(v, "inner_product");
  cplx acc{};
  auto a = u.data();
  auto b = v.data();
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * std::conj(b[i]);
  return acc * u.grid().cell_volume();
}

// ||u||_2 in either representation.
template <int C>
double l2_norm(const Field<C>& u) {
  double acc = 0.0;
  for (const auto& v : u.data()) acc += std::norm(v);
  return std::sqrt(acc * u.grid().cell_volume());
}

// ((L/n)^3 sum_x |u(x)|^p)^(1/p) with |.| the Euclidean norm in C^C;
// p = infinity gives the pointwise maximum.
template <int C>
double lp_norm(const Field<C>& u, double p) {
  u.require(Representation::physical, "lp_norm");
  if (!(p >= 1.0)) throw UsageError("lp_norm: p must be >= 1");
  const std::size_t n = u.grid().size();
  if (std::isinf(p)) {
    double m = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double s = 0.0;
      for (int c = 0; c < C; ++c) s += std::norm(u.at(c, i));
      m = std::max(m, std::sqrt(s));
    }
    return m;
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (int c = 0; c < C; ++c) s += std::norm(u.at(c, i));
    acc += std::pow(s, 0.5 * p);
  }
  return std::pow(acc * u.grid().cell_volume(), 1.0 / p);
}

// ||u||_p^p without the final root (used by energy estimates).
template <int C>
double lp_norm_pow(const Field<C>& u, double p) {
  u.require(Representation::physical, "lp_norm_pow");
  const std::size_t n = u.grid().size();
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (int c = 0; c < C; ++c) s += std::norm(u.at(c, i));
    acc += std::pow(s, 0.5 * p);
  }
  return acc * u.grid().cell_volume();
}

// max_k |u^(k) - conj(u^(-k))| over all components; zero for spectral data
// of a real physical field.
template <int C>
double hermitian_defect(const Field<C>& u) {
  u.require(Representation::spectral, "hermitian_defect");
  const GridSpec& g = u.grid();
  const int n = g.points();
  double worst = 0.0;
  for (int c = 0; c < C; ++c)
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b)
        for (int d = 0; d < n; ++d) {
          const auto i = g.index(a, b, d);
          const auto j = g.conjugate_index(a, b, d);
          worst = std::max(worst, std::abs(u.at(c, i) - std::conj(u.at(c, j))));
        }
  return worst;
}

// Fills a physical field from f(x1, x2, x3) -> std::array<cplx, C>.
template <int C, typename Fn>
Field<C> sample_field(const GridSpec& g, Fn&& f) {
  Field<C> out(g, Representation::physical);
  const int n = g.points();
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int d = 0; d < n; ++d) {
        const std::array<cplx, C> v = f(g.coordinate(a), g.coordinate(b), g.coordinate(d));
        const auto i = g.index(a, b, d);
        for (int c = 0; c < C; ++c) out.at(c, i) = v[static_cast<std::size_t>(c)];
      }
  return out;
}

// ---------------------------------------------------------------------------
// Checkpoint format: "MKS1", u32 points_per_axis, f64 box_length,
// u8 representation, then 6 n^3 (f64 re, f64 im) pairs, little-endian.

namespace detail {

template <typename T>
void put_le(std::ostream& os, T v) {
  static_assert(std::is_trivially_copyable_v<T>);
  std::array<unsigned char, sizeof(T)> bytes;
  std::memcpy(bytes.data(), &v, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::ranges::reverse(bytes);
  os.write(reinterpret_cast<const char*>(bytes.data()), sizeof(T));
}

template <typename T>
T get_le(std::istream& is) {
  std::array<unsigned char, sizeof(T)> bytes;
  if (!is.read(reinterpret_cast<char*>(bytes.data()), sizeof(T)))
    throw UsageError("unexpected end of binary stream");
  if constexpr (std::endian::native == std::endian::big) std::ranges::reverse(bytes);
  T v;
  std::memcpy(&v, bytes.data(), sizeof(T));
  return v;
}

// Writes via a temporary file and renames it into place.
template <typename Writer>
void atomic_write(const std::filesystem::path& path, Writer&& write) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
    write(os);
    if (!os) throw std::runtime_error("write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace detail

inline void write_checkpoint(std::ostream& os, const Field6& u) {
  os.write("MKS1", 4);
  detail::put_le<std::uint32_t>(os, static_cast<std::uint32_t>(u.grid().points()));
  detail::put_le<double>(os, u.grid().length());
  detail::put_le<std::uint8_t>(os, static_cast<std::uint8_t>(u.representation()));
  for (const auto& v : u.data()) {
    detail::put_le<double>(os, v.real());
    detail::put_le<double>(os, v.imag());
  }
}

inline Field6 read_checkpoint(std::istream& is) {
  char magic[4];
  if (!is.read(magic, 4) || std::memcmp(magic, "MKS1", 4) != 0)
    throw UsageError("checkpoint: bad magic");
  const auto n = detail::get_le<std::uint32_t>(is);
  const auto length = detail::get_le<double>(is);
  const auto tag = detail::get_le<std::uint8_t>(is);
  if (tag > 1) throw UsageError("checkpoint: bad representation tag");
  Field6 u(make_grid(static_cast<int>(n), length), static_cast<Representation>(tag));
  for (auto& v : u.data()) {
    const double re = detail::get_le<double>(is);
    const double im = detail::get_le<double>(is);
    v = {re, im};
  }
  return u;
}

inline void save_checkpoint(const std::filesystem::path& path, const Field6& u) {
  detail::atomic_write(path, [&](std::ostream& os) { write_checkpoint(os, u); });
}

inline Field6 load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw UsageError("cannot open checkpoint " + path.string());
  return read_checkpoint(is);
}

}  // namespace mks
