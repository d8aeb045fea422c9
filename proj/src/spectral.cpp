#include "alfven/spectral.hpp"

#include <cmath>
#include <cstring>
#include <mutex>
#include <numbers>
#include <string>
#include <vector>
#include <algorithm>

#include <fftw3.h>

#ifdef __GLIBC__
#include <malloc.h>
#endif

#include "alfven/errors.hpp"

namespace alfven {

namespace {

// FFTW planning is not thread-safe; execution is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

struct FftwFree {
  void operator()(void* p) const { fftw_free(p); }
};

// Per-thread aligned scratch so that transforms stay reentrant.
struct Workspace {
  std::unique_ptr<double, FftwFree> real;
  std::unique_ptr<fftw_complex, FftwFree> cplx;
  std::size_t real_size = 0;
  std::size_t cplx_size = 0;

  void reserve(std::size_t nr, std::size_t nc) {
    if (nr > real_size) {
      real.reset(fftw_alloc_real(nr));
      real_size = nr;
    }
    if (nc > cplx_size) {
      cplx.reset(fftw_alloc_complex(nc));
      cplx_size = nc;
    }
  }
};

Workspace& workspace() {
  thread_local Workspace ws;
  return ws;
}

constexpr double two_pi = 2.0 * std::numbers::pi;

// Field temporaries are a few MB each; keep them on the heap instead of
// mapping and faulting fresh pages for every allocation.
void tune_allocator() {
#ifdef __GLIBC__
  static std::once_flag once;
  std::call_once(once, [] {
    mallopt(M_MMAP_THRESHOLD, 1 << 30);
    mallopt(M_TRIM_THRESHOLD, 1 << 30);
  });
#endif
}

} // namespace

SpectralGrid::SpectralGrid(const DomainSpec& domain) : domain_(domain) {
  tune_allocator();
  domain_.validate();
  const std::size_t ns = spectral_size();
  for (auto& k : k_) k.setZero(ns);
  k2_.setZero(ns);
  mask_.setZero(ns);
  weight_.setZero(ns);
  inv_k2_.setZero(ns);

  for (int i1 = 0; i1 < n(0); ++i1) {
    const int m1 = mode(0, i1);
    const double k1 = (2 * std::abs(m1) == n(0)) ? 0.0 : two_pi * m1 / domain_.L[0];
    for (int i2 = 0; i2 < n(1); ++i2) {
      const int m2 = mode(1, i2);
      const double k2 = (2 * std::abs(m2) == n(1)) ? 0.0 : two_pi * m2 / domain_.L[1];
      for (int i3 = 0; i3 < nh(); ++i3) {
        const int m3 = i3;
        const double k3 = (2 * m3 == n(2)) ? 0.0 : two_pi * m3 / domain_.L[2];
        const std::size_t idx = spectral_index(i1, i2, i3);
        k_[0][idx] = k1;
        k_[1][idx] = k2;
        k_[2][idx] = k3;
        k2_[idx] = k1 * k1 + k2 * k2 + k3 * k3;
        const bool keep = 3 * std::abs(m1) <= n(0) && 3 * std::abs(m2) <= n(1) && 3 * m3 <= n(2);
        mask_[idx] = keep ? 1.0 : 0.0;
        weight_[idx] = (i3 == 0 || 2 * i3 == n(2)) ? 1.0 : 2.0;
        inv_k2_[idx] = k2_[idx] > 0.0 ? 1.0 / k2_[idx] : 0.0;
      }
    }
  }

  auto& ws = workspace();
  ws.reserve(physical_size(), ns);
  std::lock_guard lock(planner_mutex());
  plan_forward_ = fftw_plan_dft_r2c_3d(n(0), n(1), n(2), ws.real.get(), ws.cplx.get(), FFTW_ESTIMATE);
  plan_inverse_ = fftw_plan_dft_c2r_3d(n(0), n(1), n(2), ws.cplx.get(), ws.real.get(), FFTW_ESTIMATE);
  if (!plan_forward_ || !plan_inverse_) throw Error("FFTW planning failed");
}

SpectralGrid::~SpectralGrid() {
  std::lock_guard lock(planner_mutex());
  if (plan_forward_) fftw_destroy_plan(static_cast<fftw_plan>(plan_forward_));
  if (plan_inverse_) fftw_destroy_plan(static_cast<fftw_plan>(plan_inverse_));
}

std::shared_ptr<const SpectralGrid> SpectralGrid::make(const DomainSpec& domain) {
  return std::make_shared<const SpectralGrid>(domain);
}

int SpectralGrid::mode(int axis, int i) const {
  if (axis == 2) return i;
  const int nn = n(axis);
  return i <= nn / 2 ? i : i - nn;
}

void SpectralGrid::forward(const double* in, Complex* out) const {
  auto& ws = workspace();
  ws.reserve(physical_size(), spectral_size());
  std::memcpy(ws.real.get(), in, physical_size() * sizeof(double));
  fftw_execute_dft_r2c(static_cast<fftw_plan>(plan_forward_), ws.real.get(), ws.cplx.get());
  const double scale = 1.0 / static_cast<double>(physical_size());
  const auto* src = reinterpret_cast<const Complex*>(ws.cplx.get());
  for (std::size_t i = 0; i < spectral_size(); ++i) out[i] = src[i] * scale;
}

void SpectralGrid::inverse(const Complex* in, double* out) const {
  auto& ws = workspace();
  ws.reserve(physical_size(), spectral_size());
  std::memcpy(static_cast<void*>(ws.cplx.get()), in, spectral_size() * sizeof(Complex));
  fftw_execute_dft_c2r(static_cast<fftw_plan>(plan_inverse_), ws.cplx.get(), ws.real.get());
  std::memcpy(out, ws.real.get(), physical_size() * sizeof(double));
}

// ---------------------------------------------------------------------------
// Field containers

RealScalarField::RealScalarField(GridPtr g) : grid(std::move(g)) {
  v.setZero(static_cast<Eigen::Index>(grid->physical_size()));
}

RealScalarField::RealScalarField(GridPtr g, RealArray values) : grid(std::move(g)), v(std::move(values)) {
  if (static_cast<std::size_t>(v.size()) != grid->physical_size()) {
    throw ShapeMismatch("scalar field: sample count does not match the grid");
  }
}

RealVectorField::RealVectorField(GridPtr g) : grid(std::move(g)) {
  for (auto& comp : c) comp.setZero(static_cast<Eigen::Index>(grid->physical_size()));
}

RealVectorField RealVectorField::from_samples(GridPtr g, std::array<RealArray, 3> samples) {
  RealVectorField f;
  f.grid = std::move(g);
  for (int a = 0; a < 3; ++a) {
    if (static_cast<std::size_t>(samples[a].size()) != f.grid->physical_size()) {
      throw ShapeMismatch("vector field: component " + std::to_string(a + 1) +
                          " sample count does not match the grid");
    }
    if (!samples[a].isFinite().all()) {
      throw InvalidData("vector field: component " + std::to_string(a + 1) + " has non-finite samples");
    }
    f.c[a] = std::move(samples[a]);
  }
  return f;
}

RealArray RealVectorField::magnitude() const {
  return (c[0].square() + c[1].square() + c[2].square()).sqrt();
}

double RealVectorField::max_magnitude() const { return magnitude().maxCoeff(); }

SpectralScalarField::SpectralScalarField(GridPtr g) : grid(std::move(g)) {
  c.setZero(static_cast<Eigen::Index>(grid->spectral_size()));
}

SpectralVectorField::SpectralVectorField(GridPtr g) : grid(std::move(g)) {
  for (auto& comp : c) comp.setZero(static_cast<Eigen::Index>(grid->spectral_size()));
}

void require_same_grid(const GridPtr& a, const GridPtr& b, const char* what) {
  if (!a || !b) throw ShapeMismatch(std::string(what) + ": field without grid");
  if (a != b && !(a->domain() == b->domain())) {
    throw ShapeMismatch(std::string(what) + ": fields live on different grids");
  }
}

SpectralVectorField& SpectralVectorField::operator+=(const SpectralVectorField& o) {
  require_same_grid(grid, o.grid, "operator+=");
  for (int a = 0; a < 3; ++a) c[a] += o.c[a];
  return *this;
}

SpectralVectorField& SpectralVectorField::operator-=(const SpectralVectorField& o) {
  require_same_grid(grid, o.grid, "operator-=");
  for (int a = 0; a < 3; ++a) c[a] -= o.c[a];
  return *this;
}

SpectralVectorField& SpectralVectorField::operator*=(double s) {
  for (auto& comp : c) comp *= s;
  return *this;
}

SpectralVectorField operator+(SpectralVectorField a, const SpectralVectorField& b) { return a += b; }
SpectralVectorField operator-(SpectralVectorField a, const SpectralVectorField& b) { return a -= b; }
SpectralVectorField operator*(double s, SpectralVectorField a) { return a *= s; }

// ---------------------------------------------------------------------------
// Transforms

SpectralScalarField transform(const RealScalarField& f) {
  if (static_cast<std::size_t>(f.v.size()) != f.grid->physical_size()) {
    throw ShapeMismatch("transform: sample count does not match the grid");
  }
  SpectralScalarField out(f.grid);
  f.grid->forward(f.v.data(), out.c.data());
  return out;
}

SpectralVectorField transform(const RealVectorField& f) {
  SpectralVectorField out(f.grid);
  for (int a = 0; a < 3; ++a) {
    if (static_cast<std::size_t>(f.c[a].size()) != f.grid->physical_size()) {
      throw ShapeMismatch("transform: sample count does not match the grid");
    }
    f.grid->forward(f.c[a].data(), out.c[a].data());
  }
  return out;
}

RealScalarField inverse(const SpectralScalarField& f) {
  RealScalarField out(f.grid);
  f.grid->inverse(f.c.data(), out.v.data());
  return out;
}

RealVectorField inverse(const SpectralVectorField& f) {
  RealVectorField out(f.grid);
  for (int a = 0; a < 3; ++a) f.grid->inverse(f.c[a].data(), out.c[a].data());
  return out;
}

// ---------------------------------------------------------------------------
// Differential operators

// Real tables times complex coefficients; (i k) f = i * (k f).
namespace {
inline Complex times_i(Complex z) { return {-z.imag(), z.real()}; }
}

SpectralScalarField partial(const SpectralScalarField& f, int axis) {
  SpectralScalarField out(f.grid);
  const RealArray& k = f.grid->k(axis);
  for (Eigen::Index i = 0; i < k.size(); ++i) out.c[i] = times_i(k[i] * f.c[i]);
  return out;
}

SpectralVectorField partial(const SpectralVectorField& f, int axis) {
  SpectralVectorField out(f.grid);
  const RealArray& k = f.grid->k(axis);
  for (int a = 0; a < 3; ++a)
    for (Eigen::Index i = 0; i < k.size(); ++i) out.c[a][i] = times_i(k[i] * f.c[a][i]);
  return out;
}

SpectralVectorField partial(const SpectralVectorField& f, const std::array<int, 3>& alpha) {
  const auto& G = *f.grid;
  const int order = alpha[0] + alpha[1] + alpha[2];
  RealArray factor = RealArray::Ones(static_cast<Eigen::Index>(G.spectral_size()));
  for (int axis = 0; axis < 3; ++axis)
    for (int r = 0; r < alpha[axis]; ++r) factor *= G.k(axis);
  // i^order
  static const Complex powers[4] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
  const Complex unit = powers[order % 4];
  SpectralVectorField out(f.grid);
  for (int a = 0; a < 3; ++a)
    for (Eigen::Index i = 0; i < factor.size(); ++i) out.c[a][i] = unit * (factor[i] * f.c[a][i]);
  return out;
}

SpectralVectorField gradient(const SpectralScalarField& g) {
  SpectralVectorField out(g.grid);
  for (int a = 0; a < 3; ++a) {
    const RealArray& k = g.grid->k(a);
    for (Eigen::Index i = 0; i < k.size(); ++i) out.c[a][i] = times_i(k[i] * g.c[i]);
  }
  return out;
}

SpectralScalarField divergence(const SpectralVectorField& f) {
  SpectralScalarField out(f.grid);
  const auto& G = *f.grid;
  const RealArray &k1 = G.k(0), &k2 = G.k(1), &k3 = G.k(2);
  for (Eigen::Index i = 0; i < k1.size(); ++i)
    out.c[i] = times_i(k1[i] * f.c[0][i] + k2[i] * f.c[1][i] + k3[i] * f.c[2][i]);
  return out;
}

SpectralVectorField curl(const SpectralVectorField& f) {
  const auto& G = *f.grid;
  const RealArray &k1 = G.k(0), &k2 = G.k(1), &k3 = G.k(2);
  SpectralVectorField out(f.grid);
  for (Eigen::Index i = 0; i < k1.size(); ++i) {
    const Complex a = f.c[0][i], b = f.c[1][i], c = f.c[2][i];
    out.c[0][i] = times_i(k2[i] * c - k3[i] * b);
    out.c[1][i] = times_i(k3[i] * a - k1[i] * c);
    out.c[2][i] = times_i(k1[i] * b - k2[i] * a);
  }
  return out;
}

SpectralScalarField laplacian(const SpectralScalarField& g) {
  SpectralScalarField out(g.grid);
  out.c = g.c * (-g.grid->k2()).cast<Complex>();
  return out;
}

void leray_project_in_place(SpectralVectorField& f) {
  const auto& G = *f.grid;
  const RealArray &k1 = G.k(0), &k2 = G.k(1), &k3 = G.k(2);
  const RealArray& inv = G.inv_k2();
  for (Eigen::Index i = 0; i < k1.size(); ++i) {
    const Complex s = (k1[i] * f.c[0][i] + k2[i] * f.c[1][i] + k3[i] * f.c[2][i]) * inv[i];
    f.c[0][i] -= k1[i] * s;
    f.c[1][i] -= k2[i] * s;
    f.c[2][i] -= k3[i] * s;
  }
}

SpectralVectorField leray_project(const SpectralVectorField& f) {
  SpectralVectorField out = f;
  leray_project_in_place(out);
  return out;
}

SpectralScalarField dealias(SpectralScalarField f) {
  const RealArray& m = f.grid->dealias_mask();
  for (Eigen::Index i = 0; i < m.size(); ++i)
    if (m[i] == 0.0) f.c[i] = 0.0;
  return f;
}

SpectralVectorField dealias(SpectralVectorField f) {
  const RealArray& m = f.grid->dealias_mask();
  for (auto& comp : f.c)
    for (Eigen::Index i = 0; i < m.size(); ++i)
      if (m[i] == 0.0) comp[i] = 0.0;
  return f;
}

SpectralScalarField pressure_source(const SpectralVectorField& zp, const SpectralVectorField& zm) {
  require_same_grid(zp.grid, zm.grid, "pressure_source");
  const GridPtr& g = zp.grid;
  RealScalarField source(g);
  SpectralScalarField tmp(g);
  RealArray a(static_cast<Eigen::Index>(g->physical_size()));
  RealArray b(static_cast<Eigen::Index>(g->physical_size()));
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      const RealArray& ki = g->k(i);
      const RealArray& kj = g->k(j);
      for (Eigen::Index q = 0; q < ki.size(); ++q) tmp.c[q] = times_i(ki[q] * zm.c[j][q]);
      g->inverse(tmp.c.data(), a.data());
      for (Eigen::Index q = 0; q < kj.size(); ++q) tmp.c[q] = times_i(kj[q] * zp.c[i][q]);
      g->inverse(tmp.c.data(), b.data());
      source.v += a * b;
    }
  }
  return dealias(transform(source));
}

SpectralScalarField solve_pressure(const SpectralVectorField& zp, const SpectralVectorField& zm) {
  SpectralScalarField p = pressure_source(zp, zm);
  p.c *= p.grid->inv_k2().cast<Complex>();
  p.c[0] = 0.0;
  return p;
}

// ---------------------------------------------------------------------------
// x3 translation and off-grid evaluation

SpectralVectorField shift_x3(const SpectralVectorField& f, double s) {
  const auto& G = *f.grid;
  const int n3 = G.n(2);
  const double L3 = G.domain().L[2];
  ComplexArray phase(G.nh());
  for (int i3 = 0; i3 < G.nh(); ++i3) {
    const double k = two_pi * i3 / L3;
    if (i3 == 0) phase[i3] = 1.0;
    else if (2 * i3 == n3) phase[i3] = std::cos(k * s);
    else phase[i3] = std::polar(1.0, k * s);
  }
  SpectralVectorField out(f.grid);
  const std::size_t rows = std::size_t(G.n(0)) * G.n(1);
  for (int a = 0; a < 3; ++a) {
    for (std::size_t r = 0; r < rows; ++r) {
      out.c[a].segment(static_cast<Eigen::Index>(r * G.nh()), G.nh()) =
          f.c[a].segment(static_cast<Eigen::Index>(r * G.nh()), G.nh()) * phase;
    }
  }
  return out;
}

Vec3 interpolate_x3(const SpectralVectorField& f, int i1, int i2, double x3) {
  const auto& G = *f.grid;
  const auto& d = G.domain();
  const int n3 = G.n(2);
  // Column coefficients: collapse (m1, m2) at the grid point (i1, i2).
  std::vector<Complex> e1(G.n(0)), e2(G.n(1));
  for (int j = 0; j < G.n(0); ++j) e1[j] = std::polar(1.0, two_pi * G.mode(0, j) * i1 / G.n(0));
  for (int j = 0; j < G.n(1); ++j) e2[j] = std::polar(1.0, two_pi * G.mode(1, j) * i2 / G.n(1));
  const double xi = x3 - d.coord(2, 0);
  Vec3 out = Vec3::Zero();
  for (int a = 0; a < 3; ++a) {
    double acc = 0.0;
    for (int i3 = 0; i3 < G.nh(); ++i3) {
      Complex column = 0.0;
      for (int j1 = 0; j1 < G.n(0); ++j1) {
        Complex row = 0.0;
        for (int j2 = 0; j2 < G.n(1); ++j2) row += f.c[a][G.spectral_index(j1, j2, i3)] * e2[j2];
        column += row * e1[j1];
      }
      const double k = two_pi * i3 / d.L[2];
      if (i3 == 0) acc += column.real();
      else if (2 * i3 == n3) acc += column.real() * std::cos(k * xi);
      else acc += 2.0 * (column * std::polar(1.0, k * xi)).real();
    }
    out[a] = acc;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Checks and norms

namespace {

template <class Getter>
double plane_defect(const SpectralGrid& G, Getter get) {
  double worst = 0.0;
  for (int i3 : {0, G.n(2) / 2}) {
    for (int i1 = 0; i1 < G.n(0); ++i1) {
      const int j1 = (G.n(0) - i1) % G.n(0);
      for (int i2 = 0; i2 < G.n(1); ++i2) {
        const int j2 = (G.n(1) - i2) % G.n(1);
        const Complex a = get(G.spectral_index(i1, i2, i3));
        const Complex b = get(G.spectral_index(j1, j2, i3));
        worst = std::max(worst, std::abs(a - std::conj(b)));
      }
    }
  }
  return worst;
}

} // namespace

double hermitian_defect(const SpectralVectorField& f) {
  double worst = 0.0;
  for (int a = 0; a < 3; ++a) {
    worst = std::max(worst, plane_defect(*f.grid, [&](std::size_t i) { return f.c[a][i]; }));
  }
  return worst;
}

double hermitian_defect(const SpectralScalarField& f) {
  return plane_defect(*f.grid, [&](std::size_t i) { return f.c[i]; });
}

double max_divergence(const SpectralVectorField& f) {
  return inverse(divergence(f)).v.abs().maxCoeff();
}

double parseval_norm_squared(const SpectralVectorField& f) {
  const auto& G = *f.grid;
  double s = 0.0;
  for (int a = 0; a < 3; ++a) s += (G.parseval_weight() * f.c[a].abs2()).sum();
  return s * G.domain().volume();
}

double quadrature_norm_squared(const RealVectorField& f) {
  double s = 0.0;
  for (int a = 0; a < 3; ++a) s += f.c[a].square().sum();
  return s * f.grid->domain().cell_volume();
}

double max_abs(const SpectralVectorField& f) { return inverse(f).max_magnitude(); }

} // namespace alfven
