#include "testkit.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include <Eigen/Eigenvalues>
#include <boost/math/special_functions/gamma.hpp>

namespace testkit {

std::uint64_t Gen::next() {
  std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

double Gen::uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

double Gen::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

int Gen::integer(int lo, int hi) {
  const auto span = static_cast<std::uint64_t>(hi - lo + 1);
  return lo + static_cast<int>(next() % span);
}

double Gen::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  spare_ = r * std::sin(2.0 * std::numbers::pi * u2);
  has_spare_ = true;
  return r * std::cos(2.0 * std::numbers::pi * u2);
}

Complex Gen::complex_normal() {
  const double re = normal();
  return {re, normal()};
}

Vector Gen::unit_vector(int dim) {
  Vector v(dim);
  for (int i = 0; i < dim; ++i) v(i) = complex_normal();
  return v / v.norm();
}

Matrix Gen::unitary(int dim) {
  Matrix u(dim, dim);
  for (int j = 0; j < dim; ++j) {
    Vector v(dim);
    for (int i = 0; i < dim; ++i) v(i) = complex_normal();
    for (int k = 0; k < j; ++k) {
      Complex c = 0.0;
      for (int i = 0; i < dim; ++i) c += std::conj(u(i, k)) * v(i);
      for (int i = 0; i < dim; ++i) v(i) -= c * u(i, k);
    }
    u.col(j) = v / v.norm();
  }
  return u;
}

Matrix Gen::hermitian(int dim) {
  Matrix g(dim, dim);
  for (int i = 0; i < dim; ++i) {
    for (int j = 0; j < dim; ++j) g(i, j) = complex_normal();
  }
  return (g + g.adjoint()) / 2.0;
}

std::vector<double> Gen::simplex(std::size_t n) {
  std::vector<double> w(n);
  double total = 0.0;
  for (auto& x : w) {
    x = -std::log(1.0 - uniform()) + 1e-3;
    total += x;
  }
  for (auto& x : w) x /= total;
  return w;
}

std::vector<int> Gen::dims(int max_total, int max_factors) {
  for (;;) {
    const int n = integer(1, max_factors);
    std::vector<int> d;
    int total = 1;
    for (int i = 0; i < n; ++i) {
      d.push_back(integer(2, 4));
      total *= d.back();
    }
    if (total <= max_total) return d;
  }
}

pqsim::PureState Gen::state(const pqsim::FactorSpace& space) {
  return pqsim::PureState(space, unit_vector(space.total_dim()));
}

pqsim::PureState Gen::product_state(const pqsim::FactorSpace& space) {
  Vector v = unit_vector(space.dim(0));
  for (std::size_t f = 1; f < space.size(); ++f) v = kron(v, unit_vector(space.dim(f)));
  return pqsim::PureState(space, v / v.norm());
}

Matrix Gen::density(int dim, int rank) {
  const std::vector<double> w = simplex(static_cast<std::size_t>(rank));
  Matrix rho = Matrix::Zero(dim, dim);
  for (int r = 0; r < rank; ++r) {
    const Vector v = unit_vector(dim);
    rho += w[static_cast<std::size_t>(r)] * v * v.adjoint();
  }
  return (rho + rho.adjoint()) / 2.0;
}

std::vector<Matrix> Gen::povm(int dim, std::size_t count) {
  std::vector<Matrix> raw;
  Matrix total = Matrix::Zero(dim, dim);
  for (std::size_t i = 0; i < count; ++i) {
    Matrix g(dim, dim);
    for (int a = 0; a < dim; ++a) {
      for (int b = 0; b < dim; ++b) g(a, b) = complex_normal();
    }
    raw.push_back(g * g.adjoint());
    total += raw.back();
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es(total);
  const Matrix inv_sqrt = es.eigenvectors() *
                          es.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal() *
                          es.eigenvectors().adjoint();
  for (auto& a : raw) {
    a = inv_sqrt * a * inv_sqrt;
    a = (a + a.adjoint()) / 2.0;
  }
  return raw;
}

BuiltObservable build_observable(const Matrix& u, const std::vector<double>& eigenvalues) {
  BuiltObservable out;
  const auto n = static_cast<int>(eigenvalues.size());
  Matrix a = Matrix::Zero(n, n);
  for (int i = 0; i < n; ++i) a += eigenvalues[static_cast<std::size_t>(i)] * u.col(i) * u.col(i).adjoint();
  out.matrix = (a + a.adjoint()) / 2.0;
  out.values = eigenvalues;
  std::sort(out.values.begin(), out.values.end());
  out.values.erase(std::unique(out.values.begin(), out.values.end()), out.values.end());
  for (double v : out.values) {
    Matrix p = Matrix::Zero(n, n);
    for (int i = 0; i < n; ++i) {
      if (eigenvalues[static_cast<std::size_t>(i)] == v) p += u.col(i) * u.col(i).adjoint();
    }
    out.projectors.push_back(p);
  }
  return out;
}

Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      for (Eigen::Index k = 0; k < b.rows(); ++k) {
        for (Eigen::Index l = 0; l < b.cols(); ++l) {
          out(i * b.rows() + k, j * b.cols() + l) = a(i, j) * b(k, l);
        }
      }
    }
  }
  return out;
}

Vector kron(const Vector& a, const Vector& b) {
  Vector out(a.size() * b.size());
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    for (Eigen::Index k = 0; k < b.size(); ++k) out(i * b.size() + k) = a(i) * b(k);
  }
  return out;
}

namespace {

std::vector<int> digits(int flat, const std::vector<int>& dims) {
  std::vector<int> d(dims.size());
  for (std::size_t f = dims.size(); f-- > 0;) {
    d[f] = flat % dims[f];
    flat /= dims[f];
  }
  return d;
}

}  // namespace

Matrix partial_trace(const Vector& psi, const std::vector<int>& dims, const std::vector<std::size_t>& keep) {
  std::vector<bool> kept(dims.size(), false);
  for (auto k : keep) kept[k] = true;
  int kept_dim = 1;
  for (std::size_t f = 0; f < dims.size(); ++f) {
    if (kept[f]) kept_dim *= dims[f];
  }
  Matrix rho = Matrix::Zero(kept_dim, kept_dim);
  const auto total = static_cast<int>(psi.size());
  for (int i = 0; i < total; ++i) {
    const auto di = digits(i, dims);
    for (int j = 0; j < total; ++j) {
      const auto dj = digits(j, dims);
      bool same_rest = true;
      int ki = 0;
      int kj = 0;
      for (std::size_t f = 0; f < dims.size(); ++f) {
        if (kept[f]) {
          ki = ki * dims[f] + di[f];
          kj = kj * dims[f] + dj[f];
        } else if (di[f] != dj[f]) {
          same_rest = false;
        }
      }
      if (same_rest) rho(ki, kj) += psi(i) * std::conj(psi(j));
    }
  }
  return rho;
}

Complex trace_product(const Matrix& a, const Matrix& b) {
  Complex t = 0.0;
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) t += a(i, j) * b(j, i);
  }
  return t;
}

double quadratic_form(const Vector& psi, const Matrix& q) {
  Complex t = 0.0;
  for (Eigen::Index i = 0; i < psi.size(); ++i) {
    for (Eigen::Index j = 0; j < psi.size(); ++j) t += std::conj(psi(i)) * q(i, j) * psi(j);
  }
  return t.real();
}

std::vector<double> eigenvalues(const Matrix& h) {
  Eigen::ComplexEigenSolver<Matrix> es(h, false);
  std::vector<double> out;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) out.push_back(es.eigenvalues()(i).real());
  std::sort(out.begin(), out.end());
  return out;
}

double entropy_bits(const Matrix& rho, double alpha) {
  const auto ev = eigenvalues(rho);
  if (std::abs(alpha - 1.0) < 1e-12) {
    double s = 0.0;
    for (double l : ev) {
      if (l > 1e-12) s -= l * std::log2(l);
    }
    return std::max(0.0, s);
  }
  double t = 0.0;
  for (double l : ev) {
    if (l > 1e-12) t += std::pow(l, alpha);
  }
  return std::max(0.0, std::log2(t) / (1.0 - alpha));
}

double shannon_bits(const std::vector<double>& p) {
  double s = 0.0;
  for (double x : p) {
    if (x > 0.0) s -= x * std::log2(x);
  }
  return s;
}

double binary_entropy(double p) { return shannon_bits({p, 1.0 - p}); }

double quantize(double x, int m) {
  const double scale = std::ldexp(1.0, m);
  const double y = x * scale;
  const double f = std::floor(y);
  const double r = y - f;
  double k = f;
  if (r > 0.5) {
    k = f + 1.0;
  } else if (r == 0.5) {
    k = std::fmod(f, 2.0) == 0.0 ? f : f + 1.0;
  }
  return k / scale;
}

double max_abs(const Matrix& m) {
  double out = 0.0;
  for (Eigen::Index i = 0; i < m.size(); ++i) out = std::max(out, std::abs(m.data()[i]));
  return out;
}

double ray_infidelity(const Vector& a, const Vector& b) { return 1.0 - std::norm(a.dot(b)); }

ChiSquare chi_square(const std::vector<std::size_t>& observed, const std::vector<double>& probabilities) {
  const double n = std::accumulate(observed.begin(), observed.end(), 0.0);
  ChiSquare out;
  std::vector<double> obs;
  std::vector<double> exp;
  double pool_o = 0.0;
  double pool_e = 0.0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    const double e = n * probabilities[i];
    if (probabilities[i] <= 0.0 && observed[i] > 0) {
      out.p_value = 0.0;
      out.statistic = INFINITY;
      return out;
    }
    pool_o += static_cast<double>(observed[i]);
    pool_e += e;
    if (pool_e >= 5.0) {
      obs.push_back(pool_o);
      exp.push_back(pool_e);
      pool_o = pool_e = 0.0;
    }
  }
  if (pool_e > 0.0 || pool_o > 0.0) {
    if (exp.empty()) {
      obs.push_back(pool_o);
      exp.push_back(pool_e);
    } else {
      obs.back() += pool_o;
      exp.back() += pool_e;
    }
  }
  if (exp.size() < 2) return out;
  for (std::size_t i = 0; i < exp.size(); ++i) out.statistic += (obs[i] - exp[i]) * (obs[i] - exp[i]) / exp[i];
  out.dof = static_cast<int>(exp.size()) - 1;
  out.p_value = boost::math::gamma_q(out.dof / 2.0, out.statistic / 2.0);
  return out;
}

}  // namespace testkit
