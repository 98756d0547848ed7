#include "pqsim/devices.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <string>

#include "pqsim/entropy.hpp"
#include "pqsim/error.hpp"
#include "pqsim/random.hpp"

namespace pqsim {

namespace {

constexpr double kMatchTol = 1e-9;
constexpr double kBasisTol = 1e-9;
constexpr double kTieTol = 1e-9;

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

double maybe_quantize(double x, const std::optional<int>& m) { return m ? quantize(x, *m) : x; }

Matrix quantize_matrix(const Matrix& in, const std::optional<int>& m) {
  if (!m) return in;
  Matrix out(in.rows(), in.cols());
  for (Eigen::Index i = 0; i < in.rows(); ++i) {
    for (Eigen::Index j = 0; j < in.cols(); ++j) {
      out(i, j) = Complex(quantize(in(i, j).real(), *m), quantize(in(i, j).imag(), *m));
    }
  }
  return out;
}

bool is_multiple(double x, int m) {
  const double y = std::ldexp(x, m);
  return std::isfinite(y) && y == std::floor(y);
}

Matrix basis_matrix(const std::optional<OrthonormalBasis>& basis, int dim) {
  return basis ? basis->columns() : Matrix(Matrix::Identity(dim, dim));
}

int target_dim(const FactorSpace& space, const Subsystems& target) {
  int d = 1;
  for (std::size_t f : normalize_subsystems(space, target)) d *= space.dim(f);
  return d;
}

void require_precision(const std::optional<int>& m, const char* what) {
  if (m && *m < 1) throw ContractViolation(std::string(what) + ": precision must be >= 1");
}

void require_sharpness(const std::optional<double>& k, const char* what) {
  if (k && !(*k > 0.0)) throw ContractViolation(std::string(what) + ": sharpness k must be > 0");
}

void require_dim(int have, int want, const char* what) {
  if (have != want) {
    throw ContractViolation(std::string(what) + ": parameter dimension " + std::to_string(have) +
                            " does not match target dimension " + std::to_string(want));
  }
}

std::vector<double> cluster_weights(const DensityMatrix& rho, const HermitianObservable& obs) {
  std::vector<double> w;
  for (const auto& c : obs.clusters()) {
    w.push_back(std::max(0.0, (c.projector * rho.matrix()).trace().real()));
  }
  return w;
}

Outcome sample_from(const std::vector<std::pair<Outcome, double>>& dist, RandomStream& rng) {
  std::vector<double> probs;
  probs.reserve(dist.size());
  for (const auto& [o, p] : dist) probs.push_back(p);
  return dist[rng.categorical(probs)].first;
}

std::vector<std::pair<Outcome, double>> bit_distribution(double p_one) {
  return {{Bit{0}, 1.0 - p_one}, {Bit{1}, p_one}};
}

double overlap_probability(const DensityMatrix& rho, const Vector& phi) {
  return std::clamp(phi.dot(rho.matrix() * phi).real(), 0.0, 1.0);
}

double certifier_entropy(const DensityMatrix& rho, const EntropyCertifierSpec& spec) {
  return entropy(rho, spec.alpha);
}

std::vector<std::pair<Outcome, double>> eigenvalue_distribution(const DensityMatrix& rho,
                                                                const EigenvalueSamplerSpec& spec) {
  const auto& clusters = spec.observable.clusters();
  const std::vector<double> w = cluster_weights(rho, spec.observable);
  std::vector<std::pair<Outcome, double>> dist;
  double excluded = 0.0;
  for (std::size_t i = 0; i < clusters.size(); ++i) {
    const std::int64_t label = spec.label_offset + static_cast<std::int64_t>(i);
    switch (spec.variant) {
      case EigenvalueVariant::Value:
        dist.emplace_back(RealValue{maybe_quantize(clusters[i].value, spec.precision)}, w[i]);
        break;
      case EigenvalueVariant::IntegerLabel:
        dist.emplace_back(IntegerLabel{label}, w[i]);
        break;
      case EigenvalueVariant::Finite:
        if (std::llabs(label) <= *spec.precision) {
          dist.emplace_back(IntegerLabel{label}, w[i]);
        } else {
          excluded += w[i];
        }
        break;
    }
  }
  if (spec.variant == EigenvalueVariant::Finite) {
    const std::int64_t last = spec.label_offset + static_cast<std::int64_t>(clusters.size()) - 1;
    if (spec.label_offset < -*spec.precision || last > *spec.precision) {
      dist.emplace_back(Overflow{excluded}, excluded);
    }
  }
  return dist;
}

std::vector<std::pair<Outcome, double>> basis_select_distribution(const DensityMatrix& rho,
                                                                  const BasisSelectSpec& spec) {
  const int d = spec.basis.dim();
  std::vector<double> w(static_cast<std::size_t>(d));
  for (int i = 0; i < d; ++i) w[static_cast<std::size_t>(i)] = overlap_probability(rho, spec.basis.vector(i));
  const double best = *std::max_element(w.begin(), w.end());
  std::vector<double> probs(w.size());
  if (!spec.sharpness) {
    for (std::size_t i = 0; i < w.size(); ++i) probs[i] = (best - w[i] < kTieTol) ? 1.0 : 0.0;
  } else {
    // Shift by the maximum before exponentiating; the normalization absorbs it.
    for (std::size_t i = 0; i < w.size(); ++i) probs[i] = std::exp(*spec.sharpness * (w[i] - best));
  }
  const double total = std::accumulate(probs.begin(), probs.end(), 0.0);
  std::vector<std::pair<Outcome, double>> dist;
  for (std::size_t i = 0; i < w.size(); ++i) {
    dist.emplace_back(IntegerLabel{static_cast<std::int64_t>(i)}, probs[i] / total);
  }
  return dist;
}

}  // namespace

// ---------------------------------------------------------------------------

std::string to_string(const Outcome& outcome) {
  char buf[64];
  return std::visit(
      Overloaded{
          [&](const RealValue& v) {
            std::snprintf(buf, sizeof buf, "real:%.17g", v.value);
            return std::string(buf);
          },
          [](const IntegerLabel& v) { return "label:" + std::to_string(v.label); },
          [](const Bit& v) { return "bit:" + std::to_string(v.value); },
          [&](const MatrixDescription& v) {
            std::string s = "matrix:[";
            for (Eigen::Index i = 0; i < v.entries.rows(); ++i) {
              s += i ? ",[" : "[";
              for (Eigen::Index j = 0; j < v.entries.cols(); ++j) {
                const Complex z = v.entries(i, j);
                std::snprintf(buf, sizeof buf, "%s%.17g%+.17gi", j ? "," : "", z.real(), z.imag());
                s += buf;
              }
              s += "]";
            }
            return s + "]";
          },
          [](const Overflow&) { return std::string("overflow"); },
      },
      outcome);
}

bool outcomes_match(const Outcome& a, const Outcome& b) {
  if (a.index() != b.index()) return false;
  return std::visit(
      Overloaded{
          [&](const RealValue& x) {
            return std::abs(x.value - std::get<RealValue>(b).value) <= kMatchTol;
          },
          [&](const IntegerLabel& x) { return x == std::get<IntegerLabel>(b); },
          [&](const Bit& x) { return x == std::get<Bit>(b); },
          [&](const MatrixDescription& x) {
            const auto& y = std::get<MatrixDescription>(b);
            if (x.entries.rows() != y.entries.rows() || x.entries.cols() != y.entries.cols()) {
              return false;
            }
            if (x.precision != y.precision) return false;
            if (x.precision) return x.entries == y.entries;
            return linalg::max_abs(x.entries - y.entries) <= kMatchTol;
          },
          [](const Overflow&) { return true; },
      },
      a);
}

OrthonormalBasis::OrthonormalBasis(Matrix columns) : columns_(std::move(columns)) {
  if (columns_.rows() < 1 || !linalg::is_unitary(columns_, kBasisTol)) {
    throw ContractViolation("OrthonormalBasis: columns are not an orthonormal basis");
  }
}

OrthonormalBasis OrthonormalBasis::computational(int dim) {
  return OrthonormalBasis(Matrix::Identity(dim, dim));
}

MatrixFunction MatrixFunction::power(int n) {
  if (n < 1) throw ContractViolation("MatrixFunction::power: exponent must be >= 1");
  return {Kind::Power, n};
}

Matrix MatrixFunction::apply(const Matrix& m) const {
  return kind == Kind::Identity ? m : linalg::matrix_power(m, exponent);
}

DeviceKind kind_of(const DeviceSpec& spec) { return static_cast<DeviceKind>(spec.index()); }

std::string_view kind_name(DeviceKind kind) {
  switch (kind) {
    case DeviceKind::Readout: return "Readout";
    case DeviceKind::FunctionReadout: return "FunctionReadout";
    case DeviceKind::ExpectationReadout: return "ExpectationReadout";
    case DeviceKind::EigenvalueSampler: return "EigenvalueSampler";
    case DeviceKind::PovmSampler: return "PovmSampler";
    case DeviceKind::OverlapTest: return "OverlapTest";
    case DeviceKind::BasisSelect: return "BasisSelect";
    case DeviceKind::EntropyMeter: return "EntropyMeter";
    case DeviceKind::EntropyCertifier: return "EntropyCertifier";
    case DeviceKind::EntanglementAnalyse: return "EntanglementAnalyse";
    case DeviceKind::UncertaintySampler: return "UncertaintySampler";
  }
  return "Unknown";
}

std::optional<DeviceKind> parse_kind(std::string_view name) {
  auto fold = [](std::string_view s) {
    std::string out;
    for (char c : s) {
      if (c == '_' || c == '-') continue;
      out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
    return out;
  };
  const std::string wanted = fold(name);
  for (int k = 0; k <= static_cast<int>(DeviceKind::UncertaintySampler); ++k) {
    if (fold(kind_name(static_cast<DeviceKind>(k))) == wanted) return static_cast<DeviceKind>(k);
  }
  return std::nullopt;
}

void validate(const DeviceSpec& spec, const FactorSpace& space, const Subsystems& target) {
  const int d = target_dim(space, target);
  std::visit(
      Overloaded{
          [&](const ReadoutSpec& s) {
            if (s.basis) require_dim(s.basis->dim(), d, "Readout basis");
            require_precision(s.precision, "Readout");
          },
          [&](const FunctionReadoutSpec& s) {
            if (s.basis) require_dim(s.basis->dim(), d, "FunctionReadout basis");
            require_precision(s.precision, "FunctionReadout");
          },
          [&](const ExpectationReadoutSpec& s) {
            require_dim(s.observable.dim(), d, "ExpectationReadout observable");
            require_precision(s.precision, "ExpectationReadout");
          },
          [&](const EigenvalueSamplerSpec& s) {
            require_dim(s.observable.dim(), d, "EigenvalueSampler observable");
            require_precision(s.precision, "EigenvalueSampler");
            if (s.variant == EigenvalueVariant::Finite && !s.precision) {
              throw ContractViolation("EigenvalueSampler: finite variant needs a label bound m");
            }
          },
          [&](const PovmSamplerSpec& s) {
            require_dim(s.povm.dim(), d, "PovmSampler POVM");
            require_precision(s.finite_m, "PovmSampler");
          },
          [&](const OverlapTestSpec& s) {
            require_dim(static_cast<int>(s.target.size()), d, "OverlapTest state");
            if (std::abs(s.target.norm() - 1.0) > kBasisTol) {
              throw ContractViolation("OverlapTest: target state is not normalized");
            }
            if (!(s.threshold > 0.0 && s.threshold < 1.0)) {
              throw ContractViolation("OverlapTest: threshold a must lie in (0, 1)");
            }
            require_sharpness(s.sharpness, "OverlapTest");
          },
          [&](const BasisSelectSpec& s) {
            require_dim(s.basis.dim(), d, "BasisSelect basis");
            require_sharpness(s.sharpness, "BasisSelect");
          },
          [&](const EntropyMeterSpec& s) {
            if (!(s.alpha >= 0.0)) throw ContractViolation("EntropyMeter: alpha must be >= 0");
            require_precision(s.precision, "EntropyMeter");
          },
          [&](const EntropyCertifierSpec& s) {
            if (!(s.alpha >= 0.0)) throw ContractViolation("EntropyCertifier: alpha must be >= 0");
            const double bound = std::log2(static_cast<double>(d));
            if (!(s.entropy_threshold > 0.0 && s.entropy_threshold < bound)) {
              char buf[160];
              std::snprintf(buf, sizeof buf,
                            "EntropyCertifier: threshold E = %g outside allowed range 0 < E < %g "
                            "(log2 of target dimension %d)",
                            s.entropy_threshold, bound, d);
              throw ContractViolation(buf);
            }
            require_sharpness(s.sharpness, "EntropyCertifier");
          },
          [&](const EntanglementAnalyseSpec& s) {
            if (target.size() != 1) {
              throw ContractViolation("EntanglementAnalyse: target must be a single factor");
            }
            if (s.basis) require_dim(s.basis->dim(), d, "EntanglementAnalyse basis");
            require_precision(s.precision, "EntanglementAnalyse");
          },
          [&](const UncertaintySamplerSpec& s) {
            require_dim(s.observable.dim(), d, "UncertaintySampler observable");
            require_precision(s.precision, "UncertaintySampler");
          },
      },
      spec);
}

bool is_stochastic(const DeviceSpec& spec) {
  switch (kind_of(spec)) {
    case DeviceKind::EigenvalueSampler:
    case DeviceKind::PovmSampler:
    case DeviceKind::BasisSelect:
    case DeviceKind::UncertaintySampler:
      return true;
    case DeviceKind::OverlapTest:
      return std::get<OverlapTestSpec>(spec).sharpness.has_value();
    case DeviceKind::EntropyCertifier:
      return std::get<EntropyCertifierSpec>(spec).sharpness.has_value();
    default:
      return false;
  }
}

// ---------------------------------------------------------------------------

MatrixDescription readout_density(const PureState& global, const Subsystems& target,
                                  const ReadoutSpec& spec) {
  validate(spec, global.space(), target);
  const DensityMatrix rho = reduced_state(global, target);
  const Matrix b = basis_matrix(spec.basis, rho.dim());
  return {quantize_matrix(b.adjoint() * rho.matrix() * b, spec.precision), spec.precision};
}

MatrixDescription function_readout(const PureState& global, const Subsystems& target,
                                   const FunctionReadoutSpec& spec) {
  validate(spec, global.space(), target);
  const DensityMatrix rho = reduced_state(global, target);
  const Matrix b = basis_matrix(spec.basis, rho.dim());
  const Matrix value = spec.function.apply(rho.matrix());
  return {quantize_matrix(b.adjoint() * value * b, spec.precision), spec.precision};
}

RealValue expectation_readout(const PureState& global, const Subsystems& target,
                              const ExpectationReadoutSpec& spec) {
  validate(spec, global.space(), target);
  const DensityMatrix rho = reduced_state(global, target);
  const double value = (spec.observable.matrix() * rho.matrix()).trace().real();
  return {maybe_quantize(value, spec.precision)};
}

Outcome sample_eigenvalue(const PureState& global, const Subsystems& target,
                          const EigenvalueSamplerSpec& spec, RandomStream& rng) {
  validate(spec, global.space(), target);
  return sample_from(eigenvalue_distribution(reduced_state(global, target), spec), rng);
}

Bit sample_state_projection(const PureState& global, const Subsystems& target, const Vector& phi,
                            RandomStream& rng) {
  if (std::abs(phi.norm() - 1.0) > kBasisTol) {
    throw ContractViolation("state projection: phi is not normalized");
  }
  const EigenvalueSamplerSpec spec{HermitianObservable(linalg::outer(phi)),
                                   EigenvalueVariant::Value, std::nullopt, 0};
  const Outcome o = sample_eigenvalue(global, target, spec, rng);
  return Bit{std::get<RealValue>(o).value > 0.5 ? 1 : 0};
}

RealValue sample_uncertainty(const PureState& global, const Subsystems& target,
                             const UncertaintySamplerSpec& spec, RandomStream& rng) {
  validate(spec, global.space(), target);
  return std::get<RealValue>(sample_from(outcome_distribution(spec, global, target), rng));
}

Outcome sample_povm(const PureState& global, const Subsystems& target, const PovmSamplerSpec& spec,
                    RandomStream& rng) {
  validate(spec, global.space(), target);
  return sample_from(outcome_distribution(spec, global, target), rng);
}

Bit overlap_test(const PureState& global, const Subsystems& target, const OverlapTestSpec& spec,
                 RandomStream& rng) {
  validate(spec, global.space(), target);
  const double q = overlap_probability(reduced_state(global, target), spec.target);
  if (!spec.sharpness) return Bit{q > spec.threshold ? 1 : 0};
  return Bit{rng.bernoulli(logistic(*spec.sharpness * (q - spec.threshold))) ? 1 : 0};
}

IntegerLabel basis_select(const PureState& global, const Subsystems& target,
                          const BasisSelectSpec& spec, RandomStream& rng) {
  validate(spec, global.space(), target);
  return std::get<IntegerLabel>(
      sample_from(basis_select_distribution(reduced_state(global, target), spec), rng));
}

RealValue entropy_meter(const PureState& global, const Subsystems& target,
                        const EntropyMeterSpec& spec) {
  validate(spec, global.space(), target);
  return {maybe_quantize(entropy(reduced_state(global, target), spec.alpha), spec.precision)};
}

Bit entropy_certify(const PureState& global, const Subsystems& target,
                    const EntropyCertifierSpec& spec, RandomStream& rng) {
  validate(spec, global.space(), target);
  const double s = certifier_entropy(reduced_state(global, target), spec);
  if (!spec.sharpness) return Bit{s > spec.entropy_threshold ? 1 : 0};
  return Bit{rng.bernoulli(logistic(*spec.sharpness * (s - spec.entropy_threshold))) ? 1 : 0};
}

MatrixDescription entanglement_analyse(const PureState& global, std::size_t target_factor,
                                       const EntanglementAnalyseSpec& spec) {
  const Subsystems target{target_factor};
  validate(spec, global.space(), target);
  const SubsystemSplit split(global.space(), target);
  const Matrix psi = split.reshape(global.amplitudes());
  const int d = split.kept_dim();
  const Matrix b = basis_matrix(spec.basis, d);

  // phi_i = <b_i|psi>, a vector on the remaining factors.
  std::vector<Vector> partial(static_cast<std::size_t>(d), Vector::Zero(split.rest_dim()));
  for (int i = 0; i < d; ++i) {
    for (int a = 0; a < d; ++a) {
      partial[static_cast<std::size_t>(i)] += std::conj(b(a, i)) * psi.row(a).transpose();
    }
  }
  Matrix m(d, d);
  for (int i = 0; i < d; ++i) {
    for (int j = 0; j < d; ++j) {
      m(i, j) = partial[static_cast<std::size_t>(i)].dot(partial[static_cast<std::size_t>(j)]);
    }
  }
  return {quantize_matrix(m, spec.precision), spec.precision};
}

Outcome apply_device(const DeviceSpec& spec, const PureState& global, const Subsystems& target,
                     RandomStream& rng) {
  return std::visit(
      Overloaded{
          [&](const ReadoutSpec& s) -> Outcome { return readout_density(global, target, s); },
          [&](const FunctionReadoutSpec& s) -> Outcome { return function_readout(global, target, s); },
          [&](const ExpectationReadoutSpec& s) -> Outcome {
            return expectation_readout(global, target, s);
          },
          [&](const EigenvalueSamplerSpec& s) -> Outcome {
            return sample_eigenvalue(global, target, s, rng);
          },
          [&](const PovmSamplerSpec& s) -> Outcome { return sample_povm(global, target, s, rng); },
          [&](const OverlapTestSpec& s) -> Outcome { return overlap_test(global, target, s, rng); },
          [&](const BasisSelectSpec& s) -> Outcome { return basis_select(global, target, s, rng); },
          [&](const EntropyMeterSpec& s) -> Outcome { return entropy_meter(global, target, s); },
          [&](const EntropyCertifierSpec& s) -> Outcome {
            return entropy_certify(global, target, s, rng);
          },
          [&](const EntanglementAnalyseSpec& s) -> Outcome {
            if (target.size() != 1) {
              throw ContractViolation("EntanglementAnalyse: target must be a single factor");
            }
            return entanglement_analyse(global, target.front(), s);
          },
          [&](const UncertaintySamplerSpec& s) -> Outcome {
            return sample_uncertainty(global, target, s, rng);
          },
      },
      spec);
}

std::vector<std::pair<Outcome, double>> outcome_distribution(const DeviceSpec& spec,
                                                             const PureState& global,
                                                             const Subsystems& target) {
  validate(spec, global.space(), target);
  const DensityMatrix rho = reduced_state(global, target);
  using Dist = std::vector<std::pair<Outcome, double>>;
  return std::visit(
      Overloaded{
          [&](const ReadoutSpec& s) -> Dist { return {{readout_density(global, target, s), 1.0}}; },
          [&](const FunctionReadoutSpec& s) -> Dist {
            return {{function_readout(global, target, s), 1.0}};
          },
          [&](const ExpectationReadoutSpec& s) -> Dist {
            return {{expectation_readout(global, target, s), 1.0}};
          },
          [&](const EigenvalueSamplerSpec& s) -> Dist { return eigenvalue_distribution(rho, s); },
          [&](const PovmSamplerSpec& s) -> Dist {
            const std::vector<double> probs = born_probabilities(rho, s.povm);
            Dist dist;
            double excluded = 0.0;
            for (std::size_t i = 0; i < probs.size(); ++i) {
              const auto label = static_cast<std::int64_t>(i + 1);
              if (s.finite_m && label > *s.finite_m) {
                excluded += probs[i];
              } else {
                dist.emplace_back(IntegerLabel{label}, probs[i]);
              }
            }
            if (s.finite_m && static_cast<std::int64_t>(probs.size()) > *s.finite_m) {
              dist.emplace_back(Overflow{excluded}, excluded);
            }
            return dist;
          },
          [&](const OverlapTestSpec& s) -> Dist {
            const double q = overlap_probability(rho, s.target);
            if (!s.sharpness) return {{Bit{q > s.threshold ? 1 : 0}, 1.0}};
            return bit_distribution(logistic(*s.sharpness * (q - s.threshold)));
          },
          [&](const BasisSelectSpec& s) -> Dist { return basis_select_distribution(rho, s); },
          [&](const EntropyMeterSpec& s) -> Dist { return {{entropy_meter(global, target, s), 1.0}}; },
          [&](const EntropyCertifierSpec& s) -> Dist {
            const double e = certifier_entropy(rho, s);
            if (!s.sharpness) return {{Bit{e > s.entropy_threshold ? 1 : 0}, 1.0}};
            return bit_distribution(logistic(*s.sharpness * (e - s.entropy_threshold)));
          },
          [&](const EntanglementAnalyseSpec& s) -> Dist {
            return {{entanglement_analyse(global, target.front(), s), 1.0}};
          },
          [&](const UncertaintySamplerSpec& s) -> Dist {
            const double mean = (s.observable.matrix() * rho.matrix()).trace().real();
            const std::vector<double> w = cluster_weights(rho, s.observable);
            Dist dist;
            for (std::size_t i = 0; i < w.size(); ++i) {
              dist.emplace_back(RealValue{maybe_quantize(s.observable.clusters()[i].value - mean,
                                                         s.precision)},
                                w[i]);
            }
            return dist;
          },
      },
      spec);
}

bool in_outcome_set(const DeviceSpec& spec, int target_dim, const Outcome& selector) {
  auto matrix_ok = [&](const std::optional<int>& m) {
    const auto* d = std::get_if<MatrixDescription>(&selector);
    if (!d || d->entries.rows() != target_dim || d->entries.cols() != target_dim) return false;
    if (d->precision != m) return false;
    if (!m) return true;
    for (Eigen::Index i = 0; i < d->entries.size(); ++i) {
      const Complex z = d->entries.data()[i];
      if (!is_multiple(z.real(), *m) || !is_multiple(z.imag(), *m)) return false;
    }
    return true;
  };
  auto real_in = [&](double lo, double hi, const std::optional<int>& m) {
    const auto* r = std::get_if<RealValue>(&selector);
    if (!r) return false;
    const double slack = m ? std::ldexp(1.0, -*m) : kMatchTol;
    if (r->value < lo - slack || r->value > hi + slack) return false;
    return !m || is_multiple(r->value, *m);
  };
  auto spectrum_range = [](const HermitianObservable& obs) {
    return std::pair{obs.clusters().front().value, obs.clusters().back().value};
  };
  auto label_in = [&](std::int64_t lo, std::int64_t hi) {
    const auto* l = std::get_if<IntegerLabel>(&selector);
    return l && l->label >= lo && l->label <= hi;
  };
  const bool is_bit = std::holds_alternative<Bit>(selector) &&
                      (std::get<Bit>(selector).value == 0 || std::get<Bit>(selector).value == 1);

  return std::visit(
      Overloaded{
          [&](const ReadoutSpec& s) { return matrix_ok(s.precision); },
          [&](const FunctionReadoutSpec& s) { return matrix_ok(s.precision); },
          [&](const EntanglementAnalyseSpec& s) { return matrix_ok(s.precision); },
          [&](const ExpectationReadoutSpec& s) {
            const auto [lo, hi] = spectrum_range(s.observable);
            return real_in(lo, hi, s.precision);
          },
          [&](const EigenvalueSamplerSpec& s) {
            const auto n = static_cast<std::int64_t>(s.observable.clusters().size());
            switch (s.variant) {
              case EigenvalueVariant::Value: {
                const auto* r = std::get_if<RealValue>(&selector);
                if (!r) return false;
                for (const auto& c : s.observable.clusters()) {
                  if (outcomes_match(RealValue{maybe_quantize(c.value, s.precision)}, *r)) return true;
                }
                return false;
              }
              case EigenvalueVariant::IntegerLabel:
                return label_in(s.label_offset, s.label_offset + n - 1);
              case EigenvalueVariant::Finite: {
                const std::int64_t m = *s.precision;
                const std::int64_t lo = std::max(s.label_offset, -m);
                const std::int64_t hi = std::min(s.label_offset + n - 1, m);
                if (std::holds_alternative<Overflow>(selector)) return s.label_offset < -m || s.label_offset + n - 1 > m;
                return label_in(lo, hi);
              }
            }
            return false;
          },
          [&](const UncertaintySamplerSpec& s) {
            const auto [lo, hi] = spectrum_range(s.observable);
            return real_in(lo - hi, hi - lo, s.precision);
          },
          [&](const PovmSamplerSpec& s) {
            const auto n = static_cast<std::int64_t>(s.povm.size());
            if (std::holds_alternative<Overflow>(selector)) return s.finite_m && n > *s.finite_m;
            return label_in(1, s.finite_m ? std::min<std::int64_t>(n, *s.finite_m) : n);
          },
          [&](const OverlapTestSpec&) { return is_bit; },
          [&](const EntropyCertifierSpec&) { return is_bit; },
          [&](const BasisSelectSpec& s) { return label_in(0, s.basis.dim() - 1); },
          [&](const EntropyMeterSpec& s) {
            return real_in(0.0, std::log2(static_cast<double>(target_dim)), s.precision);
          },
      },
      spec);
}

double logistic(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace pqsim
