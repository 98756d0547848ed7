#include "pqsim/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <string>

#include "pqsim/devices.hpp"
#include "pqsim/entropy.hpp"
#include "pqsim/error.hpp"
#include "pqsim/measurement.hpp"
#include "pqsim/opf.hpp"

namespace pqsim {

namespace {

constexpr double kFidelityTol = 1e-12;
constexpr double kRankTol = 1e-9;
constexpr double kSignalTol = 1e-9;
constexpr double kNetSlack = 0.05;

Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

/// Completes the given orthonormal columns to a basis of C^dim.
Matrix complete_basis(const std::vector<Vector>& seeds, int dim) {
  Matrix basis(dim, dim);
  int filled = 0;
  auto push = [&](Vector v) {
    for (int k = 0; k < filled; ++k) v -= basis.col(k).dot(v) * basis.col(k);
    if (v.norm() < 1e-6 || filled == dim) return;
    basis.col(filled++) = v / v.norm();
  };
  for (const Vector& v : seeds) push(v);
  for (int j = 0; j < dim && filled < dim; ++j) push(Vector::Unit(dim, j));
  return basis;
}

std::vector<double> member_weights(const Ensemble& e) {
  std::vector<double> w;
  for (const auto& m : e.members()) w.push_back(m.weight);
  return w;
}

Vector bloch_to_state(const Eigen::Vector3d& r) {
  const Eigen::Vector3d n = r.normalized();
  const double theta = std::acos(std::clamp(n.z(), -1.0, 1.0));
  const double phi = std::atan2(n.y(), n.x());
  Vector v(2);
  v(0) = std::cos(theta / 2.0);
  v(1) = std::polar(std::sin(theta / 2.0), phi);
  return v;
}

double cap_angle(double epsilon) { return std::acos(1.0 - 2.0 * epsilon); }

std::size_t net_size(double epsilon) {
  const double theta = cap_angle(epsilon);
  return static_cast<std::size_t>(std::ceil(32.0 / (theta * theta)));
}

}  // namespace

std::string_view verdict_name(Verdict verdict) {
  switch (verdict) {
    case Verdict::ViolationCertified: return "VIOLATION_CERTIFIED";
    case Verdict::Consistent: return "CONSISTENT";
    case Verdict::Fail: return "FAIL";
  }
  return "FAIL";
}

OutcomeInterval wilson_interval(std::string label, std::size_t successes, std::size_t trials,
                                double z) {
  if (trials == 0) throw ContractViolation("wilson_interval: no trials");
  const double n = static_cast<double>(trials);
  const double p = static_cast<double>(successes) / n;
  const double z2 = z * z;
  const double centre = (p + z2 / (2.0 * n)) / (1.0 + z2 / n);
  const double half = z / (1.0 + z2 / n) * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n));
  return {std::move(label), p, std::max(0.0, centre - half), std::min(1.0, centre + half), trials};
}

Certificate fpvnem_refutation(int d, int m, std::size_t samples, RandomStream& rng,
                              const FpvnemOptions& options) {
  if (d < 2 || d > 4 || m < 1 || m > 8) {
    throw ContractViolation("fpvnem_refutation: needs 2 <= d <= 4 and 1 <= m <= 8");
  }
  Certificate cert;
  cert.experiment = "fpvnem";
  cert.seed = rng.seed();

  const FactorSpace space({d, d});
  const FactorSpace single({d});
  const double bound = std::ceil(std::ldexp(std::log2(static_cast<double>(d)), m)) + 1.0;
  const auto outcomes = fpvnem_outcomes(d, m);
  const Opf f0 = opf_from_device(EntropyMeterSpec{1.0, m}, space, {0}, RealValue{0.0});

  double product_dev = 0.0;
  for (std::size_t i = 0; i < samples; ++i) {
    const PureState psi = tensor_product(random_state(single, rng), random_state(single, rng));
    product_dev = std::max(product_dev, std::abs(f0(psi) - 1.0));
  }

  ProductFormOptions witness_options;
  witness_options.probes = options.product_only ? ProbeSet::ProductOnly : ProbeSet::Full;
  const ProductFormCertificate witness = product_form_witness(f0, rng, witness_options);

  cert.evidence["outcome_count"] = static_cast<double>(outcomes.size());
  cert.evidence["outcome_bound"] = bound;
  cert.evidence["product_max_deviation"] = product_dev;
  cert.evidence["product_samples"] = static_cast<double>(samples);
  cert.evidence["witness_residual"] = witness.residual;
  cert.evidence["witness_probes"] = static_cast<double>(witness.probe_count);
  cert.details["probes"] = options.product_only ? "product" : "full";

  const bool basics = static_cast<double>(outcomes.size()) <= bound && product_dev <= 1e-9;
  if (options.product_only) {
    cert.verdict = !basics ? Verdict::Fail
                   : witness.violation ? Verdict::ViolationCertified
                                       : Verdict::Consistent;
    return cert;
  }
  const double entangled = f0(maximally_entangled(d));
  cert.evidence["entangled_value"] = entangled;
  cert.verdict = basics && entangled == 0.0 && witness.violation ? Verdict::ViolationCertified
                                                                 : Verdict::Fail;
  return cert;
}

Certificate spod_update_refutation(RandomStream& rng, const SpodUpdateOptions& options) {
  Matrix element = Matrix::Zero(2, 2);
  element(0, 0) = 1.0;
  if (options.element) element = *options.element;
  const int dim = static_cast<int>(element.rows());

  Certificate cert;
  cert.experiment = "spod-update";
  cert.seed = rng.seed();

  const FactorSpace space({dim});
  const PovmSamplerSpec spod{PovmSet({element, Matrix::Identity(dim, dim) - element}), std::nullopt};
  double min_fidelity = 1.0;
  std::size_t first = 0;
  for (std::size_t i = 0; i < options.calls; ++i) {
    const PureState psi = random_state(space, rng);
    const DensityMatrix before = DensityMatrix::from_pure(psi);
    const Outcome o = apply_device(spod, psi, {0}, rng);
    if (std::get<IntegerLabel>(o).label == 1) ++first;
    min_fidelity = std::min(min_fidelity, fidelity(before, DensityMatrix::from_pure(psi)));
  }

  std::vector<PureState> probes;
  for (const Matrix& p : informationally_complete_projectors(dim)) {
    probes.push_back(PureState::normalized(space, linalg::leading_eigenvector(p)));
  }
  probes.push_back(PureState::basis(space, {dim - 1}));
  const UpdateMapCertificate update = update_map_feasibility(element, probes);

  cert.evidence["calls"] = static_cast<double>(options.calls);
  cert.evidence["min_fidelity"] = min_fidelity;
  cert.evidence["outcome1_frequency"] =
      options.calls ? static_cast<double>(first) / static_cast<double>(options.calls) : 0.0;
  cert.evidence["update_residual"] = update.residual;
  cert.evidence["constraint_count"] = static_cast<double>(update.constraint_count);

  const bool trivial = min_fidelity >= 1.0 - kFidelityTol;
  if (trivial && update.violation) {
    cert.verdict = Verdict::ViolationCertified;
  } else if (trivial && update.feasible) {
    cert.verdict = Verdict::Consistent;
  } else {
    cert.verdict = Verdict::Fail;
  }
  return cert;
}

PureState no_signalling_state(std::string_view name) {
  const FactorSpace space({2, 2});
  Vector v = Vector::Zero(4);
  if (name == "bell") {
    v(0) = v(3) = 1.0;
  } else if (name == "product") {
    v(0) = 1.0;
  } else if (name == "partial") {
    v(0) = std::sqrt(0.36);
    v(3) = std::sqrt(0.64);
  } else {
    throw ContractViolation("unknown no-signalling state '" + std::string(name) +
                            "' (expected bell, product or partial)");
  }
  return PureState::normalized(space, v);
}

Certificate no_signalling_demo(const PureState& state, RandomStream& rng) {
  const FactorSpace& space = state.space();
  if (space.size() != 2) throw ContractViolation("no_signalling_demo: needs a bipartite state");
  Certificate cert;
  cert.experiment = "no-signalling";
  cert.seed = rng.seed();

  const EntropyMeterSpec meter{1.0, std::nullopt};
  const double before = entropy_meter(state, {0}, meter).value;

  const SchmidtDecomposition sd = schmidt_decompose(state, {0});
  std::vector<Vector> seeds;
  for (const auto& chi : sd.right_states) seeds.push_back(chi.amplitudes());
  const int d2 = space.dim(1);
  const Matrix basis = complete_basis(seeds, d2);
  std::vector<double> labels(static_cast<std::size_t>(d2));
  for (int j = 0; j < d2; ++j) labels[static_cast<std::size_t>(j)] = j;
  const HermitianObservable remote = HermitianObservable::diagonal_in(basis, labels);

  // Meter distribution averaged over the remote outcomes.
  const std::vector<double> probs = cluster_probabilities(state, remote, {1});
  std::map<double, double> after_dist;
  const Matrix id1 = Matrix::Identity(space.dim(0), space.dim(0));
  for (std::size_t c = 0; c < probs.size(); ++c) {
    if (probs[c] <= 1e-15) continue;
    const Vector branch = kron(id1, remote.clusters()[c].projector) * state.amplitudes();
    after_dist[entropy_meter(PureState::normalized(space, branch), {0}, meter).value] += probs[c];
  }
  double tv = 0.0;
  for (const auto& [value, p] : after_dist) tv += value == before ? std::abs(p - 1.0) : p;
  if (!after_dist.contains(before)) tv += 1.0;
  tv *= 0.5;

  const MeasurementResult remote_result = measure_projective(state, remote, {1}, rng);
  const double after = entropy_meter(remote_result.post_state, {0}, meter).value;

  cert.evidence["before"] = before;
  cert.evidence["after"] = after;
  cert.evidence["oracle_before"] = von_neumann_entropy(reduced_state(state, {0}));
  cert.evidence["oracle_after"] = von_neumann_entropy(reduced_state(remote_result.post_state, {0}));
  cert.evidence["tv_distance"] = tv;
  cert.evidence["remote_outcome"] = static_cast<double>(remote_result.cluster);
  cert.evidence["schmidt_rank"] = static_cast<double>(sd.rank());
  cert.verdict = tv > kSignalTol ? Verdict::ViolationCertified : Verdict::Consistent;
  return cert;
}

double cloning_threshold(int precision) { return 1.0 - 10.0 * std::ldexp(1.0, -precision); }

std::optional<PureState> clone_via_readout(const PureState& psi, std::optional<int> precision) {
  const MatrixDescription desc = readout_density(psi, psi.space().all(), ReadoutSpec{std::nullopt, precision});
  const Matrix h = 0.5 * (desc.entries + desc.entries.adjoint());
  if (!precision) {
    const RealVector eig = linalg::hermitian_eigenvalues(h);
    if (eig.size() > 1 && std::abs(eig(eig.size() - 2)) > kRankTol) return std::nullopt;
  }
  return PureState::normalized(psi.space(), linalg::leading_eigenvector(h));
}

Certificate cloning_demo(int d, RandomStream& rng, const CloningOptions& options) {
  if (d < 2 || d > 4) throw ContractViolation("cloning_demo: needs 2 <= d <= 4");
  if (options.trials == 0) throw ContractViolation("cloning_demo: needs at least one trial");
  Certificate cert;
  cert.experiment = "cloning";
  cert.seed = rng.seed();

  const FactorSpace space({d});
  const double threshold = options.precision ? cloning_threshold(*options.precision) : 1.0 - 1e-9;
  double min_fid = 1.0;
  double sum_fid = 0.0;
  std::size_t passing = 0;
  bool rank_failure = false;
  for (std::size_t t = 0; t < options.trials; ++t) {
    const PureState psi = random_state(space, rng);
    const auto copy = clone_via_readout(psi, options.precision);
    if (!copy) {
      rank_failure = true;
      min_fid = 0.0;
      continue;
    }
    const PureState pair = tensor_product(*copy, *copy);
    const DensityMatrix target = DensityMatrix::from_pure(psi);
    const double f = std::min(fidelity(target, reduced_state(pair, {0})),
                              fidelity(target, reduced_state(pair, {1})));
    min_fid = std::min(min_fid, f);
    sum_fid += f;
    if (f >= threshold) ++passing;
  }

  cert.evidence["trials"] = static_cast<double>(options.trials);
  cert.evidence["passing"] = static_cast<double>(passing);
  cert.evidence["min_fidelity"] = min_fid;
  cert.evidence["mean_fidelity"] = sum_fid / static_cast<double>(options.trials);
  cert.evidence["threshold"] = threshold;
  cert.details["precision"] = options.precision ? std::to_string(*options.precision) : "infinite";

  const double needed = options.precision
                            ? std::ceil(options.required_fraction * static_cast<double>(options.trials))
                            : static_cast<double>(options.trials);
  cert.verdict = !rank_failure && static_cast<double>(passing) >= needed ? Verdict::ViolationCertified
                                                                         : Verdict::Fail;
  return cert;
}

EstimationReport tomography_estimate(const Ensemble& source, std::size_t shots, RandomStream& rng,
                                     const TomographyOptions& options) {
  if (source.space().total_dim() != 2) throw ContractViolation("tomography_estimate: needs a qubit source");
  if (shots < 100) throw ContractViolation("tomography_estimate: N too small for the confidence recipe (N >= 100)");

  const std::vector<Matrix> settings = informationally_complete_projectors(2);
  const std::vector<double> weights = member_weights(source);
  std::vector<std::vector<double>> born(source.size());
  for (std::size_t r = 0; r < source.size(); ++r) {
    const Vector& v = source.members()[r].state.amplitudes();
    for (const Matrix& p : settings) born[r].push_back(std::clamp(v.dot(p * v).real(), 0.0, 1.0));
  }

  EstimationReport report;
  report.experiment = "tomography";
  report.trials = shots;
  report.metric_name = "trace_distance";
  report.criterion = options.criterion;

  static constexpr const char* kLabels[] = {"z_plus", "x_plus", "y_plus"};
  std::vector<double> freq;
  for (std::size_t i = 0; i < settings.size(); ++i) {
    const std::size_t n = shots / 3 + (i < shots % 3 ? 1 : 0);
    std::size_t hits = 0;
    for (std::size_t s = 0; s < n; ++s) {
      const std::size_t r = rng.categorical(weights);
      if (rng.bernoulli(born[r][i])) ++hits;
    }
    report.intervals.push_back(wilson_interval(kLabels[i], hits, n));
    freq.push_back(report.intervals.back().estimate);
  }

  const double x = 2.0 * freq[1] - 1.0;
  const double y = 2.0 * freq[2] - 1.0;
  const double z = 2.0 * freq[0] - 1.0;
  Matrix rho(2, 2);
  rho << (1.0 + z) / 2.0, Complex(x, -y) / 2.0, Complex(x, y) / 2.0, (1.0 - z) / 2.0;

  Eigen::SelfAdjointEigenSolver<Matrix> es(rho);
  RealVector vals = es.eigenvalues().cwiseMax(0.0);
  vals /= vals.sum();
  const Matrix clipped = es.eigenvectors() * vals.cast<Complex>().asDiagonal() * es.eigenvectors().adjoint();
  report.density = DensityMatrix(clipped);
  report.extra["bloch_x"] = x;
  report.extra["bloch_y"] = y;
  report.extra["bloch_z"] = z;

  const DensityMatrix truth = options.truth ? *options.truth : source.density_matrix();
  report.metric = trace_distance(*report.density, truth);
  report.pass = report.metric < report.criterion;
  return report;
}

EstimationReport tomography_estimate(const PureState& source, std::size_t shots, RandomStream& rng,
                                     const TomographyOptions& options) {
  return tomography_estimate(Ensemble({{source, 1.0}}), shots, rng, options);
}

double ensemble_distance(const Ensemble& source, const std::vector<EstimatedMember>& estimate,
                         double tol) {
  std::vector<EstimatedMember> truth;
  for (const auto& m : source.members()) {
    auto it = std::find_if(truth.begin(), truth.end(), [&](const EstimatedMember& t) {
      return linalg::ray_distance(t.state, m.state.amplitudes()) <= tol;
    });
    if (it == truth.end()) {
      truth.push_back({m.state.amplitudes(), m.weight});
    } else {
      it->weight += m.weight;
    }
  }
  std::vector<double> matched(truth.size(), 0.0);
  double unmatched = 0.0;
  for (const auto& e : estimate) {
    auto it = std::find_if(truth.begin(), truth.end(), [&](const EstimatedMember& t) {
      return linalg::ray_distance(t.state, e.state) <= tol;
    });
    if (it == truth.end()) {
      unmatched += e.weight;
    } else {
      matched[static_cast<std::size_t>(it - truth.begin())] += e.weight;
    }
  }
  double total = unmatched;
  for (std::size_t i = 0; i < truth.size(); ++i) total += std::abs(truth[i].weight - matched[i]);
  return total;
}

bool supports_disjoint(const std::vector<EstimatedMember>& a, const std::vector<EstimatedMember>& b,
                       double tol) {
  for (const auto& x : a) {
    for (const auto& y : b) {
      if (linalg::ray_distance(x.state, y.state) <= tol) return false;
    }
  }
  return true;
}

EstimationReport ensemble_estimate_readout(const Ensemble& source, std::size_t draws,
                                           RandomStream& rng,
                                           const ReadoutEstimationOptions& options) {
  if (draws < 100) throw ContractViolation("ensemble_estimate_readout: needs N >= 100");
  for (int m : options.precision_schedule) {
    if (m < 1) throw ContractViolation("ensemble_estimate_readout: precision must be >= 1");
  }
  const std::vector<double> weights = member_weights(source);
  const Subsystems all = source.space().all();
  const int dim = source.space().total_dim();

  std::vector<std::optional<int>> rounds;
  for (int m : options.precision_schedule) rounds.emplace_back(m);
  if (rounds.empty()) rounds.emplace_back(std::nullopt);

  EstimationReport report;
  report.experiment = "ensemble-readout";
  report.trials = draws;
  report.metric_name = "total_variation";
  report.criterion = options.criterion;

  for (const auto& precision : rounds) {
    const double cluster_tol = precision ? std::ldexp(1.0, -(*precision - 1)) : 1e-9;
    const double match_tol = precision ? dim * cluster_tol : 1e-6;
    std::vector<std::pair<Matrix, std::size_t>> clusters;
    for (std::size_t n = 0; n < draws; ++n) {
      const PureState& psi = source.members()[rng.categorical(weights)].state;
      const Matrix desc = readout_density(psi, all, ReadoutSpec{std::nullopt, precision}).entries;
      auto it = std::find_if(clusters.begin(), clusters.end(), [&](const auto& c) {
        return linalg::max_abs(c.first - desc) < cluster_tol;
      });
      if (it == clusters.end()) {
        clusters.emplace_back(desc, 1);
      } else {
        ++it->second;
      }
    }

    report.ensemble.clear();
    report.intervals.clear();
    for (std::size_t c = 0; c < clusters.size(); ++c) {
      const Matrix h = 0.5 * (clusters[c].first + clusters[c].first.adjoint());
      report.ensemble.push_back({linalg::leading_eigenvector(h),
                                 static_cast<double>(clusters[c].second) / static_cast<double>(draws)});
      report.intervals.push_back(wilson_interval("member" + std::to_string(c), clusters[c].second, draws));
    }
    report.metric = ensemble_distance(source, report.ensemble, match_tol);

    if (precision) {
      double worst = 0.0;
      for (const auto& e : report.ensemble) {
        double best = std::numeric_limits<double>::infinity();
        for (const auto& m : source.members()) {
          best = std::min(best, linalg::ray_distance(e.state, m.state.amplitudes()));
        }
        worst = std::max(worst, best);
      }
      report.extra["max_state_error"] = worst;
      report.extra["max_state_error_m" + std::to_string(*precision)] = worst;
      report.extra["precision"] = *precision;
    }
  }
  report.extra["members"] = static_cast<double>(report.ensemble.size());
  report.pass = report.metric < report.criterion;
  return report;
}

std::vector<Eigen::Vector3d> overlap_net(double epsilon) {
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw ContractViolation("overlap_net: epsilon must lie in (0, 1)");
  const std::size_t n = net_size(epsilon);
  const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
  std::vector<Eigen::Vector3d> net;
  net.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double z = 1.0 - (2.0 * static_cast<double>(i) + 1.0) / static_cast<double>(n);
    const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    const double phi = golden * static_cast<double>(i);
    net.emplace_back(r * std::cos(phi), r * std::sin(phi), z);
  }
  return net;
}

EstimationReport ensemble_estimate_overlap(const Ensemble& source,
                                           const std::vector<double>& epsilon_schedule,
                                           std::size_t draws, RandomStream& rng,
                                           const OverlapEstimationOptions& options) {
  if (source.space().total_dim() != 2) throw ContractViolation("ensemble_estimate_overlap: needs a qubit source");
  if (epsilon_schedule.empty()) throw ContractViolation("ensemble_estimate_overlap: empty epsilon schedule");
  if (draws == 0) throw ContractViolation("ensemble_estimate_overlap: needs N >= 1");
  for (std::size_t k = 0; k < epsilon_schedule.size(); ++k) {
    const double e = epsilon_schedule[k];
    if (!(e > 0.0 && e < 1.0) || (k > 0 && e >= epsilon_schedule[k - 1])) {
      throw ContractViolation("ensemble_estimate_overlap: epsilons must decrease within (0, 1)");
    }
  }

  EstimationReport report;
  report.experiment = "ensemble-overlap";
  report.trials = draws;
  report.metric_name = "total_variation";
  report.criterion = options.criterion;
  report.extra["net_cap"] = static_cast<double>(options.net_cap);

  std::vector<std::vector<Eigen::Vector3d>> nets;
  for (double e : epsilon_schedule) {
    const std::size_t n = net_size(e);
    report.extra["net_size"] = static_cast<double>(n);
    if (n > options.net_cap) {
      report.failure = "net size " + std::to_string(n) + " exceeds cap " + std::to_string(options.net_cap);
      report.metric = std::numeric_limits<double>::infinity();
      return report;
    }
    nets.push_back(overlap_net(e));
  }

  const Subsystems all = source.space().all();
  std::size_t probes = 0;
  // Probe one state through the rounds; returns the final-round centroid.
  auto locate = [&](const PureState& psi) -> std::optional<Eigen::Vector3d> {
    std::optional<Eigen::Vector3d> centre;
    double prev_theta = 0.0;
    for (std::size_t k = 0; k < nets.size(); ++k) {
      const double eps = epsilon_schedule[k];
      const double theta = cap_angle(eps);
      Eigen::Vector3d sum = Eigen::Vector3d::Zero();
      std::size_t hits = 0;
      for (const auto& point : nets[k]) {
        if (centre) {
          const double angle = std::acos(std::clamp(centre->dot(point), -1.0, 1.0));
          if (angle > prev_theta + theta + kNetSlack) continue;
        }
        ++probes;
        const OverlapTestSpec sod{bloch_to_state(point), 1.0 - eps, std::nullopt};
        if (overlap_test(psi, all, sod, rng).value == 1) {
          sum += point;
          ++hits;
        }
      }
      if (hits == 0 || sum.norm() < 1e-12) return std::nullopt;
      centre = sum.normalized();
      prev_theta = theta;
    }
    return centre;
  };

  // Hard overlap tests are deterministic in the state, so each distinct
  // member is located once and reused for every draw of it.
  const std::vector<double> weights = member_weights(source);
  std::vector<std::optional<std::optional<Eigen::Vector3d>>> located(source.size());
  std::vector<std::pair<Eigen::Vector3d, std::size_t>> clusters;
  std::size_t unresolved = 0;
  const double final_theta = cap_angle(epsilon_schedule.back());
  for (std::size_t n = 0; n < draws; ++n) {
    const std::size_t r = rng.categorical(weights);
    if (!located[r]) located[r] = locate(source.members()[r].state);
    const auto& point = *located[r];
    if (!point) {
      ++unresolved;
      continue;
    }
    auto it = std::find_if(clusters.begin(), clusters.end(), [&](const auto& c) {
      return std::acos(std::clamp(c.first.dot(*point), -1.0, 1.0)) <= final_theta;
    });
    if (it == clusters.end()) {
      clusters.emplace_back(*point, 1);
    } else {
      ++it->second;
    }
  }

  double min_overlap = 1.0;
  for (std::size_t c = 0; c < clusters.size(); ++c) {
    const Vector state = bloch_to_state(clusters[c].first);
    report.ensemble.push_back({state, static_cast<double>(clusters[c].second) / static_cast<double>(draws)});
    report.intervals.push_back(wilson_interval("member" + std::to_string(c), clusters[c].second, draws));
    double best = 0.0;
    for (const auto& m : source.members()) best = std::max(best, std::norm(m.state.amplitudes().dot(state)));
    min_overlap = std::min(min_overlap, best);
  }
  report.metric = ensemble_distance(source, report.ensemble, final_theta) +
                  static_cast<double>(unresolved) / static_cast<double>(draws);
  report.extra["unresolved"] = static_cast<double>(unresolved);
  report.extra["min_overlap"] = min_overlap;
  report.extra["probes"] = static_cast<double>(probes);
  report.extra["members"] = static_cast<double>(report.ensemble.size());
  report.pass = report.metric < report.criterion;
  return report;
}

}  // namespace pqsim
