#include "pqsim/runner.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <variant>

#include <json.hpp>

#include "pqsim/devices.hpp"
#include "pqsim/error.hpp"
#include "pqsim/opf.hpp"

namespace pqsim {

namespace {

using TrialResult = std::variant<Certificate, EstimationReport>;

/// Short human form: up to 10 significant digits, always with a decimal
/// point or exponent.
std::string human(double x) {
  if (!std::isfinite(x)) return format_double(x);
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", x);
  std::string s = buf;
  if (s.find_first_of(".e") == std::string::npos) s += ".0";
  return s;
}

Matrix rows_to_matrix(const ComplexRows& rows) {
  Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != rows.front().size()) throw ContractViolation("ragged matrix rows");
    for (std::size_t j = 0; j < rows[i].size(); ++j) {
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
  }
  return m;
}

/// "weight:[amp,amp,...]" per member, members separated by ';'.
std::string ensemble_text(const Ensemble& e) {
  std::string out;
  for (const auto& m : e.members()) {
    if (!out.empty()) out += ';';
    out += format_double(m.weight) + ":[";
    const Vector& a = m.state.amplitudes();
    for (Eigen::Index i = 0; i < a.size(); ++i) {
      if (i > 0) out += ',';
      out += format_complex(a(i));
    }
    out += ']';
  }
  return out;
}

Ensemble default_ensemble() {
  const FactorSpace q({2});
  Vector plus(2);
  plus << 1.0, 1.0;
  return Ensemble({{PureState::basis(q, {0}), 0.5},
                   {PureState::basis(q, {1}), 0.3},
                   {PureState::normalized(q, plus), 0.2}});
}

Ensemble configured_ensemble(const ExperimentConfig& c, std::optional<Ensemble> fallback) {
  if (c.members.empty()) {
    if (!fallback) throw ContractViolation("experiment needs members and weights");
    return *fallback;
  }
  std::vector<EnsembleMember> members;
  for (std::size_t i = 0; i < c.members.size(); ++i) {
    Vector v(static_cast<Eigen::Index>(c.members[i].size()));
    for (std::size_t j = 0; j < c.members[i].size(); ++j) v(static_cast<Eigen::Index>(j)) = c.members[i][j];
    const int dim = static_cast<int>(v.size());
    members.push_back({PureState::normalized(FactorSpace({dim}), v), c.weights[i]});
  }
  return Ensemble(std::move(members));
}

TrialResult run_experiment(const ExperimentConfig& c, RandomStream& rng) {
  if (c.id == "fpvnem") return fpvnem_refutation(c.d, c.m, c.samples, rng, {c.product_only});
  if (c.id == "spod-update") {
    SpodUpdateOptions o;
    if (c.element) o.element = rows_to_matrix(*c.element);
    o.calls = c.calls;
    return spod_update_refutation(rng, o);
  }
  if (c.id == "no-signalling") return no_signalling_demo(no_signalling_state(c.input), rng);
  if (c.id == "cloning") return cloning_demo(c.d, rng, {c.precision, 100, c.required_fraction});
  if (c.id == "tomography") {
    const Ensemble source = configured_ensemble(c, Ensemble({{PureState::basis(FactorSpace({2}), {0}), 1.0}}));
    return tomography_estimate(source, c.shots.value_or(100000), rng);
  }
  if (c.id == "ensemble-readout") {
    return ensemble_estimate_readout(configured_ensemble(c, default_ensemble()), c.shots.value_or(10000), rng,
                                     {c.precision_schedule, 0.05});
  }
  if (c.id == "ensemble-overlap") {
    return ensemble_estimate_overlap(configured_ensemble(c, default_ensemble()), c.epsilon_schedule,
                                     c.shots.value_or(10000), rng, {c.net_cap, 0.05});
  }
  throw ContractViolation("unknown experiment '" + c.id + "'");
}

bool trial_passes(const TrialResult& r) {
  if (const auto* cert = std::get_if<Certificate>(&r)) return cert->verdict != Verdict::Fail;
  return std::get<EstimationReport>(r).pass;
}

Record certificate_record(const Certificate& c) {
  Record rec;
  rec.set("experiment", c.experiment).set("verdict", std::string(verdict_name(c.verdict))).set("seed", c.seed);
  for (const auto& [k, v] : c.evidence) rec.set(k, v);
  for (const auto& [k, v] : c.details) rec.set(k, v);
  return rec;
}

Record report_record(const EstimationReport& r) {
  Record rec;
  rec.set("experiment", r.experiment)
      .set("pass", r.pass)
      .set("metric_name", r.metric_name)
      .set("metric", r.metric)
      .set("criterion", r.criterion)
      .set("shots", static_cast<std::uint64_t>(r.trials))
      .set("confidence", r.confidence);
  if (!r.failure.empty()) rec.set("failure", r.failure);
  for (const auto& [k, v] : r.extra) rec.set(k, v);
  if (r.density) {
    const Matrix& m = r.density->matrix();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      for (Eigen::Index j = 0; j < m.cols(); ++j) {
        rec.set("rho_" + std::to_string(i) + std::to_string(j), m(i, j));
      }
    }
  }
  for (std::size_t i = 0; i < r.ensemble.size(); ++i) {
    const std::string p = "member" + std::to_string(i) + "_";
    rec.set(p + "weight", r.ensemble[i].weight);
    for (Eigen::Index j = 0; j < r.ensemble[i].state.size(); ++j) {
      rec.set(p + "amp" + std::to_string(j), r.ensemble[i].state(j));
    }
  }
  for (const auto& iv : r.intervals) {
    rec.set("ci_" + iv.label + "_lower", iv.lower).set("ci_" + iv.label + "_upper", iv.upper);
    rec.set("freq_" + iv.label, iv.estimate);
  }
  return rec;
}

Record trial_record(const TrialResult& r) {
  return std::visit(
      [](const auto& x) {
        if constexpr (std::is_same_v<std::decay_t<decltype(x)>, Certificate>) {
          return certificate_record(x);
        } else {
          return report_record(x);
        }
      },
      r);
}

void describe(const TrialResult& r, std::vector<std::string>& lines) {
  if (const auto* c = std::get_if<Certificate>(&r)) {
    for (const auto& [k, v] : c->evidence) lines.push_back("  " + k + "=" + human(v));
    for (const auto& [k, v] : c->details) lines.push_back("  " + k + "=" + v);
    return;
  }
  const auto& rep = std::get<EstimationReport>(r);
  if (!rep.failure.empty()) lines.push_back("  failure: " + rep.failure);
  lines.push_back("  " + rep.metric_name + "=" + human(rep.metric) + " (criterion < " + human(rep.criterion) + ")");
  for (const auto& iv : rep.intervals) {
    lines.push_back("  " + iv.label + ": " + human(iv.estimate) + " [" + human(iv.lower) + ", " +
                    human(iv.upper) + "] of " + std::to_string(iv.trials));
  }
  for (const auto& [k, v] : rep.extra) lines.push_back("  " + k + "=" + human(v));
}

RunOutcome execute_experiment(const ExperimentConfig& c, std::uint64_t seed) {
  const auto results = run_trials<TrialResult>(
      c.id, seed, c.trials, [&](std::size_t, RandomStream& rng) { return run_experiment(c, rng); });

  RunOutcome out;
  std::size_t passing = 0;
  bool any_fail = false;
  bool any_violation = false;
  const bool estimation = std::holds_alternative<EstimationReport>(results.front());
  for (std::size_t i = 0; i < results.size(); ++i) {
    const bool ok = trial_passes(results[i]);
    passing += ok;
    if (const auto* cert = std::get_if<Certificate>(&results[i])) {
      any_fail |= cert->verdict == Verdict::Fail;
      any_violation |= cert->verdict == Verdict::ViolationCertified;
    }
    if (results.size() > 1) {
      Record rec = trial_record(results[i]);
      rec.set("record", "trial").set("trial", static_cast<std::uint64_t>(i));
      out.records.push_back(std::move(rec));
    }
  }

  if (estimation) {
    const double needed = results.size() == 1
                              ? 1.0
                              : std::ceil(c.required_fraction * static_cast<double>(results.size()));
    out.verdict = static_cast<double>(passing) >= needed ? Verdict::Consistent : Verdict::Fail;
  } else {
    out.verdict = any_fail ? Verdict::Fail : any_violation ? Verdict::ViolationCertified : Verdict::Consistent;
  }

  Record summary = results.size() == 1 ? trial_record(results.front()) : Record{};
  summary.set("record", "summary")
      .set("experiment", c.id)
      .set("seed", seed)
      .set("trials", static_cast<std::uint64_t>(results.size()))
      .set("passing", static_cast<std::uint64_t>(passing))
      .set("verdict", std::string(verdict_name(out.verdict)));
  out.records.push_back(std::move(summary));

  out.summary.push_back(c.id + ": " + std::string(verdict_name(out.verdict)) + " (seed " + std::to_string(seed) + ")");
  if (results.size() == 1) {
    describe(results.front(), out.summary);
  } else {
    out.summary.push_back("  " + std::to_string(passing) + "/" + std::to_string(results.size()) +
                          " trials pass");
  }
  return out;
}

RunOutcome execute_device(const RunConfig& cfg, const DeviceConfig& c, std::uint64_t seed) {
  const FactorSpace space(cfg.dims);
  RandomStream state_rng(seed, StreamId{stream_tag("state"), 0});
  const PureState state = build_state(cfg.state, cfg.dims, state_rng);
  const DeviceSpec spec = build_device_spec(c);
  validate(spec, space, c.target);

  std::vector<std::pair<std::string, double>> exact;
  for (const auto& [outcome, p] : outcome_distribution(spec, state, c.target)) {
    const std::string key = to_string(outcome);
    auto it = std::find_if(exact.begin(), exact.end(), [&](const auto& e) { return e.first == key; });
    if (it == exact.end()) {
      exact.emplace_back(key, p);
    } else {
      it->second += p;
    }
  }

  RunOutcome out;
  out.verdict = Verdict::Consistent;
  RandomStream rng(seed, StreamId{stream_tag("device"), 0});
  std::vector<std::pair<std::string, std::size_t>> counts;
  for (std::size_t r = 0; r < c.repetitions; ++r) {
    const std::string o = to_string(apply_device(spec, state, c.target, rng));
    auto it = std::find_if(counts.begin(), counts.end(), [&](const auto& e) { return e.first == o; });
    if (it == counts.end()) {
      counts.emplace_back(o, 1);
    } else {
      ++it->second;
    }
    Record rec;
    rec.set("record", "repetition").set("repetition", static_cast<std::uint64_t>(r)).set("outcome", o);
    out.records.push_back(std::move(rec));
  }
  for (const auto& [o, p] : exact) {
    Record rec;
    rec.set("record", "distribution").set("outcome", o).set("probability", p);
    out.records.push_back(std::move(rec));
  }
  Record summary;
  summary.set("record", "summary")
      .set("device", c.kind)
      .set("seed", seed)
      .set("repetitions", static_cast<std::uint64_t>(c.repetitions))
      .set("distinct_outcomes", static_cast<std::uint64_t>(counts.size()))
      .set("state", cfg.state.kind)
      .set("stochastic", is_stochastic(spec))
      .set("verdict", std::string(verdict_name(out.verdict)));
  out.records.push_back(std::move(summary));

  out.summary.push_back(c.kind + " on " + cfg.state.kind + " state, " + std::to_string(c.repetitions) +
                        " repetition(s) (seed " + std::to_string(seed) + ")");
  for (const auto& [o, p] : exact) {
    std::size_t n = 0;
    for (const auto& [name, k] : counts) {
      if (name == o) n = k;
    }
    out.summary.push_back("  " + o + "  exact=" + human(p) + "  observed=" + std::to_string(n));
  }
  for (const auto& [name, k] : counts) {
    const bool listed = std::any_of(exact.begin(), exact.end(), [&](const auto& e) { return e.first == name; });
    if (!listed) out.summary.push_back("  " + name + "  observed=" + std::to_string(k));
  }
  return out;
}

RunOutcome execute_check(const CheckConfig& c, std::uint64_t seed) {
  RandomStream rng(seed, StreamId{stream_tag("check:" + c.kind), 0});
  RunOutcome out;
  Record rec;
  rec.set("record", "summary").set("check", c.kind).set("family", c.family).set("seed", seed);

  if (c.kind == "closure") {
    const MeasurementFamily fam = c.family == "fpvnem" ? fpvnem_family(c.d, c.m, c.background_dim)
                                                       : quantum_povm_family(c.d, c.background_dim, c.members, rng);
    const ClosureReport r = check_closure(fam, c.samples, rng);
    out.verdict = r.passed() ? Verdict::Consistent : Verdict::Fail;
    rec.set("samples", static_cast<std::uint64_t>(r.samples))
        .set("completeness", r.completeness)
        .set("mixture", r.mixture)
        .set("unitary", r.unitary)
        .set("system", r.system)
        .set("range", r.range)
        .set("operator_membership", r.operator_membership)
        .set("max_violation", r.max_violation());
    out.summary.push_back("closure (" + c.family + "): " + std::string(verdict_name(out.verdict)));
    out.summary.push_back("  max_violation=" + human(r.max_violation()) + " over " + std::to_string(r.samples) +
                          " samples");
  } else if (c.kind == "product_form") {
    const FactorSpace space({c.d, c.d});
    const Opf f = c.family == "fpvnem"
                      ? opf_from_device(EntropyMeterSpec{1.0, c.m}, space, {0}, RealValue{0.0})
                      : opf_from_quantum(space, random_povm(c.d * c.d, 2, rng).elements().front());
    ProductFormOptions o;
    o.probes = c.probes == "product" ? ProbeSet::ProductOnly : ProbeSet::Full;
    const ProductFormCertificate cert = product_form_witness(f, rng, o);
    out.verdict = cert.violation ? Verdict::ViolationCertified
                  : cert.quadratic ? Verdict::Consistent
                                   : Verdict::Fail;
    rec.set("residual", cert.residual)
        .set("probes", static_cast<std::uint64_t>(cert.probe_count))
        .set("quadratic", cert.quadratic)
        .set("probe_set", c.probes);
    out.summary.push_back("product-form (" + c.family + "): " + std::string(verdict_name(out.verdict)));
    out.summary.push_back("  residual=" + human(cert.residual) + " over " + std::to_string(cert.probe_count) +
                          " probes");
  } else {
    const EstimationFamily fam = parse_family(c.family);
    const EstimationReportCard card = check_estimation_assumption(fam, c.d, rng);
    out.verdict = card.verdict == EstimationVerdict::Fails && card.witness ? Verdict::ViolationCertified
                  : card.verdict == EstimationVerdict::Fails              ? Verdict::Fail
                                                                          : Verdict::Consistent;
    rec.set("assumption", std::string(verdict_name(card.verdict)))
        .set("outcomes", static_cast<std::uint64_t>(card.outcomes.size()))
        .set("max_deviation", card.max_deviation);
    out.summary.push_back("estimation (" + c.family + ", d=" + std::to_string(c.d) +
                          "): " + std::string(verdict_name(card.verdict)));
    out.summary.push_back("  outcomes=" + std::to_string(card.outcomes.size()) +
                          " max_deviation=" + human(card.max_deviation));
    if (card.witness) {
      rec.set("witness_first", card.witness->value_first)
          .set("witness_second", card.witness->value_second)
          .set("witness_density_distance", card.witness->density_distance)
          .set("witness_list_disagreement", card.witness->list_disagreement)
          .set("witness_first_ensemble", ensemble_text(card.witness->first))
          .set("witness_second_ensemble", ensemble_text(card.witness->second));
      out.summary.push_back("  witness: f(first)=" + human(card.witness->value_first) +
                            " f(second)=" + human(card.witness->value_second) +
                            " density distance=" + human(card.witness->density_distance));
    }
  }
  rec.set("d", c.d).set("verdict", std::string(verdict_name(out.verdict)));
  out.records.push_back(std::move(rec));
  return out;
}

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char ch) { return std::tolower(ch); });
  return out;
}

}  // namespace

std::optional<std::uint64_t> parse_seed(std::string_view text) {
  int base = 10;
  if (text.starts_with("0x") || text.starts_with("0X")) {
    text.remove_prefix(2);
    base = 16;
  }
  std::uint64_t x = 0;
  const auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), x, base);
  if (text.empty() || ec != std::errc() || p != text.data() + text.size()) return std::nullopt;
  return x;
}

std::uint64_t resolve_seed(std::optional<std::uint64_t> flag, std::optional<std::uint64_t> config) {
  if (flag) return *flag;
  if (config) return *config;
  if (const char* env = std::getenv("PQSIM_SEED"); env && *env) {
    const auto s = parse_seed(env);
    if (!s) throw ConfigError("PQSIM_SEED", 0, "expected an unsigned 64-bit integer, got '" + std::string(env) + "'");
    return *s;
  }
  return kDefaultSeed;
}

int exit_code(Verdict verdict) { return verdict == Verdict::Fail ? 1 : 0; }

RunOutcome execute(const RunConfig& config, std::uint64_t seed) {
  return std::visit(
      [&](const auto& action) {
        using T = std::decay_t<decltype(action)>;
        if constexpr (std::is_same_v<T, DeviceConfig>) {
          return execute_device(config, action, seed);
        } else if constexpr (std::is_same_v<T, ExperimentConfig>) {
          return execute_experiment(action, seed);
        } else {
          return execute_check(action, seed);
        }
      },
      config.action);
}

int run(const RunConfig& config, std::ostream& out, std::ostream& err, std::optional<std::uint64_t> seed_flag) {
  RunOutcome outcome;
  try {
    outcome = execute(config, resolve_seed(seed_flag, config.seed));
  } catch (const ConfigError& ex) {
    err << "pqsim: " << ex.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& ex) {
    err << "pqsim: " << ex.what() << "\n";
    return 1;
  }

  const bool records_to_stdout = config.output.format == "records" && config.output.path.empty();
  if (!records_to_stdout) {
    for (const auto& line : outcome.summary) out << line << "\n";
  }
  if (!config.output.path.empty()) {
    std::ofstream file(config.output.path);
    if (!file) {
      err << "pqsim: cannot write " << config.output.path << "\n";
      return 2;
    }
    for (const auto& r : outcome.records) file << r.to_line() << "\n";
  } else if (records_to_stdout) {
    for (const auto& r : outcome.records) out << r.to_line() << "\n";
  }
  return exit_code(outcome.verdict);
}

void list_devices(std::ostream& out, bool json, std::string_view filter) {
  const std::string needle = lower(filter);
  std::vector<const DeviceCatalogEntry*> rows;
  for (const auto& e : device_catalog()) {
    if (lower(kind_name(e.kind)).find(needle) != std::string::npos) rows.push_back(&e);
  }
  if (json) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto* e : rows) {
      nlohmann::json params = nlohmann::json::array();
      for (auto p : e->parameters) params.push_back(std::string(p));
      arr.push_back({{"kind", std::string(kind_name(e->kind))},
                     {"tags", std::string(e->tags)},
                     {"summary", std::string(e->summary)},
                     {"parameters", params}});
    }
    out << arr.dump(2) << "\n";
    return;
  }
  for (const auto* e : rows) {
    std::string params = "kind, target, repetitions";
    for (auto p : e->parameters) params += ", " + std::string(p);
    out << std::left << std::setw(20) << kind_name(e->kind) << std::setw(38) << e->tags << e->summary << "\n"
        << std::setw(20) << "" << "(" << params << ")\n";
  }
}

std::optional<ExperimentConfig> demo_config(std::string_view name) {
  const auto& ids = experiment_ids();
  if (std::find(ids.begin(), ids.end(), name) == ids.end()) return std::nullopt;
  ExperimentConfig c;
  c.id = std::string(name);
  return c;
}

}  // namespace pqsim
