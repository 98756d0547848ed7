#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pqsim/config.hpp"
#include "pqsim/experiments.hpp"
#include "pqsim/records.hpp"

namespace pqsim {

inline constexpr std::uint64_t kDefaultSeed = 0x5EED;

/// Seed precedence: command-line flag, then the config file, then the
/// PQSIM_SEED environment variable, then kDefaultSeed. Throws ConfigError
/// when PQSIM_SEED is set but not an unsigned integer.
std::uint64_t resolve_seed(std::optional<std::uint64_t> flag, std::optional<std::uint64_t> config);

/// Parses a decimal or 0x-prefixed seed; empty on malformed input.
std::optional<std::uint64_t> parse_seed(std::string_view text);

struct RunOutcome {
  Verdict verdict = Verdict::Fail;
  std::vector<std::string> summary;  // human-readable lines
  std::vector<Record> records;        // per-trial records, then the summary record
};

/// Executes the configured action with an already resolved seed. Contract
/// violations from the library propagate.
RunOutcome execute(const RunConfig& config, std::uint64_t seed);

/// 0 for CONSISTENT and VIOLATION_CERTIFIED, 1 for FAIL.
int exit_code(Verdict verdict);

/// Runs, writes summary and records according to config.output, and returns
/// the exit status (2 when the output file cannot be written, 1 on a
/// contract violation).
int run(const RunConfig& config, std::ostream& out, std::ostream& err,
        std::optional<std::uint64_t> seed_flag = std::nullopt);

/// Device catalog as an aligned table or a JSON array; `filter` keeps kinds
/// whose name contains it (case-insensitive).
void list_devices(std::ostream& out, bool json, std::string_view filter = {});

/// Experiment configuration behind a built-in demo name, if it exists.
std::optional<ExperimentConfig> demo_config(std::string_view name);

}  // namespace pqsim
