#pragma once

// Command-line front end. Scenario files are flat `key = value` lines with
// `#` comments and one `kind` selector; unknown keys are rejected.

#include <cstdint>
#include <iosfwd>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace mfg::cli {

enum ExitCode : int {
    kOk = 0,
    kInvalidConfig = 1,
    kSolverFailure = 2,
    kOracleDisagreement = 3,
};

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Config {
    std::string origin; ///< file name, for messages
    std::map<std::string, std::string> values;
};

Config parse_config(std::istream& in, const std::string& origin);
Config load_config(const std::string& path);

/// Typed access to a Config that remembers which keys were read, so that
/// leftovers can be reported as unknown.
class KeyReader {
public:
    explicit KeyReader(const Config& config) : config_(config) {}

    double number(const std::string& key, double fallback);
    double required_number(const std::string& key);
    std::size_t count(const std::string& key, std::size_t fallback);
    std::uint64_t seed(const std::string& key, std::uint64_t fallback);
    bool flag(const std::string& key, bool fallback);
    std::string text(const std::string& key, const std::string& fallback);

    /// Throws ConfigError naming every key that was never read.
    void finish() const;

private:
    const std::string* find(const std::string& key);

    const Config& config_;
    std::set<std::string> used_;
};

/// Runs one invocation, e.g. {"mfglab", "gaussian", "audit.cfg", "--out", "dir"}.
/// Diagnostics go to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace mfg::cli
