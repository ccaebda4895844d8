#pragma once

#include <atomic>
#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace smla::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNumeric = 3;

/// Environment variables SMLA_<KEY> override config-file values; command
/// line flags override both. Dashes in keys become underscores.
inline constexpr const char* kEnvPrefix = "SMLA_";

std::string env_name(const std::string& key);

class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Flat `key = value` lines; `#` starts a comment, blank lines are skipped.
/// Throws ConfigError on a line without '=' or with an empty key, and on a
/// repeated key.
std::vector<std::pair<std::string, std::string>> parse_config_text(std::istream& is);

/// Resolved settings of one run, in registration order.
struct RunConfig {
    std::string subcommand;
    struct Entry {
        std::string key;
        std::string value;
        /// Settings that cannot change the output (paths, thread count)
        /// stay out of the hash.
        bool hashed = true;
    };
    std::vector<Entry> entries;

    /// FNV-1a 64 over the subcommand and the hashed key=value lines.
    std::uint64_t hash() const;
    /// `# ` comment lines: tool name and version, hash, then every setting.
    std::string header() const;
};

const char* version();

/// Runs one command line (argv[0] is the program name). Output files are
/// written only on success; without --out the result goes to `out`.
/// Diagnostics go to `err`. `interrupt` stops a chart scan between batches.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err,
        const std::atomic<bool>* interrupt = nullptr);

} // namespace smla::cli
