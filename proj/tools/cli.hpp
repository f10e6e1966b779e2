#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace uplink::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1; // bad flags, bad config, failed validation
inline constexpr int kExitRuntime = 2;

/// Environment variable naming the config file used when --config is absent.
inline constexpr const char* kConfigEnvVar = "UPLINK_SIM_CONFIG";

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

/// Header, then one line per row, '\n' terminated. Throws
/// std::invalid_argument when a row's width differs from the header.
void write_csv(const CsvTable& table, std::ostream& out);

/// Renders `table` and replaces `path` with it. Throws std::runtime_error if
/// the file cannot be written.
void emit_csv(const CsvTable& table, const std::string& path);

/// Full command line, argv[0] included. CSV goes to --output when given
/// (summary line on `out`), otherwise to `out` (summary line on `err`).
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace uplink::cli
