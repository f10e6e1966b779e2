#include "uplink/config.hpp"

#include "uplink/format.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>

namespace uplink {

namespace {

constexpr std::array<std::pair<SchedulerKind, std::string_view>, 6> kSchedulerNames{{
    {SchedulerKind::RR, "rr"},
    {SchedulerKind::RRA, "rr-a"},
    {SchedulerKind::TWUS, "twus"},
    {SchedulerKind::TWUSA, "twus-a"},
    {SchedulerKind::DTWUS, "dtwus"},
    {SchedulerKind::DTWUSA, "dtwus-a"},
}};

const std::vector<double> kUnequalDistancesKm = {0.857, 1.071, 0.910, 1.230, 1.113,
                                                 0.956, 1.122, 0.884, 0.970, 1.216};

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) {
    return {};
  }
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

double parse_double(std::string_view key, std::string_view text) {
  text = trim(text);
  double value = 0.0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc{} || ptr != end || !std::isfinite(value)) {
    throw ValidationError(std::string(key), "not a number: '" + std::string(text) + "'");
  }
  return value;
}

template <class Int>
Int parse_integer(std::string_view key, std::string_view text) {
  text = trim(text);
  Int value{};
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc{} || ptr != end) {
    throw ValidationError(std::string(key), "not an integer: '" + std::string(text) + "'");
  }
  return value;
}

std::vector<double> parse_list(std::string_view key, std::string_view text) {
  std::vector<double> out;
  text = trim(text);
  if (text.empty()) {
    return out;
  }
  std::size_t pos = 0;
  while (true) {
    const auto comma = text.find(',', pos);
    out.push_back(parse_double(key, text.substr(pos, comma - pos)));
    if (comma == std::string_view::npos) {
      break;
    }
    pos = comma + 1;
  }
  return out;
}

bool parse_bool(std::string_view key, std::string_view text) {
  text = trim(text);
  if (text == "true" || text == "1") {
    return true;
  }
  if (text == "false" || text == "0") {
    return false;
  }
  throw ValidationError(std::string(key), "expected true/false");
}

std::string join(const std::vector<double>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i != 0) {
      out += ',';
    }
    out += format_number(values[i]);
  }
  return out;
}

struct Field {
  std::string_view key;
  std::function<void(ExperimentConfig&, std::string_view)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

#define UPLINK_DOUBLE_FIELD(name, member)                                                 \
  Field{name, [](ExperimentConfig& c, std::string_view v) { c.member = parse_double(name, v); }, \
        [](const ExperimentConfig& c) { return format_number(c.member); }}
#define UPLINK_INT_FIELD(name, member)                                                    \
  Field{name,                                                                             \
        [](ExperimentConfig& c, std::string_view v) {                                     \
          c.member = parse_integer<decltype(c.member)>(name, v);                          \
        },                                                                                \
        [](const ExperimentConfig& c) { return std::to_string(c.member); }}

const std::vector<Field>& fields() {
  static const std::vector<Field> table = {
      UPLINK_DOUBLE_FIELD("frame_duration_s", timing.frame_duration_s),
      UPLINK_DOUBLE_FIELD("uplink_fraction", timing.uplink_fraction),
      UPLINK_INT_FIELD("uplink_slots_per_frame", timing.uplink_slots_per_frame),
      UPLINK_INT_FIELD("num_ss", num_ss),
      Field{"distances_km",
            [](ExperimentConfig& c, std::string_view v) { c.distances_km = parse_list("distances_km", v); },
            [](const ExperimentConfig& c) { return join(c.distances_km); }},
      UPLINK_DOUBLE_FIELD("path_loss_exponent", path_loss_exponent),
      UPLINK_DOUBLE_FIELD("shadowing_sigma_dB", shadowing_sigma_dB),
      UPLINK_INT_FIELD("shadow_block_frames", shadow_block_frames),
      UPLINK_DOUBLE_FIELD("fading_mean_power", fading_mean_power),
      UPLINK_DOUBLE_FIELD("noise_psd", noise_psd),
      UPLINK_DOUBLE_FIELD("channel_bandwidth_hz", channel_bandwidth_hz),
      UPLINK_DOUBLE_FIELD("target_ber", target_ber),
      UPLINK_DOUBLE_FIELD("edge_margin_dB", edge_margin_dB),
      Field{"rates_bps",
            [](ExperimentConfig& c, std::string_view v) { c.rates_bps = parse_list("rates_bps", v); },
            [](const ExperimentConfig& c) { return join(c.rates_bps); }},
      Field{"scheduler",
            [](ExperimentConfig& c, std::string_view v) {
              const auto kind = parse_scheduler_kind(trim(v));
              if (!kind) {
                throw ValidationError("scheduler", "unknown scheduler '" + std::string(trim(v)) + "'");
              }
              c.scheduler = *kind;
            },
            [](const ExperimentConfig& c) { return std::string(to_string(c.scheduler)); }},
      Field{"deficit_form",
            [](ExperimentConfig& c, std::string_view v) {
              v = trim(v);
              if (v == "equation") {
                c.deficit_form = DeficitForm::Equation;
              } else if (v == "pseudocode") {
                c.deficit_form = DeficitForm::Pseudocode;
              } else {
                throw ValidationError("deficit_form", "expected equation|pseudocode");
              }
            },
            [](const ExperimentConfig& c) { return std::string(to_string(c.deficit_form)); }},
      Field{"redistribute_leftover",
            [](ExperimentConfig& c, std::string_view v) {
              c.redistribute_leftover = parse_bool("redistribute_leftover", v);
            },
            [](const ExperimentConfig& c) { return std::string(c.redistribute_leftover ? "true" : "false"); }},
      UPLINK_INT_FIELD("cwnd_max", cwnd_max),
      UPLINK_INT_FIELD("packet_len_bits", packet_len_bits),
      UPLINK_INT_FIELD("acks_per_packet", acks_per_packet),
      UPLINK_DOUBLE_FIELD("base_rtt_s", base_rtt_s),
      UPLINK_DOUBLE_FIELD("rto_min_s", rto_min_s),
      UPLINK_DOUBLE_FIELD("rtt_gain", rtt_gain),
      Field{"packet_error_model",
            [](ExperimentConfig& c, std::string_view v) {
              v = trim(v);
              if (v == "target-ber") {
                c.packet_error_model = PacketErrorModel::TargetBer;
              } else if (v == "snr") {
                c.packet_error_model = PacketErrorModel::SnrDependent;
              } else if (v == "fixed") {
                c.packet_error_model = PacketErrorModel::Fixed;
              } else {
                throw ValidationError("packet_error_model", "expected target-ber|snr|fixed");
              }
            },
            [](const ExperimentConfig& c) { return std::string(to_string(c.packet_error_model)); }},
      UPLINK_DOUBLE_FIELD("packet_error_prob", packet_error_prob),
      UPLINK_INT_FIELD("num_frames", num_frames),
      UPLINK_INT_FIELD("warmup_frames", warmup_frames),
      UPLINK_INT_FIELD("num_runs", num_runs),
      UPLINK_INT_FIELD("rng_seed", rng_seed),
  };
  return table;
}

#undef UPLINK_DOUBLE_FIELD
#undef UPLINK_INT_FIELD

} // namespace

std::string_view to_string(SchedulerKind kind) {
  for (const auto& [k, name] : kSchedulerNames) {
    if (k == kind) {
      return name;
    }
  }
  return "?";
}

std::string_view to_string(PacketErrorModel model) {
  switch (model) {
  case PacketErrorModel::TargetBer:
    return "target-ber";
  case PacketErrorModel::SnrDependent:
    return "snr";
  case PacketErrorModel::Fixed:
    return "fixed";
  }
  return "?";
}

std::string_view to_string(DeficitForm form) {
  return form == DeficitForm::Equation ? "equation" : "pseudocode";
}

std::optional<SchedulerKind> parse_scheduler_kind(std::string_view text) {
  std::string lowered(text);
  std::transform(lowered.begin(), lowered.end(), lowered.begin(),
                 [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
  for (const auto& [kind, name] : kSchedulerNames) {
    if (lowered == name) {
      return kind;
    }
  }
  return std::nullopt;
}

RateMode rate_mode(SchedulerKind kind) {
  switch (kind) {
  case SchedulerKind::RR:
  case SchedulerKind::TWUS:
  case SchedulerKind::DTWUS:
    return RateMode::FixedQpsk;
  default:
    return RateMode::Adaptive;
  }
}

bool uses_deadline(SchedulerKind kind) {
  return kind == SchedulerKind::DTWUS || kind == SchedulerKind::DTWUSA;
}

bool is_round_robin(SchedulerKind kind) {
  return kind == SchedulerKind::RR || kind == SchedulerKind::RRA;
}

SchedulerKind round_robin_baseline(SchedulerKind kind) {
  return rate_mode(kind) == RateMode::Adaptive ? SchedulerKind::RRA : SchedulerKind::RR;
}

int default_cwnd_max(SchedulerKind kind) {
  return rate_mode(kind) == RateMode::Adaptive ? 70 : 60;
}

ExperimentConfig default_config(DistanceLayout layout, SchedulerKind scheduler) {
  ExperimentConfig config;
  config.distances_km = layout == DistanceLayout::Equal
                            ? std::vector<double>(static_cast<std::size_t>(config.num_ss), 1.0)
                            : kUnequalDistancesKm;
  config.scheduler = scheduler;
  config.cwnd_max = default_cwnd_max(scheduler);
  return config;
}

void validate(const ExperimentConfig& c) {
  const auto require = [](bool ok, const char* field, const char* reason) {
    if (!ok) {
      throw ValidationError(field, reason);
    }
  };
  require(c.timing.frame_duration_s > 0, "frame_duration_s", "must be > 0");
  require(c.timing.uplink_fraction > 0 && c.timing.uplink_fraction <= 1, "uplink_fraction",
          "must be in (0, 1]");
  require(c.timing.uplink_slots_per_frame >= 1, "uplink_slots_per_frame", "must be >= 1");
  require(c.num_ss >= 1, "num_ss", "must be >= 1");
  require(c.distances_km.size() == static_cast<std::size_t>(c.num_ss), "distances_km",
          "length must equal num_ss");
  require(std::all_of(c.distances_km.begin(), c.distances_km.end(), [](double d) { return d > 0; }),
          "distances_km", "all distances must be > 0");
  require(c.path_loss_exponent >= 0, "path_loss_exponent", "must be >= 0");
  require(c.shadowing_sigma_dB >= 0, "shadowing_sigma_dB", "must be >= 0");
  require(c.shadow_block_frames >= 1, "shadow_block_frames", "must be >= 1");
  require(c.fading_mean_power > 0, "fading_mean_power", "must be > 0");
  require(c.noise_psd > 0, "noise_psd", "must be > 0");
  require(c.channel_bandwidth_hz > 0, "channel_bandwidth_hz", "must be > 0");
  require(c.target_ber > 0 && c.target_ber < 1, "target_ber", "must be in (0, 1)");
  require(!c.rates_bps.empty() && c.rates_bps.size() <= 3, "rates_bps", "need 1 to 3 rates");
  require(std::is_sorted(c.rates_bps.begin(), c.rates_bps.end()) &&
              std::adjacent_find(c.rates_bps.begin(), c.rates_bps.end()) == c.rates_bps.end() &&
              c.rates_bps.front() > 0,
          "rates_bps", "must be positive and strictly increasing");
  require(c.cwnd_max >= 1, "cwnd_max", "must be >= 1");
  require(c.packet_len_bits >= 1, "packet_len_bits", "must be >= 1");
  require(c.acks_per_packet >= 1, "acks_per_packet", "must be >= 1");
  require(c.base_rtt_s > 0, "base_rtt_s", "must be > 0");
  require(c.rto_min_s > 0, "rto_min_s", "must be > 0");
  require(c.rtt_gain >= 0 && c.rtt_gain < 1, "rtt_gain", "must be in [0, 1)");
  require(c.packet_error_prob >= 0 && c.packet_error_prob < 1, "packet_error_prob",
          "must be in [0, 1)");
  require(c.num_frames >= 1, "num_frames", "must be >= 1");
  require(c.warmup_frames >= 0, "warmup_frames", "must be >= 0");
  require(c.warmup_frames < c.num_frames, "warmup_frames", "must be < num_frames");
  require(c.num_runs >= 1, "num_runs", "must be >= 1");
}

ExperimentConfig parse_config(std::string_view text, const ExperimentConfig& base) {
  ExperimentConfig config = base;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto eol = text.find('\n', pos);
    auto line = text.substr(pos, eol == std::string_view::npos ? std::string_view::npos : eol - pos);
    pos = eol == std::string_view::npos ? text.size() + 1 : eol + 1;
    ++line_no;

    if (const auto hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    line = trim(line);
    if (line.empty()) {
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ValidationError("line " + std::to_string(line_no), "expected key = value");
    }
    const auto key = trim(line.substr(0, eq));
    const auto value = line.substr(eq + 1);
    const auto& table = fields();
    const auto it = std::find_if(table.begin(), table.end(), [&](const Field& f) { return f.key == key; });
    if (it == table.end()) {
      throw ValidationError(std::string(key), "unknown key");
    }
    it->set(config, value);
  }
  return config;
}

ExperimentConfig load_config(const std::string& path, const ExperimentConfig& base) {
  std::ifstream in(path);
  if (!in) {
    throw ValidationError("config", "cannot open '" + path + "'");
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str(), base);
}

std::string to_config_text(const ExperimentConfig& config) {
  std::string out;
  for (const auto& field : fields()) {
    out += field.key;
    out += " = ";
    out += field.get(config);
    out += '\n';
  }
  return out;
}

} // namespace uplink
