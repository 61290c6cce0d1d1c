#pragma once

// Output records. Every emitted file starts with a self-description header
// (hash of the resolved config, root seed, artifact version), then either CSV
// rows or JSON-lines. nlohmann::json keeps object keys sorted and prints
// shortest round-trip doubles, so dumps are canonical and reruns diff clean.

#include <json.hpp>

#include <cstdint>
#include <ostream>
#include <string>
#include <string_view>

#include "treecp/common.hpp"
#include "treecp/stats.hpp"

namespace treecp {

using Json = nlohmann::json;

inline std::string fnv1aHex(std::string_view s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  static const char* digits = "0123456789abcdef";
  for (int i = 15; i >= 0; --i) {
    buf[i] = digits[h & 0xf];
    h >>= 4;
  }
  buf[16] = '\0';
  return buf;
}

inline Json headerRecord(const Json& resolvedConfig, std::uint64_t rootSeed) {
  return Json{{"record", "header"},
              {"config", resolvedConfig},
              {"config_hash", fnv1aHex(resolvedConfig.dump())},
              {"seed", rootSeed},
              {"version", kVersion}};
}

inline Json estimateRecord(const std::string& op, Json params, const Estimate& e) {
  params["protocol"] = e.protocol;
  return Json{{"op", op},         {"params", std::move(params)},
              {"value", e.value}, {"ci_lo", e.lo},
              {"ci_hi", e.hi},    {"n", e.n},
              {"censored", e.censored}, {"seed", e.seed}};
}

inline std::string csvField(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

// Shortest round-trip text for a double, identical to its JSON form.
inline std::string numberText(double x) { return Json(x).dump(); }

class RecordWriter {
 public:
  enum class Format { Csv, Jsonl };

  RecordWriter(std::ostream& out, Format format, const Json& resolvedConfig,
               std::uint64_t rootSeed)
      : out_(out), format_(format) {
    Json header = headerRecord(resolvedConfig, rootSeed);
    if (format_ == Format::Csv) {
      out_ << "# " << header.dump() << "\n";
      out_ << "op,params,value,ci_lo,ci_hi,n,censored,seed\n";
    } else {
      out_ << header.dump() << "\n";
    }
  }

  void estimate(const std::string& op, const Json& params, const Estimate& e) {
    if (format_ == Format::Csv) {
      Json p = params;
      p["protocol"] = e.protocol;
      out_ << csvField(op) << ',' << csvField(p.dump()) << ',' << numberText(e.value) << ','
           << numberText(e.lo) << ',' << numberText(e.hi) << ',' << e.n << ',' << e.censored
           << ',' << e.seed << "\n";
    } else {
      out_ << estimateRecord(op, params, e).dump() << "\n";
    }
  }

  // Free-form rows (trajectories, traces); JSON-lines only.
  void line(const Json& j) {
    if (format_ == Format::Csv) throw ConfigError("trajectory rows require the jsonl format");
    out_ << j.dump() << "\n";
  }

  Format format() const { return format_; }

 private:
  std::ostream& out_;
  Format format_;
};

}  // namespace treecp
