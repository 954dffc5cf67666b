#ifndef PLASTHOM_IO_HPP
#define PLASTHOM_IO_HPP

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <ctime>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "plasthom/errors.hpp"
#include "plasthom/grid.hpp"
#include "plasthom/version.hpp"

namespace plasthom {

using json = nlohmann::json;

// ---------------------------------------------------------------------------
// Canonical JSON hashing. nlohmann objects keep keys sorted, so dump() is
// already independent of the key order in the source text; FNV-1a over that
// byte stream gives a stable 64-bit config identity.
// ---------------------------------------------------------------------------

inline std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

inline std::string config_hash(const json& config) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a64(config.dump())));
  return buf;
}

// ---------------------------------------------------------------------------
// Config file loading with line-anchored parse errors.
// ---------------------------------------------------------------------------

inline json load_json_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(path + ": cannot open");
  std::stringstream buffer;
  buffer << in.rdbuf();
  const std::string text = buffer.str();
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    // e.byte is 1-based offset of the failure; convert to line:column.
    std::size_t line = 1, col = 1;
    const std::size_t stop =
        e.byte > 0 ? std::min(text.size(), static_cast<std::size_t>(e.byte) - 1)
                   : 0;
    for (std::size_t i = 0; i < stop; ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw ConfigError(path + ":" + std::to_string(line) + ":" +
                      std::to_string(col) + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Run manifest: exactly one per CLI invocation.
// ---------------------------------------------------------------------------

struct RunManifest {
  std::string command;
  std::string config_hash;
  std::vector<std::string> input_paths;
  std::vector<std::string> output_paths;
  std::string tool_version = version_string;
  std::string timestamp;  // ISO-8601 UTC
  std::vector<std::uint64_t> seeds;

  static std::string now_utc() {
    const std::time_t t =
        std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
  }

  json to_json() const {
    return json{{"command", command},
                {"config_hash", config_hash},
                {"input_paths", input_paths},
                {"output_paths", output_paths},
                {"tool_version", tool_version},
                {"timestamp", timestamp},
                {"seeds", seeds}};
  }

  void write(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError(path + ": cannot write manifest");
    out << to_json().dump(2) << "\n";
  }
};

// ---------------------------------------------------------------------------
// CSV: every floating-point cell goes through %.17g so repeated runs of the
// same configuration produce byte-identical files.
// ---------------------------------------------------------------------------

inline std::string format_g17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline void write_csv(const std::string& path,
                      const std::vector<std::string>& header,
                      const std::vector<std::vector<std::string>>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError(path + ": cannot write CSV");
  for (std::size_t i = 0; i < header.size(); ++i) {
    out << (i ? "," : "") << header[i];
  }
  out << "\n";
  for (const auto& row : rows) {
    if (row.size() != header.size()) {
      throw ConfigError(path + ": CSV row width mismatch");
    }
    for (std::size_t i = 0; i < row.size(); ++i) {
      out << (i ? "," : "") << row[i];
    }
    out << "\n";
  }
}

// ---------------------------------------------------------------------------
// Field container: little-endian float64 payload next to a JSON header that
// records the grid and the layout. Round-trips are bit-exact.
// ---------------------------------------------------------------------------

struct FieldContainer {
  GridDomain domain;
  DeformationField y;
  PlasticField P;
};

inline void write_fields(const std::string& stem, const GridDomain& dom,
                         const DeformationField& y, const PlasticField& P) {
  const std::string bin_path = stem + ".bin";
  const std::string json_path = stem + ".json";
  std::ofstream bin(bin_path, std::ios::binary);
  if (!bin) throw ConfigError(bin_path + ": cannot write payload");
  auto put = [&](const double* data, std::size_t count) {
    bin.write(reinterpret_cast<const char*>(data),
              static_cast<std::streamsize>(count * sizeof(double)));
  };
  put(y.y.data(), y.y.size());
  for (const Mat3& m : P.P) put(m.a.data(), 9);
  bin.close();

  json header{
      {"format", "plasthom-fields"},
      {"version", 1},
      {"dtype", "float64"},
      {"byte_order", "little"},
      {"dimension", dom.dimension()},
      {"origin", {dom.origin(0), dom.origin(1), dom.origin(2)}},
      {"extent", {dom.extent(0), dom.extent(1), dom.extent(2)}},
      {"cells", {dom.cells(0), dom.cells(1), dom.cells(2)}},
      {"y_count", y.y.size()},
      {"P_count", P.P.size()},
      {"payload", bin_path.substr(bin_path.find_last_of('/') + 1)},
      {"payload_bytes", (y.y.size() + 9 * P.P.size()) * sizeof(double)},
  };
  std::ofstream hdr(json_path, std::ios::binary);
  if (!hdr) throw ConfigError(json_path + ": cannot write header");
  hdr << header.dump(2) << "\n";
}

inline FieldContainer read_fields(const std::string& stem) {
  const json header = load_json_file(stem + ".json");
  if (header.value("format", "") != "plasthom-fields") {
    throw ConfigError(stem + ".json: not a plasthom field container");
  }
  const int d = header.at("dimension").get<int>();
  std::array<double, 3> origin{}, extent{};
  std::array<int, 3> cells{};
  for (int a = 0; a < 3; ++a) {
    origin[static_cast<std::size_t>(a)] = header.at("origin")[a].get<double>();
    extent[static_cast<std::size_t>(a)] = header.at("extent")[a].get<double>();
    cells[static_cast<std::size_t>(a)] = header.at("cells")[a].get<int>();
  }
  std::array<double, 3> box_extent = extent;
  std::array<int, 3> box_cells = cells;
  for (int a = d; a < 3; ++a) {
    box_extent[static_cast<std::size_t>(a)] = 1.0;
    box_cells[static_cast<std::size_t>(a)] = 1;
  }
  FieldContainer out{GridDomain::box(d, origin, box_extent, box_cells), {}, {}};

  const std::size_t y_count = header.at("y_count").get<std::size_t>();
  const std::size_t p_count = header.at("P_count").get<std::size_t>();
  const std::string bin_path = stem + ".bin";
  std::ifstream bin(bin_path, std::ios::binary);
  if (!bin) throw ConfigError(bin_path + ": cannot open payload");
  out.y.y.resize(y_count);
  bin.read(reinterpret_cast<char*>(out.y.y.data()),
           static_cast<std::streamsize>(y_count * sizeof(double)));
  out.P.P.resize(p_count);
  for (std::size_t n = 0; n < p_count; ++n) {
    bin.read(reinterpret_cast<char*>(out.P.P[n].a.data()),
             static_cast<std::streamsize>(9 * sizeof(double)));
  }
  if (!bin) throw ConfigError(bin_path + ": truncated payload");
  return out;
}

}  // namespace plasthom

#endif
