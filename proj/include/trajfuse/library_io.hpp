// Copyright 2026 The trajfuse Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "trajfuse/adapter.hpp"
#include "trajfuse/error.hpp"

namespace trajfuse {

namespace detail {

/// Shortest-safe decimal form: 17 significant digits always round-trips a
/// binary64 value exactly.
inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string quote(const std::string& s) { return nlohmann::json(s).dump(); }

inline void append_numbers(std::string& out, std::span<const double> xs) {
  out += '[';
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out += ',';
    out += format_double(xs[i]);
  }
  out += ']';
}

inline void append_shape_meta(std::string& out, const ShapeMeta& meta) {
  out += '[';
  for (std::size_t i = 0; i < meta.size(); ++i) {
    if (i) out += ',';
    out += "{\"name\":" + quote(meta[i].name) + ",\"dims\":[";
    for (std::size_t d = 0; d < meta[i].dims.size(); ++d) {
      if (d) out += ',';
      out += std::to_string(meta[i].dims[d]);
    }
    out += "]}";
  }
  out += ']';
}

struct RawRecord {
  std::int64_t step;
  double trait_percentage;
  const Adapter* adapter;
};

inline std::string render_library(const std::string& kind, int version,
                                  const TraitPair& pair, const std::string& pole,
                                  const ShapeMeta& meta,
                                  const std::vector<RawRecord>& records) {
  std::string out;
  out += "{\n  \"format_version\": " + std::to_string(version) + ",\n";
  out += "  \"kind\": " + quote(kind) + ",\n";
  out += "  \"trait_pair\": [" + quote(pair.left) + "," + quote(pair.right) + "],\n";
  out += "  \"target_pole\": " + quote(pole) + ",\n";
  out += "  \"shape_meta\": ";
  append_shape_meta(out, meta);
  out += ",\n  \"checkpoints\": [";
  for (std::size_t i = 0; i < records.size(); ++i) {
    out += i ? ",\n    " : "\n    ";
    out += "{\"step\":" + std::to_string(records[i].step) +
           ",\"trait_percentage\":" + format_double(records[i].trait_percentage) +
           ",\"data\":";
    append_numbers(out, records[i].adapter->data());
    out += '}';
  }
  out += records.empty() ? "]\n}\n" : "\n  ]\n}\n";
  return out;
}

inline std::size_t line_of(const std::string& text, std::size_t byte) {
  std::size_t line = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i)
    if (text[i] == '\n') ++line;
  return line;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingInput("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
  if (!out) throw Error("write failed for " + path.string());
}

inline nlohmann::json parse_json(const std::string& text, const std::string& source) {
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(source + ": line " + std::to_string(line_of(text, e.byte)) +
                      ": " + e.what());
  }
}

/// Typed field access that reports the JSON path on failure.
template <typename T>
T field(const nlohmann::json& obj, const std::string& key, const std::string& path) {
  if (!obj.is_object() || !obj.contains(key))
    throw FormatError("missing field '" + path + key + "'");
  try {
    return obj.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw FormatError("field '" + path + key + "' has the wrong type");
  }
}

struct ParsedLibrary {
  std::string kind;
  int version = 0;
  TraitPair pair;
  std::string pole;
  ShapeMeta meta;
  struct Record {
    std::int64_t step;
    double trait_percentage;
    std::vector<double> data;
  };
  std::vector<Record> records;
};

inline ParsedLibrary parse_library(const std::string& text, const std::string& source) {
  const auto j = parse_json(text, source);
  if (!j.is_object()) throw FormatError(source + ": top level is not an object");
  ParsedLibrary p;
  p.version = field<int>(j, "format_version", "");
  if (p.version != kLibraryFormatVersion)
    throw VersionError(source + ": format_version " + std::to_string(p.version) +
                       " (supported: " + std::to_string(kLibraryFormatVersion) + ")");
  p.kind = j.contains("kind") ? field<std::string>(j, "kind", "") : "trajectory";
  const auto pair = field<std::vector<std::string>>(j, "trait_pair", "");
  if (pair.size() != 2) throw FormatError(source + ": trait_pair must have 2 entries");
  p.pair = {pair[0], pair[1]};
  p.pole = field<std::string>(j, "target_pole", "");

  if (!j.contains("shape_meta") || !j.at("shape_meta").is_array())
    throw FormatError(source + ": missing array 'shape_meta'");
  const auto& meta = j.at("shape_meta");
  for (std::size_t i = 0; i < meta.size(); ++i) {
    const std::string at = "shape_meta[" + std::to_string(i) + "].";
    p.meta.push_back({field<std::string>(meta[i], "name", at),
                      field<std::vector<std::int64_t>>(meta[i], "dims", at)});
  }

  if (!j.contains("checkpoints") || !j.at("checkpoints").is_array())
    throw FormatError(source + ": missing array 'checkpoints'");
  const auto& cps = j.at("checkpoints");
  for (std::size_t i = 0; i < cps.size(); ++i) {
    const std::string at = "checkpoints[" + std::to_string(i) + "].";
    p.records.push_back({field<std::int64_t>(cps[i], "step", at),
                         field<double>(cps[i], "trait_percentage", at),
                         field<std::vector<double>>(cps[i], "data", at)});
  }
  return p;
}

inline Adapter make_adapter(std::vector<double> data, const ShapeMeta& meta,
                            const std::string& where) {
  try {
    return Adapter(std::move(data), meta);
  } catch (const Error& e) {
    throw FormatError(where + ": " + e.what());
  }
}

}  // namespace detail

inline std::string library_to_json(const TrajectoryLibrary& lib) {
  std::vector<detail::RawRecord> recs;
  for (const auto& c : lib.checkpoints)
    recs.push_back({c.step, c.trait_percentage, &c.adapter});
  const ShapeMeta meta =
      lib.checkpoints.empty() ? ShapeMeta{} : lib.checkpoints[0].adapter.shape_meta();
  return detail::render_library("trajectory", lib.format_version, lib.trait_pair,
                                lib.target_pole, meta, recs);
}

inline TrajectoryLibrary library_from_json(const std::string& text,
                                           const std::string& source = "<memory>") {
  auto p = detail::parse_library(text, source);
  if (p.kind != "trajectory")
    throw FormatError(source + ": expected kind 'trajectory', got '" + p.kind + "'");
  TrajectoryLibrary lib;
  lib.format_version = p.version;
  lib.trait_pair = p.pair;
  lib.target_pole = p.pole;
  for (std::size_t i = 0; i < p.records.size(); ++i) {
    auto& r = p.records[i];
    const std::string where = source + ": checkpoints[" + std::to_string(i) + "]";
    lib.checkpoints.push_back(
        {r.step, detail::make_adapter(std::move(r.data), p.meta, where), r.trait_percentage});
  }
  try {
    lib.validate();
  } catch (const FormatError& e) {
    throw FormatError(source + ": " + e.what());
  }
  return lib;
}

inline void save_library(const TrajectoryLibrary& lib, const std::filesystem::path& path) {
  lib.validate();
  detail::write_file(path, library_to_json(lib));
}

inline TrajectoryLibrary load_library(const std::filesystem::path& path) {
  return library_from_json(detail::read_file(path), path.string());
}

/// Basis sets share the library schema with `kind: "basis"`; `step` holds the
/// source step and `trait_percentage` the intensity. Entries are ordered by
/// intensity rather than step.
inline std::string basis_to_json(const BasisSet& basis) {
  std::vector<detail::RawRecord> recs;
  for (const auto& e : basis.entries())
    recs.push_back({e.source_step, e.intensity, &e.adapter});
  return detail::render_library("basis", kLibraryFormatVersion, basis.trait_pair(),
                                basis.target_pole(), basis.shape_meta(), recs);
}

inline BasisSet basis_from_json(const std::string& text,
                                const std::string& source = "<memory>") {
  auto p = detail::parse_library(text, source);
  if (p.kind != "basis")
    throw FormatError(source + ": expected kind 'basis', got '" + p.kind + "'");
  std::vector<BasisEntry> entries;
  for (std::size_t i = 0; i < p.records.size(); ++i) {
    auto& r = p.records[i];
    const std::string where = source + ": checkpoints[" + std::to_string(i) + "]";
    entries.push_back({detail::make_adapter(std::move(r.data), p.meta, where),
                       r.trait_percentage, r.step});
  }
  try {
    return BasisSet(std::move(entries), p.pair, p.pole);
  } catch (const DimensionError& e) {
    throw FormatError(source + ": " + e.what());
  }
}

inline void save_basis(const BasisSet& basis, const std::filesystem::path& path) {
  detail::write_file(path, basis_to_json(basis));
}

inline BasisSet load_basis(const std::filesystem::path& path) {
  return basis_from_json(detail::read_file(path), path.string());
}

}  // namespace trajfuse
