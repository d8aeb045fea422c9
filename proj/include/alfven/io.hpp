#pragma once

// On-disk formats: INI experiment configs, norms CSV, binary field dumps and
// JSON manifests. Every file is written to a temporary name and renamed.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>

#include "alfven/diagnostics.hpp"
#include "alfven/experiments.hpp"
#include "alfven/scattering.hpp"

namespace alfven::io {

/// Parses an INI document. Every problem found (unknown keys, bad values,
/// missing keys, margins) is reported in one exception.
ExperimentConfig parse_config(std::istream& in, const std::string& source = "<stream>");
ExperimentConfig parse_config(const std::filesystem::path& path);

/// JSON echo of a config, as stored in the manifest.
std::string config_json(const ExperimentConfig& cfg);

/// Header row of norms.csv; one E column pair per order k <= k_max.
std::string norms_csv_header(int k_max = 2);
void write_norms_csv(const std::filesystem::path& path, const NormSeries& series);
NormSeries read_norms_csv(const std::filesystem::path& path);

enum class DumpKind : std::uint32_t { physical = 0, spectral = 1 };

inline constexpr std::size_t dump_header_bytes = 128;

struct DumpHeader {
  DumpKind kind = DumpKind::physical;
  DomainSpec domain;
  double t = 0.0;
  double a = 0.0;
  double delta = 0.1;
  Species species = Species::plus;
  /// Centre of the species' x3 window at time t.
  double window_center = 0.0;
};

/// Header, then little-endian doubles: physical samples in x1-major order
/// with the three components concatenated, or the stored spectral
/// coefficients as (re, im) pairs.
void write_field_dump(const std::filesystem::path& path, const SpectralVectorField& f, const DumpHeader& h);

struct RawDump {
  DumpHeader header;
  /// Payload exactly as stored.
  std::vector<double> payload;
};
RawDump read_raw_dump(const std::filesystem::path& path);

struct LoadedField {
  DumpHeader header;
  SpectralVectorField field;
};
/// Reads a dump and rejects fields with max|div| above div_tol * max(1, max|f|).
LoadedField read_field_dump(const std::filesystem::path& path, double div_tol = 1e-10);

/// Dump of one species of a state.
void write_state_dump(const std::filesystem::path& path, const ElsasserState& s, Species sp,
                      DumpKind kind = DumpKind::physical);
/// Rebuilds a state from a z+ dump and a z- dump taken at the same time.
ElsasserState read_state_dumps(const std::filesystem::path& plus, const std::filesystem::path& minus);

/// Field dump plus a JSON sidecar (path + ".json") with t_origin, T, tail and
/// the norms up to k_max.
void write_scattering(const std::filesystem::path& path, const ScatteringField& f, int k_max);
ScatteringField read_scattering(const std::filesystem::path& path);

std::string manifest_json(const RunManifest& m, const ExperimentConfig& cfg);
void write_manifest(const std::filesystem::path& path, const RunManifest& m, const ExperimentConfig& cfg);

/// Writes `contents` next to `path` and renames it into place.
void write_atomic(const std::filesystem::path& path, const std::string& contents);

} // namespace alfven::io
