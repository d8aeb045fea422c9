#include "alfven/io.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <json.hpp>
#include <unistd.h>

#include "alfven/errors.hpp"

namespace alfven::io {

namespace fs = std::filesystem;
namespace pt = boost::property_tree;
using json = nlohmann::json;

// ---------------------------------------------------------------------------
// INI configuration

namespace {

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ',' || c == ' ' || c == '\t') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

std::optional<double> to_double(const std::string& s) {
  double v = 0.0;
  const auto t = trim(s);
  const auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || p != t.data() + t.size() || t.empty()) return std::nullopt;
  return v;
}

std::optional<long long> to_int(const std::string& s) {
  long long v = 0;
  const auto t = trim(s);
  const auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
  if (ec != std::errc() || p != t.data() + t.size() || t.empty()) return std::nullopt;
  return v;
}

// Reads one section, recording every problem instead of stopping.
class Section {
public:
  Section(const pt::ptree* tree, std::string name, std::vector<ConfigProblem>& problems)
      : tree_(tree), name_(std::move(name)), problems_(problems) {}

  bool present() const { return tree_ != nullptr; }

  std::optional<std::string> raw(const std::string& key, bool required = false) {
    seen_.insert(key);
    if (tree_) {
      if (auto v = tree_->get_optional<std::string>(pt::ptree::path_type(key, '\0'))) return trim(*v);
    }
    if (required) problems_.push_back({ConfigProblem::Kind::missing_key, name_ + "." + key + " is required"});
    return std::nullopt;
  }

  void number(const std::string& key, double& out, bool required = false) {
    if (auto r = raw(key, required)) {
      if (auto v = to_double(*r)) {
        out = *v;
      } else {
        bad(key, *r, "a number");
      }
    }
  }

  template <class Int>
  void integer(const std::string& key, Int& out, bool required = false) {
    if (auto r = raw(key, required)) {
      if (auto v = to_int(*r)) {
        out = static_cast<Int>(*v);
      } else {
        bad(key, *r, "an integer");
      }
    }
  }

  void boolean(const std::string& key, bool& out) {
    if (auto r = raw(key)) {
      if (*r == "true" || *r == "1" || *r == "yes") {
        out = true;
      } else if (*r == "false" || *r == "0" || *r == "no") {
        out = false;
      } else {
        bad(key, *r, "true or false");
      }
    }
  }

  void list(const std::string& key, std::vector<double>& out, bool required = false) {
    if (auto r = raw(key, required)) {
      std::vector<double> vals;
      for (const auto& item : split_list(*r)) {
        if (auto v = to_double(item)) {
          vals.push_back(*v);
        } else {
          bad(key, *r, "a list of numbers");
          return;
        }
      }
      out = std::move(vals);
    }
  }

  template <class T>
  void triple(const std::string& key, std::array<T, 3>& out, bool required = false) {
    std::vector<double> vals;
    if (auto r = raw(key, required)) {
      list_into(key, *r, vals);
      if (vals.size() != 3) {
        bad(key, *r, "three numbers");
        return;
      }
      for (int a = 0; a < 3; ++a) out[a] = static_cast<T>(vals[a]);
    }
  }

  void bad(const std::string& key, const std::string& value, const char* expected) {
    problems_.push_back({ConfigProblem::Kind::range, name_ + "." + key + " = '" + value + "' is not " + expected});
  }

  /// Flags keys nobody asked for.
  void finish() {
    if (!tree_) return;
    for (const auto& [k, v] : *tree_) {
      if (!seen_.count(k)) problems_.push_back({ConfigProblem::Kind::range, name_ + ": unknown key '" + k + "'"});
    }
  }

private:
  void list_into(const std::string& key, const std::string& r, std::vector<double>& vals) {
    for (const auto& item : split_list(r)) {
      if (auto v = to_double(item)) {
        vals.push_back(*v);
      } else {
        bad(key, r, "a list of numbers");
        vals.clear();
        return;
      }
    }
  }

  const pt::ptree* tree_;
  std::string name_;
  std::vector<ConfigProblem>& problems_;
  std::set<std::string> seen_;
};

const pt::ptree* child(const pt::ptree& root, const std::string& name) {
  auto it = root.find(name);
  return it == root.not_found() ? nullptr : &it->second;
}

std::optional<Species> parse_species(const std::string& s) {
  if (s == "plus" || s == "+") return Species::plus;
  if (s == "minus" || s == "-") return Species::minus;
  return std::nullopt;
}

} // namespace

ExperimentConfig parse_config(std::istream& in, const std::string& source) {
  pt::ptree root;
  try {
    pt::read_ini(in, root);
  } catch (const pt::ini_parser_error& e) {
    throw InvalidData(source + ": " + e.message() + " (line " + std::to_string(e.line()) + ")");
  }
  std::vector<ConfigProblem> problems;
  ExperimentConfig cfg;
  cfg.source = source;

  static const std::set<std::string> known{"experiment", "domain",  "weights", "stepper",
                                           "diagnostics", "sweep", "model1d", "tolerances"};
  std::vector<std::string> packet_sections;
  for (const auto& [name, sub] : root) {
    if (sub.empty() && !sub.data().empty()) {
      problems.push_back({ConfigProblem::Kind::range, "key '" + name + "' outside any section"});
    } else if (name.rfind("packet", 0) == 0) {
      packet_sections.push_back(name);
    } else if (!known.count(name)) {
      problems.push_back({ConfigProblem::Kind::range, "unknown section [" + name + "]"});
    }
  }

  {
    Section s(child(root, "experiment"), "experiment", problems);
    if (auto k = s.raw("kind", true)) {
      try {
        cfg.kind = parse_experiment_kind(*k);
      } catch (const RangeError& e) {
        problems.push_back({ConfigProblem::Kind::range, std::string("experiment.kind: ") + e.what()});
      }
    }
    if (auto o = s.raw("output")) cfg.output_dir = *o;
    s.integer("seed", cfg.seed);
    s.finish();
  }
  {
    Section s(child(root, "domain"), "domain", problems);
    s.triple("n", cfg.domain.n);
    s.triple("L", cfg.domain.L);
    s.finish();
  }
  {
    Section s(child(root, "weights"), "weights", problems);
    double a = 0.0, delta = 0.1;
    s.number("a", a);
    s.number("delta", delta);
    try {
      cfg.weights = WeightParams(a, delta);
    } catch (const RangeError& e) {
      problems.push_back({ConfigProblem::Kind::range, e.what()});
    }
    s.finish();
  }
  {
    Section s(child(root, "stepper"), "stepper", problems);
    s.number("dt", cfg.stepper.dt);
    s.number("cfl", cfg.stepper.cfl);
    s.number("t_end", cfg.stepper.t_end);
    s.integer("record_every", cfg.stepper.record_every);
    s.number("blowup_factor", cfg.stepper.blowup_factor);
    cfg.stepper.direction = cfg.stepper.t_end >= 0.0 ? Direction::forward : Direction::backward;
    s.finish();
  }
  {
    Section s(child(root, "diagnostics"), "diagnostics", problems);
    auto& d = cfg.diagnostics;
    s.integer("k_max", d.k_max);
    s.integer("diag_every", d.diag_every);
    s.number("u_margin", d.u_margin);
    s.number("tail_window", d.tail_window);
    s.number("checkpoint_every", d.checkpoint_every);
    s.boolean("refine_dt", d.refine_dt);
    s.finish();
  }
  {
    Section s(child(root, "sweep"), "sweep", problems);
    s.list("lambdas", cfg.sweep.lambdas);
    s.list("eps_plus", cfg.sweep.eps_plus);
    s.list("eps_minus", cfg.sweep.eps_minus);
    s.finish();
  }
  {
    Section s(child(root, "model1d"), "model1d", problems);
    auto& m = cfg.model1d;
    s.number("L", m.L);
    s.integer("n", m.n);
    s.number("amplitude", m.amplitude);
    s.number("width", m.width);
    s.number("velocity_amplitude", m.velocity_amplitude);
    s.list("times", m.times);
    s.finish();
  }
  {
    Section s(child(root, "tolerances"), "tolerances", problems);
    auto& t = cfg.tolerances;
    s.number("transport", t.transport);
    s.number("pressure_one_sided", t.pressure_one_sided);
    s.number("scattering_one_sided", t.scattering_one_sided);
    s.number("flux_saturation", t.flux_saturation);
    s.number("conservation", t.conservation);
    s.number("divergence", t.divergence);
    s.number("main_estimate", t.main_estimate);
    s.number("decay_bound", t.decay_bound);
    s.number("trace", t.trace);
    s.number("trace_refinement", t.trace_refinement);
    s.number("tail", t.tail);
    s.number("recovery", t.recovery);
    s.number("linearity", t.linearity);
    s.number("exponent", t.exponent);
    s.number("sweep_linear_limit", t.sweep_linear_limit);
    s.number("sweep_band", t.sweep_band);
    s.number("model1d_rigidity", t.model1d_rigidity);
    s.number("model1d_analytic", t.model1d_analytic);
    s.finish();
  }

  std::sort(packet_sections.begin(), packet_sections.end(), [](const std::string& a, const std::string& b) {
    return a.size() != b.size() ? a.size() < b.size() : a < b;
  });
  for (const auto& name : packet_sections) {
    Section s(child(root, name), name, problems);
    PacketSpec p;
    p.polarization_seed = 0;
    if (auto sp = s.raw("species", true)) {
      if (auto v = parse_species(*sp)) {
        p.species = *v;
      } else {
        s.bad("species", *sp, "plus or minus");
      }
    }
    s.triple("center", p.center, true);
    s.triple("widths", p.widths);
    s.number("amplitude", p.amplitude);
    s.integer("polarization_seed", p.polarization_seed);
    std::array<double, 3> pol{};
    if (s.raw("polarization")) {
      s.triple("polarization", pol);
      p.polarization = Vec3(pol[0], pol[1], pol[2]);
    }
    s.finish();
    cfg.packets.push_back(p);
  }

  // Semantic checks only make sense once the syntax is clean.
  if (problems.empty()) {
    for (auto& p : config_problems(cfg)) problems.push_back(std::move(p));
  }
  for (auto& p : problems) p.message = source + ": " + p.message;
  throw_problems(problems);
  return cfg;
}

ExperimentConfig parse_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  return parse_config(in, path.string());
}

namespace {

json config_to_json(const ExperimentConfig& c) {
  json packets = json::array();
  for (std::size_t i = 0; i < c.packets.size(); ++i) {
    const auto& p = c.packets[i];
    json j{{"species", to_string(p.species)},
           {"center", p.center},
           {"widths", p.widths},
           {"amplitude", p.amplitude},
           {"polarization_seed", packet_seed(c, i)}};
    if (p.polarization) j["polarization"] = {(*p.polarization)[0], (*p.polarization)[1], (*p.polarization)[2]};
    packets.push_back(j);
  }
  const auto& t = c.tolerances;
  return json{
      {"kind", to_string(c.kind)},
      {"output", c.output_dir},
      {"seed", c.seed},
      {"domain", {{"n", c.domain.n}, {"L", c.domain.L}}},
      {"weights", {{"a", c.weights.a}, {"delta", c.weights.delta}}},
      {"stepper",
       {{"dt", c.stepper.dt},
        {"cfl", c.stepper.cfl},
        {"t_end", c.stepper.t_end},
        {"record_every", c.stepper.record_every},
        {"blowup_factor", c.stepper.blowup_factor}}},
      {"diagnostics",
       {{"k_max", c.diagnostics.k_max},
        {"diag_every", c.diagnostics.diag_every},
        {"u_margin", c.diagnostics.u_margin},
        {"tail_window", c.diagnostics.tail_window},
        {"checkpoint_every", c.diagnostics.checkpoint_every},
        {"refine_dt", c.diagnostics.refine_dt}}},
      {"sweep", {{"lambdas", c.sweep.lambdas}, {"eps_plus", c.sweep.eps_plus}, {"eps_minus", c.sweep.eps_minus}}},
      {"model1d",
       {{"L", c.model1d.L},
        {"n", c.model1d.n},
        {"amplitude", c.model1d.amplitude},
        {"width", c.model1d.width},
        {"velocity_amplitude", c.model1d.velocity_amplitude},
        {"times", c.model1d.times}}},
      {"tolerances",
       {{"transport", t.transport},
        {"pressure_one_sided", t.pressure_one_sided},
        {"scattering_one_sided", t.scattering_one_sided},
        {"flux_saturation", t.flux_saturation},
        {"conservation", t.conservation},
        {"divergence", t.divergence},
        {"main_estimate", t.main_estimate},
        {"decay_bound", t.decay_bound},
        {"trace", t.trace},
        {"trace_refinement", t.trace_refinement},
        {"tail", t.tail},
        {"recovery", t.recovery},
        {"linearity", t.linearity},
        {"exponent", t.exponent},
        {"sweep_linear_limit", t.sweep_linear_limit},
        {"sweep_band", t.sweep_band},
        {"model1d_rigidity", t.model1d_rigidity},
        {"model1d_analytic", t.model1d_analytic}}},
      {"packets", packets}};
}

} // namespace

std::string config_json(const ExperimentConfig& cfg) { return config_to_json(cfg).dump(2); }

// ---------------------------------------------------------------------------
// Atomic writes

void write_atomic(const fs::path& path, const std::string& contents) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    out.flush();
    if (!out) throw IoError("write failed for " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp);
    throw IoError("cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
  }
}

namespace {

std::string read_all(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

} // namespace

// ---------------------------------------------------------------------------
// norms.csv

std::string norms_csv_header(int k_max) {
  std::string h = "t,E_plus,E_minus";
  for (int k = 0; k <= k_max; ++k) h += ",E" + std::to_string(k) + "_plus,E" + std::to_string(k) + "_minus";
  h += ",F_plus,F_minus,energy,cross_helicity,sep_ratio,p1_ratio,p2_ratio";
  return h;
}

void write_norms_csv(const fs::path& path, const NormSeries& series) {
  std::ostringstream out;
  out << norms_csv_header(series.k_max) << '\n';
  char buf[32];
  auto put = [&](double v) {
    std::snprintf(buf, sizeof buf, ",%.17g", v);
    out << buf;
  };
  for (const auto& s : series.samples) {
    std::snprintf(buf, sizeof buf, "%.17g", s.t);
    out << buf;
    put(s.E[0]);
    put(s.E[1]);
    for (int k = 0; k <= series.k_max; ++k) {
      const auto e = k < static_cast<int>(s.Ek.size()) ? s.Ek[k] : std::array<double, 2>{0.0, 0.0};
      put(e[0]);
      put(e[1]);
    }
    for (double v : {s.F[0], s.F[1], s.energy, s.cross_helicity, s.sep_ratio, s.p1_ratio, s.p2_ratio}) put(v);
    out << '\n';
  }
  write_atomic(path, out.str());
}

NormSeries read_norms_csv(const fs::path& path) {
  std::istringstream in(read_all(path));
  std::string line;
  if (!std::getline(in, line)) throw InvalidData(path.string() + ": empty file");
  const auto cols = split_list(line);
  // t, E pair, Ek pairs, 7 trailing columns
  const int pairs = (static_cast<int>(cols.size()) - 10) / 2;
  NormSeries s;
  s.k_max = pairs - 1;
  if (pairs < 1 || line != norms_csv_header(s.k_max)) throw InvalidData(path.string() + ": unexpected header");
  long row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    std::vector<double> v;
    for (const auto& c : split_list(line)) {
      const auto d = to_double(c);
      if (!d) throw InvalidData(path.string() + ": bad number on row " + std::to_string(row));
      v.push_back(*d);
    }
    if (v.size() != cols.size()) throw InvalidData(path.string() + ": wrong column count on row " + std::to_string(row));
    NormSample x;
    std::size_t i = 0;
    x.t = v[i++];
    x.E = {v[i], v[i + 1]};
    i += 2;
    for (int k = 0; k <= s.k_max; ++k, i += 2) x.Ek.push_back({v[i], v[i + 1]});
    x.F = {v[i], v[i + 1]};
    i += 2;
    x.energy = v[i++];
    x.cross_helicity = v[i++];
    x.sep_ratio = v[i++];
    x.p1_ratio = v[i++];
    x.p2_ratio = v[i++];
    s.samples.push_back(std::move(x));
  }
  return s;
}

// ---------------------------------------------------------------------------
// Field dumps

namespace {

constexpr char dump_magic[8] = {'A', 'L', 'F', 'V', '1', 0, 0, 0};
constexpr std::uint32_t endian_marker = 0x01020304;

template <class T>
void put_le(std::string& buf, std::size_t at, T v) {
  unsigned char b[sizeof(T)];
  std::memcpy(b, &v, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(b, b + sizeof(T));
  std::memcpy(buf.data() + at, b, sizeof(T));
}

template <class T>
T get_le(const std::string& buf, std::size_t at) {
  unsigned char b[sizeof(T)];
  std::memcpy(b, buf.data() + at, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(b, b + sizeof(T));
  T v;
  std::memcpy(&v, b, sizeof(T));
  return v;
}

// Header layout (byte offsets):
//   0 magic, 8 endian marker, 12 kind, 16 n1 n2 n3, 28 species,
//   32 L1 L2 L3, 56 t, 64 a, 72 delta, 80 window centre, rest zero.
std::string encode_header(const DumpHeader& h) {
  std::string buf(dump_header_bytes, '\0');
  std::memcpy(buf.data(), dump_magic, 8);
  put_le<std::uint32_t>(buf, 8, endian_marker);
  put_le<std::uint32_t>(buf, 12, static_cast<std::uint32_t>(h.kind));
  for (int a = 0; a < 3; ++a) put_le<std::int32_t>(buf, 16 + 4 * a, h.domain.n[a]);
  put_le<std::uint32_t>(buf, 28, h.species == Species::plus ? 0u : 1u);
  for (int a = 0; a < 3; ++a) put_le<double>(buf, 32 + 8 * a, h.domain.L[a]);
  put_le<double>(buf, 56, h.t);
  put_le<double>(buf, 64, h.a);
  put_le<double>(buf, 72, h.delta);
  put_le<double>(buf, 80, h.window_center);
  return buf;
}

DumpHeader decode_header(const std::string& buf, const fs::path& path) {
  if (buf.size() < dump_header_bytes) throw InvalidData(path.string() + ": truncated header");
  if (std::memcmp(buf.data(), dump_magic, 5) != 0) throw InvalidData(path.string() + ": bad magic");
  if (get_le<std::uint32_t>(buf, 8) != endian_marker) throw InvalidData(path.string() + ": bad endian marker");
  DumpHeader h;
  const auto kind = get_le<std::uint32_t>(buf, 12);
  if (kind > 1) throw InvalidData(path.string() + ": unknown dump kind");
  h.kind = static_cast<DumpKind>(kind);
  for (int a = 0; a < 3; ++a) h.domain.n[a] = get_le<std::int32_t>(buf, 16 + 4 * a);
  const auto sp = get_le<std::uint32_t>(buf, 28);
  if (sp > 1) throw InvalidData(path.string() + ": unknown species");
  h.species = sp == 0 ? Species::plus : Species::minus;
  for (int a = 0; a < 3; ++a) h.domain.L[a] = get_le<double>(buf, 32 + 8 * a);
  h.t = get_le<double>(buf, 56);
  h.a = get_le<double>(buf, 64);
  h.delta = get_le<double>(buf, 72);
  h.window_center = get_le<double>(buf, 80);
  try {
    h.domain.validate();
  } catch (const RangeError& e) {
    throw InvalidData(path.string() + ": " + e.what());
  }
  return h;
}

std::size_t payload_doubles(const DumpHeader& h) {
  const DomainSpec& d = h.domain;
  if (h.kind == DumpKind::physical) return 3 * d.size();
  return 3 * 2 * std::size_t(d.n[0]) * d.n[1] * (d.n[2] / 2 + 1);
}

} // namespace

void write_field_dump(const fs::path& path, const SpectralVectorField& f, const DumpHeader& h_in) {
  DumpHeader h = h_in;
  h.domain = f.grid->domain();
  std::string buf = encode_header(h);
  const std::size_t count = payload_doubles(h);
  buf.resize(dump_header_bytes + 8 * count);
  std::size_t at = dump_header_bytes;
  if (h.kind == DumpKind::physical) {
    const RealVectorField r = inverse(f);
    for (int a = 0; a < 3; ++a)
      for (Eigen::Index i = 0; i < r.c[a].size(); ++i, at += 8) put_le<double>(buf, at, r.c[a][i]);
  } else {
    for (int a = 0; a < 3; ++a) {
      for (Eigen::Index i = 0; i < f.c[a].size(); ++i) {
        put_le<double>(buf, at, f.c[a][i].real());
        put_le<double>(buf, at + 8, f.c[a][i].imag());
        at += 16;
      }
    }
  }
  write_atomic(path, buf);
}

RawDump read_raw_dump(const fs::path& path) {
  const std::string buf = read_all(path);
  RawDump d;
  d.header = decode_header(buf, path);
  const std::size_t count = payload_doubles(d.header);
  if (buf.size() != dump_header_bytes + 8 * count) {
    throw InvalidData(path.string() + ": payload is " + std::to_string(buf.size() - dump_header_bytes) +
                      " bytes, expected " + std::to_string(8 * count));
  }
  d.payload.resize(count);
  for (std::size_t i = 0; i < count; ++i) d.payload[i] = get_le<double>(buf, dump_header_bytes + 8 * i);
  return d;
}

LoadedField read_field_dump(const fs::path& path, double div_tol) {
  RawDump raw = read_raw_dump(path);
  for (double v : raw.payload)
    if (!std::isfinite(v)) throw InvalidData(path.string() + ": non-finite sample");
  const GridPtr grid = SpectralGrid::make(raw.header.domain);
  LoadedField out{raw.header, SpectralVectorField(grid)};
  if (raw.header.kind == DumpKind::physical) {
    const std::size_t n = grid->physical_size();
    std::array<RealArray, 3> samples;
    for (int a = 0; a < 3; ++a) samples[a] = Eigen::Map<const RealArray>(raw.payload.data() + a * n, n);
    out.field = transform(RealVectorField::from_samples(grid, std::move(samples)));
  } else {
    const std::size_t n = grid->spectral_size();
    for (int a = 0; a < 3; ++a) {
      for (std::size_t i = 0; i < n; ++i) {
        out.field.c[a][i] = Complex(raw.payload[2 * (a * n + i)], raw.payload[2 * (a * n + i) + 1]);
      }
    }
  }
  const double div = max_divergence(out.field);
  if (div > div_tol * std::max(1.0, max_abs(out.field))) {
    throw InvalidData(path.string() + ": field is not solenoidal (max |div| = " + std::to_string(div) + ")");
  }
  return out;
}

void write_state_dump(const fs::path& path, const ElsasserState& s, Species sp, DumpKind kind) {
  DumpHeader h;
  h.kind = kind;
  h.t = s.t;
  h.a = s.weights.a;
  h.delta = s.weights.delta;
  h.species = sp;
  h.window_center = s.guard.window_center(sp, s.t);
  write_field_dump(path, s.z(sp), h);
}

ElsasserState read_state_dumps(const fs::path& plus, const fs::path& minus) {
  LoadedField p = read_field_dump(plus);
  LoadedField m = read_field_dump(minus);
  if (p.header.species != Species::plus || m.header.species != Species::minus) {
    throw InvalidData("state dumps: expected a z+ dump and a z- dump");
  }
  if (!(p.header.domain == m.header.domain)) throw ShapeMismatch("state dumps: grids differ");
  if (p.header.t != m.header.t || p.header.a != m.header.a || p.header.delta != m.header.delta) {
    throw InvalidData("state dumps: time or weights differ between species");
  }
  ElsasserState s(p.field.grid, WeightParams(p.header.a, p.header.delta));
  s.t = p.header.t;
  s.z_plus = std::move(p.field);
  s.z_minus = std::move(m.field);
  s.z_minus.grid = s.z_plus.grid;
  s.guard.t_ref = s.t;
  s.guard.track(Species::plus).anchor = p.header.window_center;
  s.guard.track(Species::minus).anchor = m.header.window_center;
  return s;
}

void write_scattering(const fs::path& path, const ScatteringField& f, int k_max) {
  DumpHeader h;
  h.kind = DumpKind::physical;
  h.t = f.t_origin;
  h.a = f.weights.a;
  h.delta = f.weights.delta;
  h.species = f.species;
  h.window_center = f.window_center;
  write_field_dump(path, f.field, h);
  json norms = json::array();
  for (int k = 0; k <= k_max; ++k) norms.push_back(scattering_norm(f, k));
  json side{{"species", to_string(f.species)},
            {"direction", to_string(f.direction)},
            {"t_origin", f.t_origin},
            {"t_end", f.t_end},
            {"window_center", f.window_center},
            {"a", f.weights.a},
            {"delta", f.weights.delta},
            {"tail", std::isfinite(f.tail) ? json(f.tail) : json(nullptr)},
            {"norms", norms}};
  fs::path side_path = path;
  side_path += ".json";
  write_atomic(side_path, side.dump(2) + "\n");
}

ScatteringField read_scattering(const fs::path& path) {
  LoadedField lf = read_field_dump(path);
  fs::path side_path = path;
  side_path += ".json";
  ScatteringField f;
  f.species = lf.header.species;
  f.field = std::move(lf.field);
  f.t_origin = lf.header.t;
  f.window_center = lf.header.window_center;
  f.weights = WeightParams(lf.header.a, lf.header.delta);
  f.t_end = f.t_origin;
  if (fs::exists(side_path)) {
    try {
      const json side = json::parse(read_all(side_path));
      f.direction = side.at("direction").get<std::string>() == "past" ? TimeDirection::past : TimeDirection::future;
      f.t_end = side.at("t_end").get<double>();
      if (!side.at("tail").is_null()) f.tail = side.at("tail").get<double>();
    } catch (const json::exception& e) {
      throw InvalidData(side_path.string() + ": " + e.what());
    }
  }
  return f;
}

// ---------------------------------------------------------------------------
// Manifest

std::string manifest_json(const RunManifest& m, const ExperimentConfig& cfg) {
  auto num = [](double v) { return std::isfinite(v) ? json(v) : json(nullptr); };
  json assertions = json::array();
  for (const auto& a : m.assertions) {
    assertions.push_back({{"name", a.name},
                          {"passed", a.passed},
                          {"value", num(a.value)},
                          {"threshold", a.threshold},
                          {"comparison", a.at_least ? ">=" : "<="},
                          {"detail", a.detail}});
  }
  json constants = json::object();
  for (const auto& [k, v] : m.constants) constants[k] = num(v);
  json j{{"kind", m.kind},
         {"version", m.version},
         {"config_source", m.config_source},
         {"config", config_to_json(cfg)},
         {"seeds", m.seeds},
         {"wall_clock_seconds", m.wall_clock},
         {"all_passed", m.all_passed()},
         {"assertions", assertions},
         {"constants", constants},
         {"notes", m.notes},
         {"artifacts", m.artifacts}};
  return j.dump(2) + "\n";
}

void write_manifest(const fs::path& path, const RunManifest& m, const ExperimentConfig& cfg) {
  write_atomic(path, manifest_json(m, cfg));
}

} // namespace alfven::io
