#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <doctest.h>
#include <json.hpp>

#include "alfven/errors.hpp"
#include "alfven/io.hpp"
#include "helpers.hpp"

using namespace alfven;
using namespace testing;
namespace fs = std::filesystem;

namespace {

ExperimentConfig parse(const std::string& text) {
  std::istringstream in(text);
  return io::parse_config(in, "test.ini");
}

std::string error_of(const std::string& text) {
  try {
    parse(text);
  } catch (const Error& e) {
    return e.what();
  }
  return {};
}

bool mentions(const std::string& text, const std::string& what) { return text.find(what) != std::string::npos; }

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("alfven_io_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

const char* minimal = R"(
[experiment]
kind = collision

[packet_a]
species = plus
center = 0, 0, 8

[packet_b]
species = minus
center = 0 0 -8
)";

} // namespace

TEST_CASE("config: defaults fill in what is not given") {
  const ExperimentConfig cfg = parse(minimal);
  CHECK(cfg.kind == ExperimentKind::collision);
  CHECK(cfg.seed == 1);
  CHECK(cfg.domain.n == std::array<int, 3>{64, 64, 64});
  CHECK(cfg.domain.L[2] == 32.0);
  CHECK(cfg.weights.delta == 0.1);
  CHECK(cfg.diagnostics.k_max == 2);
  CHECK(cfg.tolerances.conservation == 1e-8);
  REQUIRE(cfg.packets.size() == 2);
  CHECK(cfg.packets[0].species == Species::plus);
  CHECK(cfg.packets[1].center[2] == -8.0);
  CHECK(packet_seed(cfg, 0) == 1);
  CHECK(packet_seed(cfg, 1) == 2);
  CHECK(cfg.source == "test.ini");
}

TEST_CASE("config: every section") {
  const ExperimentConfig cfg = parse(R"(
[experiment]
kind = rigidity_mixed
output = runs/x
seed = 7
[domain]
n = 32, 32, 64
L = 16, 16, 32
[weights]
a = 1.5
delta = 0.2
[stepper]
dt = 0.1
cfl = 0.4
t_end = 6
record_every = 2
blowup_factor = 5
[diagnostics]
k_max = 1
diag_every = 3
u_margin = 2
tail_window = 0.5
checkpoint_every = 0.25
refine_dt = false
[sweep]
lambdas = 1, 0.1
[tolerances]
tail = 1e-6
[packet2]
species = minus
center = 0, 0, -3
[packet10]
species = plus
center = 1, 2, 3
widths = 2, 2, 1.5
amplitude = 0.1
polarization_seed = 99
)");
  CHECK(cfg.kind == ExperimentKind::rigidity_mixed);
  CHECK(cfg.output_dir == "runs/x");
  CHECK(cfg.seed == 7);
  CHECK(cfg.domain.n[0] == 32);
  CHECK(cfg.weights.a == 1.5);
  CHECK(cfg.weights.omega == doctest::Approx(1.2));
  CHECK(cfg.stepper.t_end == 6.0);
  CHECK(cfg.stepper.record_every == 2);
  CHECK_FALSE(cfg.diagnostics.refine_dt);
  CHECK(cfg.diagnostics.checkpoint_every == 0.25);
  CHECK(cfg.sweep.lambdas == std::vector<double>{1.0, 0.1});
  CHECK(cfg.tolerances.tail == 1e-6);
  // packet2 sorts before packet10.
  CHECK(cfg.packets[0].species == Species::minus);
  CHECK(cfg.packets[1].polarization_seed == 99);
  CHECK(cfg.packets[1].widths[2] == 1.5);
}

TEST_CASE("config: errors") {
  SUBCASE("delta out of range") {
    const std::string e = error_of(std::string(minimal) + "[weights]\ndelta = 0.7\n");
    CHECK(mentions(e, "(0, 2/3)"));
    CHECK_THROWS_AS(parse(std::string(minimal) + "[weights]\ndelta = 0.7\n"), RangeError);
  }
  SUBCASE("packet too wide names the packet") {
    const std::string text = std::string(minimal) + "[packet_c]\nspecies = plus\ncenter = 0,0,0\nwidths = 3,3,2.2\n";
    CHECK_THROWS_AS(parse(text), MarginViolation);
    CHECK(mentions(error_of(text), "packet 3"));
  }
  SUBCASE("all problems are listed") {
    const std::string e = error_of(R"(
[experiment]
kind = collision
colour = blue
[domain]
n = 64, 64
[stepper]
dt = fast
[packet1]
center = 0, 0, 0
[extra]
x = 1
)");
    CHECK(mentions(e, "unknown key 'colour'"));
    CHECK(mentions(e, "domain.n"));
    CHECK(mentions(e, "stepper.dt"));
    CHECK(mentions(e, "packet1.species is required"));
    CHECK(mentions(e, "unknown section [extra]"));
    CHECK(mentions(e, "test.ini"));
  }
  SUBCASE("missing kind") {
    CHECK_THROWS_AS(parse("[domain]\nn = 16,16,16\n"), MissingKey);
  }
  SUBCASE("unknown kind") {
    CHECK(mentions(error_of("[experiment]\nkind = explode\n"), "explode"));
  }
  SUBCASE("broken syntax") {
    CHECK_THROWS_AS(parse("[experiment\nkind = collision\n"), InvalidData);
  }
  SUBCASE("missing file") {
    CHECK_THROWS_AS(io::parse_config(fs::path("/nonexistent/x.ini")), IoError);
  }
}

TEST_CASE("config JSON echo") {
  const auto j = nlohmann::json::parse(io::config_json(parse(minimal)));
  CHECK(j.at("kind") == "collision");
  CHECK(j.at("packets").size() == 2);
  CHECK(j.at("packets")[1].at("polarization_seed") == 2);
  CHECK(j.at("domain").at("n")[0] == 64);
}

TEST_CASE("norms CSV") {
  const fs::path dir = scratch("csv");
  CHECK(io::norms_csv_header(0) == "t,E_plus,E_minus,E0_plus,E0_minus,F_plus,F_minus,energy,cross_helicity,sep_ratio,p1_ratio,p2_ratio");

  NormSeries empty;
  io::write_norms_csv(dir / "empty.csv", empty);
  CHECK(slurp(dir / "empty.csv") == io::norms_csv_header(2) + "\n");
  CHECK(io::read_norms_csv(dir / "empty.csv").samples.empty());

  NormSeries s;
  s.k_max = 1;
  NormSample a;
  a.t = 0.1;
  a.E = {1.0 / 3.0, 2.0};
  a.Ek = {{3.0, 4.0}, {5.0, 6.0}};
  a.F = {std::nan(""), 1e-300};
  a.energy = 7.0;
  a.cross_helicity = -8.0;
  a.sep_ratio = 9.0;
  a.p1_ratio = 10.0;
  a.p2_ratio = 11.0;
  s.samples = {a, a};
  s.samples[1].t = 0.2;
  io::write_norms_csv(dir / "n.csv", s);
  const NormSeries r = io::read_norms_csv(dir / "n.csv");
  REQUIRE(r.samples.size() == 2);
  CHECK(r.k_max == 1);
  CHECK(r.samples[0].E[0] == 1.0 / 3.0);
  CHECK(r.samples[1].t == 0.2);
  CHECK(r.samples[0].Ek[1][1] == 6.0);
  CHECK(std::isnan(r.samples[0].F[0]));
  CHECK(r.samples[0].F[1] == 1e-300);
  CHECK(r.samples[0].p2_ratio == 11.0);

  std::ofstream(dir / "bad.csv") << "t,E\n1,2\n";
  CHECK_THROWS_AS(io::read_norms_csv(dir / "bad.csv"), InvalidData);
  fs::remove_all(dir);
}

TEST_CASE("field dumps") {
  const fs::path dir = scratch("dumps");
  ElsasserState s = small_collision(0.05, 0.03);
  s.t = 1.25;
  s.weights = WeightParams(0.5, 0.2);

  SUBCASE("physical round trip") {
    io::write_state_dump(dir / "p.bin", s, Species::plus);
    const io::RawDump raw = io::read_raw_dump(dir / "p.bin");
    CHECK(raw.header.kind == io::DumpKind::physical);
    CHECK(raw.header.domain == s.domain());
    CHECK(raw.header.t == 1.25);
    CHECK(raw.header.a == 0.5);
    CHECK(raw.header.delta == 0.2);
    CHECK(raw.header.species == Species::plus);
    CHECK(raw.header.window_center == s.guard.window_center(Species::plus, 1.25));
    REQUIRE(raw.payload.size() == 3 * s.domain().size());
    const RealVectorField r = inverse(s.z_plus);
    bool same = true;
    for (int c = 0; c < 3; ++c)
      for (std::size_t i = 0; i < s.domain().size(); ++i) same = same && raw.payload[c * s.domain().size() + i] == r.c[c][i];
    CHECK(same);
    CHECK(fs::file_size(dir / "p.bin") == io::dump_header_bytes + 8 * raw.payload.size());

    // Writing the loaded field again reproduces the header exactly and the samples to round-off.
    const io::LoadedField f = io::read_field_dump(dir / "p.bin");
    io::write_field_dump(dir / "p2.bin", f.field, f.header);
    const io::RawDump again = io::read_raw_dump(dir / "p2.bin");
    CHECK(slurp(dir / "p.bin").substr(0, io::dump_header_bytes) == slurp(dir / "p2.bin").substr(0, io::dump_header_bytes));
    double worst = 0.0;
    for (std::size_t i = 0; i < raw.payload.size(); ++i) worst = std::max(worst, std::abs(raw.payload[i] - again.payload[i]));
    CHECK(worst <= 1e-16);
    CHECK(max_abs(f.field - s.z_plus) <= 1e-16);
  }
  SUBCASE("spectral round trip is exact") {
    io::write_state_dump(dir / "s.bin", s, Species::minus, io::DumpKind::spectral);
    const io::LoadedField f = io::read_field_dump(dir / "s.bin");
    CHECK(f.header.kind == io::DumpKind::spectral);
    for (int c = 0; c < 3; ++c) CHECK((f.field.c[c] - s.z_minus.c[c]).abs().maxCoeff() == 0.0);
  }
  SUBCASE("state from two dumps") {
    io::write_state_dump(dir / "a_plus.bin", s, Species::plus, io::DumpKind::spectral);
    io::write_state_dump(dir / "a_minus.bin", s, Species::minus, io::DumpKind::spectral);
    const ElsasserState r = io::read_state_dumps(dir / "a_plus.bin", dir / "a_minus.bin");
    CHECK(r.t == 1.25);
    CHECK(r.weights.delta == 0.2);
    CHECK(energy_norm(r, Species::plus) == energy_norm(s, Species::plus));
    CHECK(energy_norm(r, Species::minus) == energy_norm(s, Species::minus));
    CHECK_THROWS_AS(io::read_state_dumps(dir / "a_minus.bin", dir / "a_plus.bin"), InvalidData);
  }
  SUBCASE("non-solenoidal fields are rejected") {
    const GridPtr g = s.grid();
    const SpectralVectorField bad =
        transform(sample(g, [](double x, double, double) { return Vec3(std::sin(2.0 * M_PI * x / 16.0), 0.0, 0.0); }));
    io::DumpHeader h;
    h.domain = g->domain();
    io::write_field_dump(dir / "bad.bin", bad, h);
    CHECK_THROWS_AS(io::read_field_dump(dir / "bad.bin"), InvalidData);
  }
  SUBCASE("corrupt files") {
    io::write_state_dump(dir / "c.bin", s, Species::plus);
    std::string bytes = slurp(dir / "c.bin");
    std::string wrong = bytes;
    wrong[0] = 'X';
    std::ofstream(dir / "magic.bin", std::ios::binary) << wrong;
    CHECK_THROWS_AS(io::read_raw_dump(dir / "magic.bin"), InvalidData);
    std::ofstream(dir / "short.bin", std::ios::binary) << bytes.substr(0, bytes.size() - 8);
    CHECK_THROWS_AS(io::read_raw_dump(dir / "short.bin"), InvalidData);
    CHECK_THROWS_AS(io::read_raw_dump(dir / "missing.bin"), IoError);
  }
  fs::remove_all(dir);
}

TEST_CASE("scattering dumps") {
  const fs::path dir = scratch("scatter");
  const ElsasserState s = small_collision(0.05, 0.05, 3.0);
  ScatteringAccumulator acc(Species::minus);
  std::vector<Observer*> obs{&acc};
  StepperConfig c;
  c.dt = 0.2;
  c.t_end = 1.0;
  advance(s, c, obs);
  ScatteringField f = acc.field();
  f.tail = 1.5e-7;
  io::write_scattering(dir / "scattering_minus_future.bin", f, 2);
  const ScatteringField r = io::read_scattering(dir / "scattering_minus_future.bin");
  CHECK(r.species == Species::minus);
  CHECK(r.direction == TimeDirection::future);
  CHECK(r.t_end == doctest::Approx(1.0));
  CHECK(r.tail == 1.5e-7);
  CHECK(r.window_center == f.window_center);
  for (int k = 0; k <= 2; ++k) CHECK(scattering_norm(r, k) == doctest::Approx(scattering_norm(f, k)).epsilon(1e-12));
  const auto side = nlohmann::json::parse(slurp(dir / "scattering_minus_future.bin.json"));
  CHECK(side.at("norms").size() == 3);
  CHECK(side.at("species") == "minus");
  fs::remove_all(dir);
}

TEST_CASE("manifest JSON") {
  ExperimentConfig cfg = parse(minimal);
  RunManifest m;
  m.kind = "collision";
  m.version = "test";
  m.seeds = {1, 2};
  m.check("ok", 1.0, 2.0);
  m.check("bad", std::nan(""), 1.0);
  m.check("floor", 5.0, 4.0, true);
  m.constants["x"] = 0.5;
  m.constants["inf"] = INFINITY;
  m.notes["why"] = "because";
  const auto j = nlohmann::json::parse(io::manifest_json(m, cfg));
  CHECK(j.at("all_passed") == false);
  CHECK(j.at("assertions").size() == 3);
  CHECK(j.at("assertions")[1].at("value").is_null());
  CHECK(j.at("assertions")[2].at("comparison") == ">=");
  CHECK(j.at("constants").at("inf").is_null());
  CHECK(j.at("seeds")[1] == 2);
  CHECK(j.at("config").at("kind") == "collision");

  const fs::path dir = scratch("manifest");
  io::write_manifest(dir / "manifest.json", m, cfg);
  CHECK(nlohmann::json::parse(slurp(dir / "manifest.json")) == j);
  for (const auto& e : fs::directory_iterator(dir)) CHECK(e.path().filename() == "manifest.json");
  fs::remove_all(dir);
}
