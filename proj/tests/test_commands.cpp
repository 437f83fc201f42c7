#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "commands.hpp"
#include "ctu.hpp"
#include "errors.hpp"
#include "eval.hpp"

using namespace gfs;
namespace fs = std::filesystem;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

// Scratch directory wiped per test case.
struct Scratch {
  fs::path dir;
  Scratch() : dir(fs::path("cmd_test_scratch")) {
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  ~Scratch() { fs::remove_all(dir); }
  std::string operator/(const std::string& leaf) const {
    return (dir / leaf).string();
  }
};

// A tiny world (L=1, N_R=6) keeps training inside unit-test budgets.
CtuBuildOptions micro_ctu(const Scratch& s, const std::string& assoc) {
  CtuBuildOptions opt;
  opt.shifts = 1;
  opt.assoc = assoc;
  opt.out = s / ("ctu_" + assoc + ".csv");
  return opt;
}

std::string write_micro_cb(const Scratch& s);

}  // namespace

TEST_CASE("ctu build writes the map, a manifest, and reruns bit-identically") {
  Scratch s;
  CtuBuildOptions opt = micro_ctu(s, "rs");
  RunManifest m = run_ctu_build(opt);
  CHECK(m.command == "ctu-build");
  REQUIRE(m.outputs.size() == 1);
  CHECK(m.outputs[0].path == opt.out);
  CHECK(fs::exists(opt.out));
  CHECK(file_crc32(opt.out) == m.outputs[0].crc32);
  CHECK(fs::file_size(opt.out) == m.outputs[0].bytes);
  CHECK(fs::exists(m.path));

  // The rebuilt map matches what the command wrote.
  CtuMap map = load_ctu_csv(opt.out);
  CHECK(map.size() == 6);

  std::string before = slurp(opt.out);
  RunManifest m2 = rerun(m.path);
  CHECK(slurp(opt.out) == before);
  CHECK(m2.outputs[0].crc32 == m.outputs[0].crc32);
}

TEST_CASE("ctu build rejects bad options") {
  Scratch s;
  CtuBuildOptions opt = micro_ctu(s, "nearest");
  CHECK_THROWS_AS(run_ctu_build(opt), InvalidArgument);
  opt = micro_ctu(s, "random");
  opt.n_zc = 8;  // not prime
  CHECK_THROWS_AS(run_ctu_build(opt), InvalidArgument);
}

TEST_CASE("options json round trips through the manifest schema") {
  CtuBuildOptions c;
  c.n_zc = 13;
  c.roots = {1, 2, 3};
  c.shifts = 2;
  c.assoc = "rs";
  c.seed = 77;
  c.out = "x.csv";
  RunManifest m;
  {
    Scratch s;
    c.out = s / "x.csv";
    c.assoc = "random";
    c.roots = {1, 2, 3, 4, 5, 6};
    c.shifts = 1;
    m = run_ctu_build(c);
    CtuBuildOptions back = parse_ctu_build_options(m.options_json);
    CHECK(back.n_zc == c.n_zc);
    CHECK(back.roots == c.roots);
    CHECK(back.shifts == c.shifts);
    CHECK(back.assoc == c.assoc);
    CHECK(back.seed == c.seed);
    CHECK(back.out == c.out);
  }
  // Missing keys fall back to defaults.
  TrainOptions t = parse_train_options("{\"model\":\"paudn\"}");
  CHECK(t.model == "paudn");
  CHECK(t.preset == "desk");
  CHECK(t.n_d == 16);
  SweepOptions w = parse_sweep_options("{\"frames\":123}");
  CHECK(w.frames == 123);
  CHECK(w.axis == "snr");
  CHECK_THROWS_AS(parse_train_options("not json"), ParseError);
}

namespace {

std::string write_micro_cb(const Scratch& s) {
  // Reuse the shipped power-balanced codebook.
  return std::string(TEST_DATA_DIR) + "/pb_cb_k4_j6.txt";
}

TrainOptions micro_train(const Scratch& s, const std::string& ctu_csv) {
  TrainOptions opt;
  opt.model = "proposed";
  opt.preset = "micro";
  opt.cb_file = write_micro_cb(s);
  opt.ctu_file = ctu_csv;
  opt.n_d = 4;
  opt.cells = 2;
  opt.out = s / "run";
  return opt;
}

}  // namespace

TEST_CASE("train, sweep, plot and rerun complete end to end at micro scale") {
  Scratch s;
  CtuBuildOptions ctu = micro_ctu(s, "rs");
  run_ctu_build(ctu);

  TrainOptions train = micro_train(s, ctu.out);
  RunManifest tm = run_train(train);
  CHECK(tm.command == "train");
  std::string pre_ckpt = s / "run/proposed_daudn_pretrained.ckpt";
  std::string joint_ckpt = s / "run/proposed_daudn_joint.ckpt";
  std::string report = s / "run/proposed_daudn_train_report.json";
  CHECK(fs::exists(pre_ckpt));
  CHECK(fs::exists(joint_ckpt));
  CHECK(fs::exists(report));
  std::string report_body = slurp(report);
  CHECK(report_body.find("joint_losses") != std::string::npos);
  CHECK(report_body.find("wall_seconds") == std::string::npos);

  SweepOptions sweep;
  sweep.axis = "snr";
  sweep.points = "0,20";
  sweep.fixed_n_active = 3;
  sweep.frames = 100;
  sweep.models = {joint_ckpt};
  sweep.cb_file = train.cb_file;
  sweep.ctu_file = ctu.out;
  sweep.out = s / "sweep.csv";
  RunManifest sm = run_sweep(sweep);
  CHECK(fs::exists(sweep.out));
  std::vector<AderReport> rows = read_sweep_csv(sweep.out);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].model == "proposed_daudn_joint");  // labeled by checkpoint stem
  CHECK(rows[0].frames == 100);

  PlotOptions plot;
  plot.in = sweep.out;
  plot.out = s / "sweep.svg";
  RunManifest pm = run_plot(plot);
  CHECK(fs::exists(plot.out));
  CHECK(slurp(plot.out).find("<svg") != std::string::npos);

  // Every manifest reruns to bit-identical outputs.
  for (const RunManifest* m : {&tm, &sm, &pm}) {
    std::vector<std::string> bodies;
    for (const auto& o : m->outputs) bodies.push_back(slurp(o.path));
    RunManifest again = rerun(m->path);
    REQUIRE(again.outputs.size() == m->outputs.size());
    for (size_t i = 0; i < m->outputs.size(); ++i) {
      CHECK(slurp(m->outputs[i].path) == bodies[i]);
      CHECK(again.outputs[i].crc32 == m->outputs[i].crc32);
    }
  }
}

TEST_CASE("train stage plumbing: joint-only needs the pretrain checkpoint") {
  Scratch s;
  CtuBuildOptions ctu = micro_ctu(s, "rs");
  run_ctu_build(ctu);
  TrainOptions opt = micro_train(s, ctu.out);
  opt.stage = "joint";
  CHECK_THROWS(run_train(opt));  // no pretrained checkpoint on disk yet
  opt.stage = "pretrain";
  run_train(opt);
  CHECK(fs::exists(s / "run/proposed_daudn_pretrained.ckpt"));
  CHECK_FALSE(fs::exists(s / "run/proposed_daudn_joint.ckpt"));
  opt.stage = "joint";
  run_train(opt);
  CHECK(fs::exists(s / "run/proposed_daudn_joint.ckpt"));

  // Frozen-UAEN control run uses its own checkpoint name.
  opt.freeze_uaen = true;
  run_train(opt);
  CHECK(fs::exists(s / "run/proposed_daudn_joint_frozen.ckpt"));
}

TEST_CASE("baseline training is single stage") {
  Scratch s;
  CtuBuildOptions ctu = micro_ctu(s, "random");
  run_ctu_build(ctu);
  TrainOptions opt = micro_train(s, ctu.out);
  opt.model = "paudn";
  opt.cells = 2;
  RunManifest m = run_train(opt);
  CHECK(fs::exists(s / "run/paudn_trained.ckpt"));
  opt.stage = "pretrain";
  CHECK_THROWS_AS(run_train(opt), InvalidArgument);
  (void)m;
}

TEST_CASE("rerun detects tampering with a recorded output") {
  Scratch s;
  CtuBuildOptions opt = micro_ctu(s, "random");
  RunManifest m = run_ctu_build(opt);
  // Corrupt the manifest's recorded CRC: the rerun must notice.
  std::string body = slurp(m.path);
  size_t pos = body.find("\"crc32\"");
  REQUIRE(pos != std::string::npos);
  size_t digit = body.find_first_of("0123456789", pos + 8);
  body[digit] = body[digit] == '9' ? '1' : '9';
  {
    std::ofstream out(m.path, std::ios::binary);
    out << body;
  }
  CHECK_THROWS(rerun(m.path));
}

TEST_CASE("rerun rejects a missing or foreign manifest") {
  Scratch s;
  CHECK_THROWS(rerun(s / "nope.json"));
  std::string alien = s / "alien.json";
  {
    std::ofstream out(alien);
    out << "{\"format\":\"other v9\"}";
  }
  CHECK_THROWS(rerun(alien));
}
