#include "commands.hpp"

#include <zlib.h>

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "codebook.hpp"
#include "config.hpp"
#include "ctu.hpp"
#include "errors.hpp"
#include "eval.hpp"
#include "models.hpp"
#include "train.hpp"
#include "verify.hpp"
#include "zc.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace gfs {

namespace {

constexpr const char* kManifestFormat = "gfs-manifest v1";

std::string utc_now() {
  std::time_t t = std::time(nullptr);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

std::string stem_of(const std::string& path) {
  return fs::path(path).stem().string();
}

json options_to_json(const CtuBuildOptions& o) {
  return json{{"n_zc", o.n_zc},   {"roots", o.roots}, {"shifts", o.shifts},
              {"assoc", o.assoc}, {"seed", o.seed},   {"out", o.out}};
}

CtuBuildOptions ctu_build_from_json(const json& j) {
  CtuBuildOptions o;
  o.n_zc = j.value("n_zc", o.n_zc);
  o.roots = j.value("roots", o.roots);
  o.shifts = j.value("shifts", o.shifts);
  o.assoc = j.value("assoc", o.assoc);
  o.seed = j.value("seed", o.seed);
  o.out = j.value("out", o.out);
  return o;
}

json options_to_json(const TrainOptions& o) {
  return json{{"model", o.model},
              {"stage", o.stage},
              {"preset", o.preset},
              {"config", o.config},
              {"cb_file", o.cb_file},
              {"ctu_file", o.ctu_file},
              {"n_zc", o.n_zc},
              {"n_d", o.n_d},
              {"cells", o.cells},
              {"threshold", o.threshold},
              {"seed", o.seed},
              {"force", o.force},
              {"freeze_uaen", o.freeze_uaen},
              {"out", o.out}};
}

TrainOptions train_from_json(const json& j) {
  TrainOptions o;
  o.model = j.value("model", o.model);
  o.stage = j.value("stage", o.stage);
  o.preset = j.value("preset", o.preset);
  o.config = j.value("config", o.config);
  o.cb_file = j.value("cb_file", o.cb_file);
  o.ctu_file = j.value("ctu_file", o.ctu_file);
  o.n_zc = j.value("n_zc", o.n_zc);
  o.n_d = j.value("n_d", o.n_d);
  o.cells = j.value("cells", o.cells);
  o.threshold = j.value("threshold", o.threshold);
  o.seed = j.value("seed", o.seed);
  o.force = j.value("force", o.force);
  o.freeze_uaen = j.value("freeze_uaen", o.freeze_uaen);
  o.out = j.value("out", o.out);
  return o;
}

json options_to_json(const SweepOptions& o) {
  return json{{"axis", o.axis},
              {"points", o.points},
              {"fixed_snr_db", o.fixed_snr_db},
              {"fixed_n_active", o.fixed_n_active},
              {"frames", o.frames},
              {"models", o.models},
              {"cb_file", o.cb_file},
              {"ctu_file", o.ctu_file},
              {"n_zc", o.n_zc},
              {"seed", o.seed},
              {"out", o.out}};
}

SweepOptions sweep_from_json(const json& j) {
  SweepOptions o;
  o.axis = j.value("axis", o.axis);
  o.points = j.value("points", o.points);
  o.fixed_snr_db = j.value("fixed_snr_db", o.fixed_snr_db);
  o.fixed_n_active = j.value("fixed_n_active", o.fixed_n_active);
  o.frames = j.value("frames", o.frames);
  o.models = j.value("models", o.models);
  o.cb_file = j.value("cb_file", o.cb_file);
  o.ctu_file = j.value("ctu_file", o.ctu_file);
  o.n_zc = j.value("n_zc", o.n_zc);
  o.seed = j.value("seed", o.seed);
  o.out = j.value("out", o.out);
  return o;
}

json options_to_json(const PlotOptions& o) {
  return json{{"in", o.in}, {"out", o.out}};
}

json options_to_json(const VerifyOptions& o) {
  return json{{"suite", o.suite}, {"out", o.out}};
}

ManifestOutput record_output(const std::string& path) {
  ManifestOutput out;
  out.path = path;
  out.bytes = fs::file_size(path);
  out.crc32 = file_crc32(path);
  return out;
}

void write_manifest(RunManifest& m, const json& options,
                    const std::string& manifest_path) {
  m.options_json = options.dump();
  m.created_utc = utc_now();
  m.path = manifest_path;
  json j{{"format", kManifestFormat},
         {"command", m.command},
         {"options", options},
         {"seed", m.seed},
         {"created_utc", m.created_utc}};
  json outs = json::array();
  for (const auto& o : m.outputs)
    outs.push_back(json{{"path", o.path}, {"crc32", o.crc32}, {"bytes", o.bytes}});
  j["outputs"] = outs;
  std::ofstream f(manifest_path);
  if (!f) throw IoError("cannot write manifest " + manifest_path);
  f << j.dump(2) << '\n';
}

std::vector<double> parse_points(const std::string& spec) {
  if (spec.empty()) throw InvalidArgument("empty --points");
  std::vector<double> pts;
  if (spec.find(':') != std::string::npos) {
    double a, b, step;
    char c1, c2;
    std::istringstream in(spec);
    if (!(in >> a >> c1 >> b >> c2 >> step) || c1 != ':' || c2 != ':' ||
        step <= 0 || b < a)
      throw InvalidArgument("bad points range '" + spec + "' (want a:b:step)");
    for (double v = a; v <= b + 1e-9; v += step) pts.push_back(v);
  } else {
    std::istringstream in(spec);
    std::string tok;
    while (std::getline(in, tok, ','))
      if (!tok.empty()) pts.push_back(std::stod(tok));
  }
  if (pts.empty()) throw InvalidArgument("no points parsed from '" + spec + "'");
  return pts;
}

struct World {
  CodebookSet cbs;
  CtuMap map;
  PreambleSet set;
};

World load_world(const std::string& cb_file, const std::string& ctu_file,
                 uint32_t n_zc) {
  World w;
  w.cbs = load_codebook_set(cb_file);
  std::vector<PreambleMeta> meta;
  w.map = load_ctu_csv(ctu_file, &meta);
  w.set = rebuild_preambles(meta, n_zc);
  if (w.map.J != w.cbs.J())
    throw InvalidArgument("CTU map uses " + std::to_string(w.map.J) +
                          " codebooks but the codebook file has " +
                          std::to_string(w.cbs.J()));
  return w;
}

json report_to_json(const TrainReport& r) {
  return json{{"stage", r.stage},
              {"pretrain_losses", r.pretrain_losses},
              {"joint_losses", r.joint_losses},
              {"total_steps", r.total_steps}};
}

}  // namespace

uint32_t file_crc32(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path + " for checksumming");
  uLong crc = ::crc32(0L, Z_NULL, 0);
  char buf[1 << 16];
  while (in.read(buf, sizeof buf) || in.gcount() > 0)
    crc = ::crc32(crc, reinterpret_cast<const Bytef*>(buf),
                  static_cast<uInt>(in.gcount()));
  return static_cast<uint32_t>(crc);
}

RunManifest run_ctu_build(const CtuBuildOptions& opt) {
  if (opt.out.empty()) throw InvalidArgument("ctu build requires --out");
  ZcParams params{opt.n_zc, opt.roots};
  params.validate();
  PreambleSet set = build_preamble_set(params, opt.shifts);
  CtuMap map;
  const uint32_t J = 6;
  if (opt.assoc == "random") {
    map = random_association(set, J, opt.seed);
  } else if (opt.assoc == "rs") {
    map = root_separated_association(set, J);
  } else {
    throw InvalidArgument("unknown association scheme '" + opt.assoc + "'");
  }
  save_ctu_csv(map, set, opt.out);
  CorrelationStats stats = same_cb_correlation_stats(map, set);
  std::cout << "ctu build: N_R=" << map.size() << " scheme=" << opt.assoc
            << " same-cb corr max=" << stats.max << " mean=" << stats.mean
            << "\n";
  RunManifest m;
  m.command = "ctu-build";
  m.seed = opt.seed;
  m.outputs.push_back(record_output(opt.out));
  write_manifest(m, options_to_json(opt), opt.out + ".manifest.json");
  return m;
}

RunManifest run_train(const TrainOptions& opt) {
  if (opt.out.empty()) throw InvalidArgument("train requires --out directory");
  if (opt.cb_file.empty() || opt.ctu_file.empty())
    throw InvalidArgument("train requires --cb-file and --ctu-file");
  World w = load_world(opt.cb_file, opt.ctu_file, opt.n_zc);
  TrainConfig cfg = train_preset(opt.preset);
  if (!opt.config.empty())
    apply_train_config(cfg, parse_ini(opt.config), opt.config);
  cfg.seed = opt.seed;
  cfg.validate();

  ModelKind kind = model_kind_from_name(opt.model);
  const std::string name = model_kind_name(kind);
  if (kind != ModelKind::kProposedDaudn &&
      (opt.stage == "pretrain" || opt.freeze_uaen))
    throw InvalidArgument(name + " has no extraction network to " +
                          (opt.freeze_uaen ? "freeze" : "pretrain"));

  BundleConfig bc;
  bc.kind = kind;
  bc.n_r = w.map.size();
  bc.n_zc = opt.n_zc;
  bc.K = w.cbs.K;
  bc.n_d = opt.n_d;
  bc.cells = opt.cells;
  bc.threshold = opt.threshold;
  bc.seed = cfg.seed;

  SimConfig sim = sim_config_for(cfg, w.map, w.set, w.cbs);
  DataSource source =
      online_data_source(sim, w.map, w.set, w.cbs, cfg.batch, cfg.seed);

  fs::create_directories(opt.out);
  RunManifest m;
  m.command = "train";
  m.seed = cfg.seed;
  json reports = json::object();

  auto save = [&](ModelBundle<float>& bundle, const std::string& suffix) {
    std::string path = (fs::path(opt.out) / (name + "_" + suffix + ".ckpt")).string();
    save_checkpoint(bundle, path);
    m.outputs.push_back(record_output(path));
    return path;
  };

  auto t0 = std::chrono::steady_clock::now();
  if (kind == ModelKind::kProposedDaudn) {
    ModelBundle<float> bundle;
    if (opt.stage == "joint" && !opt.force && !opt.freeze_uaen) {
      std::string pre = (fs::path(opt.out) / (name + "_pretrained.ckpt")).string();
      if (!fs::exists(pre))
        throw InvalidArgument("missing pretrain checkpoint " + pre +
                              " (use --stage all, or --force)");
      bundle = load_checkpoint(pre);
    } else {
      bundle = build_bundle<float>(bc);
    }
    if (opt.stage == "pretrain" || opt.stage == "all") {
      TrainReport r = pretrain_uaen(bundle, cfg, source);
      reports["pretrain"] = report_to_json(r);
      save(bundle, "pretrained");
    }
    if (opt.stage == "joint" || opt.stage == "all") {
      TrainReport r = joint_train(bundle, cfg, source,
                                  opt.force || opt.freeze_uaen,
                                  opt.freeze_uaen);
      reports["joint"] = report_to_json(r);
      save(bundle, opt.freeze_uaen ? "joint_frozen" : "joint");
    }
  } else {
    if (opt.stage == "joint")
      throw InvalidArgument(name + " trains in a single stage; use --stage all");
    ModelBundle<float> bundle = build_bundle<float>(bc);
    TrainReport r = train_baseline(bundle, cfg, source);
    reports["train"] = report_to_json(r);
    save(bundle, "trained");
  }
  double wall = std::chrono::duration<double>(
                    std::chrono::steady_clock::now() - t0).count();

  json report{{"model", name},
              {"stages", reports},
              {"config", json{{"preset", opt.preset},
                              {"lr_pretrain", cfg.lr_pretrain},
                              {"lr_joint", cfg.lr_joint},
                              {"epochs_pretrain", cfg.epochs_pretrain},
                              {"epochs_joint", cfg.epochs_joint},
                              {"batch", cfg.batch},
                              {"n_pretrain_samples", cfg.n_pretrain_samples},
                              {"n_joint_samples", cfg.n_joint_samples},
                              {"snr_db_train", cfg.snr_db_train},
                              {"n_active_min", cfg.n_active_min},
                              {"n_active_max", cfg.n_active_max},
                              {"seed", cfg.seed}}},
              {"n_r", w.map.size()},
              {"n_zc", opt.n_zc}};
  std::string report_path =
      (fs::path(opt.out) / (name + "_train_report.json")).string();
  {
    std::ofstream f(report_path);
    if (!f) throw IoError("cannot write " + report_path);
    f << report.dump(2) << '\n';
  }
  m.outputs.push_back(record_output(report_path));
  std::cout << "train: " << name << " stage=" << opt.stage << " wall="
            << wall << "s outputs=" << m.outputs.size() << "\n";
  write_manifest(m, options_to_json(opt),
                 (fs::path(opt.out) / (name + "_manifest.json")).string());
  return m;
}

RunManifest run_sweep(const SweepOptions& opt) {
  if (opt.out.empty()) throw InvalidArgument("eval sweep requires --out");
  if (opt.models.empty()) throw InvalidArgument("eval sweep requires --models");
  World w = load_world(opt.cb_file, opt.ctu_file, opt.n_zc);

  SweepSpec spec;
  spec.frames_per_point = opt.frames;
  spec.seed = opt.seed;
  for (double v : parse_points(opt.points)) {
    SweepPoint p;
    if (opt.axis == "snr") {
      p.snr_db = v;
      p.n_active = opt.fixed_n_active;
    } else if (opt.axis == "na") {
      p.snr_db = opt.fixed_snr_db;
      p.n_active = static_cast<uint32_t>(v + 0.5);
    } else {
      throw InvalidArgument("unknown sweep axis '" + opt.axis + "'");
    }
    spec.points.push_back(p);
  }

  std::vector<AderReport> all;
  for (const std::string& ckpt : opt.models) {
    ModelBundle<float> bundle = load_checkpoint(ckpt);
    if (bundle.n_zc != opt.n_zc)
      throw InvalidArgument(ckpt + ": checkpoint N_ZC " +
                            std::to_string(bundle.n_zc) + " != --n-zc " +
                            std::to_string(opt.n_zc));
    if (bundle.audn_spec.n_r != w.map.size())
      throw InvalidArgument(ckpt + ": checkpoint N_R " +
                            std::to_string(bundle.audn_spec.n_r) +
                            " != CTU map size " + std::to_string(w.map.size()));
    if (bundle.stage == "init")
      std::cerr << "warning: " << ckpt << " is untrained (stage=init)\n";
    std::vector<AderReport> reports =
        sweep_model(bundle, spec, w.map, w.set, w.cbs);
    const std::string label = stem_of(ckpt);
    for (auto& r : reports) r.model = label;
    all.insert(all.end(), reports.begin(), reports.end());
  }
  write_sweep_csv(all, opt.out);
  RunManifest m;
  m.command = "sweep";
  m.seed = opt.seed;
  m.outputs.push_back(record_output(opt.out));
  write_manifest(m, options_to_json(opt), opt.out + ".manifest.json");
  return m;
}

RunManifest run_plot(const PlotOptions& opt) {
  if (opt.in.empty() || opt.out.empty())
    throw InvalidArgument("plot requires --in and --out");
  emit_plot(opt.in, opt.out);
  RunManifest m;
  m.command = "plot";
  m.outputs.push_back(record_output(opt.out));
  write_manifest(m, options_to_json(opt), opt.out + ".manifest.json");
  return m;
}

RunManifest run_verify(const VerifyOptions& opt, int& failures) {
  std::vector<CheckResult> results;
  failures = run_verify_suite(opt.suite, results);
  std::ostringstream table;
  for (const auto& r : results)
    table << (r.pass ? "PASS " : "FAIL ") << r.name << "  " << r.detail << "\n";
  table << (failures == 0 ? "OK" : "FAILURES") << " " << results.size() - failures
        << "/" << results.size() << " checks passed\n";
  std::cout << table.str();
  RunManifest m;
  m.command = "verify";
  std::string manifest_path = "verify.manifest.json";
  if (!opt.out.empty()) {
    std::ofstream f(opt.out);
    if (!f) throw IoError("cannot write " + opt.out);
    f << table.str();
    f.close();
    m.outputs.push_back(record_output(opt.out));
    manifest_path = opt.out + ".manifest.json";
  }
  write_manifest(m, options_to_json(opt), manifest_path);
  return m;
}

RunManifest rerun(const std::string& manifest_path) {
  std::ifstream in(manifest_path);
  if (!in) throw IoError("cannot open manifest " + manifest_path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ParseError(manifest_path + ": " + e.what());
  }
  if (j.value("format", "") != kManifestFormat)
    throw ParseError(manifest_path + ": not a " + std::string(kManifestFormat) +
                     " file");
  const std::string command = j.at("command");
  const json& options = j.at("options");
  RunManifest fresh;
  if (command == "ctu-build") {
    fresh = run_ctu_build(ctu_build_from_json(options));
  } else if (command == "train") {
    fresh = run_train(train_from_json(options));
  } else if (command == "sweep") {
    fresh = run_sweep(sweep_from_json(options));
  } else if (command == "plot") {
    PlotOptions o;
    o.in = options.value("in", o.in);
    o.out = options.value("out", o.out);
    fresh = run_plot(o);
  } else if (command == "verify") {
    VerifyOptions o;
    o.suite = options.value("suite", o.suite);
    o.out = options.value("out", o.out);
    int failures = 0;
    fresh = run_verify(o, failures);
  } else {
    throw ParseError(manifest_path + ": unknown command '" + command + "'");
  }
  for (const auto& rec : j.at("outputs")) {
    const std::string path = rec.at("path");
    bool found = false;
    for (const auto& now : fresh.outputs) {
      if (now.path != path) continue;
      found = true;
      if (now.bytes != rec.at("bytes").get<uint64_t>() ||
          now.crc32 != rec.at("crc32").get<uint32_t>())
        throw Error("rerun mismatch for " + path + ": recorded crc32=" +
                    std::to_string(rec.at("crc32").get<uint32_t>()) +
                    " got " + std::to_string(now.crc32));
    }
    if (!found) throw Error("rerun did not regenerate " + path);
  }
  std::cout << "rerun: " << command << " reproduced " << fresh.outputs.size()
            << " output(s) bit-identically\n";
  return fresh;
}

namespace {
json parse_json_text(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw ParseError(std::string("bad options JSON: ") + e.what());
  }
}
}  // namespace

CtuBuildOptions parse_ctu_build_options(const std::string& json_text) {
  return ctu_build_from_json(parse_json_text(json_text));
}

TrainOptions parse_train_options(const std::string& json_text) {
  return train_from_json(parse_json_text(json_text));
}

SweepOptions parse_sweep_options(const std::string& json_text) {
  return sweep_from_json(parse_json_text(json_text));
}

}  // namespace gfs
