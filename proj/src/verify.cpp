#include "verify.hpp"

#include <cmath>
#include <sstream>

#include "gradcheck.hpp"
#include "models.hpp"
#include "sim.hpp"

namespace gfs {

namespace {

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(3);
  os << std::scientific << v;
  return os.str();
}

CheckResult zc_correlation_check(uint32_t n_zc) {
  ZcParams params;
  params.n_zc = n_zc;
  for (uint32_t u = 1; u < n_zc; ++u) params.roots.push_back(u);
  PreambleSet set = build_preamble_set(params, n_zc);
  const double cross = 1.0 / std::sqrt(static_cast<double>(n_zc));
  double worst = 0.0;
  for (size_t i = 0; i < set.size(); ++i) {
    for (size_t j = 0; j < i; ++j) {
      double c = cross_correlation(set.preambles[i], set.preambles[j]);
      double expected = set.meta[i].root == set.meta[j].root ? 0.0 : cross;
      worst = std::max(worst, std::abs(c - expected));
    }
  }
  CheckResult r;
  r.name = "zc.correlations.n_zc_" + std::to_string(n_zc);
  r.pass = worst < 1e-9;
  r.detail = "max deviation " + fmt(worst);
  return r;
}

CheckResult zc_modulus_check(uint32_t n_zc) {
  double worst = 0.0;
  for (uint32_t u = 1; u < n_zc; ++u)
    for (const auto& x : zc_root_sequence(u, n_zc))
      worst = std::max(worst, std::abs(std::abs(x) - 1.0));
  CheckResult r;
  r.name = "zc.constant_modulus.n_zc_" + std::to_string(n_zc);
  r.pass = worst < 1e-12;
  r.detail = "max |.|-1 " + fmt(worst);
  return r;
}

Tensor<double> random_tensor(size_t rows, size_t cols, Rng& rng, double scale) {
  Tensor<double> t(rows, cols);
  for (auto& v : t.v) v = rng.gaussian() * scale;
  return t;
}

CheckResult grad_layer_check(const std::string& which) {
  Rng rng(0xc0ffee);
  const size_t batch = 5;
  CheckResult r;
  r.name = "grad." + which;
  ParamStore<double> store;
  double tol = 1e-6;
  std::function<double(bool)> run;
  if (which == "dense" || which == "conv1d_full") {
    // conv1d_full with kernel size == input length is the same contraction;
    // checked on its own dimensions.
    const size_t in_dim = which == "dense" ? 7 : 8, out_dim = 9;
    Param<double>& w = store.add("w", out_dim, in_dim);
    Param<double>& b = store.add("b", out_dim, 1);
    w.value = random_tensor(out_dim, in_dim, rng, 0.5);
    b.value = random_tensor(out_dim, 1, rng, 0.5);
    auto x = random_tensor(in_dim, batch, rng, 1.0);
    auto t = random_tensor(out_dim, batch, rng, 0.0);
    for (auto& v : t.v) v = rng.below(2);
    run = [&store, x, t, batch](bool grads) {
      Tape<double> tape;
      auto xr = tape.constant(x);
      auto y = tape.sigmoid(tape.add_bias(
          tape.matmul(tape.leaf(*store.find("w")), xr),
          tape.leaf(*store.find("b"))));
      auto loss = tape.bce_loss(y, t);
      double v = tape.val(loss).v[0];
      if (grads) tape.backward(loss);
      return v;
    };
  } else if (which == "activations") {
    Param<double>& w = store.add("w", 6, 6);
    w.value = random_tensor(6, 6, rng, 0.5);
    auto x = random_tensor(6, batch, rng, 1.0);
    auto t = random_tensor(6, batch, rng, 0.0);
    for (auto& v : t.v) v = rng.below(2);
    run = [&store, x, t](bool grads) {
      Tape<double> tape;
      auto h = tape.matmul(tape.leaf(*store.find("w")), tape.constant(x));
      auto y = tape.sigmoid(tape.tanh_(tape.relu(h)));
      auto loss = tape.bce_loss(y, t);
      double v = tape.val(loss).v[0];
      if (grads) tape.backward(loss);
      return v;
    };
  } else if (which == "batchnorm") {
    tol = 1e-5;
    const size_t dim = 6;
    Param<double>& gamma = store.add("gamma", dim, 1);
    Param<double>& beta = store.add("beta", dim, 1);
    Param<double>& w = store.add("w", dim, dim);
    for (auto& v : gamma.value.v) v = 1.0 + 0.3 * rng.gaussian();
    beta.value = random_tensor(dim, 1, rng, 0.3);
    w.value = random_tensor(dim, dim, rng, 0.5);
    auto x = random_tensor(dim, batch, rng, 1.0);
    auto t = random_tensor(dim, batch, rng, 0.0);
    for (auto& v : t.v) v = rng.below(2);
    auto rm = std::make_shared<Tensor<double>>(dim, 1);
    auto rv = std::make_shared<Tensor<double>>(dim, 1);
    run = [&store, x, t, rm, rv](bool grads) {
      Tape<double> tape;
      BnState<double> state{rm.get(), rv.get()};
      auto h = tape.matmul(tape.leaf(*store.find("w")), tape.constant(x));
      auto y = tape.sigmoid(tape.batchnorm(h, tape.leaf(*store.find("gamma")),
                                           tape.leaf(*store.find("beta")),
                                           state, /*training=*/true));
      auto loss = tape.bce_loss(y, t);
      double v = tape.val(loss).v[0];
      if (grads) tape.backward(loss);
      return v;
    };
  } else if (which == "lstm_chain") {
    tol = 1e-5;
    const size_t hidden = 6;
    LstmCellParams<double> cell;
    cell.build(store, "cell", hidden, hidden);
    for (auto& p : store.params)
      p.value = random_tensor(p.value.rows, p.value.cols, rng,
                              1.0 / std::sqrt(static_cast<double>(hidden)));
    Param<double>& head = store.add("head.w", hidden, hidden);
    head.value = random_tensor(hidden, hidden, rng, 0.5);
    auto x = random_tensor(hidden, batch, rng, 1.0);
    auto t = random_tensor(hidden, batch, rng, 0.0);
    for (auto& v : t.v) v = rng.below(2);
    run = [&store, cell, x, t, hidden, batch](bool grads) mutable {
      Tape<double> tape;
      auto z = tape.constant(x);
      auto o = tape.constant(Tensor<double>(hidden, batch));
      auto c = tape.constant(Tensor<double>(hidden, batch));
      for (int s = 0; s < 3; ++s) {  // three chained cells, shared weights
        auto [o_s, c_s] = lstm_cell_step(tape, z, o, c, cell);
        o = o_s;
        c = c_s;
      }
      auto y = tape.sigmoid(tape.matmul(tape.leaf(*store.find("head.w")), o));
      auto loss = tape.bce_loss(y, t);
      double v = tape.val(loss).v[0];
      if (grads) tape.backward(loss);
      return v;
    };
  } else {
    throw InvalidArgument("unknown grad check " + which);
  }
  auto report = gradcheck([&run] { return run(false); },
                          [&run] { return run(true); }, store.trainable(), tol);
  r.pass = report.pass();
  r.detail = "max rel err " + fmt(report.max_rel_err) + " (tol " + fmt(tol) +
             ", worst " + report.worst_param + ")";
  return r;
}

CheckResult grad_model_check(ModelKind kind, const std::string& name) {
  BundleConfig cfg;
  cfg.kind = kind;
  cfg.n_r = 6;
  cfg.n_zc = 7;
  cfg.K = 4;
  cfg.n_d = 4;
  cfg.cells = kind == ModelKind::kPaudn ? 3 : 2;
  cfg.seed = 7;
  ModelBundle<double> bundle = build_bundle<double>(cfg);
  Rng rng(0xfeed);
  const size_t batch = 4;  // micro input
  auto y_p = random_tensor(2 * cfg.n_zc, batch, rng, 1.0);
  auto y_d = random_tensor(2 * cfg.K, cfg.n_d * batch, rng, 1.0);
  Tensor<double> labels(cfg.n_r, batch);
  for (auto& v : labels.v) v = rng.below(2);
  auto run = [&](bool grads) {
    Tape<double> tape;
    auto p = tape.constant(y_p);
    auto d = tape.constant(y_d);
    auto eta = bundle.forward(tape, p, d, batch, /*training=*/true);
    auto loss = tape.bce_loss(eta, labels);
    double v = tape.val(loss).v[0];
    if (grads) tape.backward(loss);
    return v;
  };
  // Step 1e-4: the composed loss has coordinates with ~1e-7 gradients where
  // a 1e-5 step is roundoff-dominated.
  auto report = gradcheck([&run] { return run(false); },
                          [&run] { return run(true); },
                          bundle.store.trainable(), 1e-4, 1e-4, 24);
  CheckResult r;
  r.name = "grad." + name;
  r.pass = report.pass();
  r.detail = "max rel err " + fmt(report.max_rel_err) + " over " +
             std::to_string(report.coords_checked) + " coords (worst " +
             report.worst_param + ")";
  return r;
}

CheckResult grad_uaen_check() {
  BundleConfig cfg;
  cfg.kind = ModelKind::kProposedDaudn;
  cfg.n_r = 6;
  cfg.n_zc = 7;
  cfg.K = 4;
  cfg.n_d = 4;
  cfg.cells = 2;
  cfg.seed = 11;
  ModelBundle<double> bundle = build_bundle<double>(cfg);
  Rng rng(0xbead);
  const size_t batch = 4;
  auto y_d = random_tensor(2 * cfg.K, cfg.n_d * batch, rng, 1.0);
  Tensor<double> labels(cfg.n_r, batch);
  for (auto& v : labels.v) v = rng.below(2);
  auto run = [&](bool grads) {
    Tape<double> tape;
    auto d = tape.constant(y_d);
    auto alpha = bundle.uaen_forward(tape, d, batch, /*training=*/true);
    auto loss = tape.bce_loss(alpha, labels);
    double v = tape.val(loss).v[0];
    if (grads) tape.backward(loss);
    return v;
  };
  auto report = gradcheck([&run] { return run(false); },
                          [&run] { return run(true); },
                          bundle.store.trainable("uaen."), 1e-4, 1e-4, 24);
  CheckResult r;
  r.name = "grad.uaen_full";
  r.pass = report.pass();
  r.detail = "max rel err " + fmt(report.max_rel_err) + " (worst " +
             report.worst_param + ")";
  return r;
}

struct MicroWorld {
  PreambleSet set;
  CtuMap map;
  CodebookSet cbs;
};

// Tiny deterministic world for the sim checks (J=6, L=1 -> N_R=6).
MicroWorld micro_world() {
  MicroWorld w;
  ZcParams params;
  params.n_zc = 7;
  params.roots = {1, 2, 3, 4, 5, 6};
  w.set = build_preamble_set(params, 1);
  w.map = root_separated_association(w.set, 6);
  w.cbs = make_reference_pb_cb();
  return w;
}

CheckResult sim_oracle_check() {
  MicroWorld w = micro_world();
  SimConfig cfg;
  cfg.n_r = 6;
  cfg.J = 6;
  cfg.K = 4;
  cfg.N = 2;
  cfg.M = 4;
  cfg.n_d = 4;
  cfg.n_zc = 7;
  cfg.snr_db = 1e9;  // noise-free within double precision
  cfg.n_active_min = 1;
  cfg.n_active_max = 6;
  double worst = 0.0;
  for (uint32_t trial = 0; trial < 50; ++trial) {
    Rng rng(1000 + trial);
    ActivityVector delta = draw_activity(cfg, rng);
    cvec h = draw_channel(cfg.n_r, rng);
    std::vector<uint8_t> bits(cfg.n_r * cfg.n_d * 2);
    for (auto& b : bits) b = static_cast<uint8_t>(rng.below(2));
    Rng noise_a = rng.substream(1), noise_b = rng.substream(1);
    cvec y_p = synthesize_preamble_rx(delta, h, w.map, w.set, 0.0, noise_a);
    auto y_d = synthesize_data_rx(delta, h, w.map, w.cbs, bits, cfg.n_d, 0.0,
                                  noise_b);
    // Independent direct-summation oracle.
    cvec oracle_p(cfg.n_zc, {0, 0});
    std::vector<cvec> oracle_d(cfg.n_d, cvec(cfg.K, {0, 0}));
    for (uint32_t n = 0; n < cfg.n_r; ++n) {
      if (!delta[n]) continue;
      for (uint32_t k = 0; k < cfg.n_zc; ++k)
        oracle_p[k] += h[n] * w.set.preambles[w.map.entries[n].preamble_index][k];
      const Codebook& cb = w.cbs.codebooks[w.map.entries[n].cb_index];
      for (uint32_t i = 0; i < cfg.n_d; ++i) {
        size_t idx = 2 * bits[(n * cfg.n_d + i) * 2] + bits[(n * cfg.n_d + i) * 2 + 1];
        for (uint32_t k = 0; k < cfg.K; ++k)
          oracle_d[i][k] += h[n] * cb.codewords[idx].entries[k];
      }
    }
    for (uint32_t k = 0; k < cfg.n_zc; ++k)
      worst = std::max(worst, std::abs(y_p[k] - oracle_p[k]));
    for (uint32_t i = 0; i < cfg.n_d; ++i)
      for (uint32_t k = 0; k < cfg.K; ++k)
        worst = std::max(worst, std::abs(y_d[i][k] - oracle_d[i][k]));
  }
  CheckResult r;
  r.name = "sim.oracle_equivalence";
  r.pass = worst == 0.0;
  r.detail = "max |impl - oracle| " + fmt(worst);
  return r;
}

CheckResult sim_noise_stats_check() {
  Rng rng(0x515a);
  const size_t n = 1000000;
  double acc = 0.0;
  const double sigma = snr_to_sigma(10.0);  // sigma^2 = 0.1
  for (size_t i = 0; i < n; ++i) {
    auto [re, im] = rng.cn01();
    acc += (re * re + im * im) * sigma * sigma;
  }
  double var = acc / n;
  CheckResult r;
  r.name = "sim.noise_variance_1e6";
  r.pass = std::abs(var - sigma * sigma) < 0.01 * sigma * sigma;
  r.detail = "sample sigma^2 " + fmt(var) + " vs " + fmt(sigma * sigma);
  return r;
}

CheckResult sim_channel_stats_check() {
  Rng rng(0x6368);
  const size_t n = 1000000;
  double acc = 0.0;
  for (size_t i = 0; i < n; ++i) {
    auto [re, im] = rng.cn01();
    acc += re * re + im * im;
  }
  double power = acc / n;
  CheckResult r;
  r.name = "sim.channel_power_1e6";
  r.pass = std::abs(power - 1.0) < 0.01;
  r.detail = "E|h|^2 " + fmt(power);
  return r;
}

}  // namespace

std::vector<CheckResult> verify_zc() {
  return {zc_correlation_check(7), zc_correlation_check(13),
          zc_modulus_check(7), zc_modulus_check(13)};
}

std::vector<CheckResult> verify_grad() {
  return {grad_layer_check("dense"),
          grad_layer_check("conv1d_full"),
          grad_layer_check("activations"),
          grad_layer_check("batchnorm"),
          grad_layer_check("lstm_chain"),
          grad_uaen_check(),
          grad_model_check(ModelKind::kProposedDaudn, "daudn_composed"),
          grad_model_check(ModelKind::kPaudn, "paudn"),
          grad_model_check(ModelKind::kConventionalDaudn, "conventional_daudn")};
}

std::vector<CheckResult> verify_sim() {
  return {sim_oracle_check(), sim_noise_stats_check(),
          sim_channel_stats_check()};
}

int run_verify_suite(const std::string& suite, std::vector<CheckResult>& out) {
  if (suite == "zc") {
    out = verify_zc();
  } else if (suite == "grad") {
    out = verify_grad();
  } else if (suite == "sim") {
    out = verify_sim();
  } else if (suite == "all") {
    for (auto&& v : {verify_zc(), verify_grad(), verify_sim()})
      out.insert(out.end(), v.begin(), v.end());
  } else {
    throw InvalidArgument("unknown verify suite '" + suite + "'");
  }
  int failures = 0;
  for (const auto& r : out)
    if (!r.pass) ++failures;
  return failures;
}

}  // namespace gfs
