#include "eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include "errors.hpp"
#include "features.hpp"
#include "tape.hpp"

namespace gfs {

double ader(const std::vector<uint8_t>& truth,
            const std::vector<uint8_t>& decision) {
  if (truth.size() != decision.size())
    throw InvalidArgument("ader: length mismatch");
  if (truth.empty()) throw InvalidArgument("ader: empty activity vectors");
  size_t errors = 0;
  for (size_t i = 0; i < truth.size(); ++i)
    if (truth[i] != decision[i]) ++errors;
  return static_cast<double>(errors) / static_cast<double>(truth.size());
}

std::vector<uint8_t> oracle_correlator(const cvec& y_p, const PreambleSet& set,
                                       double gamma_c) {
  std::vector<uint8_t> out(set.size(), 0);
  for (size_t n = 0; n < set.size(); ++n) {
    std::complex<double> acc = 0.0;
    for (size_t k = 0; k < y_p.size(); ++k)
      acc += y_p[k] * std::conj(set.preambles[n][k]);
    out[n] = std::abs(acc) > gamma_c ? 1 : 0;
  }
  return out;
}

std::vector<AderReport> sweep_model(ModelBundle<float>& bundle,
                                    const SweepSpec& spec, const CtuMap& map,
                                    const PreambleSet& set,
                                    const CodebookSet& cbs,
                                    uint32_t inference_batch) {
  if (spec.points.empty()) throw InvalidArgument("sweep: empty point list");
  if (spec.frames_per_point == 0) throw InvalidArgument("sweep: zero frames");
  std::vector<AderReport> reports;
  const uint32_t n_r = map.size();
  const double gamma = bundle.audn_spec.threshold;
  for (size_t pt = 0; pt < spec.points.size(); ++pt) {
    const SweepPoint& point = spec.points[pt];
    SimConfig sim;
    sim.n_r = n_r;
    sim.J = map.J;
    sim.K = cbs.K;
    sim.N = cbs.N;
    sim.M = cbs.M;
    sim.n_d = bundle.uaen_spec.n_d;
    sim.n_zc = set.n_zc;
    sim.snr_db = point.snr_db;
    sim.activity_mode = ActivityMode::kFixedCount;
    sim.n_active_min = sim.n_active_max = point.n_active;
    sim.seed = spec.seed;
    uint64_t misses = 0, false_alarms = 0, frames_done = 0;
    Rng point_rng = Rng(spec.seed, stream_domain::kEvaluation).substream(pt);
    uint32_t batch_idx = 0;
    while (frames_done < spec.frames_per_point) {
      const uint32_t b = static_cast<uint32_t>(std::min<uint64_t>(
          inference_batch, spec.frames_per_point - frames_done));
      Rng rng = point_rng.substream(batch_idx++);
      TransmissionBatch raw = generate_batch(sim, map, set, cbs, b, rng);
      BatchTensors t = to_tensors(raw, sim.n_d, sim.K);
      Tape<float> tape;
      auto y_p = tape.constant(std::move(t.y_p));
      auto y_d = tape.constant(std::move(t.y_d_packed));
      auto eta = tape.val(
          bundle.forward(tape, y_p, y_d, t.batch, /*training=*/false));
      for (uint32_t f = 0; f < b; ++f) {
        for (uint32_t n = 0; n < n_r; ++n) {
          const bool hat = eta.at(n, f) > gamma;
          const bool truth = raw.frames[f].truth[n] != 0;
          if (truth && !hat) ++misses;
          if (!truth && hat) ++false_alarms;
        }
      }
      frames_done += b;
    }
    AderReport r;
    r.model = model_kind_name(bundle.kind);
    r.snr_db = point.snr_db;
    r.n_active = point.n_active;
    r.frames = frames_done;
    const double denom = static_cast<double>(frames_done) * n_r;
    r.miss_rate = misses / denom;
    r.false_alarm_rate = false_alarms / denom;
    r.ader = (misses + false_alarms) / denom;
    r.stderr_binomial = std::sqrt(std::max(0.0, r.ader * (1.0 - r.ader)) / denom);
    r.seed = spec.seed;
    reports.push_back(r);
  }
  return reports;
}

void write_sweep_csv(const std::vector<AderReport>& reports,
                     const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << "model,snr_db,n_active,frames,ader,miss_rate,false_alarm_rate,stderr,seed\n";
  out.precision(9);
  for (const auto& r : reports)
    out << r.model << ',' << r.snr_db << ',' << r.n_active << ',' << r.frames
        << ',' << r.ader << ',' << r.miss_rate << ',' << r.false_alarm_rate
        << ',' << r.stderr_binomial << ',' << r.seed << '\n';
}

std::vector<AderReport> read_sweep_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::string line;
  if (!std::getline(in, line) || line.rfind("model,snr_db", 0) != 0)
    throw ParseError(path + ": missing sweep CSV header");
  std::vector<AderReport> reports;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    AderReport r;
    std::string field;
    auto next = [&]() {
      if (!std::getline(row, field, ','))
        throw ParseError(path + ": malformed row '" + line + "'");
      return field;
    };
    r.model = next();
    r.snr_db = std::stod(next());
    r.n_active = static_cast<uint32_t>(std::stoul(next()));
    r.frames = std::stoull(next());
    r.ader = std::stod(next());
    r.miss_rate = std::stod(next());
    r.false_alarm_rate = std::stod(next());
    r.stderr_binomial = std::stod(next());
    r.seed = std::stoull(next());
    reports.push_back(r);
  }
  if (reports.empty()) throw ParseError(path + ": no data rows");
  return reports;
}

void emit_plot(const std::string& csv_path, const std::string& svg_path) {
  auto reports = read_sweep_csv(csv_path);
  bool snr_axis = false;
  for (const auto& r : reports)
    if (r.snr_db != reports[0].snr_db) snr_axis = true;
  std::map<std::string, std::vector<const AderReport*>> series;
  for (const auto& r : reports) series[r.model].push_back(&r);
  const double width = 640, height = 480, ml = 70, mr = 20, mt = 20, mb = 50;
  double xmin = 1e300, xmax = -1e300, ymin = 0.0, ymax = -300.0;
  auto x_of = [&](const AderReport& r) {
    return snr_axis ? r.snr_db : static_cast<double>(r.n_active);
  };
  auto y_of = [&](const AderReport& r) {
    return std::log10(std::max(r.ader, 1e-6));
  };
  for (const auto& r : reports) {
    xmin = std::min(xmin, x_of(r));
    xmax = std::max(xmax, x_of(r));
    ymin = std::min(ymin, y_of(r));
    ymax = std::max(ymax, y_of(r));
  }
  if (xmax == xmin) xmax = xmin + 1;
  if (ymax == ymin) ymax = ymin + 1;
  auto px = [&](double x) {
    return ml + (x - xmin) / (xmax - xmin) * (width - ml - mr);
  };
  auto py = [&](double y) {
    return height - mb - (y - ymin) / (ymax - ymin) * (height - mt - mb);
  };
  static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c",
                                  "#9467bd", "#ff7f0e", "#8c564b"};
  std::ofstream out(svg_path);
  if (!out) throw IoError("cannot open " + svg_path + " for writing");
  out.precision(6);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
      << "\" height=\"" << height << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<line x1=\"" << ml << "\" y1=\"" << height - mb << "\" x2=\""
      << width - mr << "\" y2=\"" << height - mb << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml
      << "\" y2=\"" << height - mb << "\" stroke=\"black\"/>\n";
  out << "<text x=\"" << (ml + width - mr) / 2 << "\" y=\"" << height - 12
      << "\" text-anchor=\"middle\">" << (snr_axis ? "SNR (dB)" : "N_a")
      << "</text>\n";
  out << "<text x=\"18\" y=\"" << (mt + height - mb) / 2
      << "\" text-anchor=\"middle\" transform=\"rotate(-90 18 "
      << (mt + height - mb) / 2 << ")\">log10 ADER</text>\n";
  size_t color = 0;
  double legend_y = mt + 14;
  for (auto& [model, pts] : series) {
    std::vector<const AderReport*> sorted = pts;
    std::stable_sort(sorted.begin(), sorted.end(),
                     [&](const AderReport* a, const AderReport* b) {
                       return x_of(*a) < x_of(*b);
                     });
    const char* c = palette[color % 6];
    out << "<polyline fill=\"none\" stroke=\"" << c << "\" stroke-width=\"2\" points=\"";
    for (const auto* r : sorted) out << px(x_of(*r)) << ',' << py(y_of(*r)) << ' ';
    out << "\"/>\n";
    for (const auto* r : sorted)
      out << "<circle cx=\"" << px(x_of(*r)) << "\" cy=\"" << py(y_of(*r))
          << "\" r=\"3\" fill=\"" << c << "\"/>\n";
    out << "<text x=\"" << width - mr - 220 << "\" y=\"" << legend_y
        << "\" fill=\"" << c << "\">" << model << "</text>\n";
    legend_y += 16;
    ++color;
  }
  out << "</svg>\n";
}

namespace {

// Regularized incomplete beta via continued fraction.
double betacf(double a, double b, double x) {
  const int kMaxIter = 200;
  const double eps = 3e-12, fpmin = 1e-300;
  double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0, d = 1.0 - qab * x / qap;
  if (std::abs(d) < fpmin) d = fpmin;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < fpmin) d = fpmin;
    c = 1.0 + aa / c;
    if (std::abs(c) < fpmin) c = fpmin;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < fpmin) d = fpmin;
    c = 1.0 + aa / c;
    if (std::abs(c) < fpmin) c = fpmin;
    d = 1.0 / d;
    double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < eps) break;
  }
  return h;
}

double inc_beta(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  double ln = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
              a * std::log(x) + b * std::log(1.0 - x);
  double front = std::exp(ln);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * betacf(a, b, x) / a;
  return 1.0 - front * betacf(b, a, 1.0 - x) / b;
}

// One-sided P(T > t) for Student's t with df degrees of freedom.
double t_sf(double t, double df) {
  double x = df / (df + t * t);
  double p = 0.5 * inc_beta(df / 2.0, 0.5, x);
  return t >= 0.0 ? p : 1.0 - p;
}

std::vector<double> ranks(const std::vector<double>& x) {
  const size_t n = x.size();
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](size_t a, size_t b) { return x[a] < x[b]; });
  std::vector<double> r(n);
  size_t i = 0;
  while (i < n) {
    size_t j = i;
    while (j + 1 < n && x[order[j + 1]] == x[order[i]]) ++j;
    double avg = (i + j) / 2.0 + 1.0;  // average rank for ties
    for (size_t k = i; k <= j; ++k) r[order[k]] = avg;
    i = j + 1;
  }
  return r;
}

}  // namespace

SpearmanResult spearman(const std::vector<double>& x,
                        const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 3)
    throw InvalidArgument("spearman: need >= 3 paired points");
  auto rx = ranks(x), ry = ranks(y);
  const size_t n = x.size();
  double mx = 0, my = 0;
  for (size_t i = 0; i < n; ++i) {
    mx += rx[i];
    my += ry[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0, sxx = 0, syy = 0;
  for (size_t i = 0; i < n; ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  SpearmanResult res;
  if (sxx == 0 || syy == 0) return res;
  res.rho = sxy / std::sqrt(sxx * syy);
  if (std::abs(res.rho) >= 1.0) {
    res.p_one_sided = res.rho > 0 ? 0.0 : 1.0;
    return res;
  }
  double df = static_cast<double>(n - 2);
  double t = res.rho * std::sqrt(df / (1.0 - res.rho * res.rho));
  res.p_one_sided = t_sf(t, df);
  return res;
}

}  // namespace gfs
