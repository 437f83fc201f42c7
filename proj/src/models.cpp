#include "models.hpp"

#include <zlib.h>

#include <fstream>

#include <nlohmann/json.hpp>

#include "errors.hpp"

namespace gfs {

using json = nlohmann::json;

std::string model_kind_name(ModelKind kind) {
  switch (kind) {
    case ModelKind::kProposedDaudn: return "proposed_daudn";
    case ModelKind::kPaudn: return "paudn";
    case ModelKind::kConventionalDaudn: return "conventional_daudn";
  }
  throw InvalidArgument("unknown model kind");
}

ModelKind model_kind_from_name(const std::string& name) {
  if (name == "proposed_daudn" || name == "proposed")
    return ModelKind::kProposedDaudn;
  if (name == "paudn") return ModelKind::kPaudn;
  if (name == "conventional_daudn" || name == "daudn")
    return ModelKind::kConventionalDaudn;
  throw InvalidArgument("unknown model kind '" + name + "'");
}

void UaenSpec::validate() const {
  if (n_r == 0 || K == 0 || n_d == 0)
    throw InvalidArgument("UaenSpec: zero dimension");
  if (n_kernel_1 <= n_kernel_2)
    throw InvalidArgument("UaenSpec: need n_kernel_1 > n_kernel_2");
}

void AudnSpec::validate() const {
  if (cells < 1) throw InvalidArgument("AudnSpec: need at least one cell");
  if (hidden != 10 * n_r) throw InvalidArgument("AudnSpec: hidden must be 10*N_R");
  if (input_dim == 0) throw InvalidArgument("AudnSpec: input_dim unset");
  if (threshold <= 0.0 || threshold >= 1.0)
    throw InvalidArgument("AudnSpec: threshold must be in (0,1)");
}

template <typename T>
void LstmCellParams<T>::build(ParamStore<T>& store, const std::string& name,
                              size_t hidden, size_t in_dim) {
  W_f = &store.add(name + ".W_f", hidden, in_dim);
  W_i = &store.add(name + ".W_i", hidden, in_dim);
  W_o = &store.add(name + ".W_o", hidden, in_dim);
  W_c = &store.add(name + ".W_c", hidden, in_dim);
  U_f = &store.add(name + ".U_f", hidden, hidden);
  U_i = &store.add(name + ".U_i", hidden, hidden);
  U_o = &store.add(name + ".U_o", hidden, hidden);
  U_c = &store.add(name + ".U_c", hidden, hidden);
  b_f = &store.add(name + ".b_f", hidden, 1);
  b_i = &store.add(name + ".b_i", hidden, 1);
  b_o = &store.add(name + ".b_o", hidden, 1);
  b_c = &store.add(name + ".b_c", hidden, 1);
}

template <typename T>
std::pair<typename Tape<T>::Ref, typename Tape<T>::Ref> lstm_cell_step(
    Tape<T>& tape, typename Tape<T>::Ref z, typename Tape<T>::Ref o_prev,
    typename Tape<T>::Ref c_prev, LstmCellParams<T>& p) {
  auto gate = [&](Param<T>* w, Param<T>* u, Param<T>* b) {
    return tape.add_bias(tape.add(tape.matmul(tape.leaf(*w), z),
                                  tape.matmul(tape.leaf(*u), o_prev)),
                         tape.leaf(*b));
  };
  auto f = tape.sigmoid(gate(p.W_f, p.U_f, p.b_f));
  auto i = tape.sigmoid(gate(p.W_i, p.U_i, p.b_i));
  auto o = tape.sigmoid(gate(p.W_o, p.U_o, p.b_o));
  auto cand = tape.tanh_(gate(p.W_c, p.U_c, p.b_c));
  auto c_s = tape.add(tape.hadamard(f, c_prev), tape.hadamard(i, cand));
  auto o_s = tape.hadamard(o, tape.tanh_(c_s));
  return {o_s, c_s};
}

template <typename T>
Uaen<T>::Uaen(const UaenSpec& spec, ParamStore<T>& store) : spec_(spec) {
  spec_.validate();
  conv1_.build(store, "uaen.conv1", spec_.n_kernel_1, 2 * spec_.K);
  bn1_.build(store, "uaen.bn1", spec_.n_kernel_1);
  conv2_.build(store, "uaen.conv2", spec_.n_kernel_2, spec_.n_kernel_1);
  bn2_.build(store, "uaen.bn2", spec_.n_kernel_2);
  dense1_.build(store, "uaen.dense1", spec_.n_r, spec_.n_d * spec_.n_kernel_2);
  bn3_.build(store, "uaen.bn3", spec_.n_r);
  dense2_.build(store, "uaen.dense2", spec_.n_r, spec_.n_r);
}

template <typename T>
typename Tape<T>::Ref Uaen<T>::forward(Tape<T>& tape, typename Tape<T>::Ref x,
                                       size_t batch, bool training) {
  if (tape.val(x).rows != 2 * spec_.K ||
      tape.val(x).cols != static_cast<size_t>(spec_.n_d) * batch)
    throw InvalidArgument("uaen_forward: expected [2K x N_d*batch] input");
  auto h1 = bn1_.apply(tape, tape.relu(conv1_.apply(tape, x)), training);
  auto h2 = bn2_.apply(tape, tape.relu(conv2_.apply(tape, h1)), training);
  auto packed = tape.fold_symbols(h2, spec_.n_d, batch);
  auto h3 = bn3_.apply(tape, tape.relu(dense1_.apply(tape, packed)), training);
  return tape.sigmoid(dense2_.apply(tape, h3));
}

template <typename T>
Audn<T>::Audn(const AudnSpec& spec, ParamStore<T>& store) : spec_(spec) {
  spec_.validate();
  embed_.build(store, "audn.embed", spec_.hidden, spec_.input_dim);
  cells_.resize(spec_.cells);
  for (uint32_t s = 0; s < spec_.cells; ++s)
    cells_[s].build(store, "audn.cell" + std::to_string(s), spec_.hidden,
                    spec_.hidden);
  head_.build(store, "audn.head", spec_.n_r, spec_.hidden);
}

template <typename T>
typename Tape<T>::Ref Audn<T>::forward(Tape<T>& tape,
                                       typename Tape<T>::Ref input) {
  if (tape.val(input).rows != spec_.input_dim)
    throw InvalidArgument("audn_forward: expected input of length " +
                          std::to_string(spec_.input_dim));
  const size_t batch = tape.val(input).cols;
  auto z = embed_.apply(tape, input);
  auto o = tape.constant(Tensor<T>(spec_.hidden, batch));
  auto c = tape.constant(Tensor<T>(spec_.hidden, batch));
  for (auto& cell : cells_) {
    auto [o_s, c_s] = lstm_cell_step(tape, z, o, c, cell);
    o = o_s;
    c = c_s;
  }
  return tape.sigmoid(head_.apply(tape, o));
}

template <typename T>
typename Tape<T>::Ref ModelBundle<T>::uaen_forward(
    Tape<T>& tape, typename Tape<T>::Ref y_d_packed, size_t batch,
    bool training) {
  if (!uaen) throw InvalidArgument(model_kind_name(kind) + " has no UAEN");
  return uaen->forward(tape, y_d_packed, batch, training);
}

template <typename T>
typename Tape<T>::Ref ModelBundle<T>::forward(Tape<T>& tape,
                                              typename Tape<T>::Ref y_p,
                                              typename Tape<T>::Ref y_d_packed,
                                              size_t batch, bool training) {
  switch (kind) {
    case ModelKind::kProposedDaudn: {
      auto alpha = uaen_forward(tape, y_d_packed, batch, training);
      return audn->forward(tape, tape.concat_rows({alpha, y_p}));
    }
    case ModelKind::kPaudn:
      return audn->forward(tape, y_p);
    case ModelKind::kConventionalDaudn: {
      // Serial concatenation of preamble and all data frames.
      auto folded = tape.fold_symbols(y_d_packed, uaen_spec.n_d, batch);
      return audn->forward(tape, tape.concat_rows({y_p, folded}));
    }
  }
  throw InvalidArgument("unknown model kind");
}

template <typename T>
ModelBundle<T> build_bundle(const BundleConfig& cfg) {
  if (cfg.n_r == 0 || cfg.n_zc == 0)
    throw InvalidArgument("BundleConfig: n_r and n_zc required");
  ModelBundle<T> b;
  b.kind = cfg.kind;
  b.n_zc = cfg.n_zc;
  b.seed = cfg.seed;
  b.audn_spec.n_r = cfg.n_r;
  b.audn_spec.hidden = 10 * cfg.n_r;
  b.audn_spec.cells = cfg.cells;
  b.audn_spec.threshold = cfg.threshold;
  switch (cfg.kind) {
    case ModelKind::kProposedDaudn:
      b.uaen_spec = {10 * cfg.n_r, 2 * cfg.n_r, cfg.n_d, cfg.K, cfg.n_r};
      b.audn_spec.input_dim = cfg.n_r + 2 * cfg.n_zc;
      b.uaen = std::make_unique<Uaen<T>>(b.uaen_spec, b.store);
      break;
    case ModelKind::kPaudn:
      b.uaen_spec.n_d = cfg.n_d;
      b.uaen_spec.K = cfg.K;
      b.audn_spec.input_dim = 2 * cfg.n_zc;
      break;
    case ModelKind::kConventionalDaudn:
      b.uaen_spec.n_d = cfg.n_d;
      b.uaen_spec.K = cfg.K;
      b.audn_spec.input_dim = 2 * cfg.n_zc + cfg.n_d * 2 * cfg.K;
      break;
  }
  b.audn = std::make_unique<Audn<T>>(b.audn_spec, b.store);
  init_parameters(b.store, cfg.seed);
  return b;
}

template <typename T>
void init_parameters(ParamStore<T>& store, uint64_t seed) {
  Rng base(seed, stream_domain::kInit);
  size_t idx = 0;
  for (auto& p : store.params) {
    Rng rng = base.substream(idx++);
    if (!p.trainable || p.value.cols <= 1) continue;  // biases, BN, stats
    const T bound = T(1) / std::sqrt(static_cast<T>(p.value.cols));
    for (auto& v : p.value.v)
      v = static_cast<T>((2.0 * rng.uniform() - 1.0) * bound);
  }
}

std::vector<uint8_t> decide(const std::vector<float>& eta, double gamma) {
  if (gamma <= 0.0 || gamma >= 1.0)
    throw InvalidArgument("threshold must be in (0,1)");
  std::vector<uint8_t> out(eta.size());
  for (size_t i = 0; i < eta.size(); ++i)
    out[i] = eta[i] > gamma ? 1 : 0;  // strict inequality
  return out;
}

template <typename T>
ParameterCounts parameter_count(ModelBundle<T>& bundle) {
  ParameterCounts counts;
  counts.uaen = bundle.store.trainable_count("uaen.");
  counts.audn = bundle.store.trainable_count("audn.");
  return counts;
}

ParameterCounts parameter_count_for(uint32_t n_r, uint32_t n_zc, uint32_t K,
                                    uint32_t n_d, uint32_t cells) {
  BundleConfig cfg;
  cfg.kind = ModelKind::kProposedDaudn;
  cfg.n_r = n_r;
  cfg.n_zc = n_zc;
  cfg.K = K;
  cfg.n_d = n_d;
  cfg.cells = cells;
  const size_t nk1 = 10 * n_r, nk2 = 2 * n_r, hidden = 10 * n_r;
  ParameterCounts counts;
  counts.uaen = nk1 * 2 * K + nk1 + 2 * nk1          // conv1 + bn1
                + nk2 * nk1 + nk2 + 2 * nk2          // conv2 + bn2
                + n_r * n_d * nk2 + n_r + 2 * n_r    // dense1 + bn3
                + n_r * n_r + n_r;                   // dense2
  const size_t input_dim = n_r + 2 * n_zc;
  counts.audn = hidden * input_dim + hidden               // embed
                + cells * (8 * hidden * hidden + 4 * hidden)  // LSTM cells
                + n_r * hidden + n_r;                    // head
  return counts;
}

namespace {

uint32_t blob_crc(const std::vector<float>& v) {
  return static_cast<uint32_t>(
      crc32(0L, reinterpret_cast<const Bytef*>(v.data()),
            static_cast<uInt>(v.size() * sizeof(float))));
}

}  // namespace

void save_checkpoint(ModelBundle<float>& bundle, const std::string& path) {
  json header;
  header["format"] = "gfs-ckpt v1";
  header["kind"] = model_kind_name(bundle.kind);
  header["stage"] = bundle.stage;
  header["seed"] = bundle.seed;
  header["n_zc"] = bundle.n_zc;
  header["n_r"] = bundle.audn_spec.n_r;
  header["cells"] = bundle.audn_spec.cells;
  header["threshold"] = bundle.audn_spec.threshold;
  header["K"] = bundle.uaen_spec.K;
  header["n_d"] = bundle.uaen_spec.n_d;
  json params = json::array();
  for (const auto& p : bundle.store.params) {
    params.push_back({{"name", p.name},
                      {"rows", p.value.rows},
                      {"cols", p.value.cols},
                      {"trainable", p.trainable},
                      {"crc32", blob_crc(p.value.v)}});
  }
  header["params"] = std::move(params);
  const std::string hs = header.dump();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out.write("GFSC1", 5);
  uint32_t len = static_cast<uint32_t>(hs.size());
  out.write(reinterpret_cast<const char*>(&len), sizeof(len));
  out.write(hs.data(), hs.size());
  for (const auto& p : bundle.store.params)
    out.write(reinterpret_cast<const char*>(p.value.v.data()),
              p.value.v.size() * sizeof(float));
}

ModelBundle<float> load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint " + path);
  char magic[5];
  in.read(magic, 5);
  if (!in || std::string(magic, 5) != "GFSC1")
    throw ParseError(path + ": not a checkpoint file");
  uint32_t len = 0;
  in.read(reinterpret_cast<char*>(&len), sizeof(len));
  std::string hs(len, '\0');
  in.read(hs.data(), len);
  if (!in) throw ParseError(path + ": truncated header");
  json header = json::parse(hs, nullptr, false);
  if (header.is_discarded()) throw ParseError(path + ": bad header JSON");
  if (header.value("format", "") != "gfs-ckpt v1")
    throw ParseError(path + ": unsupported checkpoint version");
  BundleConfig cfg;
  cfg.kind = model_kind_from_name(header.at("kind").get<std::string>());
  cfg.n_r = header.at("n_r").get<uint32_t>();
  cfg.n_zc = header.at("n_zc").get<uint32_t>();
  cfg.K = header.at("K").get<uint32_t>();
  cfg.n_d = header.at("n_d").get<uint32_t>();
  cfg.cells = header.at("cells").get<uint32_t>();
  cfg.threshold = header.at("threshold").get<double>();
  cfg.seed = header.at("seed").get<uint64_t>();
  ModelBundle<float> bundle = build_bundle<float>(cfg);
  bundle.stage = header.value("stage", "init");
  const auto& params = header.at("params");
  if (params.size() != bundle.store.params.size())
    throw ParseError(path + ": parameter list does not match architecture");
  size_t i = 0;
  for (auto& p : bundle.store.params) {
    const auto& meta = params[i++];
    if (meta.at("name").get<std::string>() != p.name ||
        meta.at("rows").get<size_t>() != p.value.rows ||
        meta.at("cols").get<size_t>() != p.value.cols)
      throw ParseError(path + ": parameter '" + p.name +
                       "' does not match the stored architecture");
    in.read(reinterpret_cast<char*>(p.value.v.data()),
            p.value.v.size() * sizeof(float));
    if (!in) throw ParseError(path + ": truncated blob for " + p.name);
    if (blob_crc(p.value.v) != meta.at("crc32").get<uint32_t>())
      throw ParseError(path + ": corrupt blob for " + p.name);
  }
  return bundle;
}

template struct LstmCellParams<float>;
template struct LstmCellParams<double>;
template class Uaen<float>;
template class Uaen<double>;
template class Audn<float>;
template class Audn<double>;
template struct ModelBundle<float>;
template struct ModelBundle<double>;
template ModelBundle<float> build_bundle<float>(const BundleConfig&);
template ModelBundle<double> build_bundle<double>(const BundleConfig&);
template void init_parameters<float>(ParamStore<float>&, uint64_t);
template void init_parameters<double>(ParamStore<double>&, uint64_t);
template ParameterCounts parameter_count<float>(ModelBundle<float>&);
template ParameterCounts parameter_count<double>(ModelBundle<double>&);
template std::pair<Tape<float>::Ref, Tape<float>::Ref> lstm_cell_step<float>(
    Tape<float>&, Tape<float>::Ref, Tape<float>::Ref, Tape<float>::Ref,
    LstmCellParams<float>&);
template std::pair<Tape<double>::Ref, Tape<double>::Ref> lstm_cell_step<double>(
    Tape<double>&, Tape<double>::Ref, Tape<double>::Ref, Tape<double>::Ref,
    LstmCellParams<double>&);

}  // namespace gfs
