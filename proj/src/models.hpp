#pragma once

#include <deque>
#include <memory>
#include <string>
#include <vector>

#include "adam.hpp"
#include "rng.hpp"
#include "tape.hpp"
#include "tensor.hpp"

namespace gfs {

enum class ModelKind { kProposedDaudn, kPaudn, kConventionalDaudn };

std::string model_kind_name(ModelKind kind);
ModelKind model_kind_from_name(const std::string& name);

struct UaenSpec {
  uint32_t n_kernel_1 = 0;  // default 10*N_R
  uint32_t n_kernel_2 = 0;  // default 2*N_R
  uint32_t n_d = 16;
  uint32_t K = 4;
  uint32_t n_r = 0;

  void validate() const;
};

struct AudnSpec {
  uint32_t n_r = 0;
  uint32_t hidden = 0;     // 10*N_R
  uint32_t cells = 10;     // S
  uint32_t input_dim = 0;
  double threshold = 0.5;  // gamma

  void validate() const;
};

// Parameter registry with stable addresses and a flat naming scheme
// (component.layer.role). Non-trainable entries hold batch-norm running
// statistics so checkpoints capture them.
template <typename T>
struct ParamStore {
  std::deque<Param<T>> params;

  Param<T>& add(const std::string& name, size_t rows, size_t cols,
                bool trainable = true) {
    params.push_back({name, Tensor<T>(rows, cols), Tensor<T>(), trainable});
    return params.back();
  }
  Param<T>* find(const std::string& name) {
    for (auto& p : params)
      if (p.name == name) return &p;
    return nullptr;
  }
  std::vector<Param<T>*> trainable(const std::string& prefix = "") {
    std::vector<Param<T>*> out;
    for (auto& p : params)
      if (p.trainable && p.name.rfind(prefix, 0) == 0) out.push_back(&p);
    return out;
  }
  size_t trainable_count(const std::string& prefix = "") {
    size_t n = 0;
    for (auto& p : params)
      if (p.trainable && p.name.rfind(prefix, 0) == 0) n += p.value.size();
    return n;
  }
};

template <typename T>
struct BnLayer {
  Param<T>* gamma = nullptr;
  Param<T>* beta = nullptr;
  BnState<T> state;

  void build(ParamStore<T>& store, const std::string& name, size_t rows) {
    gamma = &store.add(name + ".gamma", rows, 1);
    std::fill(gamma->value.v.begin(), gamma->value.v.end(), T(1));
    beta = &store.add(name + ".beta", rows, 1);
    // Running stats live in the store as non-trainable params.
    Param<T>& rm = store.add(name + ".running_mean", rows, 1, false);
    Param<T>& rv = store.add(name + ".running_var", rows, 1, false);
    std::fill(rv.value.v.begin(), rv.value.v.end(), T(1));
    state.running_mean = &rm.value;
    state.running_var = &rv.value;
  }
  typename Tape<T>::Ref apply(Tape<T>& tape, typename Tape<T>::Ref x,
                              bool training) {
    return tape.batchnorm(x, tape.leaf(*gamma), tape.leaf(*beta), state,
                          training);
  }
};

template <typename T>
struct DenseLayer {
  Param<T>* w = nullptr;
  Param<T>* b = nullptr;

  void build(ParamStore<T>& store, const std::string& name, size_t out_dim,
             size_t in_dim) {
    w = &store.add(name + ".w", out_dim, in_dim);
    b = &store.add(name + ".b", out_dim, 1);
  }
  typename Tape<T>::Ref apply(Tape<T>& tape, typename Tape<T>::Ref x) {
    return tape.add_bias(tape.matmul(tape.leaf(*w), x), tape.leaf(*b));
  }
};

// Weights of one LSTM cell: l_x = sigmoid(W_x z + U_x o_prev + b_x) for
// x in {f, i, o} and the tanh candidate c.
template <typename T>
struct LstmCellParams {
  Param<T>*W_f, *W_i, *W_o, *W_c;
  Param<T>*U_f, *U_i, *U_o, *U_c;
  Param<T>*b_f, *b_i, *b_o, *b_c;

  void build(ParamStore<T>& store, const std::string& name, size_t hidden,
             size_t in_dim);
};

// One LSTM cell step, exposed for unit tests: returns (o_s, c_s).
template <typename T>
std::pair<typename Tape<T>::Ref, typename Tape<T>::Ref> lstm_cell_step(
    Tape<T>& tape, typename Tape<T>::Ref z, typename Tape<T>::Ref o_prev,
    typename Tape<T>::Ref c_prev, LstmCellParams<T>& p);

// Two full-width 1D-convolutional layers shared across the N_d symbol
// positions, an ensembling dense layer and a sigmoid output head.
template <typename T>
class Uaen {
 public:
  Uaen(const UaenSpec& spec, ParamStore<T>& store);

  // x is the packed symbol input [2K x (N_d * batch)], symbol-major columns.
  // Returns alpha in (0,1)^{N_R x batch}.
  typename Tape<T>::Ref forward(Tape<T>& tape, typename Tape<T>::Ref x,
                                size_t batch, bool training);

  const UaenSpec& spec() const { return spec_; }
  std::vector<BnLayer<T>*> bn_layers() {
    return {&bn1_, &bn2_, &bn3_};
  }

 private:
  UaenSpec spec_;
  DenseLayer<T> conv1_, conv2_, dense1_, dense2_;
  BnLayer<T> bn1_, bn2_, bn3_;
};

// Dense input embedding, S LSTM cells fed the same embedded measurement
// (output and cell state recur), dense head with sigmoid.
template <typename T>
class Audn {
 public:
  Audn(const AudnSpec& spec, ParamStore<T>& store);

  typename Tape<T>::Ref forward(Tape<T>& tape, typename Tape<T>::Ref input);

  const AudnSpec& spec() const { return spec_; }

 private:
  AudnSpec spec_;
  DenseLayer<T> embed_, head_;
  std::vector<LstmCellParams<T>> cells_;
};

template <typename T>
struct ModelBundle {
  ModelKind kind = ModelKind::kProposedDaudn;
  UaenSpec uaen_spec;  // meaningful for proposed only
  AudnSpec audn_spec;
  uint32_t n_zc = 0;
  uint64_t seed = 0;
  std::string stage = "init";  // init | pretrained | joint | trained
  ParamStore<T> store;
  std::unique_ptr<Uaen<T>> uaen;
  std::unique_ptr<Audn<T>> audn;

  // Inference/training forward. For proposed models y_d_packed must be the
  // [2K x N_d*batch] symbol input and y_p the realified preambles
  // [2*N_ZC x batch]; conventional takes the concatenation internally.
  typename Tape<T>::Ref forward(Tape<T>& tape,
                                typename Tape<T>::Ref y_p,
                                typename Tape<T>::Ref y_d_packed,
                                size_t batch, bool training);

  // Forward of the UAEN part only (proposed models).
  typename Tape<T>::Ref uaen_forward(Tape<T>& tape,
                                     typename Tape<T>::Ref y_d_packed,
                                     size_t batch, bool training);
};

struct BundleConfig {
  ModelKind kind = ModelKind::kProposedDaudn;
  uint32_t n_r = 0, n_zc = 0, K = 4, n_d = 16;
  uint32_t cells = 10;
  double threshold = 0.5;
  uint64_t seed = 1;
};

template <typename T>
ModelBundle<T> build_bundle(const BundleConfig& cfg);

// Uniform fan-in initialization, seeded; biases and BN offsets start at zero.
template <typename T>
void init_parameters(ParamStore<T>& store, uint64_t seed);

std::vector<uint8_t> decide(const std::vector<float>& eta, double gamma);

struct ParameterCounts {
  size_t uaen = 0;
  size_t audn = 0;
  double ratio() const {
    return audn ? static_cast<double>(uaen) / static_cast<double>(audn) : 0.0;
  }
};

template <typename T>
ParameterCounts parameter_count(ModelBundle<T>& bundle);

// Counts derived from the layer dimensions alone (no allocation); used for
// the N_R=78 report.
ParameterCounts parameter_count_for(uint32_t n_r, uint32_t n_zc, uint32_t K,
                                    uint32_t n_d, uint32_t cells);

void save_checkpoint(ModelBundle<float>& bundle, const std::string& path);
ModelBundle<float> load_checkpoint(const std::string& path);

extern template class Uaen<float>;
extern template class Uaen<double>;
extern template class Audn<float>;
extern template class Audn<double>;
extern template struct ModelBundle<float>;
extern template struct ModelBundle<double>;
extern template struct LstmCellParams<float>;
extern template struct LstmCellParams<double>;
extern template ModelBundle<float> build_bundle<float>(const BundleConfig&);
extern template ModelBundle<double> build_bundle<double>(const BundleConfig&);
extern template void init_parameters<float>(ParamStore<float>&, uint64_t);
extern template void init_parameters<double>(ParamStore<double>&, uint64_t);
extern template ParameterCounts parameter_count<float>(ModelBundle<float>&);
extern template ParameterCounts parameter_count<double>(ModelBundle<double>&);
extern template std::pair<Tape<float>::Ref, Tape<float>::Ref> lstm_cell_step<float>(
    Tape<float>&, Tape<float>::Ref, Tape<float>::Ref, Tape<float>::Ref,
    LstmCellParams<float>&);
extern template std::pair<Tape<double>::Ref, Tape<double>::Ref>
lstm_cell_step<double>(Tape<double>&, Tape<double>::Ref, Tape<double>::Ref,
                       Tape<double>::Ref, LstmCellParams<double>&);

}  // namespace gfs
